//! TOML experiment documents.
//!
//! ```toml
//! [device]
//! template = "two-source-mzi"
//! loss_db_per_cm = 4.1
//!
//! [pump]
//! scheme = "single"
//! wavelengths_nm = [1549.6]
//! powers_mw = [15.0]
//! ```
//!
//! The device is either the bundled template with overrides or an explicit
//! `[[device.components]]` list. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::circuit::{
    CircuitSpec, ComponentSpec, DeviceTemplate, HeaterModel, PhaseDrive, PumpField, Segment,
    SegmentRole,
};
use crate::counts::{BrightnessSpec, DetectionChain};
use crate::error::{Error, Result};
use crate::fock::Path;
use crate::hom::HomSetup;
use crate::pairgen::PairProcess;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub device: Option<DeviceDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump: Option<PumpDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brightness: Option<BrightnessDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hom: Option<HomDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentDoc>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(rename = "coupler_R", skip_serializing_if = "Option::is_none")]
    pub coupler_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_length_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub io_length_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub io_sources: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_db_per_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_loss_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heater: Option<HeaterDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<ComponentDoc>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeaterDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_rad_per_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuse_v: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleDoc {
    Source,
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentDoc {
    Coupler {
        #[serde(rename = "R")]
        r: f64,
    },
    PhaseShifter {
        arm: Path,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        volts: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amps: Option<f64>,
    },
    Segment {
        arm: Path,
        length_mm: f64,
        #[serde(default)]
        loss_db_per_cm: f64,
        role: RoleDoc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<bool>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeDoc {
    Single,
    Dual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpDoc {
    pub scheme: SchemeDoc,
    pub wavelengths_nm: Vec<f64>,
    pub powers_mw: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Path>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKindDoc {
    NonDegenerate,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerBranch {
    Both(f64),
    Each([f64; 2]),
}

impl PerBranch {
    pub fn values(self) -> [f64; 2] {
        match self {
            PerBranch::Both(v) => [v, v],
            PerBranch::Each(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessDoc {
    pub kind: ProcessKindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    /// Spurious-to-source pair-rate ratio `Γ_I/O²/Γ₀²`, for both output
    /// branches or as `[A, B]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_io_ratio_sq: Option<PerBranch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionDoc {
    pub eta_s_db: f64,
    pub eta_i_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub det_eff: Option<f64>,
    pub dark_hz: f64,
    pub gate_ps: f64,
    pub t_per_point_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrightnessDoc {
    pub b_khz_per_nm_mw2: f64,
    pub bandwidth_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdmDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_nm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayDoc {
    pub x_min_um: f64,
    pub x_max_um: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomPresetDoc {
    pub delta_nm: f64,
    /// Explicit overlap; when absent it is calibrated so that the simulated
    /// visibility equals `reported_visibility`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_overlap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_visibility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_uncertainty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wdm: Option<WdmDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<DelayDoc>,
    #[serde(rename = "splitter_R", default, skip_serializing_if = "Option::is_none")]
    pub splitter_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_overlap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_per_point_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub preset: Vec<HomPresetDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationDoc {
    pub v_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Split,
    BunchA,
    BunchB,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Pattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers_mw: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationDoc>,
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn parse_config(text: &str) -> Result<ConfigDoc> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        Error::ConfigSyntax {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })
}

/// Parse a document and build its device.
pub fn parse_netlist(text: &str) -> Result<CircuitSpec<f64>> {
    parse_config(text)?.circuit()
}

/// Serialise a circuit as an explicit component list.
pub fn to_netlist(circuit: &CircuitSpec<f64>) -> String {
    let components = circuit
        .components()
        .iter()
        .map(|c| match *c {
            ComponentSpec::Coupler { reflectivity } => ComponentDoc::Coupler { r: reflectivity },
            ComponentSpec::PhaseShifter { arm, drive } => match drive {
                PhaseDrive::Radians(phi) => ComponentDoc::PhaseShifter {
                    arm,
                    phase: Some(phi),
                    volts: None,
                    amps: None,
                },
                PhaseDrive::Electrical { volts, amps } => ComponentDoc::PhaseShifter {
                    arm,
                    phase: None,
                    volts: Some(volts),
                    amps: Some(amps),
                },
            },
            ComponentSpec::Segment(s) => ComponentDoc::Segment {
                arm: s.arm,
                length_mm: s.length_mm,
                loss_db_per_cm: s.loss_db_per_cm,
                role: match s.role {
                    SegmentRole::Source => RoleDoc::Source,
                    SegmentRole::Input => RoleDoc::Input,
                    SegmentRole::Output => RoleDoc::Output,
                },
                source: Some(s.is_source),
            },
        })
        .collect();
    let heater = circuit.heater();
    let doc = ConfigDoc {
        device: Some(DeviceDoc {
            coupling_loss_db: Some(circuit.coupling_loss_db()),
            heater: Some(HeaterDoc {
                k_rad_per_mw: Some(heater.k_rad_per_mw),
                phi0: Some(heater.phi0),
                fuse_v: Some(heater.fuse_v),
            }),
            components: Some(components),
            ..DeviceDoc::default()
        }),
        ..ConfigDoc::default()
    };
    toml::to_string(&doc).expect("netlist documents always serialise")
}

fn missing(section: &str) -> Error {
    Error::Config(format!("missing [{section}] section"))
}

impl HeaterDoc {
    fn build(&self) -> Result<HeaterModel<f64>> {
        let d = HeaterModel::<f64>::default();
        HeaterModel::new(
            self.k_rad_per_mw.unwrap_or(d.k_rad_per_mw),
            self.phi0.unwrap_or(d.phi0),
            self.fuse_v.unwrap_or(d.fuse_v),
        )
        .map_err(|e| Error::Config(format!("device.heater: {e}")))
    }
}

impl ComponentDoc {
    fn build(&self, index: usize) -> Result<ComponentSpec<f64>> {
        Ok(match *self {
            ComponentDoc::Coupler { r } => ComponentSpec::Coupler { reflectivity: r },
            ComponentDoc::PhaseShifter {
                arm,
                phase,
                volts,
                amps,
            } => {
                let drive = match (phase, volts, amps) {
                    (Some(phi), None, None) => PhaseDrive::Radians(phi),
                    (None, Some(volts), Some(amps)) => PhaseDrive::Electrical { volts, amps },
                    (None, None, None) => PhaseDrive::Radians(0.0),
                    _ => {
                        return Err(Error::Config(format!(
                            "component {index} (phase_shifter): give either `phase` or both `volts` and `amps`"
                        )))
                    }
                };
                ComponentSpec::PhaseShifter { arm, drive }
            }
            ComponentDoc::Segment {
                arm,
                length_mm,
                loss_db_per_cm,
                role,
                source,
            } => {
                let role = match role {
                    RoleDoc::Source => SegmentRole::Source,
                    RoleDoc::Input => SegmentRole::Input,
                    RoleDoc::Output => SegmentRole::Output,
                };
                ComponentSpec::Segment(Segment {
                    arm,
                    length_mm,
                    loss_db_per_cm,
                    is_source: source.unwrap_or(role == SegmentRole::Source),
                    role,
                })
            }
        })
    }
}

impl ConfigDoc {
    /// Device template with overrides and spurious-pair ratios applied.
    pub fn template(&self) -> Result<DeviceTemplate<f64>> {
        let dev = self.device.as_ref().ok_or_else(|| Error::Config("no components".into()))?;
        match dev.template.as_deref() {
            Some(DeviceTemplate::<f64>::NAME) => {}
            Some(other) => {
                return Err(Error::Config(format!(
                    "unknown device template {other:?} (known: {:?})",
                    DeviceTemplate::<f64>::NAME
                )))
            }
            None => return Err(Error::Config("device has no template".into())),
        }
        let mut t = DeviceTemplate::<f64>::ideal();
        if let Some(r) = dev.coupler_r {
            t.coupler_reflectivity = r;
        }
        if let Some(l) = dev.source_length_mm {
            t.source_length_mm = l;
        }
        if let Some(l) = dev.io_length_mm {
            t.input_length_mm = l;
            t.output_length_mm = [l, l];
        }
        if let Some(on) = dev.io_sources {
            t.io_sources = on;
        }
        if let Some(loss) = dev.loss_db_per_cm {
            t.loss_db_per_cm = loss;
        }
        if let Some(db) = dev.coupling_loss_db {
            t.coupling_loss_db = db;
        }
        if let Some(h) = &dev.heater {
            t.heater = h.build()?;
        }
        if let Some(phi) = dev.phase {
            t.phase = PhaseDrive::Radians(phi);
        }
        if let Some(ratio) = self.process.as_ref().and_then(|p| p.gamma_io_ratio_sq) {
            if dev.io_length_mm.is_some() {
                return Err(Error::Config(
                    "set either device.io_length_mm or process.gamma_io_ratio_sq, not both".into(),
                ));
            }
            if dev.io_sources == Some(false) {
                return Err(Error::Config(
                    "process.gamma_io_ratio_sq needs device.io_sources = true".into(),
                ));
            }
            t = t
                .with_spurious_ratios(ratio.values())
                .map_err(|e| Error::Config(format!("process.gamma_io_ratio_sq: {e}")))?;
        }
        Ok(t)
    }

    pub fn circuit(&self) -> Result<CircuitSpec<f64>> {
        let dev = self.device.as_ref().ok_or_else(|| Error::Config("no components".into()))?;
        match (&dev.template, &dev.components) {
            (Some(_), Some(_)) => Err(Error::Config(
                "device: give either `template` or `components`, not both".into(),
            )),
            (Some(_), None) => {
                let t = self.template()?;
                let ratios = self.gamma_io_ratio_sq();
                if t.loss_db_per_cm != 0.0 && ratios.iter().any(|r| *r > 0.0) {
                    // The ratios do not depend on pump power or colour.
                    let pump = match self.pump {
                        Some(_) => self.pump()?,
                        None => PumpField::single(1550.0, 1.0)?,
                    };
                    let process = self.process()?;
                    let base = DeviceTemplate { io_sources: true, ..t };
                    crate::experiment::match_spurious_ratios(&base, ratios, &pump, &process)
                        .map_err(|e| Error::Config(format!("process.gamma_io_ratio_sq: {e}")))?
                        .build()
                } else {
                    t.build()
                }
            }
            (None, None) => Err(Error::Config("no components".into())),
            (None, Some(list)) => {
                let template_only = [
                    ("coupler_R", dev.coupler_r.is_some()),
                    ("source_length_mm", dev.source_length_mm.is_some()),
                    ("io_length_mm", dev.io_length_mm.is_some()),
                    ("io_sources", dev.io_sources.is_some()),
                    ("loss_db_per_cm", dev.loss_db_per_cm.is_some()),
                    ("phase", dev.phase.is_some()),
                ];
                if let Some((key, _)) = template_only.iter().find(|(_, set)| *set) {
                    return Err(Error::Config(format!(
                        "device.{key} only applies to the device template"
                    )));
                }
                if self.process.as_ref().is_some_and(|p| p.gamma_io_ratio_sq.is_some()) {
                    return Err(Error::Config(
                        "process.gamma_io_ratio_sq only applies to the device template".into(),
                    ));
                }
                let components = list
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.build(i))
                    .collect::<Result<Vec<_>>>()?;
                let heater = match &dev.heater {
                    Some(h) => h.build()?,
                    None => HeaterModel::default(),
                };
                CircuitSpec::new(components, heater, dev.coupling_loss_db.unwrap_or(0.0))
            }
        }
    }

    pub fn pump(&self) -> Result<PumpField<f64>> {
        let p = self.pump.as_ref().ok_or_else(|| missing("pump"))?;
        let input = p.input.unwrap_or(Path::A);
        let err = |e: Error| Error::Config(format!("pump: {e}"));
        let field = match (p.scheme, p.wavelengths_nm.as_slice(), p.powers_mw.as_slice()) {
            (SchemeDoc::Single, [w], [pw]) => PumpField::single(*w, *pw).map_err(err)?,
            (SchemeDoc::Dual, [w1, w2], [p1, p2]) => {
                PumpField::dual([*w1, *w2], [*p1, *p2]).map_err(err)?
            }
            (SchemeDoc::Single, _, _) => {
                return Err(Error::Config(
                    "pump: single scheme needs one wavelength and one power".into(),
                ))
            }
            (SchemeDoc::Dual, _, _) => {
                return Err(Error::Config(
                    "pump: dual scheme needs two wavelengths and two powers".into(),
                ))
            }
        };
        PumpField::new(field.scheme, input).map_err(err)
    }

    pub fn process(&self) -> Result<PairProcess<f64>> {
        let p = self.process.as_ref().ok_or_else(|| missing("process"))?;
        let err = |e: Error| Error::Config(format!("process: {e}"));
        match (p.kind, p.delta_nm) {
            (ProcessKindDoc::NonDegenerate, Some(d)) => PairProcess::non_degenerate(d).map_err(err),
            (ProcessKindDoc::NonDegenerate, None) => {
                Err(Error::Config("process: non_degenerate needs delta_nm".into()))
            }
            (ProcessKindDoc::Degenerate, None | Some(0.0)) => Ok(PairProcess::degenerate()),
            (ProcessKindDoc::Degenerate, Some(d)) => Err(Error::Config(format!(
                "process: degenerate pairs have no detuning, got delta_nm = {d}"
            ))),
        }
    }

    pub fn gamma_io_ratio_sq(&self) -> [f64; 2] {
        self.process
            .as_ref()
            .and_then(|p| p.gamma_io_ratio_sq)
            .map_or([0.0, 0.0], PerBranch::values)
    }

    pub fn detection(&self) -> Result<DetectionChain<f64>> {
        let d = self.detection.as_ref().ok_or_else(|| missing("detection"))?;
        DetectionChain::new(
            d.eta_s_db,
            d.eta_i_db,
            d.det_eff.unwrap_or(1.0),
            d.dark_hz,
            d.gate_ps * 1e-12,
            d.t_per_point_s,
        )
        .map_err(|e| Error::Config(format!("detection: {e}")))
    }

    pub fn brightness(&self, powers_mw: [f64; 2]) -> Result<BrightnessSpec<f64>> {
        let b = self.brightness.as_ref().ok_or_else(|| missing("brightness"))?;
        BrightnessSpec::new(b.b_khz_per_nm_mw2, b.bandwidth_nm, powers_mw)
            .map_err(|e| Error::Config(format!("brightness: {e}")))
    }

    pub fn experiment(&self) -> ExperimentDoc {
        self.experiment.clone().unwrap_or_default()
    }

    pub fn hom(&self) -> Result<&HomDoc> {
        self.hom.as_ref().ok_or_else(|| missing("hom"))
    }

    /// HOM parameters for one detuning. The pump wavelength comes from `[pump]`.
    pub fn hom_setup(&self, delta_nm: f64, mode_overlap: f64, bunch_fraction: f64) -> Result<HomSetup<f64>> {
        let hom = self.hom()?;
        let setup = HomSetup {
            lambda_p_nm: self.pump()?.centre_wavelength_nm(),
            delta_nm,
            width_nm: hom.wdm.as_ref().and_then(|w| w.width_nm).unwrap_or(DEFAULT_WDM_WIDTH_NM),
            splitter_reflectivity: hom.splitter_r.unwrap_or(0.5),
            mode_overlap,
            bunch_fraction,
        };
        setup.validate().map_err(|e| Error::Config(format!("hom: {e}")))?;
        Ok(setup)
    }
}

/// WDM channel width used when the document does not set one.
pub const DEFAULT_WDM_WIDTH_NM: f64 = 0.8;
