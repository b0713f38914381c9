//! Two-path netlist of the chip, classical pump propagation and the heater model.
//!
//! Components are listed in propagation order. Couplers act on both paths,
//! phase shifters and waveguide segments on one. The bundled device template
//! is the two-source Mach-Zehnder: input waveguides, coupler, two spiral
//! sources, a heater on arm `B`, coupler, output waveguides.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::{coupler_map, Channel, Path};
use crate::scalar::{db_to_power, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentRole {
    Source,
    Input,
    Output,
}

impl SegmentRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentRole::Source => "source",
            SegmentRole::Input => "input",
            SegmentRole::Output => "output",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub arm: Path,
    pub length_mm: T,
    pub loss_db_per_cm: T,
    /// Whether SFWM pairs are generated in this segment.
    pub is_source: bool,
    pub role: SegmentRole,
}

impl<T: Real> Segment<T> {
    pub fn loss_db(&self) -> T {
        self.loss_db_per_cm * self.length_mm / T::lit(10.0)
    }

    /// Power transmission over the full segment.
    pub fn power_transmission(&self) -> T {
        db_to_power(self.loss_db())
    }
}

/// How a phase shifter is driven.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseDrive<T> {
    Radians(T),
    Electrical { volts: T, amps: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentSpec<T> {
    Coupler { reflectivity: T },
    PhaseShifter { arm: Path, drive: PhaseDrive<T> },
    Segment(Segment<T>),
}

impl<T: Real> ComponentSpec<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            ComponentSpec::Coupler { .. } => "coupler",
            ComponentSpec::PhaseShifter { .. } => "phase_shifter",
            ComponentSpec::Segment(_) => "segment",
        }
    }
}

/// Linear thermo-optic model: phase is proportional to dissipated power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeaterModel<T> {
    pub k_rad_per_mw: T,
    pub phi0: T,
    pub fuse_v: T,
}

impl<T: Real> HeaterModel<T> {
    /// Maximum drive used on the chip, 2.3 V at 36 mA.
    pub const MAX_DRIVE_V: f64 = 2.3;
    pub const MAX_DRIVE_A: f64 = 0.036;

    pub fn new(k_rad_per_mw: T, phi0: T, fuse_v: T) -> Result<Self> {
        if !k_rad_per_mw.is_finite() || !phi0.is_finite() {
            return Err(Error::Domain("heater coefficients must be finite".into()));
        }
        if !(fuse_v > T::zero()) {
            return Err(Error::Domain(format!(
                "fuse voltage must be positive, got {fuse_v}"
            )));
        }
        Ok(Self {
            k_rad_per_mw,
            phi0,
            fuse_v,
        })
    }

    /// Resistive load implied by the maximum drive point, in ohms.
    pub fn nominal_resistance() -> T {
        T::lit(Self::MAX_DRIVE_V / Self::MAX_DRIVE_A)
    }
}

impl<T: Real> Default for HeaterModel<T> {
    /// `k` maps the 82.8 mW maximum drive onto one full 2π of phase; this is a
    /// placeholder calibration, not a measured coefficient. Fuse at 2.7 V.
    fn default() -> Self {
        let max_power_mw = T::lit(Self::MAX_DRIVE_V * Self::MAX_DRIVE_A * 1000.0);
        Self {
            k_rad_per_mw: T::TAU() / max_power_mw,
            phi0: T::zero(),
            fuse_v: T::lit(2.7),
        }
    }
}

/// `φ = k · (V · I · 1000) + φ₀`, electrical power in mW.
pub fn electrical_to_phase<T: Real>(volts: T, amps: T, model: &HeaterModel<T>) -> Result<T> {
    if !(volts >= T::zero()) || !(amps >= T::zero()) {
        return Err(Error::Domain(format!(
            "heater drive must be non-negative, got {volts} V, {amps} A"
        )));
    }
    if volts >= model.fuse_v {
        return Err(Error::Fuse {
            volts: volts.as_f64(),
            fuse_v: model.fuse_v.as_f64(),
        });
    }
    let power_mw = volts * amps * T::lit(1000.0);
    Ok(model.k_rad_per_mw * power_mw + model.phi0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec<T> {
    components: Vec<ComponentSpec<T>>,
    heater: HeaterModel<T>,
    /// Lumped coupler-plus-facet loss applied once to the transmitted pump.
    coupling_loss_db: T,
}

impl<T: Real> CircuitSpec<T> {
    pub fn new(
        components: Vec<ComponentSpec<T>>,
        heater: HeaterModel<T>,
        coupling_loss_db: T,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Config("no components".into()));
        }
        if !(coupling_loss_db >= T::zero()) || !coupling_loss_db.is_finite() {
            return Err(Error::Config(format!(
                "coupling loss must be finite and non-negative, got {coupling_loss_db} dB"
            )));
        }
        let first_coupler = components
            .iter()
            .position(|c| matches!(c, ComponentSpec::Coupler { .. }));
        let last_coupler = components
            .iter()
            .rposition(|c| matches!(c, ComponentSpec::Coupler { .. }));
        for (i, comp) in components.iter().enumerate() {
            let name = |msg: String| Error::Config(format!("component {i} ({}): {msg}", comp.kind()));
            match comp {
                ComponentSpec::Coupler { reflectivity } => {
                    if !(*reflectivity >= T::zero() && *reflectivity <= T::one()) {
                        return Err(name(format!("reflectivity {reflectivity} outside [0, 1]")));
                    }
                }
                ComponentSpec::PhaseShifter { drive, .. } => match drive {
                    PhaseDrive::Radians(phi) if !phi.is_finite() => {
                        return Err(name(format!("phase {phi} is not finite")));
                    }
                    PhaseDrive::Electrical { volts, amps }
                        if !(*volts >= T::zero() && *amps >= T::zero()) =>
                    {
                        return Err(name("electrical drive must be non-negative".into()));
                    }
                    _ => {}
                },
                ComponentSpec::Segment(seg) => {
                    if !(seg.length_mm > T::zero()) || !seg.length_mm.is_finite() {
                        return Err(name(format!("length {} mm must be positive", seg.length_mm)));
                    }
                    if !(seg.loss_db_per_cm >= T::zero()) || !seg.loss_db_per_cm.is_finite() {
                        return Err(name(format!(
                            "loss {} dB/cm must be non-negative",
                            seg.loss_db_per_cm
                        )));
                    }
                    match seg.role {
                        SegmentRole::Input if first_coupler.is_some_and(|f| i > f) => {
                            return Err(name("input segment after the first coupler".into()));
                        }
                        SegmentRole::Output if last_coupler.is_some_and(|l| i < l) => {
                            return Err(name("output segment before the last coupler".into()));
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(Self {
            components,
            heater,
            coupling_loss_db,
        })
    }

    pub fn components(&self) -> &[ComponentSpec<T>] {
        &self.components
    }

    pub fn heater(&self) -> &HeaterModel<T> {
        &self.heater
    }

    pub fn coupling_loss_db(&self) -> T {
        self.coupling_loss_db
    }

    pub fn coupler_count(&self) -> usize {
        self.components
            .iter()
            .filter(|c| matches!(c, ComponentSpec::Coupler { .. }))
            .count()
    }

    /// Copy with every phase shifter set to `phi` radians.
    pub fn with_phase(&self, phi: T) -> Self {
        let mut out = self.clone();
        for comp in &mut out.components {
            if let ComponentSpec::PhaseShifter { drive, .. } = comp {
                *drive = PhaseDrive::Radians(phi);
            }
        }
        out
    }

    /// Copy with every phase shifter driven electrically.
    pub fn with_drive(&self, volts: T, amps: T) -> Self {
        let mut out = self.clone();
        for comp in &mut out.components {
            if let ComponentSpec::PhaseShifter { drive, .. } = comp {
                *drive = PhaseDrive::Electrical { volts, amps };
            }
        }
        out
    }

    /// Copy with a different lumped coupling loss.
    pub fn with_coupling_loss(&self, db: T) -> Result<Self> {
        Self::new(self.components.clone(), self.heater, db)
    }

    pub fn resolve_phase(&self, drive: &PhaseDrive<T>) -> Result<T> {
        match *drive {
            PhaseDrive::Radians(phi) => Ok(phi),
            PhaseDrive::Electrical { volts, amps } => electrical_to_phase(volts, amps, &self.heater),
        }
    }

    /// Source segments with their component index.
    pub fn source_segments(&self) -> impl Iterator<Item = (usize, &Segment<T>)> {
        self.components.iter().enumerate().filter_map(|(i, c)| match c {
            ComponentSpec::Segment(s) if s.is_source => Some((i, s)),
            _ => None,
        })
    }
}

/// Builder for the two-source Mach-Zehnder device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceTemplate<T> {
    pub coupler_reflectivity: T,
    pub source_length_mm: T,
    /// Input waveguide length (both arms).
    pub input_length_mm: T,
    /// Output waveguide lengths for arms A and B.
    pub output_length_mm: [T; 2],
    /// Whether the I/O waveguides generate spurious pairs.
    pub io_sources: bool,
    pub loss_db_per_cm: T,
    pub coupling_loss_db: T,
    pub heater: HeaterModel<T>,
    pub phase: PhaseDrive<T>,
}

impl<T: Real> DeviceTemplate<T> {
    pub const NAME: &'static str = "two-source-mzi";

    /// Source spiral length in mm.
    pub const SOURCE_LENGTH_MM: f64 = 5.2;

    /// Per-side I/O length such that the total I/O length squared is 2% of
    /// the source length squared: `√0.02 · 5.2 / 2`.
    pub fn default_io_length_mm() -> T {
        T::lit(0.02_f64.sqrt() * Self::SOURCE_LENGTH_MM / 2.0)
    }

    /// Balanced couplers, lossless, no spurious I/O generation.
    pub fn ideal() -> Self {
        let io = Self::default_io_length_mm();
        Self {
            coupler_reflectivity: T::lit(0.5),
            source_length_mm: T::lit(Self::SOURCE_LENGTH_MM),
            input_length_mm: io,
            output_length_mm: [io, io],
            io_sources: false,
            loss_db_per_cm: T::zero(),
            coupling_loss_db: T::zero(),
            heater: HeaterModel::default(),
            phase: PhaseDrive::Radians(T::zero()),
        }
    }

    /// Sets I/O lengths so that the spurious amplitude seen by output branch
    /// `X`, relative to a source spiral, is `√ratio_sq[X]`.
    ///
    /// Output branch `X` collects pairs from the pumped input waveguide and
    /// from output waveguide `X`, so `L_in + L_out,X = √ratio_X · L_source`.
    /// The input takes half of the smaller branch budget.
    pub fn with_spurious_ratios(mut self, ratio_sq: [T; 2]) -> Result<Self> {
        if ratio_sq.iter().any(|r| !(*r >= T::zero()) || !r.is_finite()) {
            return Err(Error::Domain("spurious ratios must be finite and non-negative".into()));
        }
        let budgets = [
            ratio_sq[0].sqrt() * self.source_length_mm,
            ratio_sq[1].sqrt() * self.source_length_mm,
        ];
        if budgets.iter().all(|b| *b == T::zero()) {
            self.io_sources = false;
            return Ok(self);
        }
        let input = budgets[0].min(budgets[1]) / T::lit(2.0);
        let min_len = T::lit(1e-9);
        self.input_length_mm = input.max(min_len);
        self.output_length_mm = [(budgets[0] - input).max(min_len), (budgets[1] - input).max(min_len)];
        self.io_sources = true;
        Ok(self)
    }

    pub fn build(&self) -> Result<CircuitSpec<T>> {
        let seg = |arm, length_mm, is_source, role| {
            ComponentSpec::Segment(Segment {
                arm,
                length_mm,
                loss_db_per_cm: self.loss_db_per_cm,
                is_source,
                role,
            })
        };
        let r = self.coupler_reflectivity;
        let components = vec![
            seg(Path::A, self.input_length_mm, self.io_sources, SegmentRole::Input),
            seg(Path::B, self.input_length_mm, self.io_sources, SegmentRole::Input),
            ComponentSpec::Coupler { reflectivity: r },
            seg(Path::A, self.source_length_mm, true, SegmentRole::Source),
            seg(Path::B, self.source_length_mm, true, SegmentRole::Source),
            ComponentSpec::PhaseShifter {
                arm: Path::B,
                drive: self.phase,
            },
            ComponentSpec::Coupler { reflectivity: r },
            seg(Path::A, self.output_length_mm[0], self.io_sources, SegmentRole::Output),
            seg(Path::B, self.output_length_mm[1], self.io_sources, SegmentRole::Output),
        ];
        CircuitSpec::new(components, self.heater, self.coupling_loss_db)
    }
}

/// Pump colours and powers; light is launched into one input port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpScheme<T> {
    Single { wavelength_nm: T, power_mw: T },
    Dual { wavelengths_nm: [T; 2], powers_mw: [T; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpField<T> {
    pub scheme: PumpScheme<T>,
    pub input: Path,
}

impl<T: Real> PumpField<T> {
    pub fn single(wavelength_nm: T, power_mw: T) -> Result<Self> {
        Self::new(
            PumpScheme::Single {
                wavelength_nm,
                power_mw,
            },
            Path::A,
        )
    }

    pub fn dual(wavelengths_nm: [T; 2], powers_mw: [T; 2]) -> Result<Self> {
        Self::new(
            PumpScheme::Dual {
                wavelengths_nm,
                powers_mw,
            },
            Path::A,
        )
    }

    pub fn new(scheme: PumpScheme<T>, input: Path) -> Result<Self> {
        let field = Self { scheme, input };
        let colours = field.colours();
        for &(_, lambda, power) in &colours {
            if !(lambda > T::zero()) || !lambda.is_finite() {
                return Err(Error::Domain(format!("pump wavelength {lambda} nm invalid")));
            }
            if !(power >= T::zero()) || !power.is_finite() {
                return Err(Error::Domain(format!("pump power {power} mW invalid")));
            }
        }
        let total = colours.iter().fold(T::zero(), |a, c| a + c.2);
        if !(total > T::zero()) {
            return Err(Error::Domain("total launched pump power must be positive".into()));
        }
        if let PumpScheme::Dual { wavelengths_nm, .. } = scheme {
            if wavelengths_nm[0] == wavelengths_nm[1] {
                return Err(Error::Domain("dual pump needs two distinct wavelengths".into()));
            }
        }
        Ok(field)
    }

    /// `(channel, wavelength nm, power mW)` per colour.
    pub fn colours(&self) -> Vec<(Channel, T, T)> {
        match self.scheme {
            PumpScheme::Single {
                wavelength_nm,
                power_mw,
            } => vec![(Channel::Pump, wavelength_nm, power_mw)],
            PumpScheme::Dual {
                wavelengths_nm,
                powers_mw,
            } => vec![
                (Channel::Pump1, wavelengths_nm[0], powers_mw[0]),
                (Channel::Pump2, wavelengths_nm[1], powers_mw[1]),
            ],
        }
    }

    pub fn total_power_mw(&self) -> T {
        self.colours().iter().fold(T::zero(), |a, c| a + c.2)
    }

    /// Mean pump wavelength (the centre of the generated pair spectrum).
    pub fn centre_wavelength_nm(&self) -> T {
        let colours = self.colours();
        let two = T::lit(2.0);
        match colours.as_slice() {
            [(_, l, _)] => *l,
            [(_, l1, _), (_, l2, _)] => two / (l1.recip() + l2.recip()),
            _ => unreachable!("pump has one or two colours"),
        }
    }

    pub fn with_powers(&self, powers: &[T]) -> Result<Self> {
        let scheme = match (self.scheme, powers) {
            (PumpScheme::Single { wavelength_nm, .. }, [p]) => PumpScheme::Single {
                wavelength_nm,
                power_mw: *p,
            },
            (PumpScheme::Dual { wavelengths_nm, .. }, [p1, p2]) => PumpScheme::Dual {
                wavelengths_nm,
                powers_mw: [*p1, *p2],
            },
            _ => {
                return Err(Error::Structure(format!(
                    "{} powers for a {}-colour pump",
                    powers.len(),
                    self.colours().len()
                )))
            }
        };
        Self::new(scheme, self.input)
    }
}

/// Pump amplitudes (√mW) at a segment midpoint, per colour.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentField<T> {
    pub component: usize,
    pub arm: Path,
    pub amplitudes: Vec<(Channel, Complex<T>)>,
}

impl<T: Real> SegmentField<T> {
    pub fn amplitude(&self, channel: Channel) -> Complex<T> {
        self.amplitudes
            .iter()
            .find(|(c, _)| *c == channel)
            .map(|(_, a)| *a)
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PumpPropagation<T> {
    pub segments: Vec<SegmentField<T>>,
    /// Output amplitude per colour for paths `[A, B]`, after the lumped loss.
    pub outputs: Vec<(Channel, [Complex<T>; 2])>,
    /// Output power in `[A, B]` as a fraction of the launched power.
    pub transmission: [T; 2],
}

/// Propagates each pump colour classically through the netlist.
pub fn propagate_pump<T: Real>(
    circuit: &CircuitSpec<T>,
    pump: &PumpField<T>,
) -> Result<PumpPropagation<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let colours = pump.colours();
    let mut fields: Vec<[Complex<T>; 2]> = colours
        .iter()
        .map(|&(_, _, p)| {
            let mut f = [zero; 2];
            f[pump.input.index()] = Complex::new(p.sqrt(), T::zero());
            f
        })
        .collect();
    let mut segments = Vec::new();

    for (index, comp) in circuit.components().iter().enumerate() {
        match comp {
            ComponentSpec::Coupler { reflectivity } => {
                let map = coupler_map(*reflectivity, &[Channel::Pump])?;
                for f in fields.iter_mut() {
                    let out = map.apply_to_fields(f)?;
                    *f = [out[0], out[1]];
                }
            }
            ComponentSpec::PhaseShifter { arm, drive } => {
                let phi = circuit.resolve_phase(drive)?;
                let factor = Complex::from_polar(T::one(), phi);
                for f in fields.iter_mut() {
                    f[arm.index()] = f[arm.index()] * factor;
                }
            }
            ComponentSpec::Segment(seg) => {
                let half = T::lit(10.0).powf(-seg.loss_db() / T::lit(40.0));
                let arm = seg.arm.index();
                segments.push(SegmentField {
                    component: index,
                    arm: seg.arm,
                    amplitudes: colours
                        .iter()
                        .zip(&fields)
                        .map(|(c, f)| (c.0, f[arm] * half))
                        .collect(),
                });
                for f in fields.iter_mut() {
                    f[arm] = f[arm] * half * half;
                }
            }
        }
    }

    let lumped = db_to_power(circuit.coupling_loss_db()).sqrt();
    let outputs: Vec<(Channel, [Complex<T>; 2])> = colours
        .iter()
        .zip(&fields)
        .map(|(c, f)| (c.0, [f[0] * lumped, f[1] * lumped]))
        .collect();
    let launched = pump.total_power_mw();
    let mut transmission = [T::zero(); 2];
    for (_, f) in &outputs {
        transmission[0] += f[0].norm_sqr() / launched;
        transmission[1] += f[1].norm_sqr() / launched;
    }
    Ok(PumpPropagation {
        segments,
        outputs,
        transmission,
    })
}

/// Pump transmission at both outputs over a phase sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalFringe<T> {
    pub phases: Vec<T>,
    /// Same-port (`A`) transmission.
    pub bar: Vec<T>,
    /// Cross-port (`B`) transmission.
    pub cross: Vec<T>,
}

pub fn classical_fringe<T: Real>(
    circuit: &CircuitSpec<T>,
    pump: &PumpField<T>,
    phases: &[T],
) -> Result<ClassicalFringe<T>> {
    if phases.is_empty() {
        return Err(Error::Domain("phase sweep is empty".into()));
    }
    let mut bar = Vec::with_capacity(phases.len());
    let mut cross = Vec::with_capacity(phases.len());
    for &phi in phases {
        let prop = propagate_pump(&circuit.with_phase(phi), pump)?;
        bar.push(prop.transmission[0]);
        cross.push(prop.transmission[1]);
    }
    Ok(ClassicalFringe {
        phases: phases.to_vec(),
        bar,
        cross,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pump() -> PumpField<f64> {
        PumpField::single(1549.6, 1.0).unwrap()
    }

    #[test]
    fn template_defaults() {
        let c = DeviceTemplate::<f64>::ideal().build().unwrap();
        assert_eq!(c.coupler_count(), 2);
        let sources: Vec<_> = c.source_segments().collect();
        assert_eq!(sources.len(), 2);
        assert!(sources.iter().all(|(_, s)| s.length_mm == 5.2));
        assert!(c
            .components()
            .iter()
            .all(|x| !matches!(x, ComponentSpec::Coupler { reflectivity } if *reflectivity != 0.5)));
    }

    #[test]
    fn heater_examples() {
        let model = HeaterModel::default();
        assert_eq!(electrical_to_phase(0.0, 0.0, &model).unwrap(), model.phi0);
        let phi = electrical_to_phase(2.3, 0.036, &model).unwrap();
        assert_abs_diff_eq!(phi, model.k_rad_per_mw * 82.8 + model.phi0, epsilon = 1e-12);
        assert_abs_diff_eq!(phi, 2.0 * PI, epsilon = 1e-12);
        assert!(matches!(
            electrical_to_phase(2.8, 0.04, &model),
            Err(Error::Fuse { .. })
        ));
        assert!(matches!(
            electrical_to_phase(-0.1, 0.0, &model),
            Err(Error::Domain(_))
        ));
        assert!(HeaterModel::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn lossless_fringe_endpoints() {
        let c = DeviceTemplate::<f64>::ideal().build().unwrap();
        let t0 = propagate_pump(&c.with_phase(0.0), &pump()).unwrap().transmission;
        assert_abs_diff_eq!(t0[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t0[1], 1.0, epsilon = 1e-15);
        let tpi = propagate_pump(&c.with_phase(PI), &pump()).unwrap().transmission;
        assert_abs_diff_eq!(tpi[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tpi[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn segment_loss_factor() {
        let seg = Segment {
            arm: Path::A,
            length_mm: 5.2,
            loss_db_per_cm: 4.1,
            is_source: true,
            role: SegmentRole::Source,
        };
        assert_abs_diff_eq!(seg.power_transmission(), 10f64.powf(-0.2132), epsilon = 1e-15);
        assert_abs_diff_eq!(seg.power_transmission(), 0.612, epsilon = 1e-3);
    }

    #[test]
    fn classical_fringe_points() {
        let c = DeviceTemplate::<f64>::ideal().build().unwrap();
        let f = classical_fringe(&c, &pump(), &[0.0, FRAC_PI_2, PI]).unwrap();
        for (got, want) in f.cross.iter().zip([1.0, 0.5, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        let single = classical_fringe(&c, &pump(), &[0.4]).unwrap();
        assert_eq!(single.phases.len(), 1);
        assert!(classical_fringe(&c, &pump(), &[]).is_err());

        let lossy = c.with_coupling_loss(7.3).unwrap();
        let g = classical_fringe(&lossy, &pump(), &[0.0, FRAC_PI_2, PI]).unwrap();
        for (a, b) in g.cross.iter().zip(&f.cross) {
            assert_abs_diff_eq!(*a, b * 10f64.powf(-0.73), epsilon = 1e-14);
        }
    }

    #[test]
    fn validation_names_component() {
        let err = CircuitSpec::<f64>::new(
            vec![ComponentSpec::Coupler { reflectivity: 1.3 }],
            HeaterModel::default(),
            0.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("component 0 (coupler)"));
        assert!(matches!(
            CircuitSpec::<f64>::new(vec![], HeaterModel::default(), 0.0),
            Err(Error::Config(m)) if m == "no components"
        ));
        let bad_order = vec![
            ComponentSpec::Coupler { reflectivity: 0.5 },
            ComponentSpec::Segment(Segment {
                arm: Path::A,
                length_mm: 1.0,
                loss_db_per_cm: 0.0,
                is_source: false,
                role: SegmentRole::Input,
            }),
        ];
        assert!(CircuitSpec::new(bad_order, HeaterModel::default(), 0.0).is_err());
    }

    #[test]
    fn dual_pump_validation() {
        assert!(PumpField::dual([1549.6, 1549.6], [1.0, 1.0]).is_err());
        assert!(PumpField::single(1549.6, 0.0).is_err());
        let d = PumpField::dual([1538.4, 1560.8], [1.0, 1.0]).unwrap();
        let centre = d.centre_wavelength_nm();
        assert!(centre > 1549.4 && centre < 1549.6);
    }

    #[test]
    fn spurious_ratio_lengths() {
        let t = DeviceTemplate::<f64>::ideal()
            .with_spurious_ratios([0.02, 0.02])
            .unwrap();
        assert!(t.io_sources);
        assert_abs_diff_eq!(t.input_length_mm, DeviceTemplate::<f64>::default_io_length_mm(), epsilon = 1e-12);
        assert_abs_diff_eq!(t.input_length_mm + t.output_length_mm[0], 0.02f64.sqrt() * 5.2, epsilon = 1e-12);
        let off = DeviceTemplate::<f64>::ideal().with_spurious_ratios([0.0, 0.0]).unwrap();
        assert!(!off.io_sources);
    }
}
