//! Sweep drivers: on-chip phase fringes, off-chip HOM scans, brightness and
//! heater calibration. Each produces expected rates, optionally sampled
//! counts, and fits.
//!
//! Sampled runs draw every point from its own ChaCha stream derived from
//! `(seed, point index, series)`, so results do not depend on evaluation
//! order.

use serde::Serialize;

use crate::circuit::{
    classical_fringe, CircuitSpec, ComponentSpec, DeviceTemplate, HeaterModel, PumpField, Segment,
    SegmentRole,
};
use crate::config::{ConfigDoc, Pattern};
use crate::counts::{
    expected_counts, pair_rate, point_rng, sample_counts, CountRecord, DetectionChain,
};
use crate::error::{Error, Result};
use crate::fit::{fit_model, Branch, FitData, FitOptions, FitResult, FringeModel};
use crate::hom::{beat_period, HomSetup};
use crate::pairgen::{emit_pairs, split_bunch_probabilities, PairProcess, SourceAmplitudes, SplitBunch};

/// Default phase grid size.
pub const PHASE_POINTS: usize = 64;
/// Default delay grid size.
pub const HOM_POINTS: usize = 512;
pub const HOM_RANGE_UM: f64 = 1200.0;

const SERIES_STRIDE: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseSweep,
    HomScan,
    Brightness,
    Calibration,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::PhaseSweep => "phase_sweep",
            ExperimentKind::HomScan => "hom_scan",
            ExperimentKind::Brightness => "brightness",
            ExperimentKind::Calibration => "calibration",
        }
    }
}

/// One grid point of the primary series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub control: f64,
    pub p_split: f64,
    pub p_bunch_a: f64,
    pub p_bunch_b: f64,
    pub r_cc_expected: f64,
    pub acc_expected: f64,
    pub counts_raw: f64,
    pub counts_net: f64,
    pub sigma: f64,
}

/// A measured curve and its fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    pub fit: Option<FitResult<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: ExperimentKind,
    pub name: String,
    /// `None` for noiseless runs.
    pub seed: Option<u64>,
    pub rows: Vec<SweepRow>,
    pub series: Vec<Series>,
    /// Derived scalars in a stable order.
    pub metrics: Vec<(String, f64)>,
}

impl SweepResult {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn series(&self, label: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.label == label)
    }
}

/// Counts for one point: Poisson-sampled when `rng_stream` is given,
/// otherwise the expectation values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCounts {
    pub raw: f64,
    pub net: f64,
    pub sigma: f64,
}

pub fn point_counts(record: &CountRecord<f64>, chain: &DetectionChain<f64>, draw: Option<(u64, u64)>) -> Result<PointCounts> {
    let t = record.integration_s;
    Ok(match draw {
        Some((seed, stream)) => {
            let s = sample_counts(record, &mut point_rng(seed, stream))?;
            PointCounts {
                raw: s.raw as f64,
                net: s.net(chain.gate_s, t),
                sigma: s.sigma(),
            }
        }
        None => {
            let raw = record.raw * t;
            PointCounts {
                raw,
                net: record.net * t,
                sigma: raw.sqrt().max(1.0),
            }
        }
    })
}

fn stream(point: usize, series: u64) -> u64 {
    point as u64 * SERIES_STRIDE + series
}

fn fit_series(label: &str, x: Vec<f64>, y: Vec<f64>, sigma: Vec<f64>, model: FringeModel<f64>, options: &FitOptions<f64>) -> Result<Series> {
    let data = FitData::new(x.clone(), y.clone(), sigma.clone())?;
    let fit = fit_model(&data, model, options)?;
    Ok(Series {
        label: label.to_string(),
        x,
        y,
        sigma,
        fit: Some(fit),
    })
}

/// Copy of `circuit` where only the source spirals generate pairs.
fn sources_only(circuit: &CircuitSpec<f64>) -> Result<CircuitSpec<f64>> {
    let components = circuit
        .components()
        .iter()
        .map(|c| match *c {
            ComponentSpec::Segment(s) if s.role != SegmentRole::Source => {
                ComponentSpec::Segment(Segment { is_source: false, ..s })
            }
            other => other,
        })
        .collect();
    CircuitSpec::new(components, *circuit.heater(), circuit.coupling_loss_db())
}

/// Pattern rates relative to the pair rate of the source spirals alone, and
/// normalised pattern probabilities, at each phase.
pub fn pattern_rates(
    circuit: &CircuitSpec<f64>,
    pump: &PumpField<f64>,
    process: &PairProcess<f64>,
    phases: &[f64],
) -> Result<(Vec<SplitBunch<f64>>, Vec<SplitBunch<f64>>)> {
    let amps = SourceAmplitudes::for_circuit(circuit)?;
    let reference = emit_pairs(&sources_only(circuit)?, pump, process, &amps)?.norm_sqr();
    if !(reference > 0.0) {
        return Err(Error::Domain("source spirals generate no pairs".into()));
    }
    let mut relative = Vec::with_capacity(phases.len());
    let mut normalised = Vec::with_capacity(phases.len());
    for &phi in phases {
        let state = emit_pairs(&circuit.with_phase(phi), pump, process, &amps)?;
        let sb = split_bunch_probabilities(&state)?;
        let total = sb.p_split + sb.p_bunch_a + sb.p_bunch_b;
        relative.push(SplitBunch {
            p_split: sb.p_split / reference,
            p_bunch_a: sb.p_bunch_a / reference,
            p_bunch_b: sb.p_bunch_b / reference,
        });
        normalised.push(SplitBunch {
            p_split: sb.p_split / total,
            p_bunch_a: sb.p_bunch_a / total,
            p_bunch_b: sb.p_bunch_b / total,
        });
    }
    Ok((relative, normalised))
}

pub fn phase_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Domain("phase grid needs at least one point".into()));
    }
    if !(max > min) {
        return Err(Error::Domain(format!("phase range [{min}, {max}) is empty")));
    }
    Ok((0..points)
        .map(|i| min + (max - min) * i as f64 / points as f64)
        .collect())
}

pub fn delay_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(max > min) {
        return Err(Error::Domain("delay grid needs two or more points over a non-empty range".into()));
    }
    Ok((0..points)
        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSweepSpec {
    pub name: String,
    pub circuit: CircuitSpec<f64>,
    pub pump: PumpField<f64>,
    pub process: PairProcess<f64>,
    pub chain: DetectionChain<f64>,
    pub generation_rate_hz: f64,
    pub phases: Vec<f64>,
    /// Pattern written to the CSV count columns.
    pub pattern: Pattern,
    pub seed: Option<u64>,
}

/// On-chip fringe: split and both bunch patterns plus the pump transmission.
///
/// The JSON-level checks are the `sinsq` fit of the split counts, the
/// branch-resolved bunch fits, and the phase-doubling ratio from free-period
/// fits of the ideal quantum and classical curves.
pub fn phase_sweep(spec: &PhaseSweepSpec) -> Result<SweepResult> {
    let (relative, normalised) = pattern_rates(&spec.circuit, &spec.pump, &spec.process, &spec.phases)?;
    let pump = classical_fringe(&spec.circuit, &spec.pump, &spec.phases)?;
    let doubling = phase_doubling(&spec.phases, &relative, &pump.cross)?;

    let patterns = [Pattern::Split, Pattern::BunchA, Pattern::BunchB];
    let pick = |sb: &SplitBunch<f64>, p: Pattern| match p {
        Pattern::Split => sb.p_split,
        Pattern::BunchA => sb.p_bunch_a,
        Pattern::BunchB => sb.p_bunch_b,
    };
    let mut ys = vec![Vec::new(); 3];
    let mut sigmas = vec![Vec::new(); 3];
    let mut rows = Vec::with_capacity(spec.phases.len());
    for (i, &phi) in spec.phases.iter().enumerate() {
        for (k, &pat) in patterns.iter().enumerate() {
            let record = expected_counts(spec.generation_rate_hz * pick(&relative[i], pat), 1.0, &spec.chain)?;
            let c = point_counts(&record, &spec.chain, spec.seed.map(|s| (s, stream(i, k as u64))))?;
            ys[k].push(c.net);
            sigmas[k].push(c.sigma);
            if pat == spec.pattern {
                rows.push(SweepRow {
                    control: phi,
                    p_split: normalised[i].p_split,
                    p_bunch_a: normalised[i].p_bunch_a,
                    p_bunch_b: normalised[i].p_bunch_b,
                    r_cc_expected: record.net,
                    acc_expected: record.accidentals,
                    counts_raw: c.raw,
                    counts_net: c.net,
                    sigma: c.sigma,
                });
            }
        }
    }

    let x = spec.phases.clone();
    let opts = FitOptions::default();
    let labels = ["split", "bunch_a", "bunch_b"];
    let models = [
        FringeModel::SinSq,
        FringeModel::Eq4Asym(Branch::A),
        FringeModel::Eq4Asym(Branch::B),
    ];
    let mut series = Vec::new();
    for k in 0..3 {
        series.push(fit_series(labels[k], x.clone(), ys[k].clone(), sigmas[k].clone(), models[k], &opts)?);
    }
    let peak = pump.cross.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let pump_sigma = vec![peak * 1e-3; x.len()];
    series.push(fit_series("pump", x.clone(), pump.cross.clone(), pump_sigma, FringeModel::ClassicalMz, &opts)?);

    let mut metrics = Vec::new();
    metrics.push(("quantum_period_rad".into(), doubling.0));
    metrics.push(("classical_period_rad".into(), doubling.1));
    metrics.push(("period_ratio".into(), doubling.1 / doubling.0));
    for s in &series[1..3] {
        let fit = s.fit.as_ref().expect("fitted");
        let g = fit.param("g");
        metrics.push((format!("{}_gamma_io_ratio_sq", s.label), g * g));
    }

    Ok(SweepResult {
        kind: ExperimentKind::PhaseSweep,
        name: spec.name.clone(),
        seed: spec.seed,
        rows,
        series,
        metrics,
    })
}

/// Free-period fits of the expected split rate and the classical cross-port
/// transmission; returns `(quantum, classical)` periods.
pub fn phase_doubling(phases: &[f64], quantum: &[SplitBunch<f64>], classical: &[f64]) -> Result<(f64, f64)> {
    let ones = vec![1.0; phases.len()];
    let q = FitData::new(phases.to_vec(), quantum.iter().map(|p| p.p_split).collect(), ones.clone())?;
    let c = FitData::new(phases.to_vec(), classical.to_vec(), ones)?;
    let qm = FringeModel::SinSq;
    let cm = FringeModel::ClassicalMz;
    let qf = fit_model(&q, qm, &FitOptions::default().free_period(&qm))?;
    let cf = fit_model(&c, cm, &FitOptions::default().free_period(&cm))?;
    Ok((qf.param("period"), cf.param("period")))
}

/// Spurious-pair ratio `g²` per output branch, from branch-resolved fits of
/// the noiseless simulated bunching fringes.
pub fn spurious_ratios(
    circuit: &CircuitSpec<f64>,
    pump: &PumpField<f64>,
    process: &PairProcess<f64>,
) -> Result<[f64; 2]> {
    let phases = phase_grid(0.0, std::f64::consts::TAU, PHASE_POINTS)?;
    let (relative, _) = pattern_rates(circuit, pump, process, &phases)?;
    let ones = vec![1.0; phases.len()];
    let mut out = [0.0; 2];
    for (k, branch) in [Branch::A, Branch::B].into_iter().enumerate() {
        let y = relative
            .iter()
            .map(|sb| if k == 0 { sb.p_bunch_a } else { sb.p_bunch_b })
            .collect();
        let data = FitData::new(phases.clone(), y, ones.clone())?;
        let fit = fit_model(&data, FringeModel::Eq4Asym(branch), &FitOptions::default())?;
        out[k] = fit.param("g").powi(2);
    }
    Ok(out)
}

/// Rebuild `template` so that the fitted spurious ratios equal `target`.
/// Propagation loss makes the fitted ratios depart from the lossless length
/// rule, so the requested ratios are corrected by fixed-point iteration.
pub fn match_spurious_ratios(
    template: &DeviceTemplate<f64>,
    target: [f64; 2],
    pump: &PumpField<f64>,
    process: &PairProcess<f64>,
) -> Result<DeviceTemplate<f64>> {
    let mut request = target;
    let mut t = template.with_spurious_ratios(request)?;
    if target.iter().all(|r| *r == 0.0) {
        return Ok(t);
    }
    for _ in 0..50 {
        let got = spurious_ratios(&t.build()?, pump, process)?;
        let mut worst: f64 = 0.0;
        for k in 0..2 {
            if target[k] > 0.0 && got[k] > 0.0 {
                worst = worst.max((got[k] / target[k] - 1.0).abs());
                request[k] *= target[k] / got[k];
            }
        }
        if worst < 1e-12 {
            return Ok(t);
        }
        t = template.with_spurious_ratios(request)?;
    }
    Err(Error::Domain(format!("could not realise spurious ratios {target:?}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomScanSpec {
    pub name: String,
    pub setup: HomSetup<f64>,
    pub chain: DetectionChain<f64>,
    pub generation_rate_hz: f64,
    pub positions_um: Vec<f64>,
    pub seed: Option<u64>,
    /// Hold `δ` at this value in the fit instead of fitting it.
    pub fix_delta: Option<f64>,
}

/// Off-chip HOM scan. The control column is the delay in µm and `P_split`
/// holds the coincidence probability behind the splitter.
pub fn hom_scan(spec: &HomScanSpec) -> Result<SweepResult> {
    spec.setup.validate()?;
    if spec.positions_um.is_empty() {
        return Err(Error::Domain("delay sweep is empty".into()));
    }
    let mut rows = Vec::with_capacity(spec.positions_um.len());
    for (i, &x) in spec.positions_um.iter().enumerate() {
        let p = spec.setup.probability(x);
        let record = expected_counts(spec.generation_rate_hz, p, &spec.chain)?;
        let c = point_counts(&record, &spec.chain, spec.seed.map(|s| (s, stream(i, 0))))?;
        rows.push(SweepRow {
            control: x,
            p_split: p,
            p_bunch_a: (1.0 - p) / 2.0,
            p_bunch_b: (1.0 - p) / 2.0,
            r_cc_expected: record.net,
            acc_expected: record.accidentals,
            counts_raw: c.raw,
            counts_net: c.net,
            sigma: c.sigma,
        });
    }
    let model = FringeModel::Hom {
        lambda_p_nm: spec.setup.lambda_p_nm,
    };
    // Touching channels (δ = w) reproduce a single channel of width 2w, so
    // the channel width is held at the known filter width.
    let opts = FitOptions::default().fix(&model, "width_nm", spec.setup.width_nm);
    let opts = match spec.fix_delta {
        Some(d) => opts.fix(&model, "delta_nm", d),
        None => opts,
    };
    let s = fit_series(
        "coincidences",
        spec.positions_um.clone(),
        rows.iter().map(|r| r.counts_net).collect(),
        rows.iter().map(|r| r.sigma).collect(),
        model,
        &opts,
    )?;
    let fit = s.fit.as_ref().expect("fitted");
    let delta = fit.param("delta_nm").abs();
    let metrics = vec![
        ("delta_nm".into(), spec.setup.delta_nm),
        ("bunch_fraction".into(), spec.setup.bunch_fraction),
        ("mode_overlap".into(), spec.setup.mode_overlap),
        ("visibility_expected".into(), spec.setup.effective_visibility()),
        ("visibility_fit".into(), fit.visibility),
        ("visibility_sigma".into(), fit.visibility_sigma),
        ("delta_fit_nm".into(), delta),
        ("beat_period_um".into(), beat_period(delta, spec.setup.lambda_p_nm)),
    ];
    Ok(SweepResult {
        kind: ExperimentKind::HomScan,
        name: spec.name.clone(),
        seed: spec.seed,
        rows,
        series: vec![s],
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrightnessRunSpec {
    pub name: String,
    pub process: PairProcess<f64>,
    pub brightness: f64,
    pub bandwidth_nm: f64,
    /// Launched power per colour, mW.
    pub powers_mw: Vec<f64>,
    pub chain: DetectionChain<f64>,
    pub seed: Option<u64>,
}

/// Coincidences from an isolated spiral against launched power.
pub fn brightness_sweep(spec: &BrightnessRunSpec) -> Result<SweepResult> {
    if spec.powers_mw.len() < 2 {
        return Err(Error::Domain("brightness sweep needs at least two powers".into()));
    }
    let mut rows = Vec::new();
    let mut cars = Vec::new();
    for (i, &p) in spec.powers_mw.iter().enumerate() {
        let b = crate::counts::BrightnessSpec::new(spec.brightness, spec.bandwidth_nm, [p, p])?;
        let rate = pair_rate(&b, spec.process.kind);
        let record = expected_counts(rate, 1.0, &spec.chain)?;
        let c = point_counts(&record, &spec.chain, spec.seed.map(|s| (s, stream(i, 0))))?;
        cars.push(record.car());
        rows.push(SweepRow {
            control: p,
            p_split: 1.0,
            p_bunch_a: 0.0,
            p_bunch_b: 0.0,
            r_cc_expected: record.net,
            acc_expected: record.accidentals,
            counts_raw: c.raw,
            counts_net: c.net,
            sigma: c.sigma,
        });
    }
    // Weighted straight-line fit of ln N against ln P.
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in rows.iter().filter(|r| r.counts_net > 0.0) {
        let w = (r.counts_net / r.sigma).powi(2);
        let (lx, ly) = (r.control.ln(), r.counts_net.ln());
        sw += w;
        sx += w * lx;
        sy += w * ly;
        sxx += w * lx * lx;
        sxy += w * lx * ly;
    }
    let det = sw * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::DegenerateFit("power law needs two distinct powers with counts".into()));
    }
    let exponent = (sw * sxy - sx * sy) / det;
    let eta = spec.chain.eta_s() * spec.chain.eta_i();
    let t = spec.chain.integration_s;
    let estimates: Vec<f64> = rows
        .iter()
        .map(|r| r.counts_net / t / eta / (spec.bandwidth_nm * r.control * r.control) / 1000.0)
        .collect();
    let brightness_est = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let metrics = vec![
        ("power_exponent".into(), exponent),
        ("brightness_khz_per_nm_mw2".into(), brightness_est),
        ("car_min".into(), cars.iter().cloned().fold(f64::INFINITY, f64::min)),
        ("car_max".into(), cars.iter().cloned().fold(0.0, f64::max)),
    ];
    Ok(SweepResult {
        kind: ExperimentKind::Brightness,
        name: spec.name.clone(),
        seed: spec.seed,
        series: vec![Series {
            label: "coincidences".into(),
            x: rows.iter().map(|r| r.control).collect(),
            y: rows.iter().map(|r| r.counts_net).collect(),
            sigma: rows.iter().map(|r| r.sigma).collect(),
            fit: None,
        }],
        rows,
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSpec {
    pub name: String,
    pub circuit: CircuitSpec<f64>,
    pub pump: PumpField<f64>,
    pub process: PairProcess<f64>,
    pub chain: DetectionChain<f64>,
    pub generation_rate_hz: f64,
    pub volts: Vec<f64>,
    pub seed: Option<u64>,
}

/// Split coincidences against heater voltage. A free-period `sinsq` fit
/// against electrical power recovers the heater coefficient.
pub fn calibration_sweep(spec: &CalibrationSpec) -> Result<SweepResult> {
    let heater = spec.circuit.heater();
    let r = HeaterModel::<f64>::nominal_resistance();
    let mut rows = Vec::new();
    let mut power = Vec::new();
    for (i, &v) in spec.volts.iter().enumerate() {
        let amps = v / r;
        let circuit = spec.circuit.with_drive(v, amps);
        let phi = circuit.resolve_phase(&crate::circuit::PhaseDrive::Electrical { volts: v, amps })?;
        let (relative, normalised) = pattern_rates(&spec.circuit, &spec.pump, &spec.process, &[phi])?;
        let record = expected_counts(spec.generation_rate_hz * relative[0].p_split, 1.0, &spec.chain)?;
        let c = point_counts(&record, &spec.chain, spec.seed.map(|s| (s, stream(i, 0))))?;
        power.push(v * amps * 1000.0);
        rows.push(SweepRow {
            control: v,
            p_split: normalised[0].p_split,
            p_bunch_a: normalised[0].p_bunch_a,
            p_bunch_b: normalised[0].p_bunch_b,
            r_cc_expected: record.net,
            acc_expected: record.accidentals,
            counts_raw: c.raw,
            counts_net: c.net,
            sigma: c.sigma,
        });
    }
    let model = FringeModel::SinSq;
    let span = power.last().copied().unwrap_or(0.0) - power.first().copied().unwrap_or(0.0);
    let guess_period = std::f64::consts::PI / heater.k_rad_per_mw;
    let opts = FitOptions::default().free_period(&model);
    let opts = FitOptions {
        fixed_values: vec![(3, if guess_period.is_finite() && guess_period > 0.0 { guess_period } else { span })],
        ..opts
    };
    let s = fit_series(
        "split",
        power,
        rows.iter().map(|r| r.counts_net).collect(),
        rows.iter().map(|r| r.sigma).collect(),
        model,
        &opts,
    )?;
    let fit = s.fit.as_ref().expect("fitted");
    let k = std::f64::consts::PI / fit.param("period");
    let metrics = vec![
        ("k_rad_per_mw_fit".into(), k),
        ("k_rad_per_mw_config".into(), heater.k_rad_per_mw),
        ("phi0_fit".into(), -k * fit.param("phi0")),
    ];
    Ok(SweepResult {
        kind: ExperimentKind::Calibration,
        name: spec.name.clone(),
        seed: spec.seed,
        rows,
        series: vec![s],
        metrics,
    })
}

/// Command-line style overrides applied on top of a document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub noiseless: bool,
    pub points: Option<usize>,
    pub delta_nm: Option<f64>,
}

fn resolve_seed(doc: &ConfigDoc, opts: &RunOptions) -> Result<Option<u64>> {
    if opts.noiseless {
        return Ok(None);
    }
    opts.seed
        .or(doc.experiment().seed)
        .map(Some)
        .ok_or_else(|| Error::Config("sampled runs need a seed ([experiment] seed or --seed)".into()))
}

fn generation_rate(doc: &ConfigDoc) -> Result<f64> {
    let rate = doc
        .experiment()
        .generation_rate_hz
        .ok_or_else(|| Error::Config("[experiment] generation_rate_hz is required".into()))?;
    if !(rate > 0.0) {
        return Err(Error::Config(format!("generation_rate_hz must be positive, got {rate}")));
    }
    Ok(rate)
}

/// Artifact stem, `<experiment name>_<kind>`.
fn experiment_name(doc: &ConfigDoc, kind: ExperimentKind) -> String {
    let base = doc.experiment().name.unwrap_or_else(|| "noonsim".to_string());
    format!("{base}_{}", kind.as_str())
}

pub fn phase_sweep_from_config(doc: &ConfigDoc, opts: &RunOptions) -> Result<SweepResult> {
    phase_sweep(&phase_sweep_spec(doc, opts)?)
}

pub fn phase_sweep_spec(doc: &ConfigDoc, opts: &RunOptions) -> Result<PhaseSweepSpec> {
    let exp = doc.experiment();
    let phases = phase_grid(
        exp.phi_min.unwrap_or(0.0),
        exp.phi_max.unwrap_or(std::f64::consts::TAU),
        opts.points.or(exp.points).unwrap_or(PHASE_POINTS),
    )
    .map_err(|e| Error::Config(format!("experiment: {e}")))?;
    Ok(PhaseSweepSpec {
        name: experiment_name(doc, ExperimentKind::PhaseSweep),
        circuit: doc.circuit()?,
        pump: doc.pump()?,
        process: doc.process()?,
        chain: doc.detection()?,
        generation_rate_hz: generation_rate(doc)?,
        phases,
        pattern: exp.pattern.unwrap_or(Pattern::Split),
        seed: resolve_seed(doc, opts)?,
    })
}

/// Bunch fraction reaching the off-chip HOM: the larger per-branch
/// spurious ratio of the configured device.
pub fn hom_bunch_fraction(doc: &ConfigDoc) -> Result<f64> {
    let [a, b] = spurious_ratios(&doc.circuit()?, &doc.pump()?, &doc.process()?)?;
    Ok(a.max(b))
}

/// HOM setup for `delta_nm`, with the mode overlap taken from a matching
/// preset (explicit, or calibrated to its reported visibility) or `[hom]`.
pub fn hom_setup_from_config(doc: &ConfigDoc, delta_nm: f64) -> Result<HomSetup<f64>> {
    let hom = doc.hom()?;
    let bunch = hom_bunch_fraction(doc)?;
    let preset = hom.preset.iter().find(|p| (p.delta_nm - delta_nm).abs() < 1e-9);
    let base = doc.hom_setup(delta_nm, 1.0, bunch)?;
    let overlap = match preset {
        Some(p) => match (p.mode_overlap, p.reported_visibility) {
            (Some(mu), _) => mu,
            (None, Some(v)) => {
                let mu = v / base.effective_visibility();
                if !(mu > 0.0 && mu <= 1.0) {
                    return Err(Error::Config(format!(
                        "hom preset δ = {delta_nm} nm: reported visibility {v} is above the contamination limit {}",
                        base.effective_visibility()
                    )));
                }
                mu
            }
            (None, None) => hom.mode_overlap.unwrap_or(1.0),
        },
        None => hom.mode_overlap.unwrap_or(1.0),
    };
    doc.hom_setup(delta_nm, overlap, bunch)
}

pub fn hom_scan_from_config(doc: &ConfigDoc, opts: &RunOptions) -> Result<SweepResult> {
    hom_scan(&hom_scan_spec(doc, opts)?)
}

pub fn hom_scan_spec(doc: &ConfigDoc, opts: &RunOptions) -> Result<HomScanSpec> {
    let hom = doc.hom()?;
    let delta = opts
        .delta_nm
        .or(hom.wdm.as_ref().and_then(|w| w.delta_nm))
        .or(doc.process.as_ref().and_then(|p| p.delta_nm))
        .unwrap_or(0.0);
    let setup = hom_setup_from_config(doc, delta)?;
    let (lo, hi, n) = match &hom.delay {
        Some(d) => (d.x_min_um, d.x_max_um, d.points),
        None => (-HOM_RANGE_UM, HOM_RANGE_UM, HOM_POINTS),
    };
    let positions = delay_grid(lo, hi, opts.points.unwrap_or(n)).map_err(|e| Error::Config(format!("hom.delay: {e}")))?;
    let mut chain = doc.detection()?;
    if let Some(t) = hom.t_per_point_s {
        chain.integration_s = t;
        chain.validate().map_err(|e| Error::Config(format!("hom: {e}")))?;
    }
    Ok(HomScanSpec {
        name: format!("{}_{delta}nm", experiment_name(doc, ExperimentKind::HomScan)),
        setup,
        chain,
        generation_rate_hz: generation_rate(doc)?,
        positions_um: positions,
        seed: resolve_seed(doc, opts)?,
        fix_delta: None,
    })
}

pub fn brightness_from_config(doc: &ConfigDoc, opts: &RunOptions) -> Result<SweepResult> {
    let exp = doc.experiment();
    let powers = exp.powers_mw.clone().unwrap_or_else(|| vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0]);
    let b = doc.brightness([1.0, 1.0])?;
    brightness_sweep(&BrightnessRunSpec {
        name: experiment_name(doc, ExperimentKind::Brightness),
        process: doc.process()?,
        brightness: b.brightness,
        bandwidth_nm: b.bandwidth_nm,
        powers_mw: powers,
        chain: doc.detection()?,
        seed: resolve_seed(doc, opts)?,
    })
}

pub fn calibration_from_config(doc: &ConfigDoc, opts: &RunOptions) -> Result<SweepResult> {
    let exp = doc.experiment();
    let circuit = doc.circuit()?;
    let (v_max, n) = exp
        .calibration
        .as_ref()
        .map_or((HeaterModel::<f64>::MAX_DRIVE_V, PHASE_POINTS), |c| (c.v_max, c.points));
    if !(v_max > 0.0) || v_max >= circuit.heater().fuse_v {
        return Err(Error::Config(format!(
            "calibration v_max {v_max} V must be positive and below the fuse voltage {} V",
            circuit.heater().fuse_v
        )));
    }
    let n = opts.points.unwrap_or(n);
    if n < 2 {
        return Err(Error::Config("calibration needs at least two points".into()));
    }
    let volts = (0..n).map(|i| v_max * i as f64 / (n - 1) as f64).collect();
    calibration_sweep(&CalibrationSpec {
        name: experiment_name(doc, ExperimentKind::Calibration),
        circuit,
        pump: doc.pump()?,
        process: doc.process()?,
        chain: doc.detection()?,
        generation_rate_hz: generation_rate(doc)?,
        volts,
        seed: resolve_seed(doc, opts)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::DeviceTemplate;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn spec(seed: Option<u64>, phases: Vec<f64>) -> PhaseSweepSpec {
        PhaseSweepSpec {
            name: "t".into(),
            circuit: DeviceTemplate::ideal().build().unwrap(),
            pump: PumpField::single(1549.6, 15.0).unwrap(),
            process: PairProcess::non_degenerate(6.4).unwrap(),
            chain: DetectionChain::paper(),
            generation_rate_hz: 100e3,
            phases,
            pattern: Pattern::Split,
            seed,
        }
    }

    #[test]
    fn three_point_ideal_sweep() {
        let r = phase_sweep(&spec(None, vec![0.0, FRAC_PI_4, FRAC_PI_2, 1.0, 2.0, 2.5, 3.0, 4.0])).unwrap();
        let p: Vec<f64> = r.rows.iter().map(|r| r.p_split).collect();
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_split_visibility() {
        let r = phase_sweep(&spec(None, phase_grid(0.0, std::f64::consts::TAU, 64).unwrap())).unwrap();
        let fit = r.series("split").unwrap().fit.as_ref().unwrap();
        assert_abs_diff_eq!(fit.visibility, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.metric("period_ratio").unwrap(), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn sampled_runs_are_reproducible() {
        let phases = phase_grid(0.0, std::f64::consts::TAU, 16).unwrap();
        let a = phase_sweep(&spec(Some(5), phases.clone())).unwrap();
        let b = phase_sweep(&spec(Some(5), phases.clone())).unwrap();
        let c = phase_sweep(&spec(Some(6), phases)).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_ne!(a.rows, c.rows);
    }

    #[test]
    fn spurious_ratios_recovered() {
        let circuit = DeviceTemplate::ideal()
            .with_spurious_ratios([0.025, 0.021])
            .unwrap()
            .build()
            .unwrap();
        let g = spurious_ratios(
            &circuit,
            &PumpField::single(1549.6, 15.0).unwrap(),
            &PairProcess::non_degenerate(6.4).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(g[0], 0.025, epsilon = 1e-9);
        assert_abs_diff_eq!(g[1], 0.021, epsilon = 1e-9);
    }

    #[test]
    fn brightness_power_law() {
        let r = brightness_sweep(&BrightnessRunSpec {
            name: "b".into(),
            process: PairProcess::non_degenerate(6.4).unwrap(),
            brightness: 2.7,
            bandwidth_nm: 0.8,
            powers_mw: vec![1.0, 2.0, 4.0],
            chain: DetectionChain::paper().without_darks(),
            seed: None,
        })
        .unwrap();
        assert_abs_diff_eq!(r.metric("power_exponent").unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.metric("brightness_khz_per_nm_mw2").unwrap(), 2.7, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rows[1].r_cc_expected, 4.0 * r.rows[0].r_cc_expected, epsilon = 1e-15);
    }

    #[test]
    fn heater_calibration() {
        let r = calibration_sweep(&CalibrationSpec {
            name: "c".into(),
            circuit: DeviceTemplate::ideal().build().unwrap(),
            pump: PumpField::single(1549.6, 15.0).unwrap(),
            process: PairProcess::non_degenerate(6.4).unwrap(),
            chain: DetectionChain::paper(),
            generation_rate_hz: 100e3,
            volts: (0..40).map(|i| 2.3 * i as f64 / 39.0).collect(),
            seed: None,
        })
        .unwrap();
        let k = r.metric("k_rad_per_mw_fit").unwrap();
        assert_abs_diff_eq!(k, r.metric("k_rad_per_mw_config").unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn grids() {
        assert_eq!(phase_grid(0.0, 1.0, 4).unwrap(), vec![0.0, 0.25, 0.5, 0.75]);
        assert!(phase_grid(0.0, 0.0, 4).is_err());
        let d = delay_grid(-1.0, 1.0, 3).unwrap();
        assert_eq!(d, vec![-1.0, 0.0, 1.0]);
        assert!(delay_grid(0.0, 1.0, 1).is_err());
    }
}
