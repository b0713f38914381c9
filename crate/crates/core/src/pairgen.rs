//! First-order SFWM pair generation inside the netlist.
//!
//! Every source segment contributes a pair-creation term proportional to its
//! length and to the product of the local pump amplitudes at its midpoint:
//! `E²` for a single pump (signal + idler photons), `E₁E₂` for two pumps
//! (two degenerate photons). Created photons then see every downstream
//! component. Contributions from all segments add coherently.
//!
//! Losses are ignored for the photons themselves; detection efficiencies are
//! applied later as lumped factors.

use num_complex::Complex;

use crate::circuit::{propagate_pump, CircuitSpec, ComponentSpec, PumpField, PumpScheme};
use crate::error::{Error, Result};
use crate::fock::{
    apply_linear_map, coupler_map, phase_shift, Channel, FockOccupation, ModeLabel, Path,
    QuantumState,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    /// Two pump colours, both photons at the mean pump frequency.
    Degenerate,
    /// One pump colour, signal and idler either side of it.
    NonDegenerate,
}

impl ProcessKind {
    /// Channels occupied by the generated photons.
    pub fn photon_channels(self) -> &'static [Channel] {
        match self {
            ProcessKind::Degenerate => &[Channel::Degenerate],
            ProcessKind::NonDegenerate => &[Channel::Signal, Channel::Idler],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairProcess<T> {
    pub kind: ProcessKind,
    /// Signal–idler detuning in nm; zero for the degenerate process.
    pub delta_nm: T,
}

impl<T: Real> PairProcess<T> {
    pub fn non_degenerate(delta_nm: T) -> Result<Self> {
        if !(delta_nm > T::zero()) || !delta_nm.is_finite() {
            return Err(Error::Domain(format!(
                "non-degenerate process needs a positive detuning, got {delta_nm} nm"
            )));
        }
        Ok(Self {
            kind: ProcessKind::NonDegenerate,
            delta_nm,
        })
    }

    pub fn degenerate() -> Self {
        Self {
            kind: ProcessKind::Degenerate,
            delta_nm: T::zero(),
        }
    }

    /// Checks the process against the pump scheme driving it.
    pub fn check_pump(&self, pump: &PumpField<T>) -> Result<()> {
        match (self.kind, pump.scheme) {
            (ProcessKind::NonDegenerate, PumpScheme::Single { .. }) => Ok(()),
            (ProcessKind::Degenerate, PumpScheme::Dual { .. }) => Ok(()),
            (ProcessKind::NonDegenerate, _) => Err(Error::Domain(
                "non-degenerate pairs need a single-colour pump".into(),
            )),
            (ProcessKind::Degenerate, _) => Err(Error::Domain(
                "degenerate pairs need a dual-colour pump".into(),
            )),
        }
    }
}

/// `Γ = Γ₀ · L / L₀`: amplitude linear in length, so the pair rate goes as `L²`.
pub fn gamma_from_length<T: Real>(length_mm: T, reference_mm: T, gamma0: T) -> Result<T> {
    if !(length_mm > T::zero()) || !(reference_mm > T::zero()) {
        return Err(Error::Domain(format!(
            "lengths must be positive, got {length_mm} mm and {reference_mm} mm"
        )));
    }
    Ok(gamma0 * length_mm / reference_mm)
}

/// Pair amplitude scale: `gamma0` for a source of `reference_length_mm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceAmplitudes<T> {
    pub gamma0: T,
    pub reference_length_mm: T,
}

impl<T: Real> SourceAmplitudes<T> {
    pub fn new(gamma0: T, reference_length_mm: T) -> Result<Self> {
        if !(gamma0 > T::zero()) || !(reference_length_mm > T::zero()) {
            return Err(Error::Domain("Γ₀ and the reference length must be positive".into()));
        }
        Ok(Self {
            gamma0,
            reference_length_mm,
        })
    }

    /// Unit Γ₀ referenced to the first source-role segment of `circuit`.
    pub fn for_circuit(circuit: &CircuitSpec<T>) -> Result<Self> {
        let reference = circuit
            .components()
            .iter()
            .find_map(|c| match c {
                ComponentSpec::Segment(s) if s.role == crate::circuit::SegmentRole::Source => {
                    Some(s.length_mm)
                }
                _ => None,
            })
            .ok_or(Error::NoSource)?;
        Self::new(T::one(), reference)
    }

    pub fn segment(&self, length_mm: T) -> Result<T> {
        gamma_from_length(length_mm, self.reference_length_mm, self.gamma0)
    }
}

fn pair_term<T: Real>(kind: ProcessKind, arm: Path, amplitude: Complex<T>) -> QuantumState<T> {
    match kind {
        ProcessKind::NonDegenerate => {
            let occ = FockOccupation::from_counts([
                (ModeLabel::new(arm, Channel::Signal), 1),
                (ModeLabel::new(arm, Channel::Idler), 1),
            ])
            .expect("two photons");
            QuantumState::from_terms([(occ, amplitude)])
        }
        ProcessKind::Degenerate => {
            // (a†)²|0⟩ = √2 |2⟩
            let occ = FockOccupation::from_counts([(ModeLabel::new(arm, Channel::Degenerate), 2)])
                .expect("two photons");
            QuantumState::from_terms([(occ, amplitude * T::lit(2.0).sqrt())])
        }
    }
}

/// Unnormalised first-order pair amplitude at the chip output. Its squared
/// norm is proportional to the pair generation probability.
pub fn emit_pairs<T: Real>(
    circuit: &CircuitSpec<T>,
    pump: &PumpField<T>,
    process: &PairProcess<T>,
    amplitudes: &SourceAmplitudes<T>,
) -> Result<QuantumState<T>> {
    process.check_pump(pump)?;
    if circuit.source_segments().next().is_none() {
        return Err(Error::NoSource);
    }
    let prop = propagate_pump(circuit, pump)?;
    let channels = process.kind.photon_channels();
    let pump_channels: Vec<Channel> = pump.colours().iter().map(|c| c.0).collect();

    let mut state = QuantumState::zero();
    let mut seg_fields = prop.segments.iter();
    for comp in circuit.components() {
        match comp {
            ComponentSpec::Segment(seg) => {
                let field = seg_fields.next().expect("one field record per segment");
                if seg.is_source {
                    let product = match pump_channels.as_slice() {
                        [p] => field.amplitude(*p) * field.amplitude(*p),
                        [p1, p2] => field.amplitude(*p1) * field.amplitude(*p2),
                        _ => unreachable!("pump has one or two colours"),
                    };
                    let gamma = amplitudes.segment(seg.length_mm)?;
                    let term = pair_term(process.kind, seg.arm, product * gamma);
                    state = state.superpose(&term);
                }
            }
            ComponentSpec::Coupler { reflectivity } => {
                if !state.is_empty() {
                    state = apply_linear_map(&state, &coupler_map(*reflectivity, channels)?)?;
                }
            }
            ComponentSpec::PhaseShifter { arm, drive } => {
                let phi = circuit.resolve_phase(drive)?;
                for &ch in channels {
                    state = phase_shift(&state, ModeLabel::new(*arm, ch), phi);
                }
            }
        }
    }
    Ok(state)
}

/// Normalised two-photon output state.
pub fn generate_pair_state<T: Real>(
    circuit: &CircuitSpec<T>,
    pump: &PumpField<T>,
    process: &PairProcess<T>,
) -> Result<QuantumState<T>> {
    let amps = SourceAmplitudes::for_circuit(circuit)?;
    emit_pairs(circuit, pump, process, &amps)?.normalized()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitBunch<T> {
    pub p_split: T,
    pub p_bunch_a: T,
    pub p_bunch_b: T,
}

/// Path statistics of a two-photon state. Works on unnormalised states too;
/// the three numbers then share the state's norm.
pub fn split_bunch_probabilities<T: Real>(state: &QuantumState<T>) -> Result<SplitBunch<T>> {
    if state.photon_number() != Some(2) {
        return Err(Error::Domain(format!(
            "split/bunch statistics need a two-photon state, got {:?}",
            state.photon_number()
        )));
    }
    let mut out = SplitBunch {
        p_split: T::zero(),
        p_bunch_a: T::zero(),
        p_bunch_b: T::zero(),
    };
    for (occ, amp) in state.iter() {
        let p = amp.norm_sqr();
        match occ.in_path(Path::A) {
            2 => out.p_bunch_a += p,
            1 => out.p_split += p,
            _ => out.p_bunch_b += p,
        }
    }
    Ok(out)
}

/// Closed-form bunching with spurious I/O pairs, unnormalised:
/// `(|(Γ₀+Γ_io)cos φ − Γ_io|², |(Γ₀+Γ_io)cos φ + Γ_io|²)` for outputs A, B.
pub fn corrected_bunch_model<T: Real>(gamma0: T, gamma_io: T, phi: T) -> (T, T) {
    let main = (gamma0 + gamma_io) * phi.cos();
    ((main - gamma_io).powi(2), (main + gamma_io).powi(2))
}

/// Reference states written directly from the ideal-device algebra.
pub mod closed_form {
    use super::*;

    fn c<T: Real>(x: T) -> Complex<T> {
        Complex::new(x, T::zero())
    }

    fn occ(counts: &[(Path, Channel, u8)]) -> FockOccupation {
        FockOccupation::from_counts(counts.iter().map(|&(p, ch, n)| (ModeLabel::new(p, ch), n)))
            .expect("valid occupation")
    }

    /// Bunched state: `(|20⟩ − |02⟩)/√2`, or `(|1s1i⟩_A − |1s1i⟩_B)/√2`.
    pub fn psi_bunch<T: Real>(kind: ProcessKind) -> QuantumState<T> {
        let h = T::FRAC_1_SQRT_2();
        match kind {
            ProcessKind::Degenerate => QuantumState::from_terms([
                (occ(&[(Path::A, Channel::Degenerate, 2)]), c(h)),
                (occ(&[(Path::B, Channel::Degenerate, 2)]), c(-h)),
            ]),
            ProcessKind::NonDegenerate => QuantumState::from_terms([
                (occ(&[(Path::A, Channel::Signal, 1), (Path::A, Channel::Idler, 1)]), c(h)),
                (occ(&[(Path::B, Channel::Signal, 1), (Path::B, Channel::Idler, 1)]), c(-h)),
            ]),
        }
    }

    /// Split state: `|11⟩`, or `(|1s0i⟩_A|0s1i⟩_B + |0s1i⟩_A|1s0i⟩_B)/√2`.
    pub fn psi_split<T: Real>(kind: ProcessKind) -> QuantumState<T> {
        let h = T::FRAC_1_SQRT_2();
        match kind {
            ProcessKind::Degenerate => QuantumState::from_terms([(
                occ(&[(Path::A, Channel::Degenerate, 1), (Path::B, Channel::Degenerate, 1)]),
                c(T::one()),
            )]),
            ProcessKind::NonDegenerate => QuantumState::from_terms([
                (occ(&[(Path::A, Channel::Signal, 1), (Path::B, Channel::Idler, 1)]), c(h)),
                (occ(&[(Path::A, Channel::Idler, 1), (Path::B, Channel::Signal, 1)]), c(h)),
            ]),
        }
    }

    /// `cos φ · Ψ_bunch + sin φ · Ψ_split`.
    pub fn output_state<T: Real>(kind: ProcessKind, phi: T) -> QuantumState<T> {
        psi_bunch::<T>(kind)
            .scaled(c(phi.cos()))
            .superpose(&psi_split::<T>(kind).scaled(c(phi.sin())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumFringe<T> {
    pub phases: Vec<T>,
    pub probabilities: Vec<SplitBunch<T>>,
}

impl<T: Real> QuantumFringe<T> {
    pub fn p_split(&self) -> Vec<T> {
        self.probabilities.iter().map(|p| p.p_split).collect()
    }
}

/// Normalised split/bunch probabilities over a phase sweep.
pub fn quantum_fringe<T: Real>(
    circuit: &CircuitSpec<T>,
    pump: &PumpField<T>,
    process: &PairProcess<T>,
    phases: &[T],
) -> Result<QuantumFringe<T>> {
    if phases.is_empty() {
        return Err(Error::Domain("phase sweep is empty".into()));
    }
    let probabilities = phases
        .iter()
        .map(|&phi| {
            let state = generate_pair_state(&circuit.with_phase(phi), pump, process)?;
            split_bunch_probabilities(&state)
        })
        .collect::<Result<_>>()?;
    Ok(QuantumFringe {
        phases: phases.to_vec(),
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::DeviceTemplate;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn ideal() -> CircuitSpec<f64> {
        DeviceTemplate::ideal().build().unwrap()
    }

    fn single() -> PumpField<f64> {
        PumpField::single(1549.6, 1.0).unwrap()
    }

    fn dual() -> PumpField<f64> {
        PumpField::dual([1538.4, 1560.8], [1.0, 1.0]).unwrap()
    }

    #[test]
    fn gamma_length_scaling() {
        assert_eq!(gamma_from_length(5.2, 5.2, 0.7).unwrap(), 0.7);
        let g2 = gamma_from_length(10.4, 5.2, 1.0).unwrap();
        assert_eq!(g2, 2.0);
        assert_eq!(g2 * g2, 4.0);
        let l_io = 0.02f64.sqrt() * 5.2;
        assert_abs_diff_eq!(l_io, 0.735, epsilon = 1e-3);
        assert_abs_diff_eq!(gamma_from_length(l_io, 5.2, 1.0).unwrap().powi(2), 0.02, epsilon = 1e-15);
        assert!(gamma_from_length(0.0, 5.2, 1.0).is_err());
        assert!(gamma_from_length(1.0, -5.2, 1.0).is_err());
    }

    #[test]
    fn degenerate_endpoints() {
        let bunch = generate_pair_state(&ideal().with_phase(0.0), &dual(), &PairProcess::degenerate()).unwrap();
        assert_abs_diff_eq!(
            bunch.overlap(&closed_form::psi_bunch(ProcessKind::Degenerate)),
            1.0,
            epsilon = 1e-12
        );
        let split = generate_pair_state(&ideal().with_phase(FRAC_PI_2), &dual(), &PairProcess::degenerate()).unwrap();
        assert_abs_diff_eq!(
            split.overlap(&closed_form::psi_split(ProcessKind::Degenerate)),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn non_degenerate_split_state() {
        let process = PairProcess::non_degenerate(6.4).unwrap();
        let split = generate_pair_state(&ideal().with_phase(FRAC_PI_2), &single(), &process).unwrap();
        assert_abs_diff_eq!(
            split.overlap(&closed_form::psi_split(ProcessKind::NonDegenerate)),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn process_pump_mismatch() {
        let process = PairProcess::non_degenerate(6.4).unwrap();
        assert!(generate_pair_state(&ideal(), &dual(), &process).is_err());
        assert!(generate_pair_state(&ideal(), &single(), &PairProcess::degenerate()).is_err());
        assert!(PairProcess::non_degenerate(0.0).is_err());
    }

    #[test]
    fn no_source_region() {
        let c = CircuitSpec::new(
            vec![ComponentSpec::Coupler { reflectivity: 0.5 }],
            Default::default(),
            0.0,
        )
        .unwrap();
        assert_eq!(
            generate_pair_state(&c, &dual(), &PairProcess::degenerate()),
            Err(Error::NoSource)
        );
    }

    #[test]
    fn split_bunch_examples() {
        let split = split_bunch_probabilities(&closed_form::psi_split::<f64>(ProcessKind::Degenerate)).unwrap();
        assert_eq!((split.p_split, split.p_bunch_a, split.p_bunch_b), (1.0, 0.0, 0.0));

        let bunch = split_bunch_probabilities(&closed_form::psi_bunch::<f64>(ProcessKind::Degenerate)).unwrap();
        assert_abs_diff_eq!(bunch.p_split, 0.0);
        assert_abs_diff_eq!(bunch.p_bunch_a, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(bunch.p_bunch_b, 0.5, epsilon = 1e-15);

        let mid = split_bunch_probabilities(&closed_form::output_state::<f64>(ProcessKind::NonDegenerate, FRAC_PI_4)).unwrap();
        assert_abs_diff_eq!(mid.p_split, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mid.p_bunch_a, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(mid.p_bunch_b, 0.25, epsilon = 1e-15);

        let one_photon = QuantumState::<f64>::basis(
            FockOccupation::from_counts([(ModeLabel::new(Path::A, Channel::Signal), 1)]).unwrap(),
        );
        assert!(matches!(split_bunch_probabilities(&one_photon), Err(Error::Domain(_))));
    }

    #[test]
    fn corrected_bunch_examples() {
        let phi: f64 = 0.37;
        let (a, b) = corrected_bunch_model(1.3, 0.0, phi);
        assert_abs_diff_eq!(a, 1.69 * phi.cos().powi(2), epsilon = 1e-15);
        assert_eq!(a, b);

        let g = 0.025f64.sqrt();
        let (a, b) = corrected_bunch_model(1.0, g, FRAC_PI_2);
        assert_abs_diff_eq!(a, 0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.025, epsilon = 1e-15);

        let (a, b) = corrected_bunch_model(1.0, 0.1581, 0.0);
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 1.732_382_44, epsilon = 1e-8);
    }

    #[test]
    fn quantum_fringe_examples() {
        let process = PairProcess::non_degenerate(6.4).unwrap();
        let f = quantum_fringe(&ideal(), &single(), &process, &[0.0, FRAC_PI_4, FRAC_PI_2]).unwrap();
        for (got, want) in f.p_split().iter().zip([0.0, 0.5, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let g = quantum_fringe(&ideal(), &dual(), &PairProcess::degenerate(), &[0.0, FRAC_PI_4, FRAC_PI_2]).unwrap();
        for (a, b) in f.p_split().iter().zip(g.p_split()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(quantum_fringe(&ideal(), &single(), &process, &[]).is_err());
    }

    #[test]
    fn pump_power_scaling() {
        let process = PairProcess::non_degenerate(6.4).unwrap();
        let c = ideal().with_phase(0.3);
        let amps = SourceAmplitudes::for_circuit(&c).unwrap();
        let p1 = emit_pairs(&c, &single(), &process, &amps).unwrap().norm_sqr();
        let p2 = emit_pairs(&c, &PumpField::single(1549.6, 2.0).unwrap(), &process, &amps)
            .unwrap()
            .norm_sqr();
        assert_abs_diff_eq!(p2 / p1, 4.0, epsilon = 1e-12);

        let d1 = emit_pairs(&c, &dual(), &PairProcess::degenerate(), &amps).unwrap().norm_sqr();
        let d2 = emit_pairs(
            &c,
            &PumpField::dual([1538.4, 1560.8], [2.0, 1.0]).unwrap(),
            &PairProcess::degenerate(),
            &amps,
        )
        .unwrap()
        .norm_sqr();
        assert_abs_diff_eq!(d2 / d1, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn f32_ideal_split() {
        let c = DeviceTemplate::<f32>::ideal().build().unwrap().with_phase(std::f32::consts::FRAC_PI_2);
        let pump = PumpField::single(1549.6_f32, 1.0).unwrap();
        let state = generate_pair_state(&c, &pump, &PairProcess::non_degenerate(6.4_f32).unwrap()).unwrap();
        let sb = split_bunch_probabilities(&state).unwrap();
        assert!((sb.p_split - 1.0).abs() < 1e-5);
    }
}
