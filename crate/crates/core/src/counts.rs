//! Detection bookkeeping: efficiencies, dark counts, accidentals, CAR,
//! Poisson sampling and fringe visibility.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::pairgen::ProcessKind;
use crate::scalar::{db_to_fraction, Real};

/// Lumped detection chain for a signal/idler pair of channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionChain<T> {
    /// Total signal-channel efficiency in dB (negative).
    pub eta_s_db: T,
    pub eta_i_db: T,
    /// Detector efficiency. Informational: the dB figures already cover
    /// everything from generation to detection.
    pub detector_efficiency: T,
    pub dark_hz: T,
    pub gate_s: T,
    pub integration_s: T,
}

impl<T: Real> DetectionChain<T> {
    pub fn new(
        eta_s_db: T,
        eta_i_db: T,
        detector_efficiency: T,
        dark_hz: T,
        gate_s: T,
        integration_s: T,
    ) -> Result<Self> {
        let chain = Self {
            eta_s_db,
            eta_i_db,
            detector_efficiency,
            dark_hz,
            gate_s,
            integration_s,
        };
        chain.validate()?;
        Ok(chain)
    }

    /// Values quoted for the paper's setup, with one second per point.
    pub fn paper() -> Self {
        Self {
            eta_s_db: T::lit(-24.2),
            eta_i_db: T::lit(-25.5),
            detector_efficiency: T::lit(0.08),
            dark_hz: T::lit(1000.0),
            gate_s: T::lit(650e-12),
            integration_s: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_s_db <= T::zero()) || !(self.eta_i_db <= T::zero()) {
            return Err(Error::Domain(format!(
                "channel efficiencies must be ≤ 0 dB, got {} / {}",
                self.eta_s_db, self.eta_i_db
            )));
        }
        if !(self.detector_efficiency > T::zero() && self.detector_efficiency <= T::one()) {
            return Err(Error::Domain(format!(
                "detector efficiency {} outside (0, 1]",
                self.detector_efficiency
            )));
        }
        if !(self.dark_hz >= T::zero()) {
            return Err(Error::Domain(format!("dark rate {} Hz is negative", self.dark_hz)));
        }
        if !(self.gate_s > T::zero()) {
            return Err(Error::Domain(format!("gate width {} s must be positive", self.gate_s)));
        }
        if !(self.integration_s > T::zero()) {
            return Err(Error::Domain(format!(
                "integration time {} s must be positive",
                self.integration_s
            )));
        }
        Ok(())
    }

    pub fn eta_s(&self) -> T {
        db_to_fraction(self.eta_s_db)
    }

    pub fn eta_i(&self) -> T {
        db_to_fraction(self.eta_i_db)
    }

    pub fn without_darks(mut self) -> Self {
        self.dark_hz = T::zero();
        self
    }
}

/// Count rates for one setting, all in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord<T> {
    pub singles_s: T,
    pub singles_i: T,
    pub raw: T,
    pub accidentals: T,
    pub net: T,
    pub integration_s: T,
}

impl<T: Real> CountRecord<T> {
    pub fn car(&self) -> T {
        car(self.net, self.accidentals)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrightnessSpec<T> {
    /// Pair brightness in kHz/nm/mW².
    pub brightness: T,
    pub bandwidth_nm: T,
    /// Launched power per pump colour in mW. Single pumps use the first entry.
    pub powers_mw: [T; 2],
}

impl<T: Real> BrightnessSpec<T> {
    pub fn new(brightness: T, bandwidth_nm: T, powers_mw: [T; 2]) -> Result<Self> {
        if !(brightness > T::zero()) || !(bandwidth_nm > T::zero()) {
            return Err(Error::Domain(format!(
                "brightness and bandwidth must be positive, got {brightness} / {bandwidth_nm}"
            )));
        }
        if powers_mw.iter().any(|p| !(*p >= T::zero())) {
            return Err(Error::Domain("pump powers must be non-negative".into()));
        }
        Ok(Self {
            brightness,
            bandwidth_nm,
            powers_mw,
        })
    }
}

/// Generated pair rate in Hz.
pub fn pair_rate<T: Real>(spec: &BrightnessSpec<T>, kind: ProcessKind) -> T {
    let [p1, p2] = spec.powers_mw;
    let power_sq = match kind {
        ProcessKind::NonDegenerate => p1 * p1,
        ProcessKind::Degenerate => p1 * p2,
    };
    spec.brightness * spec.bandwidth_nm * power_sq * T::lit(1000.0)
}

/// Coincidence-window accidental rate `R_s · R_i · τ`.
pub fn accidentals<T: Real>(singles_s: T, singles_i: T, gate_s: T) -> T {
    singles_s * singles_i * gate_s
}

/// Coincidence-to-accidental ratio; infinite without accidentals.
pub fn car<T: Real>(net: T, accidentals: T) -> T {
    if accidentals == T::zero() {
        T::infinity()
    } else {
        net / accidentals
    }
}

/// Expected rates for a pattern occurring with probability `probability`
/// per generated pair.
pub fn expected_counts<T: Real>(
    pair_rate_hz: T,
    probability: T,
    chain: &DetectionChain<T>,
) -> Result<CountRecord<T>> {
    chain.validate()?;
    if !(probability >= T::zero() && probability <= T::one() + T::lit(1e-12)) {
        return Err(Error::Domain(format!("pattern probability {probability} outside [0, 1]")));
    }
    if !(pair_rate_hz >= T::zero()) {
        return Err(Error::Domain(format!("pair rate {pair_rate_hz} Hz is negative")));
    }
    let (eta_s, eta_i) = (chain.eta_s(), chain.eta_i());
    let raw = pair_rate_hz * probability * eta_s * eta_i;
    let singles_s = pair_rate_hz * eta_s + chain.dark_hz;
    let singles_i = pair_rate_hz * eta_i + chain.dark_hz;
    let acc = accidentals(singles_s, singles_i, chain.gate_s);
    Ok(CountRecord {
        singles_s,
        singles_i,
        raw: raw + acc,
        accidentals: acc,
        net: raw,
        integration_s: chain.integration_s,
    })
}

/// Integer counts drawn for one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledCounts {
    pub singles_s: u64,
    pub singles_i: u64,
    pub raw: u64,
}

impl SampledCounts {
    /// Accidental estimate from the sampled singles, as a count.
    pub fn accidentals(&self, gate_s: f64, integration_s: f64) -> f64 {
        let rs = self.singles_s as f64 / integration_s;
        let ri = self.singles_i as f64 / integration_s;
        accidentals(rs, ri, gate_s) * integration_s
    }

    pub fn net(&self, gate_s: f64, integration_s: f64) -> f64 {
        self.raw as f64 - self.accidentals(gate_s, integration_s)
    }

    /// Poisson error bar on the raw coincidences, floored at one count.
    pub fn sigma(&self) -> f64 {
        (self.raw as f64).sqrt().max(1.0)
    }
}

/// Deterministic per-point random stream.
pub fn point_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Poisson draw with mean `mean`; zero mean always gives zero.
pub fn poisson<R: rand::Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::Domain(format!("cannot sample Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Replace each expected count in `record` by a Poisson draw.
pub fn sample_counts<R: rand::Rng + ?Sized>(record: &CountRecord<f64>, rng: &mut R) -> Result<SampledCounts> {
    if !(record.integration_s > 0.0) {
        return Err(Error::Domain("integration time must be positive".into()));
    }
    let t = record.integration_s;
    Ok(SampledCounts {
        singles_s: poisson(rng, record.singles_s * t)?,
        singles_i: poisson(rng, record.singles_i * t)?,
        raw: poisson(rng, record.raw * t)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility<T> {
    pub value: T,
    /// Set when a negative net minimum pushes the value above one.
    pub exceeds_unity: bool,
}

/// `V = (N_max − N_min)/N_max`.
pub fn visibility<T: Real>(n_max: T, n_min: T) -> Result<Visibility<T>> {
    if !(n_max > T::zero()) {
        return Err(Error::Domain(format!("N_max = {n_max} must be positive")));
    }
    if !(n_min <= n_max) {
        return Err(Error::Domain(format!("N_min = {n_min} exceeds N_max = {n_max}")));
    }
    let value = (n_max - n_min) / n_max;
    Ok(Visibility {
        value,
        exceeds_unity: value > T::one(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn pair_rates() {
        let nd = BrightnessSpec::new(2.7, 0.8, [1.0, 0.0]).unwrap();
        assert_relative_eq!(pair_rate(&nd, ProcessKind::NonDegenerate), 2160.0, max_relative = 1e-12);
        let doubled = BrightnessSpec::new(2.7, 0.8, [2.0, 0.0]).unwrap();
        assert_eq!(
            pair_rate(&doubled, ProcessKind::NonDegenerate),
            4.0 * pair_rate(&nd, ProcessKind::NonDegenerate)
        );
        let d = BrightnessSpec::new(2.5, 0.8, [1.0, 1.0]).unwrap();
        assert_relative_eq!(pair_rate(&d, ProcessKind::Degenerate), 2000.0, max_relative = 1e-12);
        assert!(BrightnessSpec::new(0.0, 0.8, [1.0, 1.0]).is_err());
    }

    #[test]
    fn paper_counts() {
        let chain = DetectionChain::paper();
        assert_relative_eq!(chain.eta_s(), 3.8019e-3, max_relative = 1e-4);
        assert_relative_eq!(chain.eta_i(), 2.8184e-3, max_relative = 1e-4);
        let rec = expected_counts(100e3, 1.0, &chain).unwrap();
        assert_relative_eq!(rec.net, 1.0715, max_relative = 1e-3);
        assert_abs_diff_eq!(rec.singles_s, 1380.2, epsilon = 0.1);
        assert_abs_diff_eq!(rec.singles_i, 1281.8, epsilon = 0.1);
        assert_relative_eq!(rec.accidentals, 1.15e-3, max_relative = 5e-3);
        let c = rec.car();
        assert!(c > 900.0 && c < 960.0, "CAR {c}");
        assert_abs_diff_eq!(rec.raw - rec.accidentals, rec.net, epsilon = 1e-15);
    }

    #[test]
    fn efficiency_round_trip() {
        let chain = DetectionChain::paper().without_darks();
        let rec = expected_counts(100e3, 1.0, &chain).unwrap();
        assert_relative_eq!(rec.net / rec.singles_i, chain.eta_s(), max_relative = 1e-12);
        let ideal = DetectionChain::new(0.0, 0.0, 1.0, 0.0, 1e-9, 1.0).unwrap();
        assert_eq!(expected_counts(5e3, 0.3, &ideal).unwrap().net, 1500.0);
    }

    #[test]
    fn accidental_and_car_edges() {
        assert_eq!(accidentals(1380.0, 1282.0, 0.0), 0.0);
        assert_relative_eq!(accidentals(1380.0, 1282.0, 650e-12), 1.15e-3, max_relative = 5e-3);
        assert_eq!(accidentals(2.0, 2.0, 1.0), 4.0 * accidentals(1.0, 1.0, 1.0));
        assert_relative_eq!(car(1.07, 1.15e-3), 930.43, max_relative = 1e-4);
        assert_eq!(car(0.0, 1e-3), 0.0);
        assert!(car(1.0f64, 0.0).is_infinite());
    }

    #[test]
    fn chain_validation() {
        assert!(DetectionChain::new(1.0, -3.0, 0.5, 0.0, 1e-9, 1.0).is_err());
        assert!(DetectionChain::new(-1.0, -3.0, 0.5, -1.0, 1e-9, 1.0).is_err());
        assert!(DetectionChain::new(-1.0, -3.0, 0.5, 0.0, 0.0, 1.0).is_err());
        assert!(DetectionChain::new(-1.0, -3.0, 0.0, 0.0, 1e-9, 1.0).is_err());
        assert!(expected_counts(1.0, 1.5, &DetectionChain::<f64>::paper()).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let rec = expected_counts(100e3, 0.5, &DetectionChain::paper()).unwrap();
        let a = sample_counts(&rec, &mut point_rng(7, 3)).unwrap();
        let b = sample_counts(&rec, &mut point_rng(7, 3)).unwrap();
        let c = sample_counts(&rec, &mut point_rng(7, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(poisson(&mut point_rng(1, 0), 0.0).unwrap(), 0);
        assert!(poisson(&mut point_rng(1, 0), -1.0).is_err());
    }

    #[test]
    fn visibility_definition() {
        assert_eq!(visibility(10.0, 0.0).unwrap().value, 1.0);
        assert_abs_diff_eq!(visibility(1000.0, 9.0).unwrap().value, 0.991, epsilon = 1e-15);
        let over = visibility(100.0, -2.0).unwrap();
        assert!(over.exceeds_unity);
        assert!(visibility(1.0, 2.0).is_err());
        assert!(visibility(0.0, 0.0).is_err());
    }

    #[test]
    fn sampled_sigma_floor() {
        let s = SampledCounts {
            singles_s: 0,
            singles_i: 0,
            raw: 0,
        };
        assert_eq!(s.sigma(), 1.0);
        assert_eq!(s.net(1e-9, 1.0), 0.0);
    }
}
