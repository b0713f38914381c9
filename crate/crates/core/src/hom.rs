//! Off-chip two-colour Hong-Ou-Mandel interference.
//!
//! The split pair leaves the chip with one photon per path. Path `A` is
//! delayed by a free-space displacement `x` (single pass, `τ = x/c`), then
//! both photons meet on a fibre splitter of reflectivity `R`. After top-hat
//! WDM filtering the biphoton spectrum has two lobes of width `w`, centred
//! `δ/2` either side of the pump. Its Fourier transform gives
//!
//! ```text
//! P(x) = 1/2 − (V/2) · cos(2π x δ / λp²) · sinc(2π x w / λp²),   sinc(z) = sin z / z
//! ```
//!
//! [`hom_probability_numeric`] recomputes the same quantity by brute force on
//! a discretised two-photon amplitude and serves as the oracle for the closed
//! form. Units: `x` in µm, wavelengths and widths in nm.

use std::collections::HashMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{sinc, Real};

const NM_PER_UM: f64 = 1000.0;

/// Argument scale `2π x / λp²` with `x` converted to nm.
fn spatial_frequency<T: Real>(x_um: T, lambda_p_nm: T) -> T {
    T::TAU() * x_um * T::lit(NM_PER_UM) / (lambda_p_nm * lambda_p_nm)
}

/// Interference term `cos(2π x δ/λp²) · sinc(2π x w/λp²)`.
pub fn interference_envelope<T: Real>(x_um: T, delta_nm: T, width_nm: T, lambda_p_nm: T) -> T {
    let k = spatial_frequency(x_um, lambda_p_nm);
    (k * delta_nm).cos() * sinc(k * width_nm)
}

/// Closed-form coincidence probability for a balanced splitter.
pub fn hom_probability_closed<T: Real>(
    x_um: T,
    delta_nm: T,
    width_nm: T,
    lambda_p_nm: T,
    visibility: T,
) -> T {
    let half = T::lit(0.5);
    half - half * visibility * interference_envelope(x_um, delta_nm, width_nm, lambda_p_nm)
}

/// Beat period `λp²/δ` in µm; infinite for `δ = 0`.
pub fn beat_period<T: Real>(delta_nm: T, lambda_p_nm: T) -> T {
    if delta_nm == T::zero() {
        T::infinity()
    } else {
        lambda_p_nm * lambda_p_nm / delta_nm / T::lit(NM_PER_UM)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec<T> {
    pub center_nm: T,
    pub width_nm: T,
}

impl<T: Real> FilterSpec<T> {
    pub fn new(center_nm: T, width_nm: T) -> Result<Self> {
        if !(width_nm > T::zero()) || !(center_nm > T::zero()) {
            return Err(Error::Domain(format!(
                "filter needs positive centre and width, got {center_nm} nm / {width_nm} nm"
            )));
        }
        Ok(Self {
            center_nm,
            width_nm,
        })
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        (self.center_nm - other.center_nm).abs() < (self.width_nm + other.width_nm) / T::lit(2.0)
    }
}

/// Discretised biphoton spectrum.
///
/// Bin `k` holds the amplitude for a signal photon at angular offset
/// `+Ω_k` from the pump, with its idler partner at `−Ω_k`. Offsets are
/// expressed as `ω/c` in rad/nm, using the linearised mapping
/// `Δ(ω/c) = 2π Δλ / λp²`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonSpectrum<T> {
    pub lambda_p_nm: T,
    pub delta_nm: T,
    pub width_nm: T,
    offsets: Vec<T>,
    amplitudes: Vec<T>,
    /// Bin spacing in rad/nm, used to identify coincident frequencies.
    spacing: T,
}

impl<T: Real> BiphotonSpectrum<T> {
    /// Two flat lobes of width `w` at `λp ∓ δ/2`, `bins` samples per lobe.
    pub fn two_lobe(lambda_p_nm: T, delta_nm: T, width_nm: T, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
        }
        if !(lambda_p_nm > T::zero()) || !(width_nm > T::zero()) || !(delta_nm >= T::zero()) {
            return Err(Error::Domain("λp, w must be positive and δ non-negative".into()));
        }
        let scale = T::TAU() / (lambda_p_nm * lambda_p_nm);
        let centre = scale * delta_nm / T::lit(2.0);
        let width = scale * width_nm;
        let n = T::lit(bins as f64);
        let spacing = width / n;
        let offsets = (0..bins)
            .map(|k| centre + (T::lit(k as f64) + T::lit(0.5) - n / T::lit(2.0)) * spacing)
            .collect();
        let amp = n.sqrt().recip();
        Ok(Self {
            lambda_p_nm,
            delta_nm,
            width_nm,
            offsets,
            amplitudes: vec![amp; bins],
            spacing,
        })
    }

    /// Arbitrary per-bin amplitudes over the same grid as [`Self::two_lobe`].
    pub fn with_amplitudes(mut self, amplitudes: Vec<T>) -> Result<Self> {
        if amplitudes.len() != self.offsets.len() {
            return Err(Error::Structure(format!(
                "{} amplitudes for {} bins",
                amplitudes.len(),
                self.offsets.len()
            )));
        }
        self.amplitudes = amplitudes;
        Ok(self)
    }

    pub fn bins(&self) -> usize {
        self.offsets.len()
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |a, x| a + *x * *x)
    }

    pub fn signal_filter(&self) -> Result<FilterSpec<T>> {
        FilterSpec::new(self.lambda_p_nm - self.delta_nm / T::lit(2.0), self.width_nm)
    }

    pub fn idler_filter(&self) -> Result<FilterSpec<T>> {
        FilterSpec::new(self.lambda_p_nm + self.delta_nm / T::lit(2.0), self.width_nm)
    }

    fn key(&self, offset: T) -> i64 {
        (offset / self.spacing * T::lit(2.0))
            .round()
            .to_i64()
            .expect("frequency key fits in i64")
    }
}

/// Coincidence probability from a brute-force evolution of the discretised
/// two-photon amplitude through the delay and the splitter.
pub fn hom_probability_numeric<T: Real>(
    spectrum: &BiphotonSpectrum<T>,
    x_um: T,
    reflectivity: T,
) -> Result<T> {
    if (spectrum.norm_sqr() - T::one()).abs() > T::lit(1e-9) {
        return Err(Error::Domain(format!(
            "spectrum is not normalised (Σ|f|² = {})",
            spectrum.norm_sqr()
        )));
    }
    if !(reflectivity >= T::zero() && reflectivity <= T::one()) {
        return Err(Error::Domain(format!("reflectivity {reflectivity} outside [0, 1]")));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let carrier = T::TAU() / spectrum.lambda_p_nm;

    // |Ψ⟩ = Σ_k f_k (a†(+Ω_k) b†(−Ω_k) + a†(−Ω_k) b†(+Ω_k)) / √2, keyed by
    // (frequency of the A photon, frequency of the B photon).
    let mut input: HashMap<(i64, i64), (T, Complex<T>)> = HashMap::new();
    let h = T::FRAC_1_SQRT_2();
    for (&omega, &f) in spectrum.offsets.iter().zip(&spectrum.amplitudes) {
        for (a, b) in [(omega, -omega), (-omega, omega)] {
            let entry = input
                .entry((spectrum.key(a), spectrum.key(b)))
                .or_insert((a, zero));
            entry.1 += Complex::new(f * h, T::zero());
        }
    }
    let norm = input.values().fold(T::zero(), |acc, (_, amp)| acc + amp.norm_sqr()).sqrt();

    // Delay on A, then splitter: a† → √R c† + i√T d†, b† → i√T c† + √R d†.
    // Only the (one photon in c, one in d) amplitudes are needed.
    let x_nm = x_um * T::lit(NM_PER_UM);
    let r = reflectivity;
    let t = T::one() - reflectivity;
    let mut coinc: HashMap<(i64, i64), Complex<T>> = HashMap::with_capacity(input.len() * 2);
    for (&(ka, kb), &(omega_a, amp)) in &input {
        let delayed = amp * Complex::from_polar(T::one(), (carrier + omega_a) * x_nm) / norm;
        // a → c, b → d
        *coinc.entry((ka, kb)).or_insert(zero) += delayed * r;
        // a → d, b → c: (i√T)(i√T) = −T
        *coinc.entry((kb, ka)).or_insert(zero) -= delayed * t;
    }
    Ok(coinc.values().fold(T::zero(), |acc, a| acc + a.norm_sqr()))
}

/// Parameters of one off-chip HOM scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomSetup<T> {
    pub lambda_p_nm: T,
    pub delta_nm: T,
    pub width_nm: T,
    pub splitter_reflectivity: T,
    /// Phenomenological overlap of the two photons' remaining degrees of
    /// freedom (polarisation, drift); 1 for perfect matching.
    pub mode_overlap: T,
    /// Fraction of chip-output pairs that leave bunched in one path.
    pub bunch_fraction: T,
}

impl<T: Real> HomSetup<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !(self.lambda_p_nm > T::zero()) || !(self.width_nm > T::zero()) || !(self.delta_nm >= T::zero()) {
            return Err(Error::Domain("λp, w must be positive and δ non-negative".into()));
        }
        if !unit(self.splitter_reflectivity) || !unit(self.mode_overlap) || !unit(self.bunch_fraction) {
            return Err(Error::Domain(
                "splitter reflectivity, overlap and bunch fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Coincidence probability at zero interference (large delay).
    pub fn baseline(&self) -> T {
        let r = self.splitter_reflectivity;
        let t = T::one() - r;
        let split = T::one() - self.bunch_fraction;
        (r * r + t * t) * split + T::lit(2.0) * r * t * self.bunch_fraction
    }

    /// Dip depth relative to the baseline, `(P_baseline − P_min)/P_baseline`.
    ///
    /// Bunched pairs reach the splitter through a single port and give
    /// coincidences with probability `2RT` regardless of delay; split pairs
    /// interfere with contrast `2RT·overlap`.
    pub fn effective_visibility(&self) -> T {
        let r = self.splitter_reflectivity;
        let t = T::one() - r;
        let split = T::one() - self.bunch_fraction;
        T::lit(2.0) * r * t * self.mode_overlap * split / self.baseline()
    }

    pub fn probability(&self, x_um: T) -> T {
        self.baseline()
            * (T::one()
                - self.effective_visibility()
                    * interference_envelope(x_um, self.delta_nm, self.width_nm, self.lambda_p_nm))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomScan<T> {
    pub positions_um: Vec<T>,
    pub coincidence: Vec<T>,
    pub baseline: T,
    pub visibility: T,
}

pub fn hom_scan<T: Real>(setup: &HomSetup<T>, positions_um: &[T]) -> Result<HomScan<T>> {
    setup.validate()?;
    if positions_um.is_empty() {
        return Err(Error::Domain("delay sweep is empty".into()));
    }
    Ok(HomScan {
        positions_um: positions_um.to_vec(),
        coincidence: positions_um.iter().map(|&x| setup.probability(x)).collect(),
        baseline: setup.baseline(),
        visibility: setup.effective_visibility(),
    })
}
