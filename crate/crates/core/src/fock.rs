//! Few-photon Fock states over labelled modes and linear-optical maps.
//!
//! A mode is a spatial path (`A` or `B`) together with a frequency channel.
//! States are sparse superpositions of occupation patterns with at most
//! [`MAX_PHOTONS`] photons. Linear maps act on creation operators,
//!
//! ```text
//! a†_k  ->  Σ_j M[j][k] a†_j
//! ```
//!
//! so column `k` of a map holds the image of mode `k`. Modes absent from a
//! map's mode list are left untouched.
//!
//! Kets are written with the `A` occupation first, i.e. `|20⟩` is two photons
//! in path `A`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Photon-number cap for every occupation pattern.
pub const MAX_PHOTONS: u8 = 4;

/// Spatial path: interferometer arm or output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Path {
    A,
    B,
}

impl Path {
    pub const BOTH: [Path; 2] = [Path::A, Path::B];

    pub fn index(self) -> usize {
        match self {
            Path::A => 0,
            Path::B => 1,
        }
    }

    pub fn other(self) -> Path {
        match self {
            Path::A => Path::B,
            Path::B => Path::A,
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Path::A => "A",
            Path::B => "B",
        })
    }
}

/// Frequency channel identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Pump,
    Pump1,
    Pump2,
    Signal,
    Idler,
    Degenerate,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Pump,
        Channel::Pump1,
        Channel::Pump2,
        Channel::Signal,
        Channel::Idler,
        Channel::Degenerate,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Channel::Pump => "p",
            Channel::Pump1 => "p1",
            Channel::Pump2 => "p2",
            Channel::Signal => "s",
            Channel::Idler => "i",
            Channel::Degenerate => "d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub path: Path,
    pub channel: Channel,
}

impl ModeLabel {
    pub const fn new(path: Path, channel: Channel) -> Self {
        Self { path, channel }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.channel.short_name(), self.path)
    }
}

/// Centre wavelengths (nm) assigned to the channels used by one pump scheme.
///
/// For a single pump at `λp` with signal–idler detuning `δ`, the signal and
/// idler sit at `λp − δ/2` and `λp + δ/2`. This is the small-detuning form of
/// `2/λp = 1/λs + 1/λi`; the residual is second order in `δ/λp`
/// (see [`ChannelPlan::energy_mismatch`]).
///
/// For two pumps at `λ1`, `λ2` the degenerate photons sit at the mean optical
/// frequency, `2/λd = 1/λ1 + 1/λ2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPlan<T> {
    wavelengths: [Option<T>; 6],
}

impl<T: Real> ChannelPlan<T> {
    pub fn single_pump(lambda_p_nm: T, delta_nm: T) -> Result<Self> {
        check_wavelength(lambda_p_nm, "pump")?;
        if !(delta_nm >= T::zero()) || !delta_nm.is_finite() {
            return Err(Error::Domain(format!(
                "signal-idler detuning must be finite and non-negative, got {delta_nm}"
            )));
        }
        let half = delta_nm / T::lit(2.0);
        let signal = lambda_p_nm - half;
        check_wavelength(signal, "signal")?;
        let mut wavelengths = [None; 6];
        wavelengths[Channel::Pump.index()] = Some(lambda_p_nm);
        wavelengths[Channel::Signal.index()] = Some(signal);
        wavelengths[Channel::Idler.index()] = Some(lambda_p_nm + half);
        Ok(Self { wavelengths })
    }

    pub fn dual_pump(lambda1_nm: T, lambda2_nm: T) -> Result<Self> {
        check_wavelength(lambda1_nm, "pump1")?;
        check_wavelength(lambda2_nm, "pump2")?;
        let two = T::lit(2.0);
        let degenerate = two / (lambda1_nm.recip() + lambda2_nm.recip());
        let mut wavelengths = [None; 6];
        wavelengths[Channel::Pump1.index()] = Some(lambda1_nm);
        wavelengths[Channel::Pump2.index()] = Some(lambda2_nm);
        wavelengths[Channel::Degenerate.index()] = Some(degenerate);
        Ok(Self { wavelengths })
    }

    pub fn wavelength(&self, channel: Channel) -> Option<T> {
        self.wavelengths[channel.index()]
    }

    /// Relative violation of photon-energy conservation for the pair channels.
    pub fn energy_mismatch(&self) -> T {
        let two = T::lit(2.0);
        match (
            self.wavelength(Channel::Pump),
            self.wavelength(Channel::Signal),
            self.wavelength(Channel::Idler),
        ) {
            (Some(p), Some(s), Some(i)) => {
                ((two / p) - (s.recip() + i.recip())).abs() / (two / p)
            }
            _ => match (
                self.wavelength(Channel::Pump1),
                self.wavelength(Channel::Pump2),
                self.wavelength(Channel::Degenerate),
            ) {
                (Some(p1), Some(p2), Some(d)) => {
                    ((p1.recip() + p2.recip()) - two / d).abs() / (two / d)
                }
                _ => T::zero(),
            },
        }
    }
}

fn check_wavelength<T: Real>(lambda: T, what: &str) -> Result<()> {
    if lambda > T::zero() && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what} wavelength must be positive and finite, got {lambda} nm"
        )))
    }
}

/// Photon counts per mode. Zero counts are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockOccupation {
    counts: BTreeMap<ModeLabel, u8>,
}

impl FockOccupation {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn from_counts<I>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ModeLabel, u8)>,
    {
        let mut occ = Self::vacuum();
        for (mode, n) in counts {
            occ = occ.add(mode, n)?;
        }
        Ok(occ)
    }

    /// Returns a copy with `n` more photons in `mode`.
    pub fn add(&self, mode: ModeLabel, n: u8) -> Result<Self> {
        let total = self.total() as u32 + n as u32;
        if total > MAX_PHOTONS as u32 {
            return Err(Error::Structure(format!(
                "occupation would hold {total} photons, cap is {MAX_PHOTONS}"
            )));
        }
        let mut counts = self.counts.clone();
        if n > 0 {
            *counts.entry(mode).or_insert(0) += n;
        }
        Ok(Self { counts })
    }

    pub fn count(&self, mode: ModeLabel) -> u8 {
        self.counts.get(&mode).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u8 {
        self.counts.values().sum()
    }

    /// Photons in a given path, summed over channels.
    pub fn in_path(&self, path: Path) -> u8 {
        self.counts
            .iter()
            .filter(|(m, _)| m.path == path)
            .map(|(_, &n)| n)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeLabel, u8)> + '_ {
        self.counts.iter().map(|(&m, &n)| (m, n))
    }
}

impl fmt::Display for FockOccupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.counts.is_empty() {
            return f.write_str("|vac⟩");
        }
        f.write_str("|")?;
        for (i, (m, n)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}{m}")?;
        }
        f.write_str("⟩")
    }
}

/// Amplitudes at or below this magnitude are dropped.
pub fn prune_tolerance<T: Real>() -> T {
    T::lit(1e-15)
}

fn factorial(n: u8) -> u64 {
    (1..=n as u64).product()
}

/// Sparse superposition of occupation patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState<T> {
    terms: BTreeMap<FockOccupation, Complex<T>>,
}

impl<T: Real> QuantumState<T> {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }

    pub fn vacuum() -> Self {
        Self::basis(FockOccupation::vacuum())
    }

    pub fn basis(occ: FockOccupation) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(occ, Complex::new(T::one(), T::zero()));
        Self { terms }
    }

    /// Builds a state from `(pattern, amplitude)` pairs, summing repeats.
    /// The result is not normalised.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (FockOccupation, Complex<T>)>,
    {
        let mut state = Self::zero();
        for (occ, amp) in terms {
            state.accumulate(occ, amp);
        }
        state.prune();
        state
    }

    fn accumulate(&mut self, occ: FockOccupation, amp: Complex<T>) {
        *self
            .terms
            .entry(occ)
            .or_insert_with(|| Complex::new(T::zero(), T::zero())) += amp;
    }

    fn prune(&mut self) {
        let tol = prune_tolerance::<T>();
        self.terms.retain(|_, a| a.norm() > tol);
    }

    pub fn amplitude(&self, occ: &FockOccupation) -> Complex<T> {
        self.terms
            .get(occ)
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockOccupation, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > T::zero()) {
            return Err(Error::Domain("cannot normalise a zero state".into()));
        }
        Ok(self.scaled(Complex::new(norm.recip(), T::zero())))
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self::from_terms(self.terms.iter().map(|(o, &a)| (o.clone(), a * factor)))
    }

    /// Coherent sum of two (unnormalised) states.
    pub fn superpose(&self, other: &Self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(o, &a)| (o.clone(), a)),
        )
    }

    /// Inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.terms
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (occ, a)| {
                acc + a.conj() * other.amplitude(occ)
            })
    }

    /// `|⟨self|other⟩|`, the global-phase-insensitive overlap.
    pub fn overlap(&self, other: &Self) -> T {
        self.inner(other).norm()
    }

    /// Common photon number of all terms, if there is one.
    pub fn photon_number(&self) -> Option<u8> {
        let mut numbers = self.terms.keys().map(FockOccupation::total);
        let first = numbers.next()?;
        numbers.all(|n| n == first).then_some(first)
    }

    /// Every mode occupied in at least one term.
    pub fn occupied_modes(&self) -> Vec<ModeLabel> {
        let mut modes: Vec<ModeLabel> = self
            .terms
            .keys()
            .flat_map(|o| o.iter().map(|(m, _)| m))
            .collect();
        modes.sort();
        modes.dedup();
        modes
    }
}

impl<T: Real> fmt::Display for QuantumState<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (occ, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({:.6}{:+.6}i){}", a.re, a.im, occ)?;
        }
        Ok(())
    }
}

/// Dense square matrix acting on the creation operators of an ordered mode list.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap<T> {
    modes: Vec<ModeLabel>,
    /// Row-major, `modes.len()²` entries.
    matrix: Vec<Complex<T>>,
}

impl<T: Real> LinearMap<T> {
    pub fn new(modes: Vec<ModeLabel>, matrix: Vec<Complex<T>>) -> Result<Self> {
        let n = modes.len();
        if matrix.len() != n * n {
            return Err(Error::Structure(format!(
                "matrix has {} entries, {} modes need {}",
                matrix.len(),
                n,
                n * n
            )));
        }
        let mut sorted = modes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n {
            return Err(Error::Structure("duplicate mode in linear map".into()));
        }
        Ok(Self { modes, matrix })
    }

    pub fn identity(modes: Vec<ModeLabel>) -> Result<Self> {
        let n = modes.len();
        let mut matrix = vec![Complex::new(T::zero(), T::zero()); n * n];
        for i in 0..n {
            matrix[i * n + i] = Complex::new(T::one(), T::zero());
        }
        Self::new(modes, matrix)
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.matrix[row * self.dim() + col]
    }

    fn index_of(&self, mode: ModeLabel) -> Option<usize> {
        self.modes.iter().position(|&m| m == mode)
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim();
        let mut matrix = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                matrix.push(self.get(c, r).conj());
            }
        }
        Self {
            modes: self.modes.clone(),
            matrix,
        }
    }

    /// Re-expresses the map over `modes` (a superset), acting as identity on
    /// the added modes.
    pub fn embed(&self, modes: &[ModeLabel]) -> Result<Self> {
        let mut out = Self::identity(modes.to_vec())?;
        let n = modes.len();
        let idx: Vec<usize> = self
            .modes
            .iter()
            .map(|&m| {
                modes.iter().position(|&x| x == m).ok_or_else(|| {
                    Error::Structure(format!("mode {m} missing from embedding"))
                })
            })
            .collect::<Result<_>>()?;
        for (r, &ir) in idx.iter().enumerate() {
            for (c, &ic) in idx.iter().enumerate() {
                out.matrix[ir * n + ic] = self.get(r, c);
            }
        }
        Ok(out)
    }

    /// The map that applies `first` and then `self`, i.e. `self · first`,
    /// over the union of both mode lists.
    pub fn after(&self, first: &Self) -> Self {
        let mut modes = first.modes.clone();
        for &m in &self.modes {
            if !modes.contains(&m) {
                modes.push(m);
            }
        }
        let lhs = self.embed(&modes).expect("union contains all modes");
        let rhs = first.embed(&modes).expect("union contains all modes");
        let n = modes.len();
        let mut matrix = vec![Complex::new(T::zero(), T::zero()); n * n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..n {
                    acc += lhs.matrix[r * n + k] * rhs.matrix[k * n + c];
                }
                matrix[r * n + c] = acc;
            }
        }
        Self { modes, matrix }
    }

    /// Max-norm of `M†M − I`.
    pub fn unitarity_error(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..n {
                    acc += self.get(k, r).conj() * self.get(k, c);
                }
                if r == c {
                    acc -= Complex::new(T::one(), T::zero());
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitarity_error() < tol
    }

    /// Largest singular value, by power iteration on `M†M`.
    pub fn max_singular_value(&self) -> T {
        let n = self.dim();
        if n == 0 {
            return T::zero();
        }
        let gram: Vec<Complex<T>> = (0..n * n)
            .map(|i| {
                let (r, c) = (i / n, i % n);
                (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                    acc + self.get(k, r).conj() * self.get(k, c)
                })
            })
            .collect();
        let mut v: Vec<Complex<T>> = (0..n)
            .map(|i| Complex::new(T::one() + T::lit(0.1) * T::lit(i as f64), T::zero()))
            .collect();
        let mut eig = T::zero();
        for _ in 0..500 {
            let w: Vec<Complex<T>> = (0..n)
                .map(|r| {
                    (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, c| {
                        acc + gram[r * n + c] * v[c]
                    })
                })
                .collect();
            let norm = w.iter().fold(T::zero(), |a, x| a + x.norm_sqr()).sqrt();
            if norm == T::zero() {
                return T::zero();
            }
            let next = norm / v.iter().fold(T::zero(), |a, x| a + x.norm_sqr()).sqrt();
            v = w.into_iter().map(|x| x / norm).collect();
            if (next - eig).abs() <= T::epsilon() * next {
                eig = next;
                break;
            }
            eig = next;
        }
        eig.sqrt()
    }

    /// Classical field propagation: `out = M · in` over this map's mode order.
    pub fn apply_to_fields(&self, fields: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.dim();
        if fields.len() != n {
            return Err(Error::Structure(format!(
                "{} field amplitudes for a {n}-mode map",
                fields.len()
            )));
        }
        Ok((0..n)
            .map(|r| {
                (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, c| {
                    acc + self.get(r, c) * fields[c]
                })
            })
            .collect())
    }
}

/// Symmetric coupler `[[√R, i√(1−R)], [i√(1−R), √R]]` on two modes of the
/// same channel in different paths.
pub fn beamsplitter_map<T: Real>(
    reflectivity: T,
    modes: (ModeLabel, ModeLabel),
) -> Result<LinearMap<T>> {
    if !(reflectivity >= T::zero() && reflectivity <= T::one()) {
        return Err(Error::Domain(format!(
            "reflectivity must lie in [0, 1], got {reflectivity}"
        )));
    }
    let (m1, m2) = modes;
    if m1.channel != m2.channel || m1.path == m2.path {
        return Err(Error::Structure(format!(
            "coupler modes must share a channel and differ in path, got {m1} and {m2}"
        )));
    }
    let r = Complex::new(reflectivity.sqrt(), T::zero());
    let t = Complex::new(T::zero(), (T::one() - reflectivity).sqrt());
    LinearMap::new(vec![m1, m2], vec![r, t, t, r])
}

/// Coupler acting on paths A/B for every listed channel at once.
pub fn coupler_map<T: Real>(reflectivity: T, channels: &[Channel]) -> Result<LinearMap<T>> {
    let mut map: Option<LinearMap<T>> = None;
    for &ch in channels {
        let bs = beamsplitter_map(
            reflectivity,
            (ModeLabel::new(Path::A, ch), ModeLabel::new(Path::B, ch)),
        )?;
        map = Some(match map {
            None => bs,
            Some(m) => bs.after(&m),
        });
    }
    map.map_or_else(|| LinearMap::identity(Vec::new()), Ok)
}

/// Multiplies every term by `e^{i n φ}`, `n` being the photon count in `mode`.
pub fn phase_shift<T: Real>(state: &QuantumState<T>, mode: ModeLabel, phi: T) -> QuantumState<T> {
    QuantumState::from_terms(state.iter().map(|(occ, &amp)| {
        let n = occ.count(mode);
        let factor = if n == 0 {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::from_polar(T::one(), T::lit(n as f64) * phi)
        };
        (occ.clone(), amp * factor)
    }))
}

/// Applies a linear map by substituting each creation operator and expanding
/// the product with bosonic normalisation: a pattern `∏ (a†_k)^{n_k}/√(n_k!)`
/// expands into monomials `∏ (a†_j)^{m_j}`, each worth `√(∏ m_j!)` on `|m⟩`.
pub fn apply_linear_map<T: Real>(
    state: &QuantumState<T>,
    map: &LinearMap<T>,
) -> Result<QuantumState<T>> {
    let n = map.dim();
    let mut out: HashMap<FockOccupation, Complex<T>> = HashMap::new();
    for (occ, &amp) in state.iter() {
        let mut spectator = FockOccupation::vacuum();
        let mut inputs: Vec<usize> = Vec::new();
        let mut norm = 1u64;
        for (mode, count) in occ.iter() {
            match map.index_of(mode) {
                Some(col) => {
                    norm *= factorial(count);
                    inputs.extend(std::iter::repeat_n(col, count as usize));
                }
                None => spectator = spectator.add(mode, count)?,
            }
        }
        let coeff = amp / T::lit(norm as f64).sqrt();

        // Each input photon picks an output row; accumulate monomials.
        let mut monomials: HashMap<Vec<u8>, Complex<T>> = HashMap::new();
        monomials.insert(vec![0u8; n], coeff);
        for &col in &inputs {
            let mut next: HashMap<Vec<u8>, Complex<T>> = HashMap::with_capacity(monomials.len() * n);
            for (counts, c) in &monomials {
                for row in 0..n {
                    let m = map.get(row, col);
                    if m.norm_sqr() == T::zero() {
                        continue;
                    }
                    let mut key = counts.clone();
                    key[row] += 1;
                    *next
                        .entry(key)
                        .or_insert_with(|| Complex::new(T::zero(), T::zero())) += *c * m;
                }
            }
            monomials = next;
        }

        for (counts, c) in monomials {
            let mut target = spectator.clone();
            let mut weight = 1u64;
            for (row, &m) in counts.iter().enumerate() {
                if m > 0 {
                    weight *= factorial(m);
                    target = target.add(map.modes[row], m)?;
                }
            }
            let value = c * T::lit(weight as f64).sqrt();
            *out
                .entry(target)
                .or_insert_with(|| Complex::new(T::zero(), T::zero())) += value;
        }
    }
    Ok(QuantumState::from_terms(out))
}

/// Born-rule probability of finding exactly `pattern`.
pub fn outcome_probability<T: Real>(state: &QuantumState<T>, pattern: &FockOccupation) -> T {
    state.amplitude(pattern).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    const AD: ModeLabel = ModeLabel::new(Path::A, Channel::Degenerate);
    const BD: ModeLabel = ModeLabel::new(Path::B, Channel::Degenerate);

    fn ket(a: u8, b: u8) -> FockOccupation {
        FockOccupation::from_counts([(AD, a), (BD, b)]).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn noon() -> QuantumState<f64> {
        QuantumState::from_terms([
            (ket(2, 0), c(FRAC_1_SQRT_2, 0.0)),
            (ket(0, 2), c(-FRAC_1_SQRT_2, 0.0)),
        ])
    }

    #[test]
    fn beamsplitter_limits_and_convention() {
        let full = beamsplitter_map(1.0, (AD, BD)).unwrap();
        assert_eq!(full, LinearMap::identity(vec![AD, BD]).unwrap());

        let half = beamsplitter_map(0.5, (AD, BD)).unwrap();
        let out = half.apply_to_fields(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(out[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].im, FRAC_1_SQRT_2, epsilon = 1e-15);

        let fibre = beamsplitter_map(0.502, (AD, BD)).unwrap();
        assert_abs_diff_eq!(fibre.get(0, 0).re, 0.708_519_583, epsilon = 1e-8);
        assert_abs_diff_eq!(fibre.get(1, 0).im, 0.705_691_150, epsilon = 1e-8);
    }

    #[test]
    fn beamsplitter_rejects_bad_inputs() {
        assert!(matches!(beamsplitter_map(1.3, (AD, BD)), Err(Error::Domain(_))));
        assert!(matches!(beamsplitter_map(-0.1, (AD, BD)), Err(Error::Domain(_))));
        assert!(matches!(
            beamsplitter_map(f64::NAN, (AD, BD)),
            Err(Error::Domain(_))
        ));
        let signal_b = ModeLabel::new(Path::B, Channel::Signal);
        assert!(matches!(
            beamsplitter_map(0.5, (AD, signal_b)),
            Err(Error::Structure(_))
        ));
        assert!(matches!(beamsplitter_map(0.5, (AD, AD)), Err(Error::Structure(_))));
    }

    #[test]
    fn phase_shift_examples() {
        let vac = QuantumState::<f64>::vacuum();
        assert_eq!(phase_shift(&vac, AD, 1.234), vac);

        let one = QuantumState::basis(ket(1, 0));
        let flipped = phase_shift(&one, AD, PI);
        assert_abs_diff_eq!(flipped.amplitude(&ket(1, 0)).re, -1.0, epsilon = 1e-15);

        let phi = 0.3;
        let shifted = phase_shift(&noon(), BD, phi);
        let expected = c(-FRAC_1_SQRT_2, 0.0) * Complex::from_polar(1.0, 2.0 * phi);
        assert_abs_diff_eq!((shifted.amplitude(&ket(0, 2)) - expected).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(shifted.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hom_coalescence_on_balanced_coupler() {
        let bs = beamsplitter_map(0.5, (AD, BD)).unwrap();
        let out = apply_linear_map(&QuantumState::basis(ket(1, 1)), &bs).unwrap();
        assert!(out.amplitude(&ket(1, 1)).norm() < 1e-12);
        assert_abs_diff_eq!(out.amplitude(&ket(2, 0)).im, FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(out.amplitude(&ket(0, 2)).im, FRAC_1_SQRT_2, epsilon = 1e-14);
    }

    #[test]
    fn noon_states_on_balanced_coupler() {
        // With the symmetric convention the antisymmetric N00N state is an
        // eigenstate; the symmetric one (the φ = π/2 internal state) unbunches.
        let bs = beamsplitter_map(0.5, (AD, BD)).unwrap();
        let out = apply_linear_map(&noon(), &bs).unwrap();
        assert_abs_diff_eq!(out.overlap(&noon()), 1.0, epsilon = 1e-12);

        let plus = QuantumState::from_terms([
            (ket(2, 0), c(FRAC_1_SQRT_2, 0.0)),
            (ket(0, 2), c(FRAC_1_SQRT_2, 0.0)),
        ]);
        let out = apply_linear_map(&plus, &bs).unwrap();
        assert_abs_diff_eq!(out.overlap(&QuantumState::basis(ket(1, 1))), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitude(&ket(1, 1)).im, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_map_is_noop_and_spectators_pass_through() {
        let id = LinearMap::identity(vec![AD, BD]).unwrap();
        assert_eq!(apply_linear_map(&noon(), &id).unwrap(), noon());

        let signal_a = ModeLabel::new(Path::A, Channel::Signal);
        let state = QuantumState::basis(FockOccupation::from_counts([(signal_a, 1), (AD, 1)]).unwrap());
        let bs = beamsplitter_map(0.5, (AD, BD)).unwrap();
        let out = apply_linear_map(&state, &bs).unwrap();
        let kept = FockOccupation::from_counts([(signal_a, 1), (AD, 1)]).unwrap();
        assert_abs_diff_eq!(outcome_probability(&out, &kept), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn born_rule_examples() {
        assert_eq!(outcome_probability(&QuantumState::<f64>::basis(ket(1, 1)), &ket(1, 1)), 1.0);
        assert_abs_diff_eq!(outcome_probability(&noon(), &ket(2, 0)), 0.5, epsilon = 1e-15);

        let phi = FRAC_PI_4;
        let eq1 = noon()
            .scaled(c(phi.cos(), 0.0))
            .superpose(&QuantumState::basis(ket(1, 1)).scaled(c(phi.sin(), 0.0)));
        assert_abs_diff_eq!(outcome_probability(&eq1, &ket(1, 1)), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            LinearMap::<f64>::new(vec![AD, BD], vec![c(1.0, 0.0); 3]),
            Err(Error::Structure(_))
        ));
        assert!(matches!(
            LinearMap::<f64>::identity(vec![AD, AD]),
            Err(Error::Structure(_))
        ));
        assert!(FockOccupation::from_counts([(AD, 3), (BD, 2)]).is_err());
        assert!(matches!(QuantumState::<f64>::zero().normalized(), Err(Error::Domain(_))));
    }

    #[test]
    fn lossy_map_is_subunitary() {
        let bs = beamsplitter_map(0.3, (AD, BD)).unwrap();
        assert!(bs.is_unitary(1e-12));
        let loss = LinearMap::new(
            vec![AD, BD],
            vec![c(0.8, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.6, 0.0)],
        )
        .unwrap();
        let lossy = loss.after(&bs);
        assert!(!lossy.is_unitary(1e-6));
        assert!(lossy.max_singular_value() <= 1.0 + 1e-12);
        assert_abs_diff_eq!(bs.max_singular_value(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn channel_plans() {
        let plan = ChannelPlan::single_pump(1549.6, 6.4).unwrap();
        assert_abs_diff_eq!(plan.wavelength(Channel::Signal).unwrap(), 1546.4, epsilon = 1e-12);
        assert_abs_diff_eq!(plan.wavelength(Channel::Idler).unwrap(), 1552.8, epsilon = 1e-12);
        assert!(plan.energy_mismatch() < 1e-5);

        let dual = ChannelPlan::dual_pump(1538.4, 1560.8).unwrap();
        let d = dual.wavelength(Channel::Degenerate).unwrap();
        assert!(d > 1538.4 && d < 1560.8);
        assert!(dual.energy_mismatch() < 1e-15);

        assert!(ChannelPlan::single_pump(-1.0, 1.0).is_err());
        assert!(ChannelPlan::single_pump(1549.6, -1.0).is_err());
        assert!(ChannelPlan::dual_pump(1549.6, f64::INFINITY).is_err());
    }

    #[test]
    fn single_precision_coalescence() {
        let a = ModeLabel::new(Path::A, Channel::Signal);
        let b = ModeLabel::new(Path::B, Channel::Signal);
        let bs = beamsplitter_map(0.5_f32, (a, b)).unwrap();
        let occ = FockOccupation::from_counts([(a, 1), (b, 1)]).unwrap();
        let out = apply_linear_map(&QuantumState::basis(occ.clone()), &bs).unwrap();
        assert!(out.amplitude(&occ).norm() < 1e-6);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-6);
    }
}
