//! Weighted nonlinear least-squares fits of fringe and HOM models.
//!
//! Unless an explicit start point is given, a deterministic coarse grid over
//! the nonlinear parameters (with the linear ones solved exactly at each
//! node) seeds a damped Gauss-Newton refinement. A step is only accepted if
//! it lowers χ².

use std::fmt;

use crate::counts;
use crate::error::{Error, Result};
use crate::hom::interference_envelope;
use crate::linalg::{invert_spd, linear_lsq, solve_spd, Matrix};
use crate::scalar::{sinc, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FringeModel<T> {
    /// `a·sin²(π(φ−φ₀)/P) + c`, parameters `[a, φ₀, c, P]`.
    SinSq,
    /// `a·cos²(π(φ−φ₀)/P) + c`, parameters `[a, φ₀, c, P]`.
    CosSq,
    /// Classical fringe `a·cos²(π(φ−φ₀)/P) + c` with `P = 2π`.
    ClassicalMz,
    /// `scale·((1+g)cos(φ−φ₀) ∓ g)² + c`, parameters `[scale, g, φ₀, c]`;
    /// minus for branch A, plus for branch B.
    Eq4Asym(Branch),
    /// `n₀(1 − V cos(kδt) sinc(kwt))` with `t = x − x₀`, `k = 2π/λp²`,
    /// parameters `[n₀, V, δ, w, x₀]`.
    Hom { lambda_p_nm: T },
}

impl<T: Real> fmt::Display for FringeModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FringeModel::SinSq => f.write_str("sinsq"),
            FringeModel::CosSq => f.write_str("cossq"),
            FringeModel::ClassicalMz => f.write_str("classical"),
            FringeModel::Eq4Asym(Branch::A) => f.write_str("eq4-a"),
            FringeModel::Eq4Asym(Branch::B) => f.write_str("eq4-b"),
            FringeModel::Hom { .. } => f.write_str("hom"),
        }
    }
}

fn dsinc<T: Real>(z: T) -> T {
    if z.abs() < T::lit(1e-4) {
        -z / T::lit(3.0) + z * z * z / T::lit(30.0)
    } else {
        (z * z.cos() - z.sin()) / (z * z)
    }
}

impl<T: Real> FringeModel<T> {
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            FringeModel::SinSq | FringeModel::CosSq | FringeModel::ClassicalMz => {
                &["a", "phi0", "c", "period"]
            }
            FringeModel::Eq4Asym(_) => &["scale", "g", "phi0", "c"],
            FringeModel::Hom { .. } => &["n0", "V", "delta_nm", "width_nm", "x0_um"],
        }
    }

    pub fn n_params(&self) -> usize {
        self.param_names().len()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names().iter().position(|n| *n == name)
    }

    /// Parameters held fixed unless the caller frees them.
    pub fn default_fixed(&self) -> Vec<bool> {
        match self {
            FringeModel::SinSq | FringeModel::CosSq | FringeModel::ClassicalMz => {
                vec![false, false, false, true]
            }
            FringeModel::Eq4Asym(_) => vec![false, false, false, true],
            FringeModel::Hom { .. } => vec![false; 5],
        }
    }

    fn default_params(&self) -> Vec<T> {
        match self {
            FringeModel::SinSq | FringeModel::CosSq => {
                vec![T::one(), T::zero(), T::zero(), T::PI()]
            }
            FringeModel::ClassicalMz => vec![T::one(), T::zero(), T::zero(), T::TAU()],
            FringeModel::Eq4Asym(_) => vec![T::one(), T::zero(), T::zero(), T::zero()],
            FringeModel::Hom { .. } => {
                vec![T::one(), T::one(), T::zero(), T::lit(0.8), T::zero()]
            }
        }
    }

    fn lower_bounds(&self) -> Vec<T> {
        let ninf = T::neg_infinity();
        match self {
            FringeModel::SinSq | FringeModel::CosSq | FringeModel::ClassicalMz => {
                vec![T::zero(), ninf, ninf, T::lit(1e-6)]
            }
            FringeModel::Eq4Asym(_) => vec![T::zero(), T::zero(), ninf, ninf],
            FringeModel::Hom { .. } => vec![T::zero(), T::zero(), T::zero(), T::lit(1e-6), ninf],
        }
    }

    fn upper_bounds(&self) -> Vec<T> {
        let mut up = vec![T::infinity(); self.n_params()];
        if let FringeModel::Hom { .. } = self {
            up[1] = T::lit(1.05);
        }
        up
    }

    fn is_sin(&self) -> bool {
        matches!(self, FringeModel::SinSq)
    }

    /// Model value at `x`.
    pub fn eval(&self, p: &[T], x: T) -> T {
        match *self {
            FringeModel::SinSq | FringeModel::CosSq | FringeModel::ClassicalMz => {
                let th = T::PI() * (x - p[1]) / p[3];
                let s = if self.is_sin() { th.sin() } else { th.cos() };
                p[0] * s * s + p[2]
            }
            FringeModel::Eq4Asym(branch) => {
                let u = eq4_amplitude(branch, p[1], x - p[2]);
                p[0] * u * u + p[3]
            }
            FringeModel::Hom { lambda_p_nm } => {
                p[0] * (T::one() - p[1] * interference_envelope(x - p[4], p[2], p[3], lambda_p_nm))
            }
        }
    }

    /// Model value and gradient with respect to every parameter.
    pub fn eval_grad(&self, p: &[T], x: T, grad: &mut [T]) -> T {
        match *self {
            FringeModel::SinSq | FringeModel::CosSq | FringeModel::ClassicalMz => {
                let dx = x - p[1];
                let th = T::PI() * dx / p[3];
                let (s, ds) = if self.is_sin() {
                    (th.sin() * th.sin(), (th + th).sin())
                } else {
                    (th.cos() * th.cos(), -(th + th).sin())
                };
                grad[0] = s;
                grad[1] = -p[0] * ds * T::PI() / p[3];
                grad[2] = T::one();
                grad[3] = -p[0] * ds * T::PI() * dx / (p[3] * p[3]);
                p[0] * s + p[2]
            }
            FringeModel::Eq4Asym(branch) => {
                let t = x - p[2];
                let u = eq4_amplitude(branch, p[1], t);
                let sign = match branch {
                    Branch::A => -T::one(),
                    Branch::B => T::one(),
                };
                let two = T::lit(2.0);
                grad[0] = u * u;
                grad[1] = p[0] * two * u * (t.cos() + sign);
                grad[2] = p[0] * two * u * (T::one() + p[1]) * t.sin();
                grad[3] = T::one();
                p[0] * u * u + p[3]
            }
            FringeModel::Hom { lambda_p_nm } => {
                let (n0, v, delta, w) = (p[0], p[1], p[2], p[3]);
                let t = x - p[4];
                let k = T::TAU() * T::lit(1000.0) / (lambda_p_nm * lambda_p_nm);
                let (c, sn) = ((k * delta * t).cos(), (k * delta * t).sin());
                let s = sinc(k * w * t);
                let ds = dsinc(k * w * t);
                grad[0] = T::one() - v * c * s;
                grad[1] = -n0 * c * s;
                grad[2] = n0 * v * s * sn * k * t;
                grad[3] = -n0 * v * c * ds * k * t;
                grad[4] = -n0 * v * (sn * k * delta * s - c * ds * k * w);
                n0 * (T::one() - v * c * s)
            }
        }
    }

    /// Fold periodic offsets into a canonical range.
    fn normalise(&self, p: &mut [T]) {
        let period = match self {
            FringeModel::SinSq | FringeModel::CosSq | FringeModel::ClassicalMz => Some((1, p[3])),
            FringeModel::Eq4Asym(_) => Some((2, T::TAU())),
            FringeModel::Hom { .. } => None,
        };
        if let Some((i, period)) = period {
            let half = period / T::lit(2.0);
            let shifted = p[i] + half;
            p[i] = shifted - (shifted / period).floor() * period - half;
        }
    }

    /// Analytic maximum and minimum over one period, with their gradients.
    fn extrema(&self, p: &[T]) -> ((T, Vec<T>), (T, Vec<T>)) {
        let n = self.n_params();
        let unit = |i: usize| {
            let mut g = vec![T::zero(); n];
            g[i] = T::one();
            g
        };
        match self {
            FringeModel::SinSq | FringeModel::CosSq | FringeModel::ClassicalMz => {
                let mut gmax = unit(0);
                gmax[2] = T::one();
                ((p[0] + p[2], gmax), (p[2], unit(2)))
            }
            FringeModel::Eq4Asym(_) => {
                let peak = (T::one() + p[1] + p[1]).powi(2);
                let mut gmax = vec![T::zero(); n];
                gmax[0] = peak;
                gmax[1] = p[0] * T::lit(4.0) * (T::one() + p[1] + p[1]);
                gmax[3] = T::one();
                ((p[0] * peak + p[3], gmax), (p[3], unit(3)))
            }
            FringeModel::Hom { .. } => {
                let mut gmin = vec![T::zero(); n];
                gmin[0] = T::one() - p[1];
                gmin[1] = -p[0];
                ((p[0], unit(0)), (p[0] * (T::one() - p[1]), gmin))
            }
        }
    }
}

fn eq4_amplitude<T: Real>(branch: Branch, g: T, t: T) -> T {
    let base = (T::one() + g) * t.cos();
    match branch {
        Branch::A => base - g,
        Branch::B => base + g,
    }
}

/// Data points `(x, y, σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitData<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub sigma: Vec<T>,
}

impl<T: Real> FitData<T> {
    pub fn new(x: Vec<T>, y: Vec<T>, sigma: Vec<T>) -> Result<Self> {
        if x.len() != y.len() || x.len() != sigma.len() {
            return Err(Error::Domain(format!(
                "length mismatch: {} x, {} y, {} σ",
                x.len(),
                y.len(),
                sigma.len()
            )));
        }
        if let Some(i) = sigma.iter().position(|s| !(*s > T::zero()) || !s.is_finite()) {
            return Err(Error::Domain(format!("σ[{i}] = {} must be positive", sigma[i])));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite data".into()));
        }
        Ok(Self { x, y, sigma })
    }

    /// Poisson weights `σ = √y`, floored at one count.
    pub fn poisson(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        let sigma = y.iter().map(|v| v.max(T::zero()).sqrt().max(T::one())).collect();
        Self::new(x, y, sigma)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.iter().map(|v| *v * k).collect(),
            sigma: self.sigma.iter().map(|v| *v * k).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions<T> {
    /// Start point; skips the grid search when given.
    pub init: Option<Vec<T>>,
    /// Per-parameter fixed flags; defaults to [`FringeModel::default_fixed`].
    pub fixed: Option<Vec<bool>>,
    /// Values for fixed parameters when no `init` is given.
    pub fixed_values: Vec<(usize, T)>,
    pub max_iterations: usize,
    pub tolerance: T,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            init: None,
            fixed: None,
            fixed_values: Vec::new(),
            max_iterations: 200,
            tolerance: T::lit(1e-10),
        }
    }
}

impl<T: Real> FitOptions<T> {
    pub fn free_period(mut self, model: &FringeModel<T>) -> Self {
        let mut fixed = self.fixed.take().unwrap_or_else(|| model.default_fixed());
        if let Some(i) = model.param_index("period") {
            fixed[i] = false;
        }
        self.fixed = Some(fixed);
        self
    }

    pub fn fix(mut self, model: &FringeModel<T>, name: &str, value: T) -> Self {
        let i = model
            .param_index(name)
            .unwrap_or_else(|| panic!("model {model} has no parameter {name}"));
        let mut fixed = self.fixed.take().unwrap_or_else(|| model.default_fixed());
        fixed[i] = true;
        self.fixed = Some(fixed);
        self.fixed_values.retain(|(j, _)| *j != i);
        self.fixed_values.push((i, value));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub model: FringeModel<T>,
    pub params: Vec<T>,
    pub fixed: Vec<bool>,
    /// Free parameters that ended on a bound with the data pushing outward;
    /// they carry no uncertainty.
    pub at_bound: Vec<bool>,
    /// 1σ errors from the χ²/dof-scaled covariance; zero for fixed parameters.
    pub uncertainties: Vec<T>,
    pub covariance: Matrix<T>,
    /// `(JᵀWJ)⁻¹` without the χ²/dof scaling.
    pub covariance_unscaled: Matrix<T>,
    pub chi2: T,
    pub dof: usize,
    pub iterations: usize,
    pub converged: bool,
    pub n_max: T,
    pub n_min: T,
    pub visibility: T,
    pub visibility_sigma: T,
}

impl<T: Real> FitResult<T> {
    pub fn chi2_per_dof(&self) -> T {
        self.chi2 / T::lit(self.dof as f64)
    }

    pub fn param(&self, name: &str) -> T {
        let i = self
            .model
            .param_index(name)
            .unwrap_or_else(|| panic!("model {} has no parameter {name}", self.model));
        self.params[i]
    }

    pub fn sigma(&self, name: &str) -> T {
        let i = self
            .model
            .param_index(name)
            .unwrap_or_else(|| panic!("model {} has no parameter {name}", self.model));
        self.uncertainties[i]
    }

    pub fn eval(&self, x: T) -> T {
        self.model.eval(&self.params, x)
    }
}

fn chi2<T: Real>(model: &FringeModel<T>, p: &[T], data: &FitData<T>) -> T {
    let mut acc = T::zero();
    for i in 0..data.len() {
        let r = (data.y[i] - model.eval(p, data.x[i])) / data.sigma[i];
        acc += r * r;
    }
    acc
}

/// Normal matrix and gradient over the free parameters.
fn normal_equations<T: Real>(
    model: &FringeModel<T>,
    p: &[T],
    free: &[usize],
    data: &FitData<T>,
) -> (Matrix<T>, Vec<T>) {
    let m = free.len();
    let mut a = vec![vec![T::zero(); m]; m];
    let mut b = vec![T::zero(); m];
    let mut grad = vec![T::zero(); model.n_params()];
    for i in 0..data.len() {
        let f = model.eval_grad(p, data.x[i], &mut grad);
        let w = data.sigma[i].recip();
        let r = (data.y[i] - f) * w;
        for (pi, &fi) in free.iter().enumerate() {
            let ji = grad[fi] * w;
            b[pi] += ji * r;
            for (qi, &fq) in free.iter().enumerate().take(pi + 1) {
                a[pi][qi] += ji * grad[fq] * w;
            }
        }
    }
    for pi in 0..m {
        for qi in 0..pi {
            a[qi][pi] = a[pi][qi];
        }
    }
    (a, b)
}

/// Normal equations restricted to free parameters that are not pinned at a
/// bound by a gradient pointing out of the feasible region.
fn active_system<T: Real>(
    model: &FringeModel<T>,
    p: &[T],
    free: &[usize],
    data: &FitData<T>,
) -> (Vec<usize>, Matrix<T>, Vec<T>) {
    let (a, b) = normal_equations(model, p, free, data);
    let (lo, hi) = (model.lower_bounds(), model.upper_bounds());
    let keep: Vec<usize> = (0..free.len())
        .filter(|&k| {
            let i = free[k];
            !((p[i] <= lo[i] && b[k] <= T::zero()) || (p[i] >= hi[i] && b[k] >= T::zero()))
        })
        .collect();
    let active = keep.iter().map(|&k| free[k]).collect();
    let a = keep.iter().map(|&r| keep.iter().map(|&c| a[r][c]).collect()).collect();
    let b = keep.iter().map(|&k| b[k]).collect();
    (active, a, b)
}

fn clamp<T: Real>(model: &FringeModel<T>, p: &mut [T]) {
    for ((v, lo), hi) in p.iter_mut().zip(model.lower_bounds()).zip(model.upper_bounds()) {
        *v = v.max(lo).min(hi);
    }
}

fn grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    (0..n)
        .map(|i| lo + (hi - lo) * T::lit(i as f64) / T::lit(n as f64))
        .collect()
}

/// Grid search over the nonlinear parameters, solving the linear ones.
fn seed<T: Real>(model: &FringeModel<T>, data: &FitData<T>, base: &[T], fixed: &[bool]) -> Vec<T> {
    let mut best = base.to_vec();
    let mut best_chi2 = T::infinity();
    let mut consider = |candidate: Vec<T>| {
        let c2 = chi2(model, &candidate, data);
        if c2 < best_chi2 {
            best_chi2 = c2;
            best = candidate;
        }
    };
    match *model {
        FringeModel::SinSq | FringeModel::CosSq | FringeModel::ClassicalMz => {
            let period = base[3];
            let phases = if fixed[1] {
                vec![base[1]]
            } else {
                grid(-period / T::lit(2.0), period / T::lit(2.0), 72)
            };
            for phi0 in phases {
                let mut p = base.to_vec();
                p[1] = phi0;
                p[0] = T::one();
                p[2] = T::zero();
                let shape: Vec<T> = data.x.iter().map(|&x| model.eval(&p, x)).collect();
                let solved = if fixed[2] {
                    let y: Vec<T> = data.y.iter().map(|y| *y - base[2]).collect();
                    linear_lsq(&[shape], &y, &data.sigma).map(|(c, _)| (c[0], base[2]))
                } else {
                    linear_lsq(&[shape, vec![T::one(); data.len()]], &data.y, &data.sigma)
                        .map(|(c, _)| (c[0], c[1]))
                };
                if let Some((a, c)) = solved {
                    p[0] = if fixed[0] { base[0] } else { a.max(T::zero()) };
                    p[2] = c;
                    consider(p);
                }
            }
        }
        FringeModel::Eq4Asym(_) => {
            let phases = if fixed[2] { vec![base[2]] } else { grid(-T::PI(), T::PI(), 72) };
            let gs = if fixed[1] { vec![base[1]] } else { grid(T::zero(), T::lit(0.6), 31) };
            for &phi0 in &phases {
                for &g in &gs {
                    let mut p = base.to_vec();
                    p[0] = T::one();
                    p[1] = g;
                    p[2] = phi0;
                    p[3] = T::zero();
                    let shape: Vec<T> = data.x.iter().map(|&x| model.eval(&p, x)).collect();
                    let solved = if fixed[3] {
                        let y: Vec<T> = data.y.iter().map(|y| *y - base[3]).collect();
                        linear_lsq(&[shape], &y, &data.sigma).map(|(c, _)| (c[0], base[3]))
                    } else {
                        linear_lsq(&[shape, vec![T::one(); data.len()]], &data.y, &data.sigma)
                            .map(|(c, _)| (c[0], c[1]))
                    };
                    if let Some((scale, c)) = solved {
                        p[0] = if fixed[0] { base[0] } else { scale.max(T::zero()) };
                        p[3] = c;
                        consider(p);
                    }
                }
            }
        }
        FringeModel::Hom { lambda_p_nm } => {
            let deltas = if fixed[2] { vec![base[2]] } else { grid(T::zero(), T::lit(15.1), 151) };
            let widths = if fixed[3] {
                vec![base[3]]
            } else {
                [0.2, 0.4, 0.8, 1.2, 1.6, 2.4].iter().map(|w| T::lit(*w)).collect()
            };
            let offsets = if fixed[4] {
                vec![base[4]]
            } else {
                let imin = (0..data.len())
                    .min_by(|&i, &j| data.y[i].partial_cmp(&data.y[j]).expect("finite data"))
                    .unwrap_or(0);
                vec![T::zero(), data.x[imin]]
            };
            for &delta in &deltas {
                for &w in &widths {
                    for &x0 in &offsets {
                        let env: Vec<T> = data
                            .x
                            .iter()
                            .map(|&x| -interference_envelope(x - x0, delta, w, lambda_p_nm))
                            .collect();
                        let Some((c, _)) =
                            linear_lsq(&[vec![T::one(); data.len()], env], &data.y, &data.sigma)
                        else {
                            continue;
                        };
                        if !(c[0] > T::zero()) {
                            continue;
                        }
                        let mut p = vec![c[0], c[1] / c[0], delta, w, x0];
                        if fixed[0] {
                            p[0] = base[0];
                        }
                        if fixed[1] {
                            p[1] = base[1];
                        }
                        clamp(model, &mut p);
                        consider(p);
                    }
                }
            }
        }
    }
    best
}

/// Fit `model` to `data`.
pub fn fit_model<T: Real>(
    data: &FitData<T>,
    model: FringeModel<T>,
    options: &FitOptions<T>,
) -> Result<FitResult<T>> {
    let n = model.n_params();
    let fixed = options.fixed.clone().unwrap_or_else(|| model.default_fixed());
    if fixed.len() != n {
        return Err(Error::Domain(format!(
            "fixed mask has {} entries, model {model} has {n} parameters",
            fixed.len()
        )));
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    if free.is_empty() {
        return Err(Error::Domain("no free parameters".into()));
    }
    if data.len() < 2 * free.len() {
        return Err(Error::Domain(format!(
            "{} data points are too few for {} free parameters",
            data.len(),
            free.len()
        )));
    }

    let mut p = match &options.init {
        Some(init) => {
            if init.len() != n {
                return Err(Error::Domain(format!(
                    "start point has {} entries, model {model} has {n} parameters",
                    init.len()
                )));
            }
            init.clone()
        }
        None => {
            let mut base = model.default_params();
            for &(i, v) in &options.fixed_values {
                base[i] = v;
            }
            seed(&model, data, &base, &fixed)
        }
    };
    clamp(&model, &mut p);

    let mut current = chi2(&model, &p, data);
    if !current.is_finite() {
        return Err(Error::DegenerateFit("χ² is not finite at the start point".into()));
    }
    let data_scale = data
        .y
        .iter()
        .zip(&data.sigma)
        .fold(T::zero(), |acc, (y, s)| acc + (*y / *s) * (*y / *s));
    let mut lambda = T::lit(1e-3);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        if current <= T::lit(1e-26) * (T::one() + data_scale) {
            converged = true;
            break;
        }
        let (active, a, b) = active_system(&model, &p, &free, data);
        if active.is_empty() {
            converged = true;
            break;
        }
        let mut accepted = None;
        while lambda < T::lit(1e12) {
            let mut damped = a.clone();
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda * a[i][i].max(T::min_positive_value());
            }
            let Some(step) = solve_spd(&damped, &b) else {
                return Err(Error::DegenerateFit(format!(
                    "singular normal equations for model {model}"
                )));
            };
            let mut trial = p.clone();
            for (k, &i) in active.iter().enumerate() {
                trial[i] += step[k];
            }
            clamp(&model, &mut trial);
            let c2 = chi2(&model, &trial, data);
            if c2 < current {
                accepted = Some((trial, c2));
                lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                break;
            }
            lambda *= T::lit(10.0);
        }
        match accepted {
            Some((trial, c2)) => {
                let rel = (current - c2) / current.max(T::min_positive_value());
                p = trial;
                current = c2;
                if rel < options.tolerance {
                    converged = true;
                    break;
                }
            }
            None => {
                // No descent direction left at working precision.
                converged = true;
                break;
            }
        }
    }

    // Snap parameters that stalled just inside a bound onto it.
    let lo = model.lower_bounds();
    for &i in &free {
        if p[i] > lo[i] && p[i] - lo[i] <= T::lit(1e-6) * (T::one() + lo[i].abs()) {
            let mut trial = p.clone();
            trial[i] = lo[i];
            let c2 = chi2(&model, &trial, data);
            if c2 <= current * (T::one() + T::lit(1e-9)) + T::lit(1e-300) {
                p = trial;
                current = c2;
            }
        }
    }
    model.normalise(&mut p);
    let (active, a, _) = active_system(&model, &p, &free, data);
    let at_bound: Vec<bool> = (0..n).map(|i| !fixed[i] && !active.contains(&i)).collect();
    let inv = invert_spd(&a).ok_or_else(|| {
        Error::DegenerateFit(format!(
            "singular normal equations for model {model}; a parameter is not constrained by the data"
        ))
    })?;
    let dof = data.len() - free.len();
    let scale = current / T::lit(dof as f64);
    let mut covariance_unscaled = vec![vec![T::zero(); n]; n];
    for (k, &i) in active.iter().enumerate() {
        for (l, &j) in active.iter().enumerate() {
            covariance_unscaled[i][j] = inv[k][l];
        }
    }
    let covariance: Matrix<T> = covariance_unscaled
        .iter()
        .map(|row| row.iter().map(|v| *v * scale).collect())
        .collect();
    let uncertainties = (0..n).map(|i| covariance[i][i].max(T::zero()).sqrt()).collect();

    let mut result = FitResult {
        model,
        params: p,
        fixed,
        at_bound,
        uncertainties,
        covariance,
        covariance_unscaled,
        chi2: current,
        dof,
        iterations,
        converged,
        n_max: T::zero(),
        n_min: T::zero(),
        visibility: T::zero(),
        visibility_sigma: T::zero(),
    };
    let ((n_max, _), (n_min, _)) = model.extrema(&result.params);
    result.n_max = n_max;
    result.n_min = n_min;
    if let Ok((v, s)) = visibility_from_fit(&result) {
        result.visibility = v;
        result.visibility_sigma = s;
    } else {
        result.visibility = T::nan();
        result.visibility_sigma = T::nan();
    }
    Ok(result)
}

/// `V = (N_max − N_min)/N_max` from the fitted curve's extrema, with a
/// first-order error from the fit covariance.
pub fn visibility_from_fit<T: Real>(result: &FitResult<T>) -> Result<(T, T)> {
    let ((n_max, g_max), (n_min, g_min)) = result.model.extrema(&result.params);
    let v = counts::visibility(n_max, n_min)?.value;
    let n = result.params.len();
    let grad: Vec<T> = (0..n)
        .map(|i| (n_min * g_max[i] - n_max * g_min[i]) / (n_max * n_max))
        .collect();
    let mut var = T::zero();
    for i in 0..n {
        for j in 0..n {
            var += grad[i] * result.covariance[i][j] * grad[j];
        }
    }
    Ok((v, var.max(T::zero()).sqrt()))
}
