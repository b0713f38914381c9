//! Dense symmetric positive-definite solves for the small normal equations
//! of the fitter.

use crate::scalar::Real;

pub(crate) type Matrix<T> = Vec<Vec<T>>;

/// Lower-triangular Cholesky factor of a Jacobi-scaled copy of `a`, plus the
/// scale vector `d` with `a = D⁻¹ (L Lᵀ) D⁻¹`.
fn factor<T: Real>(a: &Matrix<T>) -> Option<(Matrix<T>, Vec<T>)> {
    let n = a.len();
    let mut d = Vec::with_capacity(n);
    for (i, row) in a.iter().enumerate() {
        if row.len() != n || !(row[i] > T::zero()) || !row[i].is_finite() {
            return None;
        }
        d.push(row[i].sqrt().recip());
    }
    let eps = T::epsilon() * T::lit(n as f64) * T::lit(16.0);
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j] * d[i] * d[j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > eps) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some((l, d))
}

fn substitute<T: Real>(l: &Matrix<T>, d: &[T], b: &[T]) -> Vec<T> {
    let n = l.len();
    let mut y: Vec<T> = b.iter().zip(d).map(|(b, d)| *b * *d).collect();
    for i in 0..n {
        for k in 0..i {
            let t = l[i][k] * y[k];
            y[i] -= t;
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let t = l[k][i] * y[k];
            y[i] -= t;
        }
        y[i] /= l[i][i];
    }
    y.iter().zip(d).map(|(y, d)| *y * *d).collect()
}

/// Solve `a x = b` for symmetric positive-definite `a`; `None` if singular.
pub(crate) fn solve_spd<T: Real>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let (l, d) = factor(a)?;
    Some(substitute(&l, &d, b))
}

pub(crate) fn invert_spd<T: Real>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.len();
    let (l, d) = factor(a)?;
    let mut inv = vec![vec![T::zero(); n]; n];
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let col = substitute(&l, &d, &e);
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

/// Weighted linear least squares `y ≈ Σ_k c_k basis_k`.
pub(crate) fn linear_lsq<T: Real>(basis: &[Vec<T>], y: &[T], sigma: &[T]) -> Option<(Vec<T>, T)> {
    let m = basis.len();
    let mut a = vec![vec![T::zero(); m]; m];
    let mut b = vec![T::zero(); m];
    for i in 0..y.len() {
        let w = (sigma[i] * sigma[i]).recip();
        for p in 0..m {
            b[p] += basis[p][i] * y[i] * w;
            for q in 0..=p {
                a[p][q] += basis[p][i] * basis[q][i] * w;
            }
        }
    }
    for p in 0..m {
        for q in 0..p {
            a[q][p] = a[p][q];
        }
    }
    let c = solve_spd(&a, &b)?;
    let chi2 = (0..y.len()).fold(T::zero(), |acc, i| {
        let model = (0..m).fold(T::zero(), |s, k| s + c[k] * basis[k][i]);
        let r = (y[i] - model) / sigma[i];
        acc + r * r
    });
    Some((c, chi2))
}
