//! Fast path for the leading tapers through the symmetric tridiagonal matrix
//! that commutes with the sinc-Toeplitz matrix. Its eigenvalues are *not*
//! the concentrations; those are recovered as Rayleigh quotients on the
//! Toeplitz matrix by the caller.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Diagonal and off-diagonal of the commuting tridiagonal matrix.
/// `off[t]` couples rows `t - 1` and `t`; `off[0]` is unused.
pub(crate) fn commuting_tridiagonal(n: usize, w: f64) -> (Vec<f64>, Vec<f64>) {
    let c = (2.0 * PI * w).cos();
    let diag = (0..n)
        .map(|t| {
            let h = (n as f64 - 1.0 - 2.0 * t as f64) / 2.0;
            h * h * c
        })
        .collect();
    let off = (0..n).map(|t| (t as f64) * (n as f64 - t as f64) / 2.0).collect();
    (diag, off)
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
fn count_below(diag: &[f64], off: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off[i] * off[i] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `index`-th smallest eigenvalue by bisection.
fn bisect_eigenvalue(diag: &[f64], off: &[f64], index: usize) -> f64 {
    let n = diag.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { off[i].abs() } else { 0.0 } + if i + 1 < n { off[i + 1].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let pivmin = f64::MIN_POSITIVE.max(scale * f64::EPSILON * f64::EPSILON);
    lo -= scale * 4.0 * f64::EPSILON;
    hi += scale * 4.0 * f64::EPSILON;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(diag, off, mid, pivmin) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// LU factorisation with partial pivoting of a tridiagonal matrix, stored the
/// way LAPACK's `gttrf` stores it.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64) -> Self {
        let n = diag.len();
        let norm = diag
            .iter()
            .zip(off)
            .map(|(d, e)| d.abs() + 2.0 * e.abs())
            .fold(0.0, f64::max)
            .max(1.0);
        let tiny = norm * f64::EPSILON;
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut dl: Vec<f64> = off[1..].to_vec();
        let mut du: Vec<f64> = off[1..].to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        TridiagonalLu { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Leading `num` eigenvectors of the commuting tridiagonal matrix, ordered by
/// decreasing tridiagonal eigenvalue (which is decreasing concentration).
pub(crate) fn leading_eigenvectors(n: usize, w: f64, num: usize) -> Result<Vec<Vec<f64>>> {
    let (diag, off) = commuting_tridiagonal(n, w);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(num);
    for k in 0..num {
        let mu = bisect_eigenvalue(&diag, &off, n - 1 - k);
        let lu = TridiagonalLu::factor(&diag, &off, mu);
        // Neither symmetric nor antisymmetric, so it overlaps every eigenvector.
        let mut v: Vec<f64> = (0..n).map(|t| 1.0 + (t as f64 + 0.5) / n as f64).collect();
        normalize(&mut v);
        for _ in 0..4 {
            lu.solve(&mut v);
            for prev in &vectors {
                let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(x, p)| *x -= dot * p);
            }
            if !normalize(&mut v).is_finite() {
                return Err(Error::Numerical(format!(
                    "inverse iteration diverged for taper {k} (N = {n}, W = {w})"
                )));
            }
        }
        vectors.push(v);
    }
    Ok(vectors)
}
