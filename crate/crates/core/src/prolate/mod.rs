//! Discrete prolate spheroidal sequences: the eigenvectors of the
//! sinc-kernel Toeplitz matrix, their concentrations, and their Fourier
//! transforms (Slepian functions) on a frequency grid.

mod tridiagonal;

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::csv::{fmt_f64, CsvWriter};
use crate::error::{invalid, Error, Result};
use crate::grid::{FrequencyGrid, GridDft, GridFunction};

/// Eigenvalues within this distance of 0 or 1 are clamped into `[0, 1]`.
pub const CLAMP_TOLERANCE: f64 = 1e-10;
/// Eigenvalues further than this outside `[0, 1]` are rejected.
pub const RANGE_TOLERANCE: f64 = 1e-8;
const SIGN_THRESHOLD: f64 = 1e-12;

/// Sample count `n`, half-bandwidth `w` and taper count `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpssParams {
    pub n: usize,
    pub w: f64,
    pub k: usize,
}

impl DpssParams {
    pub fn new(n: usize, w: f64, k: usize) -> Result<Self> {
        validate_nw(n, w)?;
        if k == 0 || k > n {
            return Err(invalid(format!("taper count K = {k} must satisfy 1 <= K <= N = {n}")));
        }
        Ok(DpssParams { n, w, k })
    }

    /// Parameters with the critical taper count `K = floor(2NW)`.
    pub fn critical(n: usize, w: f64) -> Result<Self> {
        let k = critical_k(n, w)?;
        if k == 0 {
            return Err(Error::DegenerateBandwidth { n, w });
        }
        Ok(DpssParams { n, w, k })
    }

    /// `2NW`, the trace of the sinc-Toeplitz matrix.
    pub fn shannon_number(&self) -> f64 {
        2.0 * self.n as f64 * self.w
    }
}

pub(crate) fn validate_nw(n: usize, w: f64) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("sample count N = {n} must be >= 2")));
    }
    if !(w > 0.0 && w < 0.5) {
        return Err(invalid(format!("half-bandwidth W = {w} must lie in (0, 1/2)")));
    }
    Ok(())
}

/// `floor(2NW)`. A zero result is returned as-is; callers that need at least
/// one taper go through [`DpssParams::critical`].
pub fn critical_k(n: usize, w: f64) -> Result<usize> {
    validate_nw(n, w)?;
    Ok((2.0 * n as f64 * w).floor() as usize)
}

/// `sin(2 pi W tau) / (pi tau)`, with `2W` at `tau = 0`.
pub fn sinc_kernel(w: f64, tau: i64) -> f64 {
    if tau == 0 {
        2.0 * w
    } else {
        let t = tau as f64;
        (2.0 * PI * w * t).sin() / (PI * t)
    }
}

/// The symmetric Toeplitz matrix `A[t, s] = sin(2 pi W (t - s)) / (pi (t - s))`.
pub fn sinc_toeplitz(params: &DpssParams) -> Result<DMatrix<f64>> {
    validate_nw(params.n, params.w)?;
    let n = params.n;
    let col: Vec<f64> = (0..n as i64).map(|tau| sinc_kernel(params.w, tau)).collect();
    Ok(DMatrix::from_fn(n, n, |t, s| col[t.abs_diff(s)]))
}

/// `v^T A v` for the sinc-Toeplitz matrix, via the autocorrelation of `v`.
pub fn toeplitz_rayleigh(w: f64, v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for tau in 0..n {
        let c: f64 = v[..n - tau].iter().zip(&v[tau..]).map(|(a, b)| a * b).sum();
        let weight = if tau == 0 { 1.0 } else { 2.0 };
        acc += weight * sinc_kernel(w, tau as i64) * c;
    }
    acc
}

/// Unit-norm tapers and their concentrations, ordered by decreasing
/// eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct DpssBasis {
    params: DpssParams,
    tapers: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

impl DpssBasis {
    /// Assembles a basis from externally supplied tapers, e.g. for tests that
    /// override eigenvalues. Lengths must match `params.n`.
    pub fn from_parts(params: DpssParams, tapers: Vec<Vec<f64>>, eigenvalues: Vec<f64>) -> Result<Self> {
        if tapers.len() != eigenvalues.len() || tapers.iter().any(|t| t.len() != params.n) {
            return Err(invalid("taper/eigenvalue shapes do not match N"));
        }
        Ok(DpssBasis { params, tapers, eigenvalues })
    }

    pub fn params(&self) -> &DpssParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn w(&self) -> f64 {
        self.params.w
    }

    /// Number of computed tapers.
    pub fn len(&self) -> usize {
        self.tapers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tapers.is_empty()
    }

    pub fn taper(&self, k: usize) -> &[f64] {
        &self.tapers[k]
    }

    pub fn tapers(&self) -> &[Vec<f64>] {
        &self.tapers
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Whether all `N` eigenpairs are present.
    pub fn is_complete(&self) -> bool {
        self.tapers.len() == self.params.n
    }

    /// CSV with header `k,lambda,v0,...,v{N-1}`.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["k".to_string(), "lambda".to_string()];
        header.extend((0..self.params.n).map(|t| format!("v{t}")));
        let mut w = CsvWriter::with_header(&header);
        for (k, (taper, lambda)) in self.tapers.iter().zip(&self.eigenvalues).enumerate() {
            let mut row = vec![k.to_string(), fmt_f64(*lambda)];
            row.extend(taper.iter().map(|v| fmt_f64(*v)));
            w.row(row);
        }
        w.finish()
    }
}

fn apply_sign_convention(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_THRESHOLD) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn checked_eigenvalue(lambda: f64, k: usize) -> Result<f64> {
    if !lambda.is_finite() || lambda < -RANGE_TOLERANCE || lambda > 1.0 + RANGE_TOLERANCE {
        return Err(Error::Consistency(format!(
            "eigenvalue {k} = {lambda:e} lies outside [0, 1]"
        )));
    }
    Ok(if (-CLAMP_TOLERANCE..0.0).contains(&lambda) {
        0.0
    } else if lambda > 1.0 && lambda <= 1.0 + CLAMP_TOLERANCE {
        1.0
    } else {
        lambda
    })
}

/// Top `num` eigenpairs of the sinc-Toeplitz matrix by dense symmetric
/// eigendecomposition. This is the reference solver.
pub fn compute_dpss(params: &DpssParams, num: usize) -> Result<DpssBasis> {
    let n = params.n;
    if num == 0 || num > n {
        return Err(invalid(format!("requested {num} tapers, need 1 <= num <= N = {n}")));
    }
    let a = sinc_toeplitz(params)?;
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0).ok_or_else(|| {
        Error::Numerical(format!(
            "symmetric eigensolver did not converge for N = {n}, W = {}",
            params.w
        ))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    // Stable: exact ties keep solver order.
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut tapers = Vec::with_capacity(num);
    let mut eigenvalues = Vec::with_capacity(num);
    for (k, &idx) in order.iter().take(num).enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        apply_sign_convention(&mut v);
        tapers.push(v);
        eigenvalues.push(checked_eigenvalue(eig.eigenvalues[idx], k)?);
    }
    Ok(DpssBasis { params: *params, tapers, eigenvalues })
}

/// Top `num` tapers through the commuting tridiagonal operator, with
/// eigenvalues recomputed as Rayleigh quotients on the Toeplitz matrix.
/// Costs `O(num N^2)` rather than `O(N^3)`.
pub fn compute_dpss_fast(params: &DpssParams, num: usize) -> Result<DpssBasis> {
    let n = params.n;
    validate_nw(n, params.w)?;
    if num == 0 || num > n {
        return Err(invalid(format!("requested {num} tapers, need 1 <= num <= N = {n}")));
    }
    let mut tapers = tridiagonal::leading_eigenvectors(n, params.w, num)?;
    let mut eigenvalues = Vec::with_capacity(num);
    for (k, v) in tapers.iter_mut().enumerate() {
        apply_sign_convention(v);
        eigenvalues.push(checked_eigenvalue(toeplitz_rayleigh(params.w, v), k)?);
    }
    Ok(DpssBasis { params: *params, tapers, eigenvalues })
}

/// Slepian functions `U_k(xi_m) = sum_t v_t^(k) exp(-2 pi i xi_m t)`.
#[derive(Debug, Clone)]
pub struct SlepianSpectra {
    n: usize,
    w: f64,
    grid: FrequencyGrid,
    values: Vec<Vec<Complex64>>,
}

impl SlepianSpectra {
    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self, k: usize) -> &[Complex64] {
        &self.values[k]
    }

    /// `|U_k|^2` on the grid.
    pub fn power(&self, k: usize) -> GridFunction {
        GridFunction::new(self.grid, self.values[k].iter().map(|c| c.norm_sqr()).collect())
            .expect("spectra are built on their own grid")
    }

    /// CSV with header `xi,k,re,im`, ordered by `k` then `xi`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::with_header(&["xi", "k", "re", "im"]);
        for (k, row) in self.values.iter().enumerate() {
            for (m, c) in row.iter().enumerate() {
                w.row([fmt_f64(self.grid.point(m)), k.to_string(), fmt_f64(c.re), fmt_f64(c.im)]);
            }
        }
        w.finish()
    }
}

/// Evaluates every computed taper's Fourier transform on `grid`.
pub fn slepian_eval(basis: &DpssBasis, grid: FrequencyGrid) -> Result<SlepianSpectra> {
    grid.check_resolves(basis.n())?;
    let dft = GridDft::new(grid);
    let values = basis
        .tapers()
        .iter()
        .map(|v| dft.transform(v.iter().map(|&x| Complex64::new(x, 0.0))))
        .collect();
    Ok(SlepianSpectra { n: basis.n(), w: basis.w(), grid, values })
}

/// Riemann sums of `|U_k|^2` over `[-w, w]` with the half-bin rule.
pub fn concentration(spectra: &SlepianSpectra, w: f64) -> Result<Vec<f64>> {
    if !(w > 0.0 && w <= 0.5) {
        return Err(Error::Precondition(format!("band [-{w}, {w}] is not inside I")));
    }
    let mask = spectra.grid.band_mask(w);
    let step = spectra.grid.step();
    Ok(spectra
        .values
        .iter()
        .map(|row| {
            row.iter()
                .zip(&mask)
                .filter(|(_, inside)| **inside)
                .map(|(c, _)| c.norm_sqr())
                .sum::<f64>()
                * step
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sinc_toeplitz_two_by_two() {
        let a = sinc_toeplitz(&DpssParams::new(2, 0.25, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(a[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a[(1, 1)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a[(0, 1)], 1.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(a[(1, 0)], 1.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn sinc_toeplitz_entries() {
        let a = sinc_toeplitz(&DpssParams::new(3, 0.1, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(a[(0, 2)], 0.151365, epsilon = 1e-6);
        assert_abs_diff_eq!(a[(0, 2)], (0.4 * PI).sin() / (2.0 * PI), epsilon = 1e-15);
        for i in 0..3 {
            assert_eq!(a[(i, i)], 0.2);
        }
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn parameter_validation() {
        assert!(DpssParams::new(1, 0.1, 1).is_err());
        assert!(DpssParams::new(8, 0.0, 1).is_err());
        assert!(DpssParams::new(8, 0.5, 1).is_err());
        assert!(DpssParams::new(8, -0.1, 1).is_err());
        assert!(DpssParams::new(8, 0.1, 0).is_err());
        assert!(DpssParams::new(8, 0.1, 9).is_err());
        assert!(matches!(
            DpssParams::critical(2, 0.2),
            Err(Error::DegenerateBandwidth { .. })
        ));
    }

    #[test]
    fn critical_counts() {
        assert_eq!(critical_k(256, 0.1).unwrap(), 51);
        assert_eq!(critical_k(100, 0.25).unwrap(), 50);
        assert_eq!(critical_k(2, 0.2).unwrap(), 0);
    }

    #[test]
    fn two_point_eigenpairs() {
        let params = DpssParams::new(2, 0.25, 2).unwrap();
        let basis = compute_dpss(&params, 2).unwrap();
        assert_abs_diff_eq!(basis.eigenvalues()[0], 0.5 + 1.0 / PI, epsilon = 1e-12);
        assert_abs_diff_eq!(basis.eigenvalues()[1], 0.5 - 1.0 / PI, epsilon = 1e-12);
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(basis.taper(0)[0], s, epsilon = 1e-12);
        assert_abs_diff_eq!(basis.taper(0)[1], s, epsilon = 1e-12);
        assert_abs_diff_eq!(basis.taper(1)[0], s, epsilon = 1e-12);
        assert_abs_diff_eq!(basis.taper(1)[1], -s, epsilon = 1e-12);
    }

    #[test]
    fn sign_convention_first_significant_entry_positive() {
        let basis = compute_dpss(&DpssParams::new(33, 0.2, 1).unwrap(), 33).unwrap();
        for v in basis.tapers() {
            let first = v.iter().find(|x| x.abs() > SIGN_THRESHOLD).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn clamping_only_near_boundary() {
        assert_eq!(checked_eigenvalue(-5e-11, 0).unwrap(), 0.0);
        assert_eq!(checked_eigenvalue(1.0 + 5e-11, 0).unwrap(), 1.0);
        assert_eq!(checked_eigenvalue(-5e-9, 0).unwrap(), -5e-9);
        assert!(matches!(checked_eigenvalue(-2e-8, 0), Err(Error::Consistency(_))));
        assert!(matches!(checked_eigenvalue(1.0 + 2e-8, 0), Err(Error::Consistency(_))));
    }

    #[test]
    fn rayleigh_matches_dense_product() {
        let params = DpssParams::new(17, 0.13, 1).unwrap();
        let a = sinc_toeplitz(&params).unwrap();
        let v: Vec<f64> = (0..17).map(|t| ((t * 7 % 5) as f64 - 2.0) / 3.0).collect();
        let dv = nalgebra::DVector::from_vec(v.clone());
        let dense = dv.dot(&(&a * &dv));
        assert_abs_diff_eq!(toeplitz_rayleigh(0.13, &v), dense, epsilon = 1e-13);
    }

    #[test]
    fn fast_path_agrees_with_dense() {
        let params = DpssParams::critical(128, 0.1).unwrap();
        let dense = compute_dpss(&params, 30).unwrap();
        let fast = compute_dpss_fast(&params, 30).unwrap();
        let lam = dense.eigenvalues();
        for k in 0..30 {
            assert_abs_diff_eq!(lam[k], fast.eigenvalues()[k], epsilon = 1e-12);
            // Near-degenerate plateau eigenvectors are only defined up to rotation.
            let gap = (0..30)
                .filter(|&j| j != k)
                .map(|j| (lam[j] - lam[k]).abs())
                .fold(f64::INFINITY, f64::min);
            if gap > 1e-6 {
                let dist = dense
                    .taper(k)
                    .iter()
                    .zip(fast.taper(k))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(dist < 1e-9, "taper {k} differs by {dist}");
            }
        }
        // Both bases span the same 30-dimensional subspace.
        for f in fast.tapers() {
            let captured: f64 = dense
                .tapers()
                .iter()
                .map(|d| d.iter().zip(f).map(|(a, b)| a * b).sum::<f64>().powi(2))
                .sum();
            assert_abs_diff_eq!(captured, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_sequence_gives_dirichlet_power() {
        let n = 8;
        let params = DpssParams::new(n, 0.1, 1).unwrap();
        let v = vec![1.0 / (n as f64).sqrt(); n];
        let basis = DpssBasis::from_parts(params, vec![v], vec![1.0]).unwrap();
        let grid = FrequencyGrid::new(64).unwrap();
        let spectra = slepian_eval(&basis, grid).unwrap();
        let power = spectra.power(0);
        for (m, xi) in grid.points().enumerate() {
            let d = crate::window::dirichlet(n, xi);
            assert_abs_diff_eq!(power.values()[m], d * d / n as f64, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(power.values()[grid.nearest_index(0.0)], n as f64, epsilon = 1e-12);
    }

    #[test]
    fn coarse_grid_rejected() {
        let basis = compute_dpss(&DpssParams::new(16, 0.1, 1).unwrap(), 2).unwrap();
        assert!(matches!(
            slepian_eval(&basis, FrequencyGrid::new(30).unwrap()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn unit_mass_and_concentration() {
        let params = DpssParams::critical(64, 0.1).unwrap();
        let basis = compute_dpss(&params, 64).unwrap();
        let grid = FrequencyGrid::default_for(64);
        let spectra = slepian_eval(&basis, grid).unwrap();
        for k in 0..64 {
            assert_abs_diff_eq!(spectra.power(k).integral(), 1.0, epsilon = 1e-6);
        }
        let conc = concentration(&spectra, 0.1).unwrap();
        assert!(conc[0] > 0.999999);
        for k in 0..64 {
            assert_abs_diff_eq!(conc[k], basis.eigenvalues()[k], epsilon = 64.0 / grid.len() as f64);
        }
        // Well-concentrated and well-suppressed tapers meet the tighter 10/M rule.
        let tau_q = 10.0 / grid.len() as f64;
        for k in (0..6).chain(30..64) {
            assert_abs_diff_eq!(conc[k], basis.eigenvalues()[k], epsilon = tau_q);
        }
        let total: f64 = conc.iter().sum();
        assert_abs_diff_eq!(total, spectra.grid().band_mask(0.1).iter().filter(|b| **b).count() as f64 * 64.0 / grid.len() as f64, epsilon = 1e-9);
    }

    #[test]
    fn csv_layout() {
        let basis = compute_dpss(&DpssParams::new(3, 0.2, 1).unwrap(), 2).unwrap();
        let csv = basis.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "k,lambda,v0,v1,v2");
        assert_eq!(lines.count(), 2);
        let spectra = slepian_eval(&basis, FrequencyGrid::new(6).unwrap()).unwrap();
        let csv = spectra.to_csv();
        assert!(csv.starts_with("xi,k,re,im\n"));
        assert_eq!(csv.lines().count(), 1 + 2 * 6);
    }
}
