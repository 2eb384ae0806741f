//! Modulated-Slepian dictionaries for multi-band signals: orthogonal
//! projection onto sub-dictionary spans and the expected relative residual
//! of the averaged band-limited process model.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::csv::{fmt_f64, CsvWriter};
use crate::error::{invalid, Error, Result};
use crate::parallel::fold_trials;
use crate::prolate::{self, DpssBasis, DpssParams};
use crate::stochastic::{covariance_from_spectrum, multiband_spec, CovarianceModel, PathSampler};

/// Default relative singular-value cutoff for span construction.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Atoms `exp(2 pi i (2 W j) t) v_t^(k)` for `k < K` and each selected band
/// `j`, ordered band-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub n: usize,
    pub w: f64,
    pub k: usize,
    pub m_bands: usize,
    bands: Vec<usize>,
    atoms: Vec<Vec<Complex64>>,
    index: Vec<(usize, usize)>,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom(&self, col: usize) -> &[Complex64] {
        &self.atoms[col]
    }

    pub fn atoms(&self) -> &[Vec<Complex64>] {
        &self.atoms
    }

    pub fn bands(&self) -> &[usize] {
        &self.bands
    }

    /// `(k, j)` of each column.
    pub fn index(&self) -> &[(usize, usize)] {
        &self.index
    }

    pub fn column_of(&self, k: usize, j: usize) -> Option<usize> {
        self.index.iter().position(|&p| p == (k, j))
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.atoms.len(), |t, c| self.atoms[c][t])
    }

    /// Debug export, header `col,k,j,t,re,im`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::with_header(&["col", "k", "j", "t", "re", "im"]);
        for (col, (atom, (k, j))) in self.atoms.iter().zip(&self.index).enumerate() {
            for (t, v) in atom.iter().enumerate() {
                w.row([
                    col.to_string(),
                    k.to_string(),
                    j.to_string(),
                    t.to_string(),
                    fmt_f64(v.re),
                    fmt_f64(v.im),
                ]);
            }
        }
        w.finish()
    }
}

/// Modulates the first `k` tapers of `basis` to each band in `bands`.
pub fn build_dictionary(basis: &DpssBasis, k: usize, bands: &[usize], m_bands: usize) -> Result<Dictionary> {
    let (n, w) = (basis.n(), basis.w());
    if k == 0 || k > basis.len() {
        return Err(invalid(format!("K = {k} exceeds the {} computed tapers", basis.len())));
    }
    if let Some(j) = bands.iter().find(|j| **j >= m_bands) {
        return Err(invalid(format!("band index {j} >= number of bands {m_bands}")));
    }
    let mut seen = bands.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != bands.len() {
        return Err(invalid("band indices must be distinct"));
    }
    let mut atoms = Vec::with_capacity(k * bands.len());
    let mut index = Vec::with_capacity(k * bands.len());
    for &j in bands {
        let shift = 2.0 * w * j as f64;
        let carrier: Vec<Complex64> = (0..n)
            .map(|t| Complex64::from_polar(1.0, 2.0 * PI * shift * t as f64))
            .collect();
        for kk in 0..k {
            atoms.push(carrier.iter().zip(basis.taper(kk)).map(|(c, v)| c * *v).collect());
            index.push((kk, j));
        }
    }
    Ok(Dictionary { n, w, k, m_bands, bands: bands.to_vec(), atoms, index })
}

/// Orthonormal basis of a dictionary span, from a truncated SVD.
#[derive(Debug, Clone)]
pub struct Projector {
    basis: DMatrix<Complex64>,
    n: usize,
    tolerance: f64,
}

impl Projector {
    /// Keeps left singular vectors whose singular value exceeds
    /// `rank_tol * sigma_max`.
    pub fn new(dict: &Dictionary, rank_tol: f64) -> Result<Self> {
        if dict.is_empty() {
            return Err(invalid("cannot project onto an empty dictionary"));
        }
        if !(rank_tol >= 0.0) {
            return Err(invalid(format!("rank tolerance {rank_tol} must be >= 0")));
        }
        let n = dict.n;
        let svd = dict.matrix().try_svd(true, false, f64::EPSILON, 0).ok_or_else(|| {
            Error::Numerical(format!("SVD of the {}x{} dictionary did not converge", n, dict.len()))
        })?;
        let u = svd.u.expect("requested U");
        let sigma = &svd.singular_values;
        let smax = sigma.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > rank_tol * smax).collect();
        let basis = DMatrix::from_fn(n, keep.len(), |t, c| u[(t, keep[c])]);
        Ok(Projector { basis, n, tolerance: rank_tol })
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.basis
    }

    /// Coefficients `U^H x`.
    fn coefficients(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.rank())
            .map(|c| self.basis.column(c).iter().zip(x).map(|(u, v)| u.conj() * v).sum())
            .collect()
    }

    /// `||P x||^2` without forming `P x`.
    pub fn captured_energy(&self, x: &[Complex64]) -> f64 {
        self.coefficients(x).iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn project(&self, x: &[Complex64]) -> Result<ProjectionResult> {
        if x.len() != self.n {
            return Err(invalid(format!("vector of length {} for N = {}", x.len(), self.n)));
        }
        let coeffs = self.coefficients(x);
        let mut projected = vec![Complex64::new(0.0, 0.0); self.n];
        for (c, coef) in coeffs.iter().enumerate() {
            for (p, u) in projected.iter_mut().zip(self.basis.column(c).iter()) {
                *p += u * coef;
            }
        }
        let residual_norm = x
            .iter()
            .zip(&projected)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        Ok(ProjectionResult { projected, residual_norm, rank: self.rank(), tolerance: self.tolerance })
    }

    /// `trace((I - P) R) / trace(R)`, the exact expected relative residual.
    pub fn relative_residual(&self, cov: &CovarianceModel) -> Result<f64> {
        if cov.n() != self.n {
            return Err(invalid(format!("covariance of size {} for N = {}", cov.n(), self.n)));
        }
        let total = cov.trace();
        if total == 0.0 {
            return Err(invalid("zero-power process has no relative residual"));
        }
        let r = cov.matrix();
        let ru = &r * &self.basis;
        let captured: f64 = (0..self.rank())
            .map(|c| self.basis.column(c).dotc(&ru.column(c)).re)
            .sum();
        Ok((total - captured) / total)
    }
}

/// Orthogonal projection of one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub projected: Vec<Complex64>,
    pub residual_norm: f64,
    pub rank: usize,
    pub tolerance: f64,
}

pub fn project(x: &[Complex64], dict: &Dictionary, rank_tol: f64) -> Result<ProjectionResult> {
    Projector::new(dict, rank_tol)?.project(x)
}

pub fn analytic_relative_residual(cov: &CovarianceModel, dict: &Dictionary) -> Result<f64> {
    Projector::new(dict, DEFAULT_RANK_TOL)?.relative_residual(cov)
}

/// `(L/K) sum_{k >= K} lambda_k`, the eigenvalue-tail bound on the relative
/// residual. Needs all `N` eigenvalues.
pub fn eigen_tail_bound(eigenvalues: &[f64], k: usize, l: usize) -> f64 {
    l as f64 / k as f64 * eigenvalues[k..].iter().sum::<f64>()
}

/// Monte-Carlo relative residual with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloResidual {
    pub ratio: f64,
    pub standard_error: f64,
    pub trials: u64,
}

/// One row of a multi-band approximation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CsReport {
    pub n: usize,
    pub w: f64,
    pub k: usize,
    pub l: usize,
    pub m_bands: usize,
    pub occupied: Vec<usize>,
    pub analytic: f64,
    pub monte_carlo: Option<MonteCarloResidual>,
    /// `L log N / K`.
    pub bound: f64,
}

impl CsReport {
    pub const CSV_HEADER: [&'static str; 8] = ["N", "W", "K", "L", "analytic", "mc", "mc_se", "bound"];

    pub fn csv_row(&self) -> Vec<String> {
        let (mc, se) = match &self.monte_carlo {
            Some(m) => (fmt_f64(m.ratio), fmt_f64(m.standard_error)),
            None => (String::new(), String::new()),
        };
        vec![
            self.n.to_string(),
            fmt_f64(self.w),
            self.k.to_string(),
            self.l.to_string(),
            fmt_f64(self.analytic),
            mc,
            se,
            fmt_f64(self.bound),
        ]
    }
}

pub fn cs_reports_csv(reports: &[CsReport]) -> String {
    let mut w = CsvWriter::with_header(&CsReport::CSV_HEADER);
    for r in reports {
        w.row(r.csv_row());
    }
    w.finish()
}

/// Estimates `E||x - P x||^2 / E||x||^2` from `trials` complex paths.
pub fn monte_carlo_residual(
    sampler: &PathSampler,
    projector: &Projector,
    trials: u64,
    base_seed: u64,
) -> Result<MonteCarloResidual> {
    if trials < 2 {
        return Err(invalid(format!("need at least 2 trials, got {trials}")));
    }
    let sums = fold_trials(
        trials,
        [0.0f64; 5],
        |trial| {
            let path = sampler.sample(base_seed, trial);
            let energy = path.energy();
            let residual = (energy - projector.captured_energy(&path.values)).max(0.0);
            Ok((residual, energy))
        },
        |acc, (a, b)| {
            acc[0] += a;
            acc[1] += b;
            acc[2] += a * a;
            acc[3] += b * b;
            acc[4] += a * b;
        },
    )?;
    let t = trials as f64;
    let (ma, mb) = (sums[0] / t, sums[1] / t);
    let ratio = ma / mb;
    // Var(a - ratio * b) with unbiased moments.
    let var_a = (sums[2] - t * ma * ma) / (t - 1.0);
    let var_b = (sums[3] - t * mb * mb) / (t - 1.0);
    let cov_ab = (sums[4] - t * ma * mb) / (t - 1.0);
    let var_lin = (var_a - 2.0 * ratio * cov_ab + ratio * ratio * var_b).max(0.0);
    Ok(MonteCarloResidual { ratio, standard_error: (var_lin / t).sqrt() / mb, trials })
}

/// Builds the averaged multi-band process, the critical sub-dictionary and
/// the analytic residual; adds a Monte-Carlo estimate when `trials > 0`.
pub fn cs_experiment(
    n: usize,
    w: f64,
    m_bands: usize,
    occupied: &[usize],
    trials: u64,
    base_seed: u64,
) -> Result<CsReport> {
    let params = DpssParams::critical(n, w)?;
    let spec = multiband_spec(w, m_bands, occupied, true)?;
    let cov = covariance_from_spectrum(&spec, n)?;
    let basis = prolate::compute_dpss(&params, params.k)?;
    let dict = build_dictionary(&basis, params.k, occupied, m_bands)?;
    let projector = Projector::new(&dict, DEFAULT_RANK_TOL)?;
    let analytic = projector.relative_residual(&cov)?;
    let monte_carlo = if trials > 0 {
        let sampler = PathSampler::new(&cov, false)?;
        Some(monte_carlo_residual(&sampler, &projector, trials, base_seed)?)
    } else {
        None
    };
    let l = occupied.len();
    Ok(CsReport {
        n,
        w,
        k: params.k,
        l,
        m_bands,
        occupied: occupied.to_vec(),
        analytic,
        monte_carlo,
        bound: l as f64 * (n as f64).ln() / params.k as f64,
    })
}
