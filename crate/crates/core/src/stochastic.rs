//! Power spectral densities, the Toeplitz covariance of `N` contiguous
//! samples, and Gaussian sample paths drawn through a Cholesky factor.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::csv::{fmt_f64, CsvWriter};
use crate::error::{invalid, Error, Result};
use crate::grid::{FrequencyGrid, GridFunction};
use crate::parallel::trial_rng;

/// Relative diagonal jitter added before factorising the covariance.
pub const CHOLESKY_JITTER: f64 = 1e-10;

/// A power spectral density on `I = [-1/2, 1/2)`.
///
/// Serialised as a JSON object whose `kind` is one of `white`,
/// `band_mixture`, `smooth_cosine` or `tabulated`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumSpec {
    /// `S = level`.
    White { level: f64 },
    /// `S = sum_n coeffs[n] / (2W) 1_{[-W, W] + 2W bands[n]}` (periodised).
    BandMixture {
        #[serde(rename = "W")]
        w: f64,
        bands: Vec<usize>,
        coeffs: Vec<f64>,
    },
    /// `S = c_0 + sum_{p >= 1} c_p cos(2 pi p xi)`.
    SmoothCosine { coeffs: Vec<f64> },
    /// Samples on the uniform grid of `coeffs.len()` points, held constant on
    /// each bin.
    Tabulated { coeffs: Vec<f64> },
}

fn wrap_unit(x: f64) -> f64 {
    // Into [-1/2, 1/2).
    (x + 0.5).rem_euclid(1.0) - 0.5
}

impl SpectrumSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpectrumSpec::White { level } => {
                if !(level.is_finite() && *level >= 0.0) {
                    return Err(invalid(format!("white level {level} must be >= 0")));
                }
            }
            SpectrumSpec::BandMixture { w, bands, coeffs } => {
                if !(*w > 0.0 && *w < 0.5) {
                    return Err(invalid(format!("band half-width W = {w} must lie in (0, 1/2)")));
                }
                if bands.is_empty() || bands.len() != coeffs.len() {
                    return Err(invalid("band mixture needs one weight per band"));
                }
                if coeffs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                    return Err(invalid("band weights must be >= 0"));
                }
                let mut sorted = bands.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != bands.len() {
                    return Err(invalid("band indices must be distinct"));
                }
                let span = 2.0 * w * (*sorted.last().unwrap() as f64 + 1.0);
                if span > 1.0 + 1e-12 {
                    return Err(invalid(format!(
                        "bands up to index {} of width {} overlap after wrapping onto I",
                        sorted.last().unwrap(),
                        2.0 * w
                    )));
                }
            }
            SpectrumSpec::SmoothCosine { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("cosine coefficients must be finite and non-empty"));
                }
                let m = (16 * coeffs.len()).max(4096);
                let grid = FrequencyGrid::new(m + m % 2)?;
                let scale = coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
                if grid.points().any(|xi| self.eval(xi) < -1e-12 * scale) {
                    return Err(invalid("cosine series takes negative values"));
                }
            }
            SpectrumSpec::Tabulated { coeffs } => {
                FrequencyGrid::new(coeffs.len())?;
                if coeffs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                    return Err(invalid("tabulated spectrum must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Point evaluation of `S(xi)`.
    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            SpectrumSpec::White { level } => *level,
            SpectrumSpec::BandMixture { w, bands, coeffs } => bands
                .iter()
                .zip(coeffs)
                .filter(|(j, _)| wrap_unit(xi - 2.0 * w * **j as f64).abs() <= *w)
                .map(|(_, c)| c / (2.0 * w))
                .sum(),
            SpectrumSpec::SmoothCosine { coeffs } => {
                coeffs[0]
                    + coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(p, c)| c * (2.0 * PI * p as f64 * xi).cos())
                        .sum::<f64>()
            }
            SpectrumSpec::Tabulated { coeffs } => {
                let grid = FrequencyGrid::new(coeffs.len()).expect("validated");
                coeffs[grid.nearest_index(xi)]
            }
        }
    }

    pub fn on_grid(&self, grid: FrequencyGrid) -> GridFunction {
        GridFunction::from_fn(grid, |xi| self.eval(xi))
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            SpectrumSpec::White { level } => *level,
            SpectrumSpec::BandMixture { w, coeffs, .. } => coeffs.iter().fold(0.0, |a, c| f64::max(a, *c)) / (2.0 * w),
            SpectrumSpec::SmoothCosine { coeffs } => coeffs.iter().map(|c| c.abs()).sum(),
            SpectrumSpec::Tabulated { coeffs } => coeffs.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Whether `S(-xi) = S(xi)`, i.e. a real-valued process is admissible.
    pub fn is_symmetric(&self) -> bool {
        match self {
            SpectrumSpec::White { .. } | SpectrumSpec::SmoothCosine { .. } => true,
            SpectrumSpec::BandMixture { w, bands, coeffs } => bands.iter().zip(coeffs).all(|(j, c)| {
                let centre = wrap_unit(2.0 * w * *j as f64);
                bands.iter().zip(coeffs).any(|(i, d)| {
                    wrap_unit(2.0 * w * *i as f64 + centre).abs() < 1e-12 && (c - d).abs() <= 1e-15 * c.abs().max(1.0)
                })
            }),
            SpectrumSpec::Tabulated { coeffs } => {
                let m = coeffs.len();
                (0..m).all(|i| coeffs[i] == coeffs[(m - i) % m])
            }
        }
    }
}

/// Two-band-family model of averaged independent band-limited processes:
/// `x = (1/L) sum_n x_n` with `S_{x_n} = (1/2W) 1_{[-W, W] + 2W j_n}`.
/// Without averaging the processes are summed instead.
pub fn multiband_spec(w: f64, m_bands: usize, occupied: &[usize], averaging: bool) -> Result<SpectrumSpec> {
    if !(w > 0.0 && w < 0.5) {
        return Err(invalid(format!("W = {w} must lie in (0, 1/2)")));
    }
    if m_bands == 0 || 2.0 * w * m_bands as f64 > 1.0 + 1e-12 {
        return Err(invalid(format!(
            "{m_bands} bands of width {} do not fit in an interval of length 1",
            2.0 * w
        )));
    }
    if occupied.is_empty() {
        return Err(invalid("at least one band must be occupied"));
    }
    if let Some(j) = occupied.iter().find(|j| **j >= m_bands) {
        return Err(invalid(format!("band index {j} >= number of bands {m_bands}")));
    }
    let l = occupied.len() as f64;
    let weight = if averaging { 1.0 / (l * l) } else { 1.0 };
    let spec = SpectrumSpec::BandMixture {
        w,
        bands: occupied.to_vec(),
        coeffs: vec![weight; occupied.len()],
    };
    spec.validate()?;
    Ok(spec)
}

/// `sin(2 pi W tau) / (2 pi W tau)`, equal to 1 at 0.
pub fn normalized_sinc(w: f64, tau: i64) -> f64 {
    if tau == 0 {
        1.0
    } else {
        let x = 2.0 * PI * w * tau as f64;
        x.sin() / x
    }
}

/// Covariance `R[t, s] = r[t - s]` of `N` contiguous samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    lags: Vec<Complex64>,
}

impl CovarianceModel {
    pub fn from_lags(lags: Vec<Complex64>) -> Result<Self> {
        if lags.len() < 2 {
            return Err(invalid("need at least two lags"));
        }
        if lags[0].im.abs() > 1e-12 * lags[0].re.abs().max(1.0) || lags[0].re < 0.0 {
            return Err(invalid("r[0] must be real and >= 0"));
        }
        Ok(CovarianceModel { lags })
    }

    pub fn n(&self) -> usize {
        self.lags.len()
    }

    /// `r[tau]` for `tau >= 0`.
    pub fn lags(&self) -> &[Complex64] {
        &self.lags
    }

    /// `r[tau]` for any integer `|tau| < N`.
    pub fn lag(&self, tau: i64) -> Complex64 {
        let r = self.lags[tau.unsigned_abs() as usize];
        if tau < 0 {
            r.conj()
        } else {
            r
        }
    }

    pub fn variance(&self) -> f64 {
        self.lags[0].re
    }

    pub fn is_real(&self) -> bool {
        let scale = self.variance().max(f64::MIN_POSITIVE);
        self.lags.iter().all(|r| r.im.abs() <= 1e-14 * scale)
    }

    /// `trace(R) = N r[0]`.
    pub fn trace(&self) -> f64 {
        self.n() as f64 * self.variance()
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |t, s| self.lag(t as i64 - s as i64))
    }

    /// The same process scaled by `factor > 0` in amplitude squared.
    pub fn scaled(&self, factor: f64) -> CovarianceModel {
        CovarianceModel { lags: self.lags.iter().map(|r| r * factor).collect() }
    }
}

/// Closed-form lags for white and band spectra, Fourier coefficients for
/// cosine series, and the grid Riemann rule for tabulated spectra.
pub fn covariance_from_spectrum(spec: &SpectrumSpec, n: usize) -> Result<CovarianceModel> {
    if n < 2 {
        return Err(invalid(format!("N = {n} must be >= 2")));
    }
    spec.validate()?;
    let lags = match spec {
        SpectrumSpec::White { level } => {
            let mut lags = vec![Complex64::new(0.0, 0.0); n];
            lags[0] = Complex64::new(*level, 0.0);
            lags
        }
        SpectrumSpec::BandMixture { w, bands, coeffs } => (0..n as i64)
            .map(|tau| {
                let phase: Complex64 = bands
                    .iter()
                    .zip(coeffs)
                    .map(|(j, c)| c * Complex64::from_polar(1.0, 2.0 * PI * (2.0 * w * *j as f64) * tau as f64))
                    .sum();
                phase * normalized_sinc(*w, tau)
            })
            .collect(),
        SpectrumSpec::SmoothCosine { coeffs } => (0..n)
            .map(|tau| match tau {
                0 => Complex64::new(coeffs[0], 0.0),
                p if p < coeffs.len() => Complex64::new(coeffs[p] / 2.0, 0.0),
                _ => Complex64::new(0.0, 0.0),
            })
            .collect(),
        SpectrumSpec::Tabulated { coeffs } => {
            let m = coeffs.len();
            let mut buf: Vec<Complex64> = coeffs.iter().map(|&s| Complex64::new(s, 0.0)).collect();
            FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
            // r[tau] = (1/M) sum_m S_m exp(2 pi i xi_m tau), xi_m = -1/2 + m/M.
            (0..n)
                .map(|tau| {
                    let sign = if tau % 2 == 0 { 1.0 } else { -1.0 };
                    buf[tau % m] * (sign / m as f64)
                })
                .collect()
        }
    };
    let mut lags: Vec<Complex64> = lags;
    lags[0].im = 0.0;
    CovarianceModel::from_lags(lags)
}

/// `N` contiguous observations of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub values: Vec<Complex64>,
    pub base_seed: u64,
    pub trial: u64,
}

impl SamplePath {
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// CSV with header `trial,t,re,im`.
pub fn paths_to_csv(paths: &[SamplePath]) -> String {
    let mut w = CsvWriter::with_header(&["trial", "t", "re", "im"]);
    for p in paths {
        for (t, v) in p.values.iter().enumerate() {
            w.row([p.trial.to_string(), t.to_string(), fmt_f64(v.re), fmt_f64(v.im)]);
        }
    }
    w.finish()
}

#[derive(Debug, Clone)]
enum Factor {
    Zero,
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// Draws zero-mean Gaussian vectors with covariance `R = L L^H`.
#[derive(Debug, Clone)]
pub struct PathSampler {
    n: usize,
    factor: Factor,
}

impl PathSampler {
    /// Real paths require a real (symmetric-spectrum) covariance; otherwise
    /// paths are circularly-symmetric complex.
    pub fn new(cov: &CovarianceModel, real_valued: bool) -> Result<Self> {
        let n = cov.n();
        let r0 = cov.variance();
        if real_valued && !cov.is_real() {
            return Err(invalid("real-valued paths need a symmetric spectrum"));
        }
        if r0 == 0.0 {
            return Ok(PathSampler { n, factor: Factor::Zero });
        }
        let jitter = CHOLESKY_JITTER * r0;
        let not_psd = || {
            Error::Numerical(format!(
                "covariance of size {n} is not positive semidefinite within jitter {jitter:e}"
            ))
        };
        let factor = if real_valued {
            let m = DMatrix::from_fn(n, n, |t, s| {
                cov.lag(t as i64 - s as i64).re + if t == s { jitter } else { 0.0 }
            });
            Factor::Real(Cholesky::new(m).ok_or_else(not_psd)?.unpack())
        } else {
            let mut m = cov.matrix();
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            Factor::Complex(Cholesky::new(m).ok_or_else(not_psd)?.unpack())
        };
        Ok(PathSampler { n, factor })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sample(&self, base_seed: u64, trial: u64) -> SamplePath {
        let n = self.n;
        let mut rng = trial_rng(base_seed, trial);
        let values = match &self.factor {
            Factor::Zero => vec![Complex64::new(0.0, 0.0); n],
            Factor::Real(l) => {
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                (0..n)
                    .map(|t| {
                        let row: f64 = (0..=t).map(|s| l[(t, s)] * z[s]).sum();
                        Complex64::new(row, 0.0)
                    })
                    .collect()
            }
            Factor::Complex(l) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let z: Vec<Complex64> = (0..n)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(re * h, im * h)
                    })
                    .collect();
                (0..n).map(|t| (0..=t).map(|s| l[(t, s)] * z[s]).sum()).collect()
            }
        };
        SamplePath { values, base_seed, trial }
    }
}

/// `count` paths for trials `0..count`.
pub fn sample_paths(cov: &CovarianceModel, count: usize, base_seed: u64, real_valued: bool) -> Result<Vec<SamplePath>> {
    let sampler = PathSampler::new(cov, real_valued)?;
    Ok((0..count as u64).map(|i| sampler.sample(base_seed, i)).collect())
}
