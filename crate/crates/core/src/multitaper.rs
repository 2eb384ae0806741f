//! Periodogram, tapered, Thomson and eigenvalue-weighted spectral estimates,
//! and a Monte-Carlo harness for their bias, variance and MSE.

use num_complex::Complex64;

use crate::csv::{fmt_f64, CsvWriter};
use crate::error::{invalid, Error, Result};
use crate::grid::{circular_convolve, FrequencyGrid, GridDft, GridFunction};
use crate::parallel::fold_trials;
use crate::prolate::{self, DpssBasis, DpssParams};
use crate::stochastic::{covariance_from_spectrum, PathSampler, SpectrumSpec};
use crate::window;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Periodogram,
    Tapered,
    Thomson(usize),
    Weighted,
}

/// A non-negative spectral estimate on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    pub method: Method,
}

impl Estimate {
    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction::new(self.grid, self.values.clone()).expect("estimate sized to grid")
    }
}

/// Reusable FFT plan and scratch space for repeated estimates on one grid.
#[derive(Debug, Clone)]
pub struct SpectralEstimator {
    dft: GridDft,
    scratch: Vec<Complex64>,
}

impl SpectralEstimator {
    pub fn new(grid: FrequencyGrid) -> Self {
        SpectralEstimator {
            dft: GridDft::new(grid),
            scratch: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.dft.grid()
    }

    fn check_length(&self, n: usize) -> Result<()> {
        if n > self.grid().len() {
            return Err(Error::Precondition(format!(
                "{n} samples exceed the {}-point grid",
                self.grid().len()
            )));
        }
        Ok(())
    }

    /// Adds `weight |sum_t x_t D_t e^{-2 pi i xi t}|^2` into `acc`.
    pub fn accumulate_tapered(&mut self, x: &[Complex64], taper: &[f64], weight: f64, acc: &mut [f64]) -> Result<()> {
        if taper.len() != x.len() {
            return Err(invalid(format!(
                "taper of length {} for {} samples",
                taper.len(),
                x.len()
            )));
        }
        self.check_length(x.len())?;
        self.dft
            .transform_into(x.iter().zip(taper).map(|(v, d)| v * *d), &mut self.scratch);
        for (a, c) in acc.iter_mut().zip(&self.scratch) {
            *a += weight * c.norm_sqr();
        }
        Ok(())
    }

    pub fn periodogram(&mut self, x: &[Complex64]) -> Result<Estimate> {
        let n = x.len();
        if n == 0 {
            return Err(invalid("empty sample"));
        }
        let boxcar = vec![1.0; n];
        let mut values = vec![0.0; self.grid().len()];
        self.accumulate_tapered(x, &boxcar, 1.0 / n as f64, &mut values)?;
        Ok(Estimate { grid: self.grid(), values, method: Method::Periodogram })
    }

    pub fn tapered(&mut self, x: &[Complex64], taper: &[f64]) -> Result<Estimate> {
        let mut values = vec![0.0; self.grid().len()];
        self.accumulate_tapered(x, taper, 1.0, &mut values)?;
        Ok(Estimate { grid: self.grid(), values, method: Method::Tapered })
    }

    /// `(1/K) sum_{k<K}` of the tapered periodograms with the first `K` tapers.
    pub fn thomson(&mut self, x: &[Complex64], basis: &DpssBasis, k: usize) -> Result<Estimate> {
        if k == 0 || k > basis.len() {
            return Err(invalid(format!("K = {k} outside 1..={} computed tapers", basis.len())));
        }
        let mut values = vec![0.0; self.grid().len()];
        let weight = 1.0 / k as f64;
        for taper in &basis.tapers()[..k] {
            self.accumulate_tapered(x, taper, weight, &mut values)?;
        }
        Ok(Estimate { grid: self.grid(), values, method: Method::Thomson(k) })
    }

    /// `(1/K) sum_{k<N} lambda_k` times the tapered periodograms, with
    /// `K = floor(2NW)`.
    pub fn weighted(&mut self, x: &[Complex64], basis: &DpssBasis) -> Result<Estimate> {
        if !basis.is_complete() {
            return Err(invalid(format!(
                "weighted estimate needs all {} tapers, got {}",
                basis.n(),
                basis.len()
            )));
        }
        let k = prolate::critical_k(basis.n(), basis.w())?;
        if k == 0 {
            return Err(Error::DegenerateBandwidth { n: basis.n(), w: basis.w() });
        }
        let mut values = vec![0.0; self.grid().len()];
        for (taper, lambda) in basis.tapers().iter().zip(basis.eigenvalues()) {
            self.accumulate_tapered(x, taper, lambda / k as f64, &mut values)?;
        }
        Ok(Estimate { grid: self.grid(), values, method: Method::Weighted })
    }
}

pub fn periodogram(x: &[Complex64], grid: FrequencyGrid) -> Result<Estimate> {
    SpectralEstimator::new(grid).periodogram(x)
}

pub fn tapered_periodogram(x: &[Complex64], taper: &[f64], grid: FrequencyGrid) -> Result<Estimate> {
    SpectralEstimator::new(grid).tapered(x, taper)
}

pub fn thomson_estimate(x: &[Complex64], basis: &DpssBasis, k: usize, grid: FrequencyGrid) -> Result<Estimate> {
    SpectralEstimator::new(grid).thomson(x, basis, k)
}

pub fn weighted_estimate(x: &[Complex64], basis: &DpssBasis, grid: FrequencyGrid) -> Result<Estimate> {
    SpectralEstimator::new(grid).weighted(x, basis)
}

/// `S * window` by periodic grid convolution.
pub fn expected_estimate(spec: &SpectrumSpec, window: &GridFunction) -> Result<GridFunction> {
    spec.validate()?;
    circular_convolve(&spec.on_grid(window.grid()), window)
}

/// Per-frequency Monte-Carlo statistics of Thomson's estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub n: usize,
    pub w: f64,
    pub k: usize,
    pub trials: u64,
    pub spectrum: SpectrumSpec,
    pub grid: FrequencyGrid,
    pub true_spectrum: Vec<f64>,
    /// `S * rho_K / K`, the exact expectation of the estimator.
    pub window_expectation: Vec<f64>,
    pub mean_estimate: Vec<f64>,
    /// `mean_estimate - S`.
    pub bias: Vec<f64>,
    /// `mean_estimate - S * rho_K / K`; zero up to Monte-Carlo error.
    pub window_bias: Vec<f64>,
    /// Unbiased sample variance across trials.
    pub variance: Vec<f64>,
    /// `bias^2 + variance`.
    pub mse: Vec<f64>,
}

impl EstimateReport {
    pub fn bias_squared(&self) -> Vec<f64> {
        self.bias.iter().map(|b| b * b).collect()
    }

    pub fn max_abs_bias(&self) -> f64 {
        self.bias.iter().fold(0.0, |a, b| f64::max(a, b.abs()))
    }

    pub fn mean_mse(&self) -> f64 {
        self.mse.iter().sum::<f64>() / self.mse.len() as f64
    }

    pub fn mean_variance(&self) -> f64 {
        self.variance.iter().sum::<f64>() / self.variance.len() as f64
    }

    /// Standard error of the mean estimate at grid index `m`.
    pub fn standard_error(&self, m: usize) -> f64 {
        (self.variance[m] / self.trials as f64).sqrt()
    }

    /// CSV with header `xi,true_S,mean_est,bias,var,mse`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::with_header(&["xi", "true_S", "mean_est", "bias", "var", "mse"]);
        for m in 0..self.grid.len() {
            w.row([
                fmt_f64(self.grid.point(m)),
                fmt_f64(self.true_spectrum[m]),
                fmt_f64(self.mean_estimate[m]),
                fmt_f64(self.bias[m]),
                fmt_f64(self.variance[m]),
                fmt_f64(self.mse[m]),
            ]);
        }
        w.finish()
    }

    pub fn sweep_row(&self) -> MseSweepRow {
        MseSweepRow {
            n: self.n,
            w: self.w,
            k: self.k,
            trials: self.trials,
            mean_mse: self.mean_mse(),
            max_bias: self.max_abs_bias(),
            mean_var: self.mean_variance(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseSweepRow {
    pub n: usize,
    pub w: f64,
    pub k: usize,
    pub trials: u64,
    pub mean_mse: f64,
    pub max_bias: f64,
    pub mean_var: f64,
}

/// CSV with header `N,W,K,trials,mean_mse,max_bias,mean_var`.
pub fn sweep_to_csv(rows: &[MseSweepRow]) -> String {
    let mut w = CsvWriter::with_header(&["N", "W", "K", "trials", "mean_mse", "max_bias", "mean_var"]);
    for r in rows {
        w.row([
            r.n.to_string(),
            fmt_f64(r.w),
            r.k.to_string(),
            r.trials.to_string(),
            fmt_f64(r.mean_mse),
            fmt_f64(r.max_bias),
            fmt_f64(r.mean_var),
        ]);
    }
    w.finish()
}

/// Settings for [`mse_monte_carlo_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct MseConfig {
    pub n: usize,
    pub w: f64,
    pub k: usize,
    pub trials: u64,
    pub base_seed: u64,
    /// Defaults to `max(4096, 64 N)`.
    pub grid: Option<FrequencyGrid>,
    /// Defaults to real paths exactly when the spectrum is symmetric.
    pub real_valued: Option<bool>,
}

/// Half-bandwidth whose critical taper count is `k`: `W = K / (2N)`.
pub fn bandwidth_for(n: usize, k: usize) -> f64 {
    k as f64 / (2.0 * n as f64)
}

pub fn mse_monte_carlo(spec: &SpectrumSpec, n: usize, w: f64, k: usize, trials: u64, base_seed: u64) -> Result<EstimateReport> {
    mse_monte_carlo_with(
        spec,
        &MseConfig { n, w, k, trials, base_seed, grid: None, real_valued: None },
    )
}

pub fn mse_monte_carlo_with(spec: &SpectrumSpec, cfg: &MseConfig) -> Result<EstimateReport> {
    if cfg.trials < 2 {
        return Err(invalid(format!("need at least 2 trials for a variance, got {}", cfg.trials)));
    }
    let params = DpssParams::new(cfg.n, cfg.w, cfg.k)?;
    let grid = cfg.grid.unwrap_or_else(|| FrequencyGrid::default_for(cfg.n));
    grid.check_resolves(cfg.n)?;
    let real_valued = cfg.real_valued.unwrap_or_else(|| spec.is_symmetric());
    let basis = prolate::compute_dpss_fast(&params, cfg.k)?;
    let cov = covariance_from_spectrum(spec, cfg.n)?;
    let sampler = PathSampler::new(&cov, real_valued)?;
    mse_with_basis(spec, &sampler, &basis, cfg.k, grid, cfg.trials, cfg.base_seed)
}

/// Monte-Carlo core shared by sweeps that reuse one sampler.
pub fn mse_with_basis(
    spec: &SpectrumSpec,
    sampler: &PathSampler,
    basis: &DpssBasis,
    k: usize,
    grid: FrequencyGrid,
    trials: u64,
    base_seed: u64,
) -> Result<EstimateReport> {
    if trials < 2 {
        return Err(invalid(format!("need at least 2 trials for a variance, got {trials}")));
    }
    if sampler.n() != basis.n() {
        return Err(invalid("sampler and tapers disagree on N"));
    }
    let m = grid.len();
    let spectra = prolate::slepian_eval(basis, grid)?;
    let win = window::rho_window(&spectra, k)?;
    let window_expectation = expected_estimate(spec, &win)?.into_values();
    let true_spectrum = spec.on_grid(grid).into_values();

    let estimator = SpectralEstimator::new(grid);
    let (sum, sum_sq) = fold_trials(
        trials,
        (vec![0.0; m], vec![0.0; m]),
        |trial| {
            let path = sampler.sample(base_seed, trial);
            estimator.clone().thomson(&path.values, basis, k).map(|e| e.values)
        },
        |(s, s2), est| {
            for ((a, b), v) in s.iter_mut().zip(s2.iter_mut()).zip(&est) {
                *a += v;
                *b += v * v;
            }
        },
    )?;

    let t = trials as f64;
    let mean_estimate: Vec<f64> = sum.iter().map(|s| s / t).collect();
    let variance: Vec<f64> = sum_sq
        .iter()
        .zip(&mean_estimate)
        .map(|(s2, mu)| ((s2 - t * mu * mu) / (t - 1.0)).max(0.0))
        .collect();
    let bias: Vec<f64> = mean_estimate.iter().zip(&true_spectrum).map(|(a, b)| a - b).collect();
    let window_bias = mean_estimate.iter().zip(&window_expectation).map(|(a, b)| a - b).collect();
    let mse = bias.iter().zip(&variance).map(|(b, v)| b * b + v).collect();
    Ok(EstimateReport {
        n: basis.n(),
        w: basis.w(),
        k,
        trials,
        spectrum: spec.clone(),
        grid,
        true_spectrum,
        window_expectation,
        mean_estimate,
        bias,
        window_bias,
        variance,
        mse,
    })
}

/// Runs the harness for each `K`, with `W = K / (2N)` so that `K` is the
/// critical count. Paths are shared across `K` through the seeding contract.
pub fn mse_sweep(
    spec: &SpectrumSpec,
    n: usize,
    k_list: &[usize],
    trials: u64,
    base_seed: u64,
    grid: Option<FrequencyGrid>,
) -> Result<Vec<EstimateReport>> {
    let grid = grid.unwrap_or_else(|| FrequencyGrid::default_for(n));
    let cov = covariance_from_spectrum(spec, n)?;
    let sampler = PathSampler::new(&cov, spec.is_symmetric())?;
    k_list
        .iter()
        .map(|&k| {
            let params = DpssParams::new(n, bandwidth_for(n, k), k)?;
            let basis = prolate::compute_dpss_fast(&params, k)?;
            mse_with_basis(spec, &sampler, &basis, k, grid, trials, base_seed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prolate::compute_dpss;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn tone(n: usize, xi0: f64) -> Vec<Complex64> {
        (0..n).map(|t| Complex64::from_polar(1.0, 2.0 * PI * xi0 * t as f64)).collect()
    }

    #[test]
    fn periodogram_of_zero_and_tone() {
        let grid = FrequencyGrid::new(64).unwrap();
        let zero = periodogram(&vec![Complex64::new(0.0, 0.0); 16], grid).unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0));
        let xi0 = grid.point(40);
        let est = periodogram(&tone(16, xi0), grid).unwrap();
        assert_abs_diff_eq!(est.values[40], 16.0, epsilon = 1e-10);
    }

    #[test]
    fn periodogram_is_boxcar_taper() {
        let grid = FrequencyGrid::new(64).unwrap();
        let x: Vec<Complex64> = (0..16).map(|t| Complex64::new((t as f64).sin(), (0.3 * t as f64).cos())).collect();
        let p = periodogram(&x, grid).unwrap();
        let boxcar = vec![1.0 / 4.0; 16];
        let q = tapered_periodogram(&x, &boxcar, grid).unwrap();
        for (a, b) in p.values.iter().zip(&q.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn tapered_tone_peak_and_errors() {
        let grid = FrequencyGrid::new(128).unwrap();
        let taper: Vec<f64> = (0..20).map(|t| (PI * (t as f64 + 0.5) / 20.0).sin()).collect();
        let xi0 = grid.point(90);
        let est = tapered_periodogram(&tone(20, xi0), &taper, grid).unwrap();
        let sum: f64 = taper.iter().sum();
        assert_abs_diff_eq!(est.values[90], sum * sum, epsilon = 1e-9);
        assert!(est.values.iter().all(|v| *v <= sum * sum + 1e-9));
        assert!(tapered_periodogram(&tone(20, xi0), &taper[..19], grid).is_err());
        let zero = tapered_periodogram(&tone(20, xi0), &[0.0; 20], grid).unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn thomson_is_mean_of_tapered() {
        let grid = FrequencyGrid::new(256).unwrap();
        let basis = compute_dpss(&DpssParams::critical(64, 0.1).unwrap(), 64).unwrap();
        let x: Vec<Complex64> = (0..64).map(|t| Complex64::new(((t * t) % 7) as f64 - 3.0, 0.0)).collect();
        let k = 5;
        let thomson = thomson_estimate(&x, &basis, k, grid).unwrap();
        let mut mean = vec![0.0; 256];
        for j in 0..k {
            let e = tapered_periodogram(&x, basis.taper(j), grid).unwrap();
            mean.iter_mut().zip(&e.values).for_each(|(a, b)| *a += b / k as f64);
        }
        for (a, b) in thomson.values.iter().zip(&mean) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        let single = thomson_estimate(&x, &basis, 1, grid).unwrap();
        assert_eq!(single.values, tapered_periodogram(&x, basis.taper(0), grid).unwrap().values);
        assert!(thomson_estimate(&x, &basis, 65, grid).is_err());
        assert!(thomson.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn weighted_with_zeroed_eigenvalues() {
        let grid = FrequencyGrid::new(128).unwrap();
        let full = compute_dpss(&DpssParams::critical(32, 0.1).unwrap(), 32).unwrap();
        let mut lams = vec![0.0; 32];
        lams[0] = full.eigenvalues()[0];
        let basis = DpssBasis::from_parts(*full.params(), full.tapers().to_vec(), lams.clone()).unwrap();
        let x: Vec<Complex64> = (0..32).map(|t| Complex64::new((t as f64 * 0.7).cos(), 0.0)).collect();
        let est = weighted_estimate(&x, &basis, grid).unwrap();
        let k = prolate::critical_k(32, 0.1).unwrap() as f64;
        let single = tapered_periodogram(&x, full.taper(0), grid).unwrap();
        for (a, b) in est.values.iter().zip(&single.values) {
            assert_abs_diff_eq!(*a, lams[0] * b / k, epsilon = 1e-12);
        }
        let partial = compute_dpss(&DpssParams::critical(32, 0.1).unwrap(), 6).unwrap();
        assert!(weighted_estimate(&x, &partial, grid).is_err());
    }

    #[test]
    fn expected_estimate_of_constant_and_bandpass() {
        let grid = FrequencyGrid::new(512).unwrap();
        let ideal = window::ideal_bandpass(0.05, grid).unwrap();
        let white = SpectrumSpec::White { level: 2.5 };
        let out = expected_estimate(&white, &ideal).unwrap();
        let mass = ideal.integral();
        assert!(out.values().iter().all(|v| (v - 2.5 * mass).abs() < 1e-12));
        // Moving average of a cosine over [-W, W] on the grid.
        let cosine = SpectrumSpec::SmoothCosine { coeffs: vec![1.0, 0.5] };
        let out = expected_estimate(&cosine, &ideal).unwrap();
        let inside: Vec<usize> = (0..512).filter(|&i| grid.in_band(i, 0.05)).collect();
        for m in [0usize, 100, 256, 400] {
            let direct: f64 = inside
                .iter()
                .map(|&j| cosine.eval(grid.point(m) - grid.point(j)) * 10.0)
                .sum::<f64>()
                / 512.0;
            assert_abs_diff_eq!(out.values()[m], direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn report_decomposition_and_reproducibility() {
        let spec = SpectrumSpec::SmoothCosine { coeffs: vec![1.0, 0.5] };
        let cfg = MseConfig {
            n: 64,
            w: 0.1,
            k: 6,
            trials: 40,
            base_seed: 9,
            grid: Some(FrequencyGrid::new(256).unwrap()),
            real_valued: None,
        };
        let a = mse_monte_carlo_with(&spec, &cfg).unwrap();
        let b = mse_monte_carlo_with(&spec, &cfg).unwrap();
        assert_eq!(a, b);
        for m in 0..256 {
            let expect = a.bias[m] * a.bias[m] + a.variance[m];
            assert!((a.mse[m] - expect).abs() <= 1e-12 * expect.max(f64::MIN_POSITIVE));
            assert!(a.variance[m] >= 0.0);
        }
        assert!(a.to_csv().starts_with("xi,true_S,mean_est,bias,var,mse\n"));
        let mut one = cfg.clone();
        one.trials = 1;
        assert!(mse_monte_carlo_with(&spec, &one).is_err());
    }

    #[test]
    fn sweep_csv_layout() {
        let row = MseSweepRow { n: 8, w: 0.25, k: 4, trials: 2, mean_mse: 0.5, max_bias: 0.1, mean_var: 0.4 };
        let csv = sweep_to_csv(&[row]);
        assert!(csv.starts_with("N,W,K,trials,mean_mse,max_bias,mean_var\n8,"));
    }
}
