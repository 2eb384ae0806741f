//! Aggregated Slepian spectral windows and their distance from the ideal
//! band-pass kernel.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::csv::{fmt_f64, CsvWriter};
use crate::error::{invalid, Error, Result};
use crate::grid::{FrequencyGrid, GridDft, GridFunction};
use crate::prolate::{self, DpssParams, SlepianSpectra};

/// Dirichlet kernel `sin(N pi x) / sin(pi x)`; at integer `x` the limit
/// `N (-1)^{x (N - 1)}` is returned.
pub fn dirichlet(n: usize, x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-13 {
        let parity = (r as i64).rem_euclid(2) * (n as i64 - 1).rem_euclid(2);
        return if parity == 1 { -(n as f64) } else { n as f64 };
    }
    (n as f64 * PI * x).sin() / (PI * x).sin()
}

/// Thomson's window `(1/K) sum_{k<K} |U_k|^2`.
pub fn rho_window(spectra: &SlepianSpectra, k: usize) -> Result<GridFunction> {
    if k == 0 || k > spectra.len() {
        return Err(invalid(format!(
            "K = {k} outside 1..={} computed Slepians",
            spectra.len()
        )));
    }
    let grid = spectra.grid();
    let mut acc = vec![0.0; grid.len()];
    for idx in 0..k {
        for (a, u) in acc.iter_mut().zip(spectra.values(idx)) {
            *a += u.norm_sqr();
        }
    }
    let scale = 1.0 / k as f64;
    GridFunction::new(grid, acc.into_iter().map(|v| v * scale).collect())
}

/// Eigenvalue-weighted window `(1/K) sum_{k<N} lambda_k |U_k|^2`. Needs all
/// `N` Slepians.
pub fn rho_tilde_window(spectra: &SlepianSpectra, eigenvalues: &[f64], k: usize) -> Result<GridFunction> {
    let n = spectra.n();
    if spectra.len() != n || eigenvalues.len() != n {
        return Err(invalid(format!(
            "weighted window needs all {n} eigenpairs, got {} spectra and {} eigenvalues",
            spectra.len(),
            eigenvalues.len()
        )));
    }
    if k == 0 {
        return Err(invalid("K must be >= 1"));
    }
    let grid = spectra.grid();
    let mut acc = vec![0.0; grid.len()];
    for (idx, lambda) in eigenvalues.iter().enumerate() {
        for (a, u) in acc.iter_mut().zip(spectra.values(idx)) {
            *a += lambda * u.norm_sqr();
        }
    }
    let scale = 1.0 / k as f64;
    GridFunction::new(grid, acc.into_iter().map(|v| v * scale).collect())
}

/// `(1/2W) 1_{[-W, W]}` sampled with the half-bin rule.
pub fn ideal_bandpass(w: f64, grid: FrequencyGrid) -> Result<GridFunction> {
    if !(w > 0.0 && w < 0.5) {
        return Err(invalid(format!("half-bandwidth W = {w} must lie in (0, 1/2)")));
    }
    let height = 1.0 / (2.0 * w);
    GridFunction::new(
        grid,
        (0..grid.len())
            .map(|i| if grid.in_band(i, w) { height } else { 0.0 })
            .collect(),
    )
}

/// L1 distance split into the part over `[-W, W]` and the part outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Split {
    pub total: f64,
    pub narrowband: f64,
    pub broadband: f64,
}

pub fn l1_deviation(window: &GridFunction, ideal: &GridFunction, w: f64) -> Result<L1Split> {
    window.ensure_same_grid(ideal)?;
    let grid = window.grid();
    let (mut narrow, mut broad) = (0.0, 0.0);
    for (i, (a, b)) in window.values().iter().zip(ideal.values()).enumerate() {
        if grid.in_band(i, w) {
            narrow += (a - b).abs();
        } else {
            broad += (a - b).abs();
        }
    }
    let step = grid.step();
    let (narrowband, broadband) = (narrow * step, broad * step);
    Ok(L1Split { total: narrowband + broadband, narrowband, broadband })
}

/// `|1 - (1/K) sum_{k<K} lambda_k|`.
pub fn eigen_sum_defect(eigenvalues: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > eigenvalues.len() {
        return Err(invalid(format!("K = {k} needs that many eigenvalues")));
    }
    let mean = eigenvalues[..k].iter().sum::<f64>() / k as f64;
    Ok((1.0 - mean).abs())
}

/// `sum_k lambda_k (1 - lambda_k)` over all eigenvalues.
pub fn trace_defect(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().map(|l| l * (1.0 - l)).sum()
}

/// A periodic function on `I` described through its Fourier coefficients
/// `c_tau = int_I f(xi) exp(-2 pi i xi tau) d xi`.
pub trait PeriodicProfile {
    fn grid(&self) -> FrequencyGrid;

    /// Coefficients for `tau = 0..len` and `tau = 0, -1, .., -(len - 1)`.
    fn coefficients(&self, len: usize) -> (Vec<Complex64>, Vec<Complex64>);

    /// Samples on the grid.
    fn sampled(&self) -> GridFunction;
}

/// Grid samples: coefficients are Riemann sums, so smoothing them is the
/// circular grid convolution with the sampled kernel.
impl PeriodicProfile for GridFunction {
    fn grid(&self) -> FrequencyGrid {
        GridFunction::grid(self)
    }

    fn coefficients(&self, len: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let m = self.grid().len();
        let mut buf: Vec<Complex64> = self.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let scale = 1.0 / m as f64;
        let sign = |tau: usize| if tau % 2 == 0 { scale } else { -scale };
        let pos = (0..len).map(|tau| buf[tau % m] * sign(tau)).collect();
        let neg = (0..len).map(|tau| buf[(m - tau % m) % m] * sign(tau)).collect();
        (pos, neg)
    }

    fn sampled(&self) -> GridFunction {
        self.clone()
    }
}

/// The indicator of `[-W, W]` with exact Fourier coefficients
/// `sin(2 pi W tau) / (pi tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandIndicator {
    pub w: f64,
    pub grid: FrequencyGrid,
}

impl PeriodicProfile for BandIndicator {
    fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    fn coefficients(&self, len: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let c: Vec<Complex64> = (0..len as i64)
            .map(|tau| Complex64::new(prolate::sinc_kernel(self.w, tau), 0.0))
            .collect();
        (c.clone(), c)
    }

    fn sampled(&self) -> GridFunction {
        GridFunction::new(
            self.grid,
            (0..self.grid.len())
                .map(|i| if self.grid.in_band(i, self.w) { 1.0 } else { 0.0 })
                .collect(),
        )
        .expect("sized to grid")
    }
}

/// `(1/N) (f * |D_N|^2)` on the grid of `f`, using
/// `|D_N|^2(x) = sum_{|tau|<N} (N - |tau|) exp(2 pi i x tau)`.
pub fn dirichlet_smooth(f: &impl PeriodicProfile, n: usize) -> Result<GridFunction> {
    if n < 2 {
        return Err(invalid(format!("N = {n} must be >= 2")));
    }
    let grid = f.grid();
    grid.check_resolves(n)?;
    let (mut pos, mut neg) = f.coefficients(n);
    for tau in 0..n {
        let weight = 1.0 - tau as f64 / n as f64;
        pos[tau] *= weight;
        neg[tau] *= weight;
    }
    let values = GridDft::new(grid).synthesize(&pos, &neg);
    GridFunction::new(grid, values.into_iter().map(|c| c.re).collect())
}

/// One row of a Theorem-style window sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowReport {
    pub n: usize,
    pub w: f64,
    pub k: usize,
    pub l1_deviation: f64,
    pub narrowband_part: f64,
    pub broadband_part: f64,
    pub eigen_sum_defect: f64,
    /// Only for the weighted window: L1 distance when the weighted sum is
    /// divided by its natural mass `2NW` instead of `K`.
    pub l1_mass_normalized: Option<f64>,
}

impl WindowReport {
    pub const CSV_HEADER: [&'static str; 7] = ["N", "W", "K", "l1", "narrow", "broad", "defect"];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            fmt_f64(self.w),
            self.k.to_string(),
            fmt_f64(self.l1_deviation),
            fmt_f64(self.narrowband_part),
            fmt_f64(self.broadband_part),
            fmt_f64(self.eigen_sum_defect),
        ]
    }
}

pub fn window_reports_csv(reports: &[WindowReport]) -> String {
    let mut w = CsvWriter::with_header(&WindowReport::CSV_HEADER);
    for r in reports {
        w.row(r.csv_row());
    }
    w.finish()
}

/// Computes the full DPSS basis for `(n, w)` with the dense solver and
/// measures the window at the critical `K`. `weighted` selects the
/// eigenvalue-weighted window.
pub fn window_report(n: usize, w: f64, grid: FrequencyGrid, weighted: bool) -> Result<WindowReport> {
    let params = DpssParams::critical(n, w)?;
    let basis = prolate::compute_dpss(&params, n)?;
    window_report_from_basis(&basis, grid, weighted)
}

pub fn window_report_from_basis(
    basis: &prolate::DpssBasis,
    grid: FrequencyGrid,
    weighted: bool,
) -> Result<WindowReport> {
    let params = *basis.params();
    let (n, w) = (params.n, params.w);
    let k = prolate::critical_k(n, w)?;
    if k == 0 {
        return Err(Error::DegenerateBandwidth { n, w });
    }
    let spectra = prolate::slepian_eval(basis, grid)?;
    let ideal = ideal_bandpass(w, grid)?;
    let (window, mass_normalized) = if weighted {
        let win = rho_tilde_window(&spectra, basis.eigenvalues(), k)?;
        let natural = win.scaled(k as f64 / params.shannon_number());
        let alt = l1_deviation(&natural, &ideal, w)?.total;
        (win, Some(alt))
    } else {
        (rho_window(&spectra, k)?, None)
    };
    let split = l1_deviation(&window, &ideal, w)?;
    Ok(WindowReport {
        n,
        w,
        k,
        l1_deviation: split.total,
        narrowband_part: split.narrowband,
        broadband_part: split.broadband,
        eigen_sum_defect: eigen_sum_defect(basis.eigenvalues(), k)?,
        l1_mass_normalized: mass_normalized,
    })
}
