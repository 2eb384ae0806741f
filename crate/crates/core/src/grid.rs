//! Uniform discretisation of the frequency interval `[-1/2, 1/2)` and real
//! functions sampled on it.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::csv::{fmt_f64, CsvWriter};
use crate::error::{invalid, Error, Result};

/// Points `xi_m = -1/2 + m/M`, `m = 0..M`, with `+1/2` identified with `-1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrequencyGrid {
    m: usize,
}

impl FrequencyGrid {
    /// `m` must be even so that `xi = 0` is a grid point.
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 || m % 2 != 0 {
            return Err(invalid(format!("grid size must be even and >= 2, got {m}")));
        }
        Ok(FrequencyGrid { m })
    }

    /// Grid for trigonometric polynomials of degree `< n`; requires `M >= 2n`.
    pub fn for_length(m: usize, n: usize) -> Result<Self> {
        let grid = Self::new(m)?;
        grid.check_resolves(n)?;
        Ok(grid)
    }

    /// `max(4096, 64 n)`.
    pub fn default_for(n: usize) -> Self {
        FrequencyGrid { m: (64 * n).max(4096) }
    }

    pub fn check_resolves(&self, n: usize) -> Result<()> {
        if self.m < 2 * n {
            return Err(Error::Precondition(format!(
                "grid of {} points is too coarse for length {n} (need >= {})",
                self.m,
                2 * n
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn point(&self, idx: usize) -> f64 {
        -0.5 + idx as f64 / self.m as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |i| self.point(i))
    }

    /// Index of the grid point closest to `xi` (taken modulo 1).
    pub fn nearest_index(&self, xi: f64) -> usize {
        let shifted = (xi + 0.5).rem_euclid(1.0);
        ((shifted * self.m as f64).round() as usize) % self.m
    }

    /// Half-bin membership rule for `[-w, w]`: `|xi| <= w + 1/(2M)`.
    pub fn in_band(&self, idx: usize, w: f64) -> bool {
        self.point(idx).abs() <= w + 0.5 * self.step()
    }

    pub fn band_mask(&self, w: f64) -> Vec<bool> {
        (0..self.m).map(|i| self.in_band(i, w)).collect()
    }
}

/// Real function sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn constant(grid: FrequencyGrid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.len()] }
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Riemann sum over `I`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.step()
    }

    /// Riemann sum over the grid points assigned to `[-w, w]`.
    pub fn integral_in_band(&self, w: f64) -> f64 {
        self.masked_sum(w, true) * self.grid.step()
    }

    /// Riemann sum over the complement of `[-w, w]` in `I`.
    pub fn integral_out_of_band(&self, w: f64) -> f64 {
        self.masked_sum(w, false) * self.grid.step()
    }

    fn masked_sum(&self, w: f64, inside: bool) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.in_band(*i, w) == inside)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, factor: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn l1_distance(&self, other: &GridFunction) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.step())
    }

    pub(crate) fn ensure_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "grids of {} and {} points",
                self.grid.len(),
                other.grid.len()
            )));
        }
        Ok(())
    }

    /// CSV with header `xi,value`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::with_header(&["xi", "value"]);
        for (i, v) in self.values.iter().enumerate() {
            w.row([fmt_f64(self.grid.point(i)), fmt_f64(*v)]);
        }
        w.finish()
    }
}

/// Evaluates `sum_t s_t exp(-2 pi i xi_m t)` on every grid point with one
/// zero-padded FFT. Sequences must not be longer than the grid.
#[derive(Clone)]
pub struct GridDft {
    grid: FrequencyGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridDft").field("grid", &self.grid).finish()
    }
}

impl GridDft {
    pub fn new(grid: FrequencyGrid) -> Self {
        let mut planner = FftPlanner::new();
        GridDft {
            grid,
            forward: planner.plan_fft_forward(grid.len()),
            inverse: planner.plan_fft_inverse(grid.len()),
        }
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    /// Writes the transform of `seq` into `out` (length `M`).
    pub fn transform_into<I>(&self, seq: I, out: &mut [Complex64])
    where
        I: IntoIterator<Item = Complex64>,
    {
        debug_assert_eq!(out.len(), self.grid.len());
        out.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (t, s) in seq.into_iter().enumerate() {
            assert!(t < out.len(), "sequence longer than the frequency grid");
            // xi_m = -1/2 + m/M contributes the factor (-1)^t.
            out[t] = if t % 2 == 0 { s } else { -s };
        }
        self.forward.process(out);
    }

    pub fn transform<I>(&self, seq: I) -> Vec<Complex64>
    where
        I: IntoIterator<Item = Complex64>,
    {
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        self.transform_into(seq, &mut out);
        out
    }

    /// Synthesises `sum_tau c_tau exp(2 pi i xi_m tau)` for `|tau| < coeffs.len()`,
    /// where `coeffs[tau]` holds `c_tau` and `negative[tau]` holds `c_{-tau}`
    /// (`negative[0]` is ignored).
    pub fn synthesize(&self, coeffs: &[Complex64], negative: &[Complex64]) -> Vec<Complex64> {
        let m = self.grid.len();
        assert!(2 * coeffs.len() <= m + 1, "too many coefficients for grid");
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (tau, &c) in coeffs.iter().enumerate() {
            buf[tau] += if tau % 2 == 0 { c } else { -c };
        }
        for (tau, &c) in negative.iter().enumerate().skip(1) {
            buf[m - tau] += if tau % 2 == 0 { c } else { -c };
        }
        self.inverse.process(&mut buf);
        buf
    }
}

/// Periodic convolution `(a * b)(xi_m) = (1/M) sum_j a(xi_j) b(xi_m - xi_j)`.
pub fn circular_convolve(a: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
    a.ensure_same_grid(b)?;
    let grid = a.grid();
    let m = grid.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut fa: Vec<Complex64> = a.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    // b'[d] = b(d/M), i.e. the sample at grid index d + M/2.
    let mut fb: Vec<Complex64> = (0..m)
        .map(|d| Complex64::new(b.values()[(d + m / 2) % m], 0.0))
        .collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    inv.process(&mut prod);
    let scale = 1.0 / (m as f64 * m as f64);
    GridFunction::new(grid, prod.iter().map(|c| c.re * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_and_band_rule() {
        let g = FrequencyGrid::new(8).unwrap();
        let pts: Vec<f64> = g.points().collect();
        assert_eq!(pts, vec![-0.5, -0.375, -0.25, -0.125, 0.0, 0.125, 0.25, 0.375]);
        // |xi| <= 0.25 + 1/16 picks 5 points.
        assert_eq!(g.band_mask(0.25).iter().filter(|b| **b).count(), 5);
        assert!(FrequencyGrid::new(7).is_err());
        assert!(FrequencyGrid::for_length(8, 5).is_err());
    }

    #[test]
    fn dft_matches_direct_sum() {
        let g = FrequencyGrid::new(16).unwrap();
        let dft = GridDft::new(g);
        let seq = [
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 0.0),
            Complex64::new(0.2, -1.0),
        ];
        let fast = dft.transform(seq.iter().copied());
        for (m, xi) in g.points().enumerate() {
            let direct: Complex64 = seq
                .iter()
                .enumerate()
                .map(|(t, s)| s * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * xi * t as f64))
                .sum();
            assert!((fast[m] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn synthesis_matches_direct_sum() {
        let g = FrequencyGrid::new(16).unwrap();
        let dft = GridDft::new(g);
        let pos = [Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.25), Complex64::new(0.0, -0.1)];
        let neg = [Complex64::new(0.0, 0.0), Complex64::new(0.5, -0.25), Complex64::new(0.3, 0.0)];
        let out = dft.synthesize(&pos, &neg);
        for (m, xi) in g.points().enumerate() {
            let mut direct = pos[0];
            for tau in 1..3 {
                let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * xi * tau as f64);
                direct += pos[tau] * e + neg[tau] * e.conj();
            }
            assert!((out[m] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let g = FrequencyGrid::new(32).unwrap();
        let a = GridFunction::from_fn(g, |x| 1.0 + x * x);
        let b = GridFunction::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).cos() + 2.0);
        let fast = circular_convolve(&a, &b).unwrap();
        for m in 0..32 {
            let direct: f64 = (0..32)
                .map(|j| {
                    let lag = g.point(m) - g.point(j);
                    a.values()[j] * (2.0 * std::f64::consts::PI * lag).cos() + 2.0 * a.values()[j]
                })
                .sum::<f64>()
                / 32.0;
            assert!((fast.values()[m] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_has_unit_riemann_mass() {
        let g = FrequencyGrid::new(64).unwrap();
        let one = GridFunction::constant(g, 1.0);
        assert!((one.integral() - 1.0).abs() < 1e-15);
        let total = one.integral_in_band(0.1) + one.integral_out_of_band(0.1);
        assert!((total - 1.0).abs() < 1e-15);
    }
}
