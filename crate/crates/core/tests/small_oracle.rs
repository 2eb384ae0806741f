//! Eigenvalues of small sinc-Toeplitz matrices against roots of the
//! characteristic polynomial found by sign scanning and bisection.

use slepian_mtm::prolate::{compute_dpss, sinc_toeplitz, DpssParams};

fn det_shifted(a: &[Vec<f64>], x: f64) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= x;
    }
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

fn char_roots(a: &[Vec<f64>]) -> Vec<f64> {
    let step = 1e-5;
    let mut roots = Vec::new();
    let mut x = -1e-3;
    let mut fx = det_shifted(a, x);
    while x < 1.0 + 1e-3 {
        let y = x + step;
        let fy = det_shifted(a, y);
        if fx == 0.0 || fx.signum() != fy.signum() {
            let (mut lo, mut hi, mut flo) = (x, y, fx);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = det_shifted(a, mid);
                if fm.signum() == flo.signum() && fm != 0.0 {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x = y;
        fx = fy;
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    roots
}

#[test]
fn dense_solver_matches_characteristic_roots() {
    for (n, w) in [(2, 0.25), (3, 0.2), (3, 0.1), (4, 0.25), (5, 0.3), (8, 0.25)] {
        let params = DpssParams::new(n, w, 1).unwrap();
        let a = sinc_toeplitz(&params).unwrap();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
        let roots = char_roots(&rows);
        assert_eq!(roots.len(), n, "N = {n}, W = {w}: found {roots:?}");
        let basis = compute_dpss(&params, n).unwrap();
        for (lambda, root) in basis.eigenvalues().iter().zip(&roots) {
            assert!((lambda - root).abs() < 1e-8, "N = {n}, W = {w}: {lambda} vs {root}");
        }
    }
}

#[test]
fn two_point_closed_form() {
    let basis = compute_dpss(&DpssParams::new(2, 0.25, 1).unwrap(), 2).unwrap();
    let inv_pi = 1.0 / std::f64::consts::PI;
    assert!((basis.eigenvalues()[0] - (0.5 + inv_pi)).abs() < 1e-10);
    assert!((basis.eigenvalues()[1] - (0.5 - inv_pi)).abs() < 1e-10);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((basis.taper(0)[0] - h).abs() < 1e-12 && (basis.taper(0)[1] - h).abs() < 1e-12);
    assert!((basis.taper(1)[0] - h).abs() < 1e-12 && (basis.taper(1)[1] + h).abs() < 1e-12);
}
