#![allow(dead_code)]

use crtorsion::density::CurvatureData;
use crtorsion::hermitian::HermitianMatrix;
use crtorsion::quad::gauss_legendre;

pub fn real_data(a: &[Vec<f64>], b: &[Vec<f64>]) -> CurvatureData {
    CurvatureData::new(
        HermitianMatrix::from_real_rows(a).unwrap(),
        HermitianMatrix::from_real_rows(b).unwrap(),
    )
    .unwrap()
}

pub fn diag_data(a: &[f64], b: &[f64]) -> CurvatureData {
    CurvatureData::new(
        HermitianMatrix::diagonal(a).unwrap(),
        HermitianMatrix::diagonal(b).unwrap(),
    )
    .unwrap()
}

/// Fixed-order Gauss–Legendre on each root-delimited piece of [lo, hi],
/// rationally mapped on infinite ends.
pub fn dense_integral(f: impl Fn(f64) -> f64, lo: f64, hi: f64, roots: &[f64], nodes: usize) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    let mut cuts = vec![lo];
    cuts.extend(roots.iter().copied().filter(|r| *r > lo && *r < hi));
    cuts.push(hi);
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for (xi, wi) in x.iter().zip(&w) {
            let (eta, jac) = match (a.is_finite(), b.is_finite()) {
                (true, true) => (0.5 * (a + b) + 0.5 * (b - a) * xi, 0.5 * (b - a)),
                (false, true) => {
                    let u = 0.5 * (1.0 + xi);
                    (b - u / (1.0 - u), 0.5 / (1.0 - u).powi(2))
                }
                (true, false) => {
                    let u = 0.5 * (1.0 + xi);
                    (a + u / (1.0 - u), 0.5 / (1.0 - u).powi(2))
                }
                (false, false) => (xi / (1.0 - xi * xi), (1.0 + xi * xi) / (1.0 - xi * xi).powi(2)),
            };
            total += wi * jac * f(eta);
        }
    }
    total
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}
