//! Brute-force model spectra: Landau levels of the positive-curvature model
//! on ℂⁿ, graded by form degree, and their heat traces.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::torsion::GradedSpectrum;

/// Truncation of a multi-index sum at |k| ≤ k_max with a bound on the
/// neglected part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBound {
    pub k_max: usize,
    pub tail_estimate: f64,
}

/// Bound on (2π)^{−n}Πμ·C(n, q)·Σ_{|k|>k_max} e^{−t k·μ}, using
/// #{|k| = s} = C(s+n−1, n−1) and k·μ ≥ s·min μ.
pub fn landau_tail_bound(mu: &[f64], q: usize, t: f64, k_max: usize) -> Result<TruncationBound> {
    check_positive(mu)?;
    let n = mu.len();
    let m = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let x = (-t * m).exp();
    let prefactor = (2.0 * PI).powi(-(n as i32)) * mu.iter().product::<f64>() * binomial(n, q);
    // term(s) = C(s+n−1, n−1) x^s, summed from s = k_max + 1 until geometric.
    let mut s = k_max + 1;
    let mut term = binomial(s + n - 1, n - 1) * x.powi(s as i32);
    let mut total = 0.0;
    loop {
        total += term;
        let ratio = x * (s + n) as f64 / (s + 1) as f64;
        s += 1;
        term *= ratio;
        if ratio < 1.0 && term / (1.0 - ratio) < 1e-17 * total.max(f64::MIN_POSITIVE) || term == 0.0 {
            total += if ratio < 1.0 { term / (1.0 - ratio) } else { 0.0 };
            break;
        }
    }
    Ok(TruncationBound {
        k_max,
        tail_estimate: prefactor * total,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_positive(mu: &[f64]) -> Result<()> {
    if mu.is_empty() {
        return Err(Error::Validation("empty curvature list".into()));
    }
    match mu.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
        Some(&bad) => Err(Error::Domain {
            what: "Landau curvature μ_j (must be positive)".into(),
            value: bad,
        }),
        None => Ok(()),
    }
}

/// Model spectrum below an energy cut with its density factor (2π)^{−n}Πμ.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpectrum {
    pub spectrum: GradedSpectrum,
    pub density_factor: f64,
}

/// Eigenvalues k·μ + Σ_{j∈J} μ_j ≤ energy_cut in degree |J|, grouped with
/// multiplicity; the zero mode (k = 0, J = ∅) is excluded.
pub fn model_graded_spectrum(mu: &[f64], energy_cut: f64) -> Result<ModelSpectrum> {
    check_positive(mu)?;
    if !(energy_cut > 0.0) {
        return Err(Error::Domain {
            what: "energy cut".into(),
            value: energy_cut,
        });
    }
    let n = mu.len();
    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    // Landau energies k·μ ≤ cut by depth-first enumeration.
    let mut landau = Vec::new();
    let mut stack = vec![(0usize, 0.0f64)];
    while let Some((j, e)) = stack.pop() {
        if j == n {
            landau.push(e);
            continue;
        }
        let mut k = 0;
        while e + k as f64 * mu[j] <= energy_cut {
            stack.push((j + 1, e + k as f64 * mu[j]));
            k += 1;
        }
    }
    for mask in 0u32..(1 << n) {
        let shift: f64 = (0..n).filter(|&j| mask >> j & 1 == 1).map(|j| mu[j]).sum();
        let q = mask.count_ones() as usize;
        for &e in &landau {
            let v = e + shift;
            if v <= energy_cut && v > 0.0 {
                raw[q].push(v);
            }
        }
    }
    let degrees = raw
        .into_iter()
        .map(|mut vals| {
            vals.sort_by(f64::total_cmp);
            let mut grouped: Vec<(f64, usize)> = Vec::new();
            for v in vals {
                match grouped.last_mut() {
                    Some((g, m)) if (v - *g).abs() <= 1e-12 * v.max(1.0) => *m += 1,
                    _ => grouped.push((v, 1)),
                }
            }
            grouped
        })
        .collect();
    Ok(ModelSpectrum {
        spectrum: GradedSpectrum::new(degrees)?,
        density_factor: (2.0 * PI).powi(-(n as i32)) * mu.iter().product::<f64>(),
    })
}

/// Σ_i m_i e^{−λ_i t} in each degree.
pub fn heat_trace_from_spectrum(s: &GradedSpectrum, t: f64) -> Result<Vec<f64>> {
    if !(t >= 1e-6) {
        return Err(Error::Domain {
            what: "t (heat traces of truncated spectra need t ≥ 1e-6)".into(),
            value: t,
        });
    }
    Ok((0..=s.n())
        .map(|q| s.degree(q).iter().map(|&(l, m)| m as f64 * (-l * t).exp()).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_levels() {
        let m = model_graded_spectrum(&[1.0], 2.5).unwrap();
        assert_eq!(m.spectrum.degree(0), &[(1.0, 1), (2.0, 1)]);
        assert_eq!(m.spectrum.degree(1), &[(1.0, 1), (2.0, 1)]);
    }

    #[test]
    fn two_dimensional_levels() {
        let m = model_graded_spectrum(&[1.0, 2.0], 2.0).unwrap();
        assert_eq!(m.spectrum.degree(0), &[(1.0, 1), (2.0, 2)]);
        let empty = model_graded_spectrum(&[1.0, 2.0], 0.5).unwrap();
        assert_eq!(empty.spectrum.count(0), 0);
    }

    #[test]
    fn geometric_trace() {
        let m = model_graded_spectrum(&[1.0], 40.0).unwrap();
        let tr = heat_trace_from_spectrum(&m.spectrum, 1.0).unwrap();
        let x = (-1.0f64).exp();
        assert!((tr[0] - x / (1.0 - x)).abs() < 1e-15);
        assert!((tr[1] - x / (1.0 - x)).abs() < 1e-15);
        assert!(heat_trace_from_spectrum(&m.spectrum, 1e-7).is_err());
    }
}
