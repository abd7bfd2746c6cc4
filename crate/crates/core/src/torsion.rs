//! θ′(0) for finite graded spectra and the leading coefficients of the
//! torsion asymptotics θ′_{b,L^k}(0) = c_log·(log k)·k^{n+1} + c_k·k^{n+1} + o(k^{n+1}).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{f_n1_integral, signed_interval_sum, CurvatureData};
use crate::error::{Error, Result};
use crate::hermitian::signature_split;
use crate::hx::{hx_at_zero, hx_prime_zero, HxProblem};
use crate::mellin::{mellin_deriv_zero, AsymptoticSeries, DecayingTrace};
use crate::quad::{integrate_line, LineDomain, QuadOptions};

/// Nonzero spectra of the degree-q Laplacians, q = 0..=n, as
/// (eigenvalue, multiplicity) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedSpectrum {
    degrees: Vec<Vec<(f64, usize)>>,
}

impl GradedSpectrum {
    pub fn new(degrees: Vec<Vec<(f64, usize)>>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::Validation("a graded spectrum needs at least degree 0".into()));
        }
        for (q, levels) in degrees.iter().enumerate() {
            if let Some(&(l, _)) = levels.iter().find(|(l, _)| !(*l > 0.0 && l.is_finite())) {
                return Err(Error::Domain {
                    what: format!("eigenvalue in degree {q}"),
                    value: l,
                });
            }
        }
        Ok(Self { degrees })
    }

    /// Top degree n.
    pub fn n(&self) -> usize {
        self.degrees.len() - 1
    }

    pub fn degree(&self, q: usize) -> &[(f64, usize)] {
        &self.degrees[q]
    }

    /// Eigenvalue count in degree q, with multiplicity.
    pub fn count(&self, q: usize) -> usize {
        self.degrees[q].iter().map(|&(_, m)| m).sum()
    }

    /// Σ_q (−1)^q q·count_q.
    pub fn weighted_count(&self) -> f64 {
        (0..=self.n()).map(|q| sign_weight(q) * self.count(q) as f64).sum()
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.degrees
                .iter()
                .map(|d| d.iter().map(|&(l, m)| (l * lambda, m)).collect())
                .collect(),
        )
    }

    /// STr[N e^{−tΔ}Π^⊥] = Σ_q (−1)^q q Σ_i e^{−λ_{q,i} t}.
    pub fn supertrace(&self, t: f64) -> f64 {
        self.terms().map(|(c, l)| c * (-l * t).exp()).sum()
    }

    /// (coefficient, eigenvalue) pairs of the supertrace.
    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.degrees.iter().enumerate().flat_map(|(q, d)| {
            d.iter()
                .map(move |&(l, m)| (sign_weight(q) * m as f64, l))
        })
    }

    /// The supertrace as a decaying trace with its t⁰-based Taylor series.
    pub fn trace(&self, series_terms: usize) -> Result<(DecayingTrace<'_>, AsymptoticSeries)> {
        let rate = self
            .terms()
            .filter(|&(c, _)| c != 0.0)
            .map(|(_, l)| l)
            .fold(f64::INFINITY, f64::min);
        let bound: f64 = self.terms().map(|(c, _)| c.abs()).sum();
        let (rate, bound) = if rate.is_finite() && bound > 0.0 {
            (rate, bound)
        } else {
            (1.0, 1.0)
        };
        let mut coeffs = vec![0.0; series_terms.max(1)];
        for (c, l) in self.terms() {
            let mut term = c;
            for (j, slot) in coeffs.iter_mut().enumerate() {
                if j > 0 {
                    term *= -l / j as f64;
                }
                *slot += term;
            }
        }
        let f = DecayingTrace::new(move |t| self.supertrace(t), rate, bound)?;
        Ok((f, AsymptoticSeries::new(0, coeffs)?))
    }
}

fn sign_weight(q: usize) -> f64 {
    if q.is_multiple_of(2) {
        q as f64
    } else {
        -(q as f64)
    }
}

/// θ′(0) = Σ_q (−1)^q q Σ_i ln λ_{q,i}, since θ(z) = −Σ_q (−1)^q q Σ_i λ_{q,i}^{−z}.
pub fn theta_prime_zero_finite(s: &GradedSpectrum) -> f64 {
    s.degrees
        .iter()
        .enumerate()
        .map(|(q, d)| sign_weight(q) * d.iter().map(|&(l, m)| m as f64 * l.ln()).sum::<f64>())
        .sum()
}

/// θ′(0) = −M[f]′(0) for f = STr[N e^{−tΔ}Π^⊥].
pub fn theta_prime_zero_trace(f: &DecayingTrace<'_>, s: &AsymptoticSeries) -> Result<f64> {
    Ok(-mellin_deriv_zero(f, s)?.value)
}

/// Coefficients of (log k)·k^{n+1} and k^{n+1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorsionCoefficients {
    pub c_log: f64,
    pub c_k: f64,
}

/// Per-sample contributions, before weighting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBreakdown {
    pub weight: f64,
    /// ∫_{|η|≤C} F_{n+1,η} dη.
    pub f_n1: f64,
    pub h0: f64,
    pub h_prime0: f64,
    /// ½ log(2π)(2π)^{−n−1}∫_{|η|≤C} det M·(2q(η) − n) dη.
    pub log_two_pi_term: f64,
    /// ½(2π)^{−n−1}∫_{|η|≤C} det M·(log det M₊ − log|det M₋|) dη.
    pub log_det_term: f64,
    pub log_det_error: f64,
    pub c_log: f64,
    pub c_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorsionAsymptotics {
    pub coefficients: TorsionCoefficients,
    /// Error estimate carried by c_k; c_log is exact up to rounding.
    pub c_k_error: f64,
    pub split: f64,
    pub samples: Vec<SampleBreakdown>,
}

/// True when n₋ = n₊ or |n₋ − n₊| > 1.
pub fn signature_condition(data: &CurvatureData) -> bool {
    let (nm, np) = data.sig();
    nm == np || nm.abs_diff(np) > 1
}

/// The common split point used when none is given: the largest default split.
pub fn default_common_split(samples: &[(CurvatureData, f64)]) -> f64 {
    samples
        .iter()
        .map(|(d, _)| d.default_split())
        .fold(0.0, f64::max)
}

/// Leading torsion coefficients for a volume-weighted list of pointwise data.
pub fn torsion_asymptotics(samples: &[(CurvatureData, f64)], c: Option<f64>) -> Result<TorsionAsymptotics> {
    if samples.is_empty() {
        return Err(Error::Validation("no samples given".into()));
    }
    let n = samples[0].0.n();
    for (i, (d, w)) in samples.iter().enumerate() {
        if d.n() != n {
            return Err(Error::Validation(format!(
                "sample {i} has dimension {} but sample 0 has {n}",
                d.n()
            )));
        }
        if !w.is_finite() {
            return Err(Error::Validation(format!("sample {i} has a non-finite weight")));
        }
        if !signature_condition(d) {
            let (nm, np) = d.sig();
            return Err(Error::Precondition(format!(
                "sample {i} has Levi signature (n₋, n₊) = ({nm}, {np}); the asymptotics need n₋ = n₊ or |n₋ − n₊| > 1"
            )));
        }
    }
    let c = c.unwrap_or_else(|| default_common_split(samples));
    let parts: Vec<Result<SampleBreakdown>> = samples
        .par_iter()
        .map(|(d, w)| sample_breakdown(d, *w, c))
        .collect();
    let parts: Vec<SampleBreakdown> = parts.into_iter().collect::<Result<_>>()?;
    let mut c_log = 0.0;
    let mut c_k = 0.0;
    let mut c_k_error = 0.0;
    for s in &parts {
        c_log += s.weight * s.c_log;
        c_k += s.weight * s.c_k;
        c_k_error += s.weight.abs() * s.log_det_error;
    }
    Ok(TorsionAsymptotics {
        coefficients: TorsionCoefficients { c_log, c_k },
        c_k_error,
        split: c,
        samples: parts,
    })
}

const HX_SERIES_TOL: f64 = 1e-13;

fn sample_breakdown(data: &CurvatureData, weight: f64, c: f64) -> Result<SampleBreakdown> {
    let n = data.n();
    let norm = (2.0 * PI).powi(-(n as i32) - 1);
    let problem = HxProblem::new(data.clone(), c)?;
    let f_n1 = f_n1_integral(data, c)?;
    let h0 = hx_at_zero(&problem)?;
    let h_prime0 = hx_prime_zero(&problem, HX_SERIES_TOL)?;
    let log_two_pi_term =
        0.5 * (2.0 * PI).ln() * norm * signed_interval_sum(data.pencil(), c, |q| 2.0 * q as f64 - n as f64);
    let log_det = |eta: f64| -> f64 {
        let m = data.m(eta);
        match signature_split(&m, Some(0.0)) {
            Ok(s) => s.values_minus.iter().chain(&s.values_plus).product::<f64>()
                * (s.log_det_plus() - s.log_abs_det_minus()),
            // det M vanishes at a root and dominates the logarithm.
            Err(_) => 0.0,
        }
    };
    let opts = QuadOptions {
        rel_tol: 1e-11,
        abs_tol: 1e-14,
        ..QuadOptions::default()
    };
    let integral = integrate_line(&log_det, c, &data.pencil().roots, 1.0, LineDomain::Inner, &opts)?;
    let log_det_term = 0.5 * norm * integral.value;
    let log_det_error = 0.5 * norm * integral.error;
    Ok(SampleBreakdown {
        weight,
        f_n1,
        h0,
        h_prime0,
        log_two_pi_term,
        log_det_term,
        log_det_error,
        c_log: f_n1 + h0,
        c_k: -h_prime0 + log_two_pi_term + log_det_term,
    })
}
