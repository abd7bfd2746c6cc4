//! Seeded self-checks: identities, Mellin engine, H-function values,
//! kernel equivalences and torsion consistency. Each family returns a list
//! of [`Check`]s; suites bundle families.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::ChaCha8Rng;
use rand::{RngExt, SeedableRng};
use serde::Serialize;

use crate::density::{density_t_routes, f_coefficients, str_n_exp_routes, supertrace_integrand_mu, CurvatureData};
use crate::error::{Error, Result};
use crate::hermitian::{CMatrix, HermitianMatrix};
use crate::hx::{hat_h_zero, hx_at_zero, hx_oracle, hx_prime_zero_report, HxProblem};
use crate::kernels::{landau_trace_density, mehler_kernel, szego_density, HeisenbergModel};
use crate::mellin::{
    mellin_at_zero, mellin_deriv_zero, AsymptoticSeries, DecayingTrace, ZETA_AT_ZERO, ZETA_PRIME_AT_ZERO,
};
use crate::quad::gauss_hermite;
use crate::series::{bernoulli, fit_power_series};
use crate::torsion::{theta_prime_zero_finite, theta_prime_zero_trace, torsion_asymptotics, GradedSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Mellin,
    Hx,
    Kernels,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Self::Identities),
            "mellin" => Ok(Self::Mellin),
            "hx" => Ok(Self::Hx),
            "kernels" => Ok(Self::Kernels),
            "all" => Ok(Self::All),
            other => Err(Error::Validation(format!(
                "unknown suite '{other}' (expected identities, mellin, hx, kernels or all)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Identities => "identities",
            Self::Mellin => "mellin",
            Self::Hx => "hx",
            Self::Kernels => "kernels",
            Self::All => "all",
        };
        f.write_str(s)
    }
}

/// One comparison: `value` against `reference` with error measure `error`
/// (relative or absolute, as the family documents) and its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub family: &'static str,
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn new(family: &'static str, name: impl Into<String>, value: f64, reference: f64, error: f64, tolerance: f64) -> Self {
        Self {
            family,
            name: name.into(),
            value,
            reference,
            error,
            tolerance,
            passed: error <= tolerance,
            detail: None,
        }
    }

    fn failed(family: &'static str, name: impl Into<String>, err: &Error) -> Self {
        Self {
            family,
            name: name.into(),
            value: f64::NAN,
            reference: f64::NAN,
            error: f64::INFINITY,
            tolerance: 0.0,
            passed: false,
            detail: Some(err.to_string()),
        }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One line per family: passed/total and the worst error-to-tolerance ratio.
    pub fn summary(&self) -> String {
        let mut families: Vec<&'static str> = Vec::new();
        for c in &self.checks {
            if !families.contains(&c.family) {
                families.push(c.family);
            }
        }
        let mut out = String::new();
        for fam in families {
            let cs: Vec<&Check> = self.checks.iter().filter(|c| c.family == fam).collect();
            let ok = cs.iter().filter(|c| c.passed).count();
            let worst = cs
                .iter()
                .map(|c| match (c.error, c.tolerance) {
                    (e, _) if e == 0.0 => 0.0,
                    (e, tol) if tol > 0.0 => e / tol,
                    _ => f64::INFINITY,
                })
                .fold(0.0, f64::max);
            out.push_str(&format!(
                "{} {fam}: {ok}/{} (worst error/tolerance {worst:.2e})\n",
                if ok == cs.len() { "PASS" } else { "FAIL" },
                cs.len()
            ));
        }
        out
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let want = |s: Suite| suite == s || suite == Suite::All;
    if want(Suite::Identities) {
        checks.extend(supertrace_identity(&mut rng, 200));
        checks.extend(combinatorial_identity(&mut rng, 200));
        checks.extend(expansion_vanishing());
    }
    if want(Suite::Mellin) {
        checks.extend(mellin_engine());
        checks.extend(spectrum_round_trip(&mut rng, 50));
    }
    if want(Suite::Hx) {
        let (zero, prime) = hx_values(&mut rng, 20);
        checks.extend(zero);
        checks.extend(prime);
        checks.extend(torsion_consistency());
    }
    if want(Suite::Kernels) {
        checks.extend(mehler_landau(&mut rng, 50));
        checks.extend(szego_idempotency());
    }
    VerifyReport { suite, seed, checks }
}

/// Random Hermitian n×n matrix with entries in the unit box.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    HermitianMatrix::new(m).expect("symmetrized by construction")
}

/// U·diag(b)·U* with |b_j| ∈ [0.5, 2], random signs and a random unitary U.
pub fn random_invertible_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let q = g.qr().q();
    let d: Vec<f64> = (0..n)
        .map(|_| {
            let m = rng.random_range(0.5..2.0);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    let mut scaled = q.clone();
    for (k, dk) in d.iter().enumerate() {
        scaled.column_mut(k).scale_mut(*dk);
    }
    HermitianMatrix::new(&scaled * q.adjoint()).expect("Hermitian by construction")
}

pub fn random_curvature_data(rng: &mut ChaCha8Rng, n: usize) -> CurvatureData {
    loop {
        let a = random_hermitian(rng, n);
        let b = random_invertible_hermitian(rng, n);
        if let Ok(d) = CurvatureData::new(a, b) {
            return d;
        }
    }
}

/// density_t by the eigenvalue product and by LU determinant times resolvent
/// trace; the error is relative to (2π)^{−n−1}|det M|·Σ|1/(1 − e^{tμ})|.
pub fn supertrace_identity(rng: &mut ChaCha8Rng, count: usize) -> Vec<Check> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.random_range(1..=4);
        let data = random_curvature_data(rng, n);
        let eta = rng.random_range(-5.0..5.0);
        let t = rng.random_range(0.05..5.0);
        if data.pencil().roots.iter().any(|r| (r - eta).abs() < 1e-3) {
            continue;
        }
        let name = format!("n={n} eta={eta:.4} t={t:.4}");
        match density_t_routes(&data, eta, t) {
            Ok((product, resolvent)) => {
                let mu = data.mu(eta);
                let scale = (2.0 * PI).powi(-(n as i32) - 1)
                    * mu.iter().product::<f64>().abs()
                    * mu.iter().map(|&m| crate::series::inv_one_minus_exp(t * m).abs()).sum::<f64>();
                out.push(Check::new(
                    "supertrace identity",
                    name,
                    product,
                    resolvent,
                    (product - resolvent).abs() / scale,
                    1e-10,
                ));
            }
            Err(e) => out.push(Check::failed("supertrace identity", name, &e)),
        }
    }
    out
}

/// Σ_q (−1)^q q e_q(e^{−tμ}) against (−1)ⁿe^{−tΣμ}Σ_jΠ_{i≠j}(1 − e^{tμ_i});
/// the error is relative to Σ_q q e_q(e^{−tμ}).
pub fn combinatorial_identity(rng: &mut ChaCha8Rng, count: usize) -> Vec<Check> {
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=5);
            let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let t = rng.random_range(0.05..5.0);
            let name = format!("n={n} t={t:.4}");
            match str_n_exp_routes(&mu, t) {
                Ok((poly, product)) => {
                    let x: Vec<f64> = mu.iter().map(|&m| (-t * m).exp()).collect();
                    let scale: f64 = (0..n)
                        .map(|j| x[j] * (0..n).filter(|&i| i != j).map(|i| 1.0 + x[i]).product::<f64>())
                        .sum();
                    Check::new("combinatorial identity", name, poly, product, (poly - product).abs() / scale, 1e-11)
                }
                Err(e) => Check::failed("combinatorial identity", name, &e),
            }
        })
        .collect()
}

/// Fits t^{n+1}·(supertrace integrand) on log-spaced small t and compares
/// the coefficients with the closed expansion.
pub fn expansion_vanishing() -> Vec<Check> {
    let cases: [(Vec<Vec<f64>>, Vec<Vec<f64>>, f64); 3] = [
        (vec![vec![2.0]], vec![vec![1.0]], 0.3),
        (
            vec![vec![1.0, 0.3], vec![0.3, -0.5]],
            vec![vec![1.0, 0.0], vec![0.0, -1.0]],
            0.2,
        ),
        (
            vec![vec![0.5, 0.1, 0.0], vec![0.1, -0.4, 0.2], vec![0.0, 0.2, 0.9]],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, -1.5, 0.0], vec![0.0, 0.0, 0.7]],
            -0.4,
        ),
    ];
    let mut out = Vec::new();
    for (a, b, eta) in cases {
        let n = a.len();
        let data = CurvatureData::new(
            HermitianMatrix::from_real_rows(&a).expect("valid rows"),
            HermitianMatrix::from_real_rows(&b).expect("valid rows"),
        )
        .expect("valid data");
        let mu = data.mu(eta);
        let t_max = 1.0 / mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ts: Vec<f64> = (0..60).map(|i| t_max * 1e-3f64.powf(1.0 - i as f64 / 59.0)).collect();
        let ys: Vec<f64> = ts
            .iter()
            .map(|&t| t.powi(n as i32 + 1) * supertrace_integrand_mu(&mu, t))
            .collect();
        let fit = match fit_power_series(&ts, &ys, 14, t_max) {
            Ok(f) => f,
            Err(e) => {
                out.push(Check::failed("expansion vanishing", format!("n={n}"), &e));
                continue;
            }
        };
        for (j, &f) in fit.iter().enumerate().take(n) {
            out.push(Check::new("expansion vanishing", format!("n={n} F_{j}"), f, 0.0, f.abs(), 1e-8));
        }
        let closed = f_coefficients(&data, eta, n + 1).expect("off root").coeffs[n + 1];
        out.push(Check::new(
            "expansion vanishing",
            format!("n={n} F_{}", n + 1),
            fit[n + 1],
            closed,
            (fit[n + 1] - closed).abs(),
            1e-6,
        ));
    }
    out
}

fn exp_trace(lambda: f64) -> Result<(DecayingTrace<'static>, AsymptoticSeries)> {
    let mut coeffs = vec![1.0; 30];
    for j in 1..coeffs.len() {
        coeffs[j] = coeffs[j - 1] * -lambda / j as f64;
    }
    Ok((
        DecayingTrace::new(move |t| (-lambda * t).exp(), lambda, 1.0)?,
        AsymptoticSeries::new(0, coeffs)?,
    ))
}

pub fn mellin_engine() -> Vec<Check> {
    const FAM: &str = "mellin engine";
    let mut out = Vec::new();
    for lambda in [0.5, 1.0, 2.0, 10.0] {
        let name = format!("M[exp(-{lambda} t)]'(0)");
        match exp_trace(lambda).and_then(|(f, s)| mellin_deriv_zero(&f, &s)) {
            Ok(d) => out.push(Check::new(FAM, name, d.value, -lambda.ln(), (d.value + lambda.ln()).abs(), 1e-8)),
            Err(e) => out.push(Check::failed(FAM, name, &e)),
        }
    }
    match exp_trace(1.0).and_then(|(f, s)| mellin_at_zero(&f, &s)) {
        Ok(v) => out.push(Check::new(FAM, "M[exp(-t)](0)", v, 1.0, (v - 1.0).abs(), 0.0)),
        Err(e) => out.push(Check::failed(FAM, "M[exp(-t)](0)", &e)),
    }
    let shifted = || -> Result<(DecayingTrace<'static>, AsymptoticSeries)> {
        let mut coeffs = vec![1.0; 30];
        for j in 1..coeffs.len() {
            coeffs[j] = -coeffs[j - 1] / j as f64;
        }
        Ok((
            DecayingTrace::new(|t| (-t).exp() / t, 1.0, 1.0)?,
            AsymptoticSeries::new(1, coeffs)?,
        ))
    };
    match shifted().and_then(|(f, s)| Ok((mellin_at_zero(&f, &s)?, mellin_deriv_zero(&f, &s)?))) {
        Ok((v, d)) => {
            out.push(Check::new(FAM, "M[exp(-t)/t](0)", v, -1.0, (v + 1.0).abs(), 1e-8));
            out.push(Check::new(FAM, "M[exp(-t)/t]'(0)", d.value, -1.0, (d.value + 1.0).abs(), 1e-8));
        }
        Err(e) => out.push(Check::failed(FAM, "M[exp(-t)/t]", &e)),
    }
    // ζ(z) = M[1/(e^t − 1)](z), whose series is Σ B_k t^{k−1}/k!.
    let zeta_trace = || -> Result<(DecayingTrace<'static>, AsymptoticSeries)> {
        let b = bernoulli(24);
        let mut fact = 1.0;
        let coeffs: Vec<f64> = b
            .iter()
            .enumerate()
            .map(|(k, bk)| {
                if k > 0 {
                    fact *= k as f64;
                }
                bk / fact
            })
            .collect();
        Ok((
            DecayingTrace::new(|t| 1.0 / t.exp_m1(), 1.0, 2.0)?,
            AsymptoticSeries::new(1, coeffs)?,
        ))
    };
    match zeta_trace().and_then(|(f, s)| Ok((mellin_at_zero(&f, &s)?, mellin_deriv_zero(&f, &s)?))) {
        Ok((v, d)) => {
            out.push(Check::new(FAM, "zeta(0)", v, -0.5, (v + 0.5).abs(), 1e-12));
            let pinned = -0.5 * (2.0 * PI).ln();
            out.push(Check::new(FAM, "zeta'(0)", d.value, pinned, (d.value - pinned).abs(), 1e-8));
        }
        Err(e) => out.push(Check::failed(FAM, "zeta", &e)),
    }
    out.push(Check::new(FAM, "pinned zeta(0)", ZETA_AT_ZERO, -0.5, (ZETA_AT_ZERO + 0.5).abs(), 0.0));
    let pinned = -0.5 * (2.0 * PI).ln();
    out.push(Check::new(
        FAM,
        "pinned zeta'(0)",
        ZETA_PRIME_AT_ZERO,
        pinned,
        (ZETA_PRIME_AT_ZERO - pinned).abs(),
        1e-15,
    ));
    out
}

pub fn random_graded_spectrum(rng: &mut ChaCha8Rng) -> GradedSpectrum {
    let n = rng.random_range(1..=4);
    let degrees = (0..=n)
        .map(|_| {
            let k = rng.random_range(0..=4);
            (0..k)
                .map(|_| (rng.random_range(0.2..10.0), rng.random_range(1..=3)))
                .collect()
        })
        .collect();
    GradedSpectrum::new(degrees).expect("positive eigenvalues")
}

/// θ′(0) of random finite spectra by direct sum and through the Mellin
/// engine, plus the scaling law under λ ↦ sλ.
pub fn spectrum_round_trip(rng: &mut ChaCha8Rng, count: usize) -> Vec<Check> {
    let mut out = Vec::new();
    for i in 0..count {
        let s = random_graded_spectrum(rng);
        let direct = theta_prime_zero_finite(&s);
        let via = s.trace(30).and_then(|(f, ser)| theta_prime_zero_trace(&f, &ser));
        match via {
            Ok(v) => out.push(Check::new("spectrum round trip", format!("spectrum {i}"), v, direct, (v - direct).abs(), 1e-7)),
            Err(e) => out.push(Check::failed("spectrum round trip", format!("spectrum {i}"), &e)),
        }
        let lambda = rng.random_range(0.1..10.0);
        let scaled = s.scaled(lambda).expect("positive scale");
        let shift = theta_prime_zero_finite(&scaled) - direct;
        let law = s.weighted_count() * lambda.ln();
        out.push(Check::new(
            "scaling law",
            format!("spectrum {i} scale {lambda:.4}"),
            shift,
            law,
            (shift - law).abs(),
            1e-12 * theta_prime_zero_finite(&scaled).abs().max(1.0),
        ));
    }
    out
}

/// The two worked samples followed by `random` random ones.
pub fn hx_samples(rng: &mut ChaCha8Rng, random: usize) -> Vec<HxProblem> {
    let worked = [
        (vec![vec![2.0]], vec![vec![1.0]]),
        (
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, -1.0]],
        ),
    ];
    let mut out: Vec<HxProblem> = worked
        .iter()
        .map(|(a, b)| {
            let d = CurvatureData::new(
                HermitianMatrix::from_real_rows(a).expect("valid rows"),
                HermitianMatrix::from_real_rows(b).expect("valid rows"),
            )
            .expect("valid data");
            HxProblem::new(d, 2.0).expect("C = 2 exceeds the split bound")
        })
        .collect();
    for _ in 0..random {
        let n = rng.random_range(1..=3);
        out.push(HxProblem::with_default_split(random_curvature_data(rng, n)));
    }
    out
}

fn sample_name(i: usize, p: &HxProblem) -> String {
    match i {
        0 => "worked n=1".into(),
        1 => "worked n=2".into(),
        _ => format!("random {} n={} C={:.4}", i - 1, p.data().n(), p.c()),
    }
}

/// H(0) and H′(0) from the closed forms against the Taylor-expansion
/// oracle. The printed coefficient set is reported in `detail`.
pub fn hx_values(rng: &mut ChaCha8Rng, random: usize) -> (Vec<Check>, Vec<Check>) {
    let mut zero = Vec::new();
    let mut prime = Vec::new();
    let samples = hx_samples(rng, random);
    let expected_hat = [10.0, 4.0 / 3.0];
    for (i, p) in samples.iter().enumerate() {
        let name = sample_name(i, p);
        if let Some(&e) = expected_hat.get(i) {
            match hat_h_zero(p) {
                Ok(v) => zero.push(Check::new("H(0)", format!("{name} hat"), v, e, rel(v, e), 1e-12)),
                Err(err) => zero.push(Check::failed("H(0)", format!("{name} hat"), &err)),
            }
        }
        let oracle = match hx_oracle(p) {
            Ok(o) => o,
            Err(err) => {
                zero.push(Check::failed("H(0)", name.clone(), &err));
                prime.push(Check::failed("H'(0)", name, &err));
                continue;
            }
        };
        match hx_at_zero(p) {
            Ok(v) => zero.push(Check::new("H(0)", name.clone(), v, oracle.h0, rel(v, oracle.h0), 1e-6)),
            Err(err) => zero.push(Check::failed("H(0)", name.clone(), &err)),
        }
        match hx_prime_zero_report(p, 1e-13) {
            Ok(r) => {
                let o = oracle.h_prime0.value;
                let detail = format!(
                    "printed coefficients give H'(0) = {:.12e} (rel diff {:.2e}); max coefficient gap {:.2e}",
                    r.printed,
                    rel(r.printed, o),
                    r.max_coefficient_gap()
                );
                prime.push(Check::new("H'(0)", name, r.exact, o, rel(r.exact, o), 1e-5).with_detail(detail));
            }
            Err(err) => prime.push(Check::failed("H'(0)", name, &err)),
        }
    }
    (zero, prime)
}

fn two_sample_torsion() -> Vec<(CurvatureData, f64)> {
    let build = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        CurvatureData::new(
            HermitianMatrix::from_real_rows(a).expect("valid rows"),
            HermitianMatrix::from_real_rows(b).expect("valid rows"),
        )
        .expect("valid data")
    };
    vec![
        (
            build(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![1.0, 0.0], vec![0.0, -1.0]]),
            0.6,
        ),
        (
            build(&[vec![0.5, 0.2], vec![0.2, -0.3]], &[vec![1.2, 0.1], vec![0.1, -0.8]]),
            0.4,
        ),
    ]
}

/// c_log = Σ w·(∫_{|η|≤C}F_{n+1} + H(0)) on n = 2 samples, with both addends
/// checked against independent evaluations.
pub fn torsion_consistency() -> Vec<Check> {
    const FAM: &str = "torsion consistency";
    let samples = two_sample_torsion();
    let r = match torsion_asymptotics(&samples, None) {
        Ok(r) => r,
        Err(e) => return vec![Check::failed(FAM, "torsion_asymptotics", &e)],
    };
    let mut out = Vec::new();
    let mut assembled = 0.0;
    for (i, (s, (data, w))) in r.samples.iter().zip(&samples).enumerate() {
        assembled += w * (s.f_n1 + s.h0);
        let f_dense = dense_f_n1(data, r.split);
        out.push(Check::new(FAM, format!("sample {i} strip F_(n+1)"), s.f_n1, f_dense, rel(s.f_n1, f_dense), 1e-5));
        match HxProblem::new(data.clone(), r.split).and_then(|p| hx_oracle(&p)) {
            Ok(o) => out.push(Check::new(FAM, format!("sample {i} H(0)"), s.h0, o.h0, rel(s.h0, o.h0), 1e-5)),
            Err(e) => out.push(Check::failed(FAM, format!("sample {i} H(0)"), &e)),
        }
    }
    let c_log = r.coefficients.c_log;
    out.push(Check::new(FAM, "c_log additivity", c_log, assembled, (c_log - assembled).abs(), 1e-12 * c_log.abs().max(1.0)));
    let rejected = CurvatureData::new(
        HermitianMatrix::from_real_rows(&[vec![1.0]]).expect("valid rows"),
        HermitianMatrix::identity(1).expect("valid identity"),
    )
    .map(|d| torsion_asymptotics(&[(d, 1.0)], None));
    let ok = matches!(rejected, Ok(Err(Error::Precondition(_))));
    out.push(Check::new(FAM, "signature (0,1) rejected", ok as u8 as f64, 1.0, if ok { 0.0 } else { 1.0 }, 0.0));
    out
}

/// ∫_{|η|≤C} F_{n+1,η} dη by 400-node Gauss–Legendre on each root-delimited
/// piece, using the pointwise coefficient.
fn dense_f_n1(data: &CurvatureData, c: f64) -> f64 {
    let (x, w) = crate::quad::gauss_legendre(400);
    let mut cuts = vec![-c];
    cuts.extend(data.pencil().roots_in(-c, c));
    cuts.push(c);
    let n = data.n();
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for (xi, wi) in x.iter().zip(&w) {
            let eta = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            let f = f_coefficients(data, eta, n + 1).map(|e| e.coeffs[n + 1]).unwrap_or(0.0);
            total += 0.5 * (b - a) * wi * f;
        }
    }
    total
}

/// Diagonal (0,q)-traces of the Mehler kernel against truncated Landau sums
/// on random positive-definite weights; error is the excess over the tail bound.
pub fn mehler_landau(rng: &mut ChaCha8Rng, count: usize) -> Vec<Check> {
    const FAM: &str = "mehler/landau";
    let mut out = Vec::new();
    for i in 0..count {
        let n = rng.random_range(1..=3);
        let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let hess = HermitianMatrix::new(&g * g.adjoint() + CMatrix::identity(n, n).scale(0.3))
            .expect("Hermitian by construction");
        let t = rng.random_range(0.2..3.0);
        let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let model = match HeisenbergModel::new(lambda, 0.0, hess.clone()) {
            Ok(m) => m,
            Err(e) => {
                out.push(Check::failed(FAM, format!("sample {i}"), &e));
                continue;
            }
        };
        let mu = crate::hermitian::eigh(&hess).values;
        let origin = vec![0.0; 2 * n];
        let k = match mehler_kernel(&model, 0.0, &origin, &origin, t) {
            Ok(k) => k,
            Err(e) => {
                out.push(Check::failed(FAM, format!("sample {i}"), &e));
                continue;
            }
        };
        let min_mu = mu.iter().copied().fold(f64::INFINITY, f64::min);
        let k_max = ((40.0 / (t * min_mu)).ceil() as usize).clamp(10, 4000);
        for q in 0..=n {
            let name = format!("sample {i} n={n} q={q} t={t:.3}");
            match landau_trace_density(&mu, q, t, k_max) {
                Ok((landau, bound)) => {
                    let m = k.degree_trace(q);
                    let gap = (m.re - landau).abs() + m.im.abs();
                    let tol = bound.tail_estimate + 1e-12 * landau.abs();
                    out.push(Check::new(FAM, name, m.re, landau, gap, tol));
                }
                Err(e) => out.push(Check::failed(FAM, name, &e)),
            }
        }
    }
    out
}

/// 2π·2ⁿ∫K_η(z, v)K_η(v, w)dλ(v) against K_η(z, w) at n = 1 on a 60×60
/// Gauss–Hermite grid, in the Frobenius norm relative to K_η(z, w).
pub fn szego_idempotency() -> Vec<Check> {
    const FAM: &str = "szego idempotency";
    let (nodes, weights) = gauss_hermite(60);
    let cases = [
        (vec![1.0], 0.5, 0usize, -0.7, [0.3, -0.2], [-0.1, 0.4]),
        (vec![1.0], 0.5, 1, 1.1, [0.5, 0.1], [0.2, -0.6]),
        (vec![-2.0], 0.3, 0, 0.8, [-0.4, 0.2], [0.1, 0.1]),
    ];
    let mut out = Vec::new();
    for (lambda, hess, q, eta, z, w) in cases {
        let name = format!("lambda={} hess={hess} q={q} eta={eta}", lambda[0]);
        let model = match HermitianMatrix::from_real_rows(&[vec![hess]])
            .and_then(|h| HeisenbergModel::new(lambda.clone(), 0.4, h))
        {
            Ok(m) => m,
            Err(e) => {
                out.push(Check::failed(FAM, name, &e));
                continue;
            }
        };
        let zp = [z[0], z[1], 0.0];
        let wp = [w[0], w[1], 0.0];
        let result = (|| -> Result<(f64, f64)> {
            let target = szego_density(&model, q, eta, &zp, &wp)?;
            if !target.in_support {
                return Err(Error::Validation(format!("η = {eta} is outside I_{q}")));
            }
            let target = target.value.matrix();
            let scale = (2.0 / model.fock_weight(eta).matrix.norm()).sqrt();
            let mut sum = CMatrix::zeros(target.nrows(), target.ncols());
            for (xi, wxi) in nodes.iter().zip(&weights) {
                for (yi, wyi) in nodes.iter().zip(&weights) {
                    let v = [scale * xi, scale * yi, 0.0];
                    let weight = scale * scale * wxi * wyi * (xi * xi + yi * yi).exp();
                    let a = szego_density(&model, q, eta, &zp, &v)?.value.matrix();
                    let b = szego_density(&model, q, eta, &v, &wp)?.value.matrix();
                    sum += (a * b).scale(weight);
                }
            }
            let got = sum.scale(4.0 * PI);
            Ok(((got - &target).norm() / target.norm(), target.norm()))
        })();
        match result {
            Ok((err, norm)) => out.push(Check::new(FAM, name, err, 0.0, err, 1e-3).with_detail(format!("|K| = {norm:.6e}"))),
            Err(e) => out.push(Check::failed(FAM, name, &e)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert!(matches!("bogus".parse::<Suite>(), Err(Error::Validation(_))));
        assert_eq!("hx".parse::<Suite>().unwrap(), Suite::Hx);
    }

    #[test]
    fn deterministic() {
        let a = run_suite(Suite::Identities, 7);
        let b = run_suite(Suite::Identities, 7);
        assert_eq!(a, b);
        assert!(a.passed(), "{}", a.summary());
    }
}
