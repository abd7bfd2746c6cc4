mod common;

use std::f64::consts::{E, PI};

use common::{dense_integral, diag_data, real_data, rel_err};
use crtorsion::density::CurvatureData;
use crtorsion::hx::{hx_oracle, HxProblem};
use crtorsion::torsion::{
    theta_prime_zero_finite, theta_prime_zero_trace, torsion_asymptotics, GradedSpectrum,
};
use crtorsion::Error;
use proptest::prelude::*;

fn spectrum(degrees: Vec<Vec<(f64, usize)>>) -> GradedSpectrum {
    GradedSpectrum::new(degrees).unwrap()
}

fn trace_route(s: &GradedSpectrum) -> f64 {
    let (f, series) = s.trace(8).unwrap();
    theta_prime_zero_trace(&f, &series).unwrap()
}

fn split_sample() -> CurvatureData {
    diag_data(&[1.0, 1.0], &[1.0, -1.0])
}

fn definite_sample() -> CurvatureData {
    real_data(&[vec![0.5, 0.2], vec![0.2, -0.3]], &[vec![1.0, 0.1], vec![0.1, 0.8]])
}

fn norm(n: usize) -> f64 {
    (2.0 * PI).powi(-(n as i32) - 1)
}

/// Per-η pieces written out from the eigenvalues of A − 2ηB.
fn pointwise(data: &CurvatureData, eta: f64) -> (f64, usize, f64) {
    let mu = data.mu(eta);
    let det: f64 = mu.iter().product();
    let q = mu.iter().filter(|&&m| m < 0.0).count();
    let log_det: f64 = mu.iter().map(|&m| if m < 0.0 { -m.abs().ln() } else { m.ln() }).sum();
    (det, q, log_det)
}

#[test]
fn finite_spectrum_examples() {
    assert!((theta_prime_zero_finite(&spectrum(vec![vec![], vec![(E, 1)]])) + 1.0).abs() < 1e-15);
    let v = theta_prime_zero_finite(&spectrum(vec![vec![], vec![], vec![(2.0, 1)]]));
    assert!((v - 2.0 * 2f64.ln()).abs() < 1e-15);
    let lambda: f64 = 3.7;
    let s = spectrum(vec![vec![], vec![(lambda, 1)], vec![], vec![(lambda, 1)]]);
    assert!((theta_prime_zero_finite(&s) + 4.0 * lambda.ln()).abs() < 1e-14);
}

#[test]
fn trace_route_examples() {
    let s = spectrum(vec![vec![], vec![(2.0, 1)]]);
    assert!((trace_route(&s) + 2f64.ln()).abs() < 1e-7);
    assert_eq!(theta_prime_zero_finite(&spectrum(vec![vec![]])), 0.0);
    assert!(trace_route(&spectrum(vec![vec![]])).abs() < 1e-12);
    assert!(trace_route(&spectrum(vec![vec![], vec![(1.0, 1)]])).abs() < 1e-9);
}

#[test]
fn nonpositive_eigenvalues_are_rejected() {
    assert!(GradedSpectrum::new(vec![vec![(0.0, 1)]]).is_err());
    assert!(GradedSpectrum::new(vec![vec![], vec![(-1.0, 2)]]).is_err());
}

#[test]
fn coefficients_decompose_into_oracle_checked_parts() {
    let data = split_sample();
    let c = 2.0;
    let r = torsion_asymptotics(&[(data.clone(), 1.0)], Some(c)).unwrap();
    let s = &r.samples[0];
    assert!(r.coefficients.c_log.is_finite() && r.coefficients.c_k.is_finite());

    let roots = &data.pencil().roots;
    let strip = dense_integral(
        |eta| {
            let (det, q, _) = pointwise(&data, eta);
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            norm(2) * (det - sign * q as f64 * det.abs())
        },
        -c,
        c,
        roots,
        200,
    );
    assert!(rel_err(s.f_n1, strip) < 1e-10);

    let oracle = hx_oracle(&HxProblem::new(data.clone(), c).unwrap()).unwrap();
    assert!(rel_err(s.h0, oracle.h0) < 1e-5);
    assert!(rel_err(s.h_prime0, oracle.h_prime0.value) < 1e-5);
    let c_log = strip + oracle.h0;
    assert!((r.coefficients.c_log - c_log).abs() < 1e-5 * strip.abs(), "{} vs {c_log} ({strip} + {})", r.coefficients.c_log, oracle.h0);

    let log_two_pi = dense_integral(
        |eta| {
            let (det, q, _) = pointwise(&data, eta);
            0.5 * (2.0 * PI).ln() * norm(2) * det * (2.0 * q as f64 - 2.0)
        },
        -c,
        c,
        roots,
        200,
    );
    assert!((s.log_two_pi_term - log_two_pi).abs() < 1e-10);
    let log_det = dense_integral(
        |eta| {
            let (det, _, ld) = pointwise(&data, eta);
            0.5 * norm(2) * det * ld
        },
        -c,
        c,
        roots,
        400,
    );
    assert!((s.log_det_term - log_det).abs() < 1e-7, "{} vs {log_det}", s.log_det_term);
    let c_k = -oracle.h_prime0.value + log_two_pi + log_det;
    assert!((r.coefficients.c_k - c_k).abs() < 1e-5 * c_k.abs().max(1e-3));
}

#[test]
fn definite_levi_form_satisfies_the_condition() {
    let r = torsion_asymptotics(&[(definite_sample(), 1.0)], None).unwrap();
    assert!(r.coefficients.c_log.is_finite() && r.coefficients.c_k.is_finite());
}

#[test]
fn signature_difference_one_is_rejected() {
    let r = torsion_asymptotics(&[(diag_data(&[2.0], &[1.0]), 1.0)], Some(2.0));
    assert!(matches!(r, Err(Error::Precondition(_))));
    let mixed = real_data(
        &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, -1.0]],
    );
    assert!(matches!(torsion_asymptotics(&[(mixed, 1.0)], None), Err(Error::Precondition(_))));
}

#[test]
fn split_below_roots_is_rejected() {
    let r = torsion_asymptotics(&[(split_sample(), 1.0)], Some(0.3));
    assert!(matches!(r, Err(Error::ConvergenceDomain { .. })));
}

#[test]
fn log_coefficient_is_additive_and_linear() {
    let a = split_sample();
    let b = definite_sample();
    let c = 3.0;
    let single = |d: &CurvatureData| torsion_asymptotics(&[(d.clone(), 1.0)], Some(c)).unwrap().coefficients;
    let (ca, cb) = (single(&a), single(&b));
    let both = torsion_asymptotics(&[(a, 0.25), (b, 1.5)], Some(c)).unwrap();
    let want = 0.25 * ca.c_log + 1.5 * cb.c_log;
    assert!((both.coefficients.c_log - want).abs() < 1e-14 * want.abs().max(1.0));
    let sum: f64 = both.samples.iter().map(|s| s.weight * s.c_log).sum();
    assert_eq!(both.coefficients.c_log, sum);
    let want_k = 0.25 * ca.c_k + 1.5 * cb.c_k;
    assert!((both.coefficients.c_k - want_k).abs() < 1e-14 * want_k.abs().max(1.0));
}

fn arb_spectrum() -> impl Strategy<Value = GradedSpectrum> {
    (1usize..=4).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec((0.1f64..20.0, 1usize..4), 0..5), n + 1)
            .prop_map(GradedSpectrum::new)
            .prop_map(Result::unwrap)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_route_matches_finite_formula(s in arb_spectrum()) {
        let direct = theta_prime_zero_finite(&s);
        prop_assert!((trace_route(&s) - direct).abs() < 1e-7 * direct.abs().max(1.0));
    }

    #[test]
    fn scaling_shifts_by_weighted_count(s in arb_spectrum(), lambda in 0.05f64..20.0) {
        let shift = theta_prime_zero_finite(&s.scaled(lambda).unwrap()) - theta_prime_zero_finite(&s);
        let want = s.weighted_count() * lambda.ln();
        prop_assert!((shift - want).abs() < 1e-12 * want.abs().max(1.0) * 10.0);
    }

    #[test]
    fn degree_complement_identity(s in arb_spectrum()) {
        let n = s.n();
        let swapped = GradedSpectrum::new((0..=n).map(|q| s.degree(n - q).to_vec()).collect()).unwrap();
        let logs: Vec<f64> = (0..=n)
            .map(|q| s.degree(q).iter().map(|&(l, m)| m as f64 * l.ln()).sum())
            .collect();
        let want: f64 = (0..=n)
            .map(|q| {
                let p = n - q;
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                sign * p as f64 * logs[q]
            })
            .sum();
        prop_assert!((theta_prime_zero_finite(&swapped) - want).abs() < 1e-12 * want.abs().max(1.0));
    }
}
