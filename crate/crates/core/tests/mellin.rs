use std::f64::consts::PI;

use crtorsion::mellin::{
    mellin_at_zero, mellin_deriv_zero, mellin_value, zeta, zeta_eval, AsymptoticSeries, DecayingTrace,
    GAMMA_PRIME_ONE, ZETA_AT_ZERO, ZETA_PRIME_AT_ZERO,
};
use crtorsion::Error;
use num_complex::Complex64;
use proptest::prelude::*;

/// Taylor coefficients of c·t^{−m}e^{−λt}, m + 6 terms.
fn exp_series(c: f64, lambda: f64, m: u32) -> AsymptoticSeries {
    let mut coeffs = Vec::new();
    let mut term = c;
    for j in 0..(m as usize + 6) {
        if j > 0 {
            term *= -lambda / j as f64;
        }
        coeffs.push(term);
    }
    AsymptoticSeries::new(m, coeffs).unwrap()
}

fn exp_trace<'a>(lambda: f64) -> DecayingTrace<'a> {
    DecayingTrace::new(move |t| (-lambda * t).exp(), lambda, 1.0).unwrap()
}

fn z(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn exponential_has_unit_transform() {
    let f = exp_trace(1.0);
    let s = exp_series(1.0, 1.0, 0);
    for x in [2.0, 0.5, -1.3] {
        let v = mellin_value(&f, &s, z(x)).unwrap();
        assert!((v.re - 1.0).abs() < 1e-9 && v.im.abs() < 1e-12, "z={x}: {v}");
    }
}

#[test]
fn scaling_law() {
    let f = exp_trace(2.0);
    let v = mellin_value(&f, &exp_series(1.0, 2.0, 0), z(3.0)).unwrap();
    assert!((v.re - 0.125).abs() < 1e-10);
}

#[test]
fn laurent_leading_term() {
    let f = DecayingTrace::new(|t| (-t).exp() / t, 1.0, 1.0).unwrap();
    let s = exp_series(1.0, 1.0, 1);
    let v = mellin_value(&f, &s, z(3.0)).unwrap();
    assert!((v.re - 0.5).abs() < 1e-10);
    let v = mellin_value(&f, &s, z(-0.4)).unwrap();
    assert!((v.re - 1.0 / (-1.4)).abs() < 1e-9);
    assert_eq!(mellin_at_zero(&f, &s).unwrap(), -1.0);
    assert!((mellin_deriv_zero(&f, &s).unwrap().value + 1.0).abs() < 1e-8);
    assert!(matches!(mellin_value(&f, &s, z(1.0)), Err(Error::Pole { .. })));
}

#[test]
fn values_at_zero() {
    let f = exp_trace(1.0);
    let s = exp_series(1.0, 1.0, 0);
    assert_eq!(mellin_at_zero(&f, &s).unwrap(), 1.0);
    assert!(mellin_deriv_zero(&f, &s).unwrap().value.abs() < 1e-9);
    let wrong = AsymptoticSeries::new(0, vec![0.0, -1.0, 0.5]).unwrap();
    assert!(matches!(mellin_at_zero(&f, &wrong), Err(Error::SeriesMismatch { .. })));
}

#[test]
fn derivative_gives_negative_log() {
    for lambda in [0.5, 1.0, 2.0, 10.0] {
        let d = mellin_deriv_zero(&exp_trace(lambda), &exp_series(1.0, lambda, 0)).unwrap();
        assert!((d.value + lambda.ln()).abs() < 1e-8, "λ={lambda}: {}", d.value);
    }
}

#[test]
fn series_must_reach_constant_term() {
    assert!(matches!(
        AsymptoticSeries::new(2, vec![1.0, 0.0]),
        Err(Error::InsufficientSeries { .. })
    ));
    assert!(DecayingTrace::new(|t| t, 0.0, 1.0).is_err());
}

#[test]
fn zeta_values() {
    assert!((zeta_eval(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-12);
    assert!((zeta_eval(4.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-12);
    assert_eq!(zeta(z(0.0)).unwrap().re, -0.5);
    assert_eq!(ZETA_AT_ZERO, -0.5);
    assert!((ZETA_PRIME_AT_ZERO + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
    assert!((GAMMA_PRIME_ONE + 0.577_215_664_901_532_9).abs() < 1e-16);
    assert!(matches!(zeta(z(0.5)), Err(Error::Unsupported(_))));
    assert!(matches!(zeta(z(-2.0)), Err(Error::Unsupported(_))));
}

#[test]
fn poles_only_at_surviving_orders() {
    // t^{−2}(1 + t²)e^{−t}: f_{−2} = 1, f_{−1} = −1, f_0 = 3/2.
    let f = DecayingTrace::new(|t: f64| (1.0 + t * t) * (-t).exp() / (t * t), 1.0, 2.0).unwrap();
    let mut coeffs = vec![0.0; 8];
    let taylor: Vec<f64> = (0..8).map(|j| (-1f64).powi(j) / (1..=j).product::<i32>().max(1) as f64).collect();
    for (j, c) in coeffs.iter_mut().enumerate() {
        *c = taylor[j] + if j >= 2 { taylor[j - 2] } else { 0.0 };
    }
    let s = AsymptoticSeries::new(2, coeffs).unwrap();
    assert!(matches!(mellin_value(&f, &s, z(2.0)), Err(Error::Pole { .. })));
    assert!(matches!(mellin_value(&f, &s, z(1.0)), Err(Error::Pole { .. })));
    // Nonpositive integers are cancelled by 1/Γ.
    for x in [0.0, -1.0] {
        assert!(mellin_value(&f, &s, z(x)).is_ok());
    }
    // M(z) = Γ(z−2)/Γ(z) + 1 = 1/((z−1)(z−2)) + 1.
    let v = mellin_value(&f, &s, z(3.5)).unwrap();
    assert!((v.re - (1.0 / (2.5 * 1.5) + 1.0)).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn log_law(lambda in 0.1f64..100.0) {
        let d = mellin_deriv_zero(&exp_trace(lambda), &exp_series(1.0, lambda, 0)).unwrap();
        prop_assert!((d.value + lambda.ln()).abs() < 1e-8);
    }

    #[test]
    fn finite_spectrum_zeta_law(
        terms in prop::collection::vec((-2.0f64..2.0, 0.2f64..20.0), 1..5),
    ) {
        let min = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
        let bound: f64 = terms.iter().map(|t| t.0.abs()).sum::<f64>().max(1e-3);
        let tc = terms.clone();
        let f = DecayingTrace::new(move |t| tc.iter().map(|(c, l)| c * (-l * t).exp()).sum(), min, bound).unwrap();
        let mut coeffs = vec![0.0; 8];
        for &(c, l) in &terms {
            for (j, slot) in exp_series(c, l, 0).coeffs.iter().enumerate() {
                coeffs[j] += slot;
            }
        }
        let s = AsymptoticSeries::new(0, coeffs).unwrap();
        let want: f64 = -terms.iter().map(|(c, l)| c * l.ln()).sum::<f64>();
        let got = mellin_deriv_zero(&f, &s).unwrap().value;
        prop_assert!((got - want).abs() < 1e-8 * want.abs().max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn linearity(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, x in 0.3f64..4.0) {
        let (l1, l2) = (0.7, 2.3);
        let f = DecayingTrace::new(move |t| alpha * (-l1 * t).exp() + beta * (-l2 * t).exp(), l1, alpha.abs() + beta.abs() + 1e-3).unwrap();
        let (s1, s2) = (exp_series(alpha, l1, 0), exp_series(beta, l2, 0));
        let s = AsymptoticSeries::new(0, s1.coeffs.iter().zip(&s2.coeffs).map(|(a, b)| a + b).collect()).unwrap();
        let got = mellin_value(&f, &s, z(x)).unwrap().re;
        let want = alpha * l1.powf(-x) + beta * l2.powf(-x);
        prop_assert!((got - want).abs() < 1e-8 * want.abs().max(1.0));
    }
}
