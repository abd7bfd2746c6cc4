mod common;

use std::f64::consts::{LN_2, PI};

use common::{dense_integral, diag_data, real_data, rel_err};
use crtorsion::density::{
    counterterm, density_t, density_t_routes, f_coefficients, f_n1_integral, local_q_density, local_q_integrand,
    q_trace_exp, str_n_exp, str_n_exp_routes, supertrace_density, supertrace_integrand, CurvatureData,
    EtaQuadrature,
};
use crtorsion::series::fit_power_series;
use crtorsion::Error;
use proptest::prelude::*;

fn scalar() -> CurvatureData {
    diag_data(&[2.0], &[1.0])
}

fn split_sample() -> CurvatureData {
    diag_data(&[1.0, 1.0], &[1.0, -1.0])
}

fn mixed_sample() -> CurvatureData {
    real_data(&[vec![0.8, 0.3], vec![0.3, -0.5]], &[vec![1.0, 0.2], vec![0.2, -0.7]])
}

fn norm(n: usize) -> f64 {
    (2.0 * PI).powi(-(n as i32) - 1)
}

/// Degree-q heat density minus the Szegő term, written out from the
/// eigenvalues of A − 2ηB with the elementary symmetric sum over subsets.
fn direct_local_integrand(data: &CurvatureData, q: usize, eta: f64, t: f64) -> f64 {
    let mu = data.mu(eta);
    let n = mu.len();
    if t * mu.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())) > 40.0 {
        return 0.0;
    }
    let ratio: f64 = mu
        .iter()
        .map(|&m| if m == 0.0 { 1.0 / t } else { m / -(-t * m).exp_m1() })
        .product();
    let e_q: f64 = (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == q)
        .map(|mask| (0..n).filter(|j| mask >> j & 1 == 1).map(|j| (-t * mu[j]).exp()).product::<f64>())
        .sum();
    let negatives = mu.iter().filter(|&&m| m < 0.0).count();
    let szego = if negatives == q { mu.iter().product::<f64>().abs() } else { 0.0 };
    norm(n) * (ratio * e_q - szego)
}

fn dense_local(data: &CurvatureData, q: usize, t: f64) -> f64 {
    dense_integral(
        |eta| direct_local_integrand(data, q, eta, t),
        f64::NEG_INFINITY,
        f64::INFINITY,
        &data.pencil().roots,
        600,
    )
}

/// (2π)^{−n−1}[½n·det M − Σ_q (−1)^q q |det M| 1_{R(q)}].
fn direct_f_n1(data: &CurvatureData, eta: f64) -> f64 {
    let mu = data.mu(eta);
    let n = mu.len();
    let det: f64 = mu.iter().product();
    let q = mu.iter().filter(|&&m| m < 0.0).count();
    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
    norm(n) * (0.5 * n as f64 * det - sign * q as f64 * det.abs())
}

#[test]
fn density_t_examples() {
    let t = LN_2;
    let v = density_t(&diag_data(&[1.0], &[1.0]), 0.0, t).unwrap();
    assert!(rel_err(v, -1.0 / (4.0 * PI * PI)) < 1e-13);
    let v = density_t(&diag_data(&[-1.0], &[1.0]), 0.0, t).unwrap();
    assert!(rel_err(v, -1.0 / (2.0 * PI * PI)) < 1e-13);
    let v = density_t(&diag_data(&[1.0, -1.0], &[1.0, 1.0]), 0.0, t).unwrap();
    assert!(rel_err(v, -1.0 / (8.0 * PI.powi(3))) < 1e-13);
}

#[test]
fn q_trace_examples() {
    assert_eq!(q_trace_exp(&[0.3, -1.2, 4.0], 0.7, 0).unwrap(), 1.0);
    let mu = [LN_2, LN_2];
    assert!((q_trace_exp(&mu, 1.0, 1).unwrap() - 1.0).abs() < 1e-15);
    assert!((q_trace_exp(&mu, 1.0, 2).unwrap() - 0.25).abs() < 1e-15);
    assert!(q_trace_exp(&mu, 1.0, 3).is_err());
}

#[test]
fn supertrace_exp_examples() {
    let (m, t) = (1.7, 0.4);
    assert!((str_n_exp(&[m], t).unwrap() + (-t * m).exp()).abs() < 1e-15);
    let (a, b) = (0.9, -0.6);
    let want = -((-t * a).exp() + (-t * b).exp()) + 2.0 * (-t * (a + b)).exp();
    assert!((str_n_exp(&[a, b], t).unwrap() - want).abs() < 1e-14);
    let mu = [0.3, -1.1, 2.4, 0.8];
    let (poly, product) = str_n_exp_routes(&mu, 0.7).unwrap();
    assert!(rel_err(poly, product) < 1e-12);
}

#[test]
fn counterterm_examples() {
    let d = scalar();
    let mass = 2.0 / (4.0 * PI * PI);
    assert!((counterterm(&d, 0.0, 0).unwrap() - mass).abs() < 1e-16);
    assert_eq!(counterterm(&d, 0.0, 1).unwrap(), 0.0);
    assert!((counterterm(&d, 2.0, 1).unwrap() - mass).abs() < 1e-16);
    assert!(matches!(counterterm(&d, 1.0, 0), Err(Error::PencilRoot { .. })));
}

#[test]
fn local_density_matches_dense_quadrature() {
    let cases = [(scalar(), 0, 1.0), (split_sample(), 1, 1.0), (mixed_sample(), 0, 0.6), (mixed_sample(), 2, 2.0)];
    for (data, q, t) in cases {
        let eq = EtaQuadrature::for_data(&data);
        let got = local_q_density(&data, q, t, &eq).unwrap().value;
        let want = dense_local(&data, q, t);
        assert!(got.is_finite());
        assert!(rel_err(got, want) < 1e-6, "q={q} t={t}: {got} vs {want}");
    }
}

#[test]
fn local_density_rejects_bad_degree() {
    let data = scalar();
    let eq = EtaQuadrature::for_data(&data);
    assert!(matches!(local_q_density(&data, 2, 1.0, &eq), Err(Error::Validation(_))));
}

#[test]
fn supertrace_is_weighted_sum_of_degrees() {
    for data in [split_sample(), mixed_sample()] {
        let eq = EtaQuadrature::for_data(&data);
        for t in [0.3, 1.0, 3.0] {
            let st = supertrace_density(&data, t, &eq).unwrap().value;
            let sum: f64 = (0..=2)
                .map(|q| {
                    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                    sign * q as f64 * local_q_density(&data, q, t, &eq).unwrap().value
                })
                .sum();
            assert!((st - sum).abs() < 2e-6 * st.abs().max(1e-3), "t={t}: {st} vs {sum}");
        }
    }
}

#[test]
fn supertrace_at_large_time_is_finite() {
    let data = split_sample();
    let v = supertrace_density(&data, 50.0, &EtaQuadrature::for_data(&data)).unwrap();
    assert!(v.value.is_finite() && v.error.is_finite());
}

#[test]
fn reflection_symmetries() {
    // (A, B) → (A, −B) is the substitution η → −η; (A, B) → (−A, −B) maps
    // M to −M, which multiplies the supertrace integrand by (−1)^{n−1}.
    for data in [scalar(), mixed_sample()] {
        let n = data.n();
        let reflected = CurvatureData::new(data.a().clone(), data.b().scale(-1.0)).unwrap();
        let negated = CurvatureData::new(data.a().scale(-1.0), data.b().scale(-1.0)).unwrap();
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        for t in [0.5, 2.0] {
            let st = |d: &CurvatureData| supertrace_density(d, t, &EtaQuadrature::for_data(d)).unwrap().value;
            let base = st(&data);
            assert!((st(&reflected) - base).abs() < 1e-8 * base.abs().max(1.0));
            assert!((st(&negated) - sign * base).abs() < 1e-8 * base.abs().max(1.0));
        }
    }
}

#[test]
fn local_density_decays_like_inverse_time() {
    let data = mixed_sample();
    let eq = EtaQuadrature::for_data(&data);
    for q in 0..=2 {
        let scaled: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
            .iter()
            .map(|&t| t * local_q_density(&data, q, t, &eq).unwrap().value.abs())
            .collect();
        let bound = 2.0 * scaled[0].max(scaled[1]);
        assert!(scaled.iter().all(|&v| v <= bound), "q={q}: {scaled:?}");
    }
}

#[test]
fn expansion_coefficient_examples() {
    let f = f_coefficients(&diag_data(&[1.0], &[1.0]), 0.0, 3).unwrap();
    assert_eq!(f.leading_order, -2);
    assert!(f.coeffs[0].abs() < 1e-16);
    assert!((f.coeffs[1] + 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
    assert!((f.coeffs[2] - 1.0 / (8.0 * PI * PI)).abs() < 1e-15);

    let f = f_coefficients(&mixed_sample(), 0.4, 4).unwrap();
    assert!(f.coeffs[0].abs() < 1e-15 && f.coeffs[1].abs() < 1e-15);
    assert!(f_coefficients(&mixed_sample(), 0.4, 13).is_err());
}

#[test]
fn top_coefficient_matches_direct_formula() {
    let data = mixed_sample();
    for eta in [-3.0, -0.2, 0.5, 2.5] {
        if data.pencil().roots.iter().any(|r| (r - eta).abs() < 1e-6) {
            continue;
        }
        let f = f_coefficients(&data, eta, 3).unwrap();
        let want = direct_f_n1(&data, eta);
        assert!((f.coeffs[3] - want).abs() < 1e-14 * want.abs().max(1.0), "η={eta}");
    }
}

#[test]
fn small_time_fit_recovers_f_n() {
    for (data, eta) in [(split_sample(), 0.2), (mixed_sample(), -0.9)] {
        let n = data.n();
        let f = f_coefficients(&data, eta, n + 1).unwrap();
        // t^{n+1}·density = Σ_j F_j t^j with F_j = 0 below j = n.
        let ts: Vec<f64> = (0..20).map(|i| 10f64.powf(-4.0 + 2.0 * i as f64 / 19.0)).collect();
        let ys: Vec<f64> = ts
            .iter()
            .map(|&t| t.powi(n as i32 + 1) * supertrace_integrand(&data, eta, t) / t.powi(n as i32))
            .collect();
        let c = fit_power_series(&ts, &ys, 3, 1e-2).unwrap();
        assert!((c[0] - f.coeffs[n]).abs() < 1e-6, "{} vs {}", c[0], f.coeffs[n]);
    }
}

#[test]
fn f_n1_integral_examples() {
    let data = scalar();
    let got = f_n1_integral(&data, 2.0).unwrap();
    let want = dense_integral(|eta| direct_f_n1(&data, eta), -2.0, 2.0, &data.pencil().roots, 200);
    assert!((got - want).abs() < 1e-12);
    assert!((got - 5.0 / (4.0 * PI * PI)).abs() < 1e-14);

    let data = split_sample();
    let got = f_n1_integral(&data, 2.0).unwrap();
    let want = dense_integral(|eta| direct_f_n1(&data, eta), -2.0, 2.0, &data.pencil().roots, 200);
    assert!((got - want).abs() < 1e-8 * want.abs().max(1.0), "{got} vs {want}");

    assert!(matches!(f_n1_integral(&scalar(), 0.5), Err(Error::ConvergenceDomain { .. })));
}

fn arb_mu(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![0.05f64..4.0, -4.0f64..-0.05], 1..=max_n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn density_routes_agree(
        a in prop::collection::vec(-2.0f64..2.0, 4),
        b in prop::collection::vec(prop_oneof![0.3f64..2.0, -2.0f64..-0.3], 2),
        eta in -5.0f64..5.0,
        t in 0.05f64..5.0,
    ) {
        let data = real_data(&[vec![a[0], a[1]], vec![a[1], a[2]]], &[vec![b[0], 0.0], vec![0.0, b[1]]]);
        prop_assume!(data.pencil().roots.iter().all(|r| (r - eta).abs() > 1e-3));
        let (product, resolvent) = density_t_routes(&data, eta, t).unwrap();
        prop_assert!(rel_err(product, resolvent) < 1e-10);
    }

    #[test]
    fn combinatorial_identity(mu in arb_mu(5), t in 0.05f64..3.0) {
        let (poly, product) = str_n_exp_routes(&mu, t).unwrap();
        prop_assert!((poly - product).abs() <= 1e-11 * poly.abs().max(product.abs()).max(1e-300));
    }

    #[test]
    fn degree_traces_sum_to_product(mu in arb_mu(5), t in 0.05f64..3.0) {
        let sum: f64 = (0..=mu.len()).map(|q| q_trace_exp(&mu, t, q).unwrap()).sum();
        let product: f64 = mu.iter().map(|m| 1.0 + (-t * m).exp()).product();
        prop_assert!(rel_err(sum, product) < 1e-12);
    }

    #[test]
    fn supertrace_integrand_is_weighted_degree_sum(
        a in prop::collection::vec(-2.0f64..2.0, 4),
        eta in -4.0f64..4.0,
        t in 0.1f64..4.0,
    ) {
        let data = real_data(&[vec![a[0], a[1]], vec![a[1], a[2]]], &[vec![1.0, a[3] * 0.2], vec![a[3] * 0.2, -0.8]]);
        prop_assume!(data.pencil().roots.iter().all(|r| (r - eta).abs() > 1e-3));
        let st = supertrace_integrand(&data, eta, t);
        let sum = -local_q_integrand(&data, 1, eta, t) + 2.0 * local_q_integrand(&data, 2, eta, t);
        prop_assert!((st - sum).abs() <= 1e-10 * st.abs().max(1e-6));
        for q in 0..=2 {
            let direct = direct_local_integrand(&data, q, eta, t);
            let lib = local_q_integrand(&data, q, eta, t);
            prop_assert!((lib - direct).abs() <= 1e-9 * lib.abs().max(1e-4), "q={} {} vs {}", q, lib, direct);
        }
    }
}
