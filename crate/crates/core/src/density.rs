//! Pointwise heat-trace densities of the pencil A − 2ηB, their Szegő
//! counterterms, η-integrated local densities and small-t coefficients.
//!
//! The counterterm-subtracted integrands are evaluated in a cancellation-free
//! form. With a_j = |μ_j| and ε_j = |μ_j|/(e^{t|μ_j|} − 1) one has
//! μ_j/(1 − e^{−tμ_j}) and μ_j e^{−tμ_j}/(1 − e^{−tμ_j}) equal to a_j + ε_j
//! and ε_j in some order, so every subtraction of |det M| is done symbolically.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hermitian::{eigh, matrix_fn, pencil, pencil_matrix, signature_split, HermitianMatrix, PencilPartition};
use crate::quad::{integrate_line, LineDomain, QuadOptions, QuadResult};
use crate::series::{bose, elementary_symmetric, inv_one_minus_exp, inv_one_minus_exp_coeffs};

/// Pointwise CR data: curvature A, Levi form B and the pencil partition.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    a: HermitianMatrix,
    b: HermitianMatrix,
    sig: (usize, usize),
    pencil: PencilPartition,
    a_norm: f64,
    b_norm: f64,
    b_min: f64,
}

impl CurvatureData {
    pub fn new(a: HermitianMatrix, b: HermitianMatrix) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::Validation(format!(
                "A is {0}×{0} but B is {1}×{1}",
                a.n(),
                b.n()
            )));
        }
        let split = signature_split(&b, None)?;
        let pencil = pencil(&a, &b)?;
        let b_eigs = eigh(&b).values;
        Ok(Self {
            a_norm: a.norm(),
            b_norm: b_eigs.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            b_min: b_eigs.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())),
            sig: (split.n_minus, split.n_plus),
            a,
            b,
            pencil,
        })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn a(&self) -> &HermitianMatrix {
        &self.a
    }

    pub fn b(&self) -> &HermitianMatrix {
        &self.b
    }

    /// (n_−, n_+) of B.
    pub fn sig(&self) -> (usize, usize) {
        self.sig
    }

    pub fn pencil(&self) -> &PencilPartition {
        &self.pencil
    }

    /// Smallest |eigenvalue| of B.
    pub fn b_min(&self) -> f64 {
        self.b_min
    }

    /// Spectral norm of A.
    pub fn a_norm(&self) -> f64 {
        self.a_norm
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }

    /// Bound on the η where the 1/η expansions of the closed forms may break
    /// down. For definite B this is ρ((2B)⁻¹A). For indefinite B the
    /// expansions follow the positive and negative eigenvalue groups of
    /// B − εA separately, which by Bauer–Fike stay apart while |ε|‖A‖ < b_min,
    /// so ‖A‖/(2b_min) is included as well.
    pub fn series_radius_bound(&self) -> f64 {
        let rho = self.pencil.rho;
        match self.sig {
            (0, _) | (_, 0) => rho,
            _ => rho.max(self.a_norm / (2.0 * self.b_min)),
        }
    }

    /// `2·max(series_radius_bound, max|root|)`, or 1 when both vanish.
    pub fn default_split(&self) -> f64 {
        let b = self.series_radius_bound().max(self.pencil.max_abs_root());
        if b > 0.0 {
            2.0 * b
        } else {
            1.0
        }
    }

    /// M = A − 2ηB.
    pub fn m(&self, eta: f64) -> HermitianMatrix {
        pencil_matrix(&self.a, &self.b, eta)
    }

    /// Ascending eigenvalues μ_j(η) of A − 2ηB.
    pub fn mu(&self, eta: f64) -> Vec<f64> {
        eigh(&self.m(eta)).values
    }

    /// Eigenvalues of M, or `PencilRoot` if M is numerically singular.
    pub fn mu_off_root(&self, eta: f64) -> Result<Vec<f64>> {
        let mu = self.mu(eta);
        let scale = self.a_norm + 2.0 * eta.abs() * self.b_norm;
        if mu.iter().any(|m| m.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::PencilRoot { eta });
        }
        Ok(mu)
    }
}

/// η-quadrature contract: split point C and tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaQuadrature {
    pub c: f64,
    pub opts: QuadOptions,
}

impl EtaQuadrature {
    pub fn new(c: f64, rel_tol: f64, abs_tol: f64) -> Result<Self> {
        if !(c > 0.0 && rel_tol > 0.0 && abs_tol > 0.0) {
            return Err(Error::Validation(format!(
                "η-quadrature needs C > 0 and positive tolerances (C = {c}, rel = {rel_tol}, abs = {abs_tol})"
            )));
        }
        Ok(Self {
            c,
            opts: QuadOptions {
                rel_tol,
                abs_tol,
                ..QuadOptions::default()
            },
        })
    }

    /// Default split point 2·max(ρ((2B)⁻¹A), max|root|) with default tolerances.
    pub fn for_data(data: &CurvatureData) -> Self {
        Self {
            c: data.pencil().default_split(),
            opts: QuadOptions::default(),
        }
    }

    pub fn validate(&self, data: &CurvatureData) -> Result<()> {
        let bound = data.pencil().split_bound();
        if self.c <= bound {
            return Err(Error::ConvergenceDomain { c: self.c, bound });
        }
        Ok(())
    }

    /// Tail map length matched to the decay e^{−2|η| t min|B|}.
    pub fn tail_scale(data: &CurvatureData, t: f64) -> f64 {
        (1.0 / (2.0 * t * data.b_min())).clamp(0.25, 1e8)
    }
}

/// Small-t expansion Σ_j coeffs[j]·t^{leading_order + j}.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    pub leading_order: i32,
    pub coeffs: Vec<f64>,
}

fn norm_factor(n: usize) -> f64 {
    (2.0 * PI).powi(-(n as i32) - 1)
}

/// (2π)^{−n−1}·det M·Tr[(Id − e^{tM})^{−1}], M = A − 2ηB.
pub fn density_t(data: &CurvatureData, eta: f64, t: f64) -> Result<f64> {
    let (product, resolvent) = density_t_routes(data, eta, t)?;
    let scale = density_scale(data, eta, t)?;
    if (product - resolvent).abs() > 1e-9 * scale {
        return Err(Error::RouteMismatch {
            first: product,
            second: resolvent,
        });
    }
    Ok(product)
}

/// Both evaluations of `density_t`: the eigenvalue product formula and the
/// LU determinant times the trace of the spectral resolvent.
pub fn density_t_routes(data: &CurvatureData, eta: f64, t: f64) -> Result<(f64, f64)> {
    check_t(t)?;
    let mu = data.mu_off_root(eta)?;
    let c = norm_factor(data.n());
    let det: f64 = mu.iter().product();
    let sum: f64 = mu.iter().map(|&m| inv_one_minus_exp(t * m)).sum();
    let product = c * det * sum;

    let m = data.m(eta);
    let det_lu = m.det();
    let resolvent = matrix_fn(&m, |x| inv_one_minus_exp(t * x))?.trace();
    Ok((product, c * det_lu * resolvent))
}

fn density_scale(data: &CurvatureData, eta: f64, t: f64) -> Result<f64> {
    let mu = data.mu_off_root(eta)?;
    let det: f64 = mu.iter().product::<f64>().abs();
    let sum: f64 = mu.iter().map(|&m| inv_one_minus_exp(t * m).abs()).sum();
    Ok(norm_factor(data.n()) * det * sum)
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("t must be positive and finite, got {t}")))
    }
}

/// e_q(e^{−tμ_1}, …, e^{−tμ_n}).
pub fn q_trace_exp(mu: &[f64], t: f64, q: usize) -> Result<f64> {
    if q > mu.len() {
        return Err(Error::Validation(format!(
            "degree q = {q} outside 0..={}",
            mu.len()
        )));
    }
    // Factor out the largest exponent so the recurrence never overflows.
    let shift = mu.iter().map(|&m| -t * m).fold(0.0, f64::max);
    let x: Vec<f64> = mu.iter().map(|&m| (-t * m - shift).exp()).collect();
    let e = elementary_symmetric(&x);
    if e[q] == 0.0 {
        return Ok(0.0);
    }
    Ok((e[q].ln() + q as f64 * shift).exp())
}

/// STr N e^{−tω} = Σ_q (−1)^q q·e_q(e^{−tμ}).
pub fn str_n_exp(mu: &[f64], t: f64) -> Result<f64> {
    let (poly, product) = str_n_exp_routes(mu, t)?;
    let scale = poly.abs().max(product.abs());
    if (poly - product).abs() > 1e-10 * scale {
        return Err(Error::RouteMismatch {
            first: poly,
            second: product,
        });
    }
    Ok(poly)
}

/// The generating-polynomial evaluation of Σ_q (−1)^q q e_q(e^{−tμ}) and the
/// product identity (−1)ⁿ e^{−tΣμ} Σ_j Π_{i≠j}(1 − e^{tμ_i}).
pub fn str_n_exp_routes(mu: &[f64], t: f64) -> Result<(f64, f64)> {
    check_t(t)?;
    let n = mu.len();
    // Π_j (1 + s x_j) at s = −1 + u is Π_j (y_j + u x_j) with y_j = 1 − x_j;
    // the wanted sum is −d/du at u = 0.
    let x: Vec<f64> = mu.iter().map(|&m| (-t * m).exp()).collect();
    let y: Vec<f64> = mu.iter().map(|&m| -(-t * m).exp_m1()).collect();
    let poly = -crate::series::product_poly(&y, &x)[1];

    // Literal form in the log domain: term_j = e^{−tμ_j} Π_{i≠j} (e^{−tμ_i} − 1).
    let mut logs = Vec::with_capacity(n);
    for j in 0..n {
        let mut log_mag = -t * mu[j];
        let mut sign = 1.0;
        let mut zero = false;
        for (i, &m) in mu.iter().enumerate() {
            if i == j {
                continue;
            }
            let f = (-t * m).exp_m1();
            if f == 0.0 {
                zero = true;
                break;
            }
            log_mag += f.abs().ln();
            if f < 0.0 {
                sign = -sign;
            }
        }
        if !zero {
            logs.push((sign, log_mag));
        }
    }
    let top = logs.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    let product = if logs.is_empty() {
        0.0
    } else {
        let sum: f64 = logs.iter().map(|(s, l)| s * (l - top).exp()).sum();
        let sign_n = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign_n * sum * top.exp()
    };
    Ok((poly, product))
}

/// (2π)^{−n−1}|det M| on the pencil interval with signature q, else 0.
pub fn counterterm(data: &CurvatureData, eta: f64, q: usize) -> Result<f64> {
    check_q(data, q)?;
    let mu = data.mu_off_root(eta)?;
    let q_eta = mu.iter().filter(|&&m| m < 0.0).count();
    if q_eta != q {
        return Ok(0.0);
    }
    Ok(norm_factor(data.n()) * mu.iter().product::<f64>().abs())
}

fn check_q(data: &CurvatureData, q: usize) -> Result<()> {
    if q > data.n() {
        Err(Error::Validation(format!(
            "degree q = {q} outside 0..={}",
            data.n()
        )))
    } else {
        Ok(())
    }
}

/// Coefficients R_q of Π_j (a_j s^{[μ_j<0]} + ε_j(1+s)) − Π_j a_j s^{[μ_j<0]}.
/// R_q is the degree-q heat density minus its counterterm; all R_q ≥ 0.
pub fn subtracted_degree_weights(mu: &[f64], t: f64) -> Vec<f64> {
    let n = mu.len();
    let mut r = vec![0.0; n + 1];
    let mut pure = 1.0;
    let mut pure_deg = 0;
    for &m in mu {
        let a = m.abs();
        let eps = bose(t * a) / t;
        let neg = m < 0.0;
        let (c0, c1) = if neg { (eps, a + eps) } else { (a + eps, eps) };
        for q in (0..=n).rev() {
            let lower = if q > 0 { r[q - 1] } else { 0.0 };
            r[q] = r[q] * c0 + lower * c1;
        }
        r[pure_deg] += pure * eps;
        if pure_deg < n {
            r[pure_deg + 1] += pure * eps;
        }
        pure *= a;
        if neg {
            pure_deg += 1;
        }
    }
    r
}

/// Pointwise integrand of `local_q_density`.
pub fn local_q_integrand(data: &CurvatureData, q: usize, eta: f64, t: f64) -> f64 {
    let mu = data.mu(eta);
    norm_factor(data.n()) * subtracted_degree_weights(&mu, t)[q]
}

/// Pointwise integrand of `supertrace_density`:
/// −(2π)^{−n−1} Σ_j ε_j Π_{i≠j} μ_i.
pub fn supertrace_integrand_mu(mu: &[f64], t: f64) -> f64 {
    let n = mu.len();
    let mut total = 0.0;
    for j in 0..n {
        let eps = bose(t * mu[j].abs()) / t;
        let rest: f64 = mu
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &m)| m)
            .product();
        total -= eps * rest;
    }
    norm_factor(n) * total
}

pub fn supertrace_integrand(data: &CurvatureData, eta: f64, t: f64) -> f64 {
    supertrace_integrand_mu(&data.mu(eta), t)
}

/// (2π)^{−n−1}∫_ℝ [heat density of degree q − Szegő counterterm] dη.
pub fn local_q_density(
    data: &CurvatureData,
    q: usize,
    t: f64,
    quad: &EtaQuadrature,
) -> Result<QuadResult<f64>> {
    check_q(data, q)?;
    check_t(t)?;
    quad.validate(data)?;
    let f = |eta: f64| local_q_integrand(data, q, eta, t);
    integrate_eta(data, &f, t, quad, LineDomain::Full)
}

/// ∫_ℝ [(A − 2ηB)_t − (2π)^{−n−1} Σ_q q(−1)^q |det M| 1_{R(q)}(η)] dη.
pub fn supertrace_density(data: &CurvatureData, t: f64, quad: &EtaQuadrature) -> Result<QuadResult<f64>> {
    check_t(t)?;
    quad.validate(data)?;
    let f = |eta: f64| supertrace_integrand(data, eta, t);
    integrate_eta(data, &f, t, quad, LineDomain::Full)
}

pub(crate) fn integrate_eta(
    data: &CurvatureData,
    f: &dyn Fn(f64) -> f64,
    t: f64,
    quad: &EtaQuadrature,
    domain: LineDomain,
) -> Result<QuadResult<f64>> {
    integrate_line(
        f,
        quad.c,
        &data.pencil().roots,
        EtaQuadrature::tail_scale(data, t),
        domain,
        &quad.opts,
    )
}

/// Coefficients of t^{−(n+1)+j}, j = 0..=j_max, in the small-t expansion of
/// the pointwise counterterm-subtracted density at η.
pub fn f_coefficients(data: &CurvatureData, eta: f64, j_max: usize) -> Result<ExpansionCoefficients> {
    if j_max > 12 {
        return Err(Error::Validation(format!("j_max = {j_max} exceeds 12")));
    }
    let mu = data.mu_off_root(eta)?;
    Ok(f_coefficients_mu(&mu, j_max))
}

pub(crate) fn f_coefficients_mu(mu: &[f64], j_max: usize) -> ExpansionCoefficients {
    let n = mu.len();
    let c = norm_factor(n);
    let det: f64 = mu.iter().product();
    let q = mu.iter().filter(|&&m| m < 0.0).count();
    let laurent = inv_one_minus_exp_coeffs(j_max.saturating_sub(n + 1));
    let mut coeffs = vec![0.0; j_max + 1];
    for (j, slot) in coeffs.iter_mut().enumerate() {
        *slot = if j < n {
            0.0
        } else if j == n {
            // −det M · Tr M⁻¹ = −Σ_j Π_{i≠j} μ_i
            let cof: f64 = (0..n)
                .map(|k| {
                    mu.iter()
                        .enumerate()
                        .filter(|&(i, _)| i != k)
                        .map(|(_, &m)| m)
                        .product::<f64>()
                })
                .sum();
            -c * cof
        } else if j == n + 1 {
            // (n/2)·det M − q(−1)^q|det M| = det M·(n/2 − q)
            c * det * (n as f64 / 2.0 - q as f64)
        } else {
            let k = j - n - 1;
            let power: f64 = mu.iter().map(|m| m.powi(k as i32)).sum();
            c * det * laurent[k] * power
        };
    }
    ExpansionCoefficients {
        leading_order: -(n as i32) - 1,
        coeffs,
    }
}

/// ∫_{|η|≤C} F_{n+1,η} dη, exact on each pencil interval via the
/// antiderivative of det(A − 2ηB).
pub fn f_n1_integral(data: &CurvatureData, c: f64) -> Result<f64> {
    let p = data.pencil();
    if c <= p.max_abs_root() {
        return Err(Error::ConvergenceDomain {
            c,
            bound: p.max_abs_root(),
        });
    }
    let n = data.n() as f64;
    Ok(norm_factor(data.n()) * signed_interval_sum(p, c, |q| n / 2.0 - q as f64))
}

/// Σ over pencil intervals clipped to [−C, C] of w(q)·∫ det(A − 2ηB) dη.
pub(crate) fn signed_interval_sum(p: &PencilPartition, c: f64, w: impl Fn(usize) -> f64) -> f64 {
    p.intervals
        .iter()
        .filter_map(|iv| {
            let lo = iv.lo.max(-c);
            let hi = iv.hi.min(c);
            (hi > lo).then(|| w(iv.q) * (p.antiderivative(hi) - p.antiderivative(lo)))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64) -> CurvatureData {
        CurvatureData::new(
            HermitianMatrix::diagonal(&[a]).unwrap(),
            HermitianMatrix::diagonal(&[b]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn subtracted_weights_match_direct_formula() {
        let mu = [0.7, -1.3, 2.1];
        let t = 0.9;
        let r = subtracted_degree_weights(&mu, t);
        let det: f64 = mu.iter().product();
        let prod: f64 = mu.iter().map(|&m| 1.0 - (-t * m).exp()).product();
        for q in 0..=3 {
            let heat = det / prod * q_trace_exp(&mu, t, q).unwrap();
            let ct = if q == 1 { det.abs() } else { 0.0 };
            assert!((r[q] - (heat - ct)).abs() < 1e-12 * heat.abs().max(1.0), "q={q}");
        }
    }

    #[test]
    fn supertrace_integrand_matches_density() {
        let data = scalar(2.0, 1.0);
        for &eta in &[-0.5, 0.3, 1.7, 3.0] {
            let t = 0.8;
            let d = density_t(&data, eta, t).unwrap();
            let mu = data.mu(eta);
            let q = mu.iter().filter(|&&m| m < 0.0).count();
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            let ct = q as f64 * sign * counterterm(&data, eta, q).unwrap();
            assert!((supertrace_integrand(&data, eta, t) - (d - ct)).abs() < 1e-14);
        }
    }

    #[test]
    fn counterterm_indicator() {
        let data = scalar(2.0, 1.0);
        let c = norm_factor(1);
        assert!((counterterm(&data, 0.0, 0).unwrap() - 2.0 * c).abs() < 1e-15);
        assert_eq!(counterterm(&data, 0.0, 1).unwrap(), 0.0);
        assert!((counterterm(&data, 2.0, 1).unwrap() - 2.0 * c).abs() < 1e-15);
        assert!(matches!(counterterm(&data, 1.0, 0), Err(Error::PencilRoot { .. })));
    }
}
