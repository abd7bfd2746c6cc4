//! The tail zeta function
//! H(z) = Γ(z)⁻¹∫₀^∞ t^{z−1} ∫_{|η|≥C} [counterterm-subtracted supertrace density] dη dt
//! and its values H(0), H′(0).
//!
//! For |η| ≥ C write ε = 1/(2η) and K(ε) = B − εA, so that A − 2ηB = −2ηK(ε).
//! With g(ε, z) = Tr K₊^{−z} − Tr|K₋|^{−z} and det(A − 2ηB) = Σ a_s η^s,
//!
//!   Ĥ(z) = 2 Σ_{s+j odd} a_s g_j(z) 2^{−z−j} C^{s+1−z−j} / (z + j − s − 1),
//!
//! where g_j is the ε^j coefficient of g. Writing ℓ_j and Q_j for the ε^j
//! coefficients of ∂_z g(ε, 0) = −log det K₊ + log det|K₋| and of
//! ∂²_z g(ε, 0) = Tr(log K₊)² − Tr(log|K₋|)², the values at z = 0 follow by
//! expanding each term. H(z) = (2π)^{−n−1} ζ(z) Ĥ(z).
//!
//! Two coefficient sets are provided. The exact one follows the positive and
//! negative invariant subspaces of K(ε) by a Riccati recursion. The printed
//! one replaces K₊ by B₊(1 − εB⁻¹A) compressed to the spectral subspaces of B;
//! it agrees with the exact set when A and B commute.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::density::{supertrace_integrand, supertrace_integrand_mu, CurvatureData, EtaQuadrature};
use crate::error::{Error, Result};
use crate::hermitian::{eigh, negative_count, CMatrix};
use crate::mellin::{
    mellin_deriv_zero_with, mellin_value_with, zeta, AsymptoticSeries, DecayingTrace, Estimate, MellinOptions,
    ZETA_AT_ZERO, ZETA_PRIME_AT_ZERO,
};
use crate::quad::{integrate, integrate_line, integrate_segments, LineDomain, QuadOptions, QuadResult, Segment};
use crate::series::{bernoulli, bose_complex, gamma, log1m_squared_coeffs, recip_gamma};

/// Hard cap on the number of series terms in Ĥ′(0).
pub const MAX_SERIES_TERMS: usize = 1_000_000;

/// Curvature data together with the split point C.
#[derive(Debug, Clone)]
pub struct HxProblem {
    data: CurvatureData,
    c: f64,
}

impl HxProblem {
    pub fn new(data: CurvatureData, c: f64) -> Result<Self> {
        let bound = data.pencil().split_bound();
        if !(c > bound) || !c.is_finite() {
            return Err(Error::ConvergenceDomain { c, bound });
        }
        Ok(Self { data, c })
    }

    /// Uses [`CurvatureData::default_split`].
    pub fn with_default_split(data: CurvatureData) -> Self {
        let c = data.default_split();
        Self { data, c }
    }

    pub fn data(&self) -> &CurvatureData {
        &self.data
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    fn norm(&self) -> f64 {
        (2.0 * PI).powi(-(self.data.n() as i32) - 1)
    }

    /// n₊ − n₋ of B.
    fn g0(&self) -> f64 {
        let (nm, np) = self.data.sig();
        np as f64 - nm as f64
    }
}

/// T(t) = ∫_{|η|≥C} of the supertrace integrand.
pub fn tail_density(p: &HxProblem, t: f64, opts: &QuadOptions) -> Result<QuadResult<f64>> {
    if !(t > 0.0) {
        return Err(Error::Domain { what: "t".into(), value: t });
    }
    let f = |eta: f64| supertrace_integrand(&p.data, eta, t);
    integrate_line(
        &f,
        p.c,
        &[],
        EtaQuadrature::tail_scale(&p.data, t),
        LineDomain::Tails,
        opts,
    )
}

fn inner_opts() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-200,
        ..QuadOptions::default()
    }
}

/// Best available value of T(t); a quadrature failure still carries its estimate.
fn tail_value(p: &HxProblem, t: f64) -> f64 {
    match tail_density(p, t, &inner_opts()) {
        Ok(r) => r.value,
        Err(Error::QuadratureFailure { value, .. }) => value,
        Err(_) => f64::NAN,
    }
}

/// (2π)^{−n−1} ζ(z) ∫_{|η|≥C} det M [Tr|M₋|^{−z} − Tr M₊^{−z}] dη, Re z > n + 1.
pub fn hx_closed(p: &HxProblem, z: Complex64) -> Result<Complex64> {
    let n = p.data.n() as f64;
    if z.re <= n + 1.0 {
        return Err(Error::Unsupported(format!(
            "closed form needs Re z > n + 1 = {}, got z = {z}",
            n + 1.0
        )));
    }
    let f = |eta: f64| -> Complex64 {
        let mu = p.data.mu(eta);
        let det: f64 = mu.iter().product();
        let bracket: Complex64 = mu
            .iter()
            .map(|&m| {
                let w = Complex64::new(m.abs(), 0.0).powc(-z);
                if m < 0.0 {
                    w
                } else {
                    -w
                }
            })
            .sum();
        det * bracket
    };
    let opts = QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-16,
        ..QuadOptions::default()
    };
    // The integrand decays like |η|^{n−z}; η = ±C·v^{−k} with
    // k = 2/(Re z − n − 1) turns that into a factor vanishing linearly at v = 0.
    let k = 2.0 / (z.re - n - 1.0);
    let mapped = |v: f64| -> Complex64 {
        if v <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let eta = p.c * v.powf(-k);
        let jac = p.c * k * v.powf(-k - 1.0);
        if !(eta.is_finite() && jac.is_finite()) {
            return Complex64::new(0.0, 0.0);
        }
        (f(eta) + f(-eta)) * jac
    };
    let integral = integrate(mapped, 0.0, 1.0, &opts)?;
    Ok(p.norm() * zeta(z)? * integral.value)
}

/// H(z) by direct t-quadrature for Re z > n + 1, otherwise by Mellin
/// continuation of T(t) with its small-t expansion.
pub fn hx_numeric(p: &HxProblem, z: Complex64, quad: &QuadOptions) -> Result<Complex64> {
    let n = p.data.n();
    for pole in 1..=n + 1 {
        if (z - pole as f64).norm() < 1e-12 {
            let g = tail_expansion(p)?.series.coeffs[n + 1 - pole];
            return Err(Error::Pole {
                z,
                residue: g / gamma(Complex64::new(pole as f64, 0.0)).re,
            });
        }
    }
    if z.re > n as f64 + 1.0 {
        let (rate, bound) = tail_certificate(p)?;
        let near = |u: f64| -> Complex64 {
            let t = u * u;
            2.0 * tail_value(p, t) * Complex64::new(u, 0.0).powc(2.0 * z - 1.0)
        };
        let i1 = integrate(near, 0.0, 1.0, quad)?;
        let trace = DecayingTrace::new(|t| tail_value(p, t), rate, bound)?;
        let far = |t: f64| trace.eval(t) * Complex64::new(t, 0.0).powc(z - 1.0);
        let t_max = truncation_point(rate, bound, (z.re - 1.0).max(0.0), 0.1 * quad.abs_tol);
        let i2 = integrate(far, 1.0, t_max, quad)?;
        return Ok(recip_gamma(z) * (i1.value + i2.value));
    }
    let expansion = tail_expansion(p)?;
    let trace = DecayingTrace::new(|t| tail_value(p, t), expansion.rate, expansion.bound)?;
    mellin_value_with(&trace, &expansion.series, z, &expansion.mellin_options())
}

fn truncation_point(rate: f64, bound: f64, power: f64, target: f64) -> f64 {
    let mut t: f64 = 1.0;
    while bound * (-rate * t).exp() * t.powf(power) >= target && t < 1e7 {
        t += 1.0 / rate;
    }
    t
}

/// Ĥ(0) from the exact coefficient set.
pub fn hat_h_zero(p: &HxProblem) -> Result<f64> {
    let ell = exact_ell(p, p.data.n() + 1)?;
    Ok(hat_h_zero_from(p, &ell))
}

fn hat_h_zero_from(p: &HxProblem, ell: &[f64]) -> f64 {
    let pencil = p.data.pencil();
    let c = p.c;
    let mut total = -p.g0() * (pencil.antiderivative(c) + pencil.antiderivative(-c));
    for (s, &a) in pencil.a.iter().enumerate() {
        total += 2.0 * a * 0.5f64.powi(s as i32 + 1) * ell[s + 1];
    }
    total
}

/// H(0) = (2π)^{−n−1}·ζ(0)·Ĥ(0).
pub fn hx_at_zero(p: &HxProblem) -> Result<f64> {
    Ok(p.norm() * ZETA_AT_ZERO * hat_h_zero(p)?)
}

/// ε-expansion coefficients entering Ĥ(0) and Ĥ′(0): `ell[j]` for
/// j = 0..=J and `q[j]` for j = 0..=n+1 (`q[0]` unused).
#[derive(Debug, Clone, PartialEq)]
pub struct HatCoefficients {
    pub ell: Vec<f64>,
    pub q: Vec<f64>,
}

/// Exact coefficients: ℓ_j by the invariant-subspace recursion, Q_j by a
/// trapezoid contour average in ε.
pub fn exact_coefficients(p: &HxProblem, j_max: usize) -> Result<HatCoefficients> {
    let n = p.data.n();
    let ell = exact_ell(p, j_max.max(n + 1))?;
    let (_, q) = contour_coefficients(&p.data, n + 1)?;
    Ok(HatCoefficients { ell, q })
}

/// Coefficients read off the printed series:
/// ℓ_j = [Tr(τ₊X^j) − Tr(τ₋X^j)]/j and
/// Q_j = Σ_± ±[−2Tr(τ_± log|B| X^j)/j + c_j Tr(τ_± X^j)] with X = B⁻¹A.
pub fn printed_coefficients(p: &HxProblem, j_max: usize) -> Result<HatCoefficients> {
    let n = p.data.n();
    let j_max = j_max.max(n + 1);
    let e = eigh(p.data.b());
    let u = &e.vectors;
    let diag = |f: &dyn Fn(f64) -> f64| -> CMatrix {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            e.values.iter().map(|&v| Complex64::new(f(v), 0.0)),
        ));
        u * d * u.adjoint()
    };
    let b_inv = diag(&|v| 1.0 / v);
    let log_abs_b = diag(&|v| v.abs().ln());
    let tau_plus = diag(&|v| if v > 0.0 { 1.0 } else { 0.0 });
    let tau_minus = diag(&|v| if v < 0.0 { 1.0 } else { 0.0 });
    let x = &b_inv * p.data.a().matrix();
    let cj = log1m_squared_coeffs(n + 1);
    let (nm, np) = p.data.sig();
    let log_det_plus: f64 = e.values.iter().filter(|&&v| v > 0.0).map(|v| v.ln()).sum();
    let log_det_minus: f64 = e.values.iter().filter(|&&v| v < 0.0).map(|v| v.abs().ln()).sum();
    let _ = (nm, np);
    let mut ell = vec![-log_det_plus + log_det_minus];
    let mut q = vec![0.0];
    let mut power = CMatrix::identity(n, n);
    for j in 1..=j_max {
        power = &power * &x;
        let tp = (&tau_plus * &power).trace().re;
        let tm = (&tau_minus * &power).trace().re;
        ell.push((tp - tm) / j as f64);
        if j <= n + 1 {
            let lp = (&tau_plus * &log_abs_b * &power).trace().re;
            let lm = (&tau_minus * &log_abs_b * &power).trace().re;
            q.push((-2.0 * lp / j as f64 + cj[j] * tp) - (-2.0 * lm / j as f64 + cj[j] * tm));
        }
    }
    Ok(HatCoefficients { ell, q })
}

/// Blocks of A in the eigenbasis of B, split by the sign of B's eigenvalues.
struct BlockData {
    beta_plus: Vec<f64>,
    beta_minus: Vec<f64>,
    a_pp: CMatrix,
    a_pm: CMatrix,
    a_mp: CMatrix,
    a_mm: CMatrix,
}

fn block_data(data: &CurvatureData) -> BlockData {
    let e = eigh(data.b());
    let a = e.vectors.adjoint() * data.a().matrix() * &e.vectors;
    let plus: Vec<usize> = (0..data.n()).filter(|&i| e.values[i] > 0.0).collect();
    let minus: Vec<usize> = (0..data.n()).filter(|&i| e.values[i] < 0.0).collect();
    let block = |r: &[usize], c: &[usize]| CMatrix::from_fn(r.len(), c.len(), |i, j| a[(r[i], c[j])]);
    BlockData {
        beta_plus: plus.iter().map(|&i| e.values[i]).collect(),
        beta_minus: minus.iter().map(|&i| e.values[i]).collect(),
        a_pp: block(&plus, &plus),
        a_pm: block(&plus, &minus),
        a_mp: block(&minus, &plus),
        a_mm: block(&minus, &minus),
    }
}

/// Coefficients L_0..=L_{j_max} of log|det P(ε)|, where P(ε) is the restriction
/// of B − εA to the invariant subspace continuing the "own" eigenspace of B.
///
/// The subspace is the graph of Y(ε) = Σ Y_k ε^k over the own block, with
/// B_w Y − Y B_o = ε(A_wo + A_ww Y − Y A_oo − Y A_ow Y), and
/// P = B_o − εA_oo − εA_ow Y.
fn block_log_det_series(
    beta_own: &[f64],
    beta_other: &[f64],
    a_oo: &CMatrix,
    a_ow: &CMatrix,
    a_wo: &CMatrix,
    a_ww: &CMatrix,
    j_max: usize,
) -> Vec<f64> {
    let no = beta_own.len();
    let nw = beta_other.len();
    let mut out = vec![0.0; j_max + 1];
    if no == 0 {
        return out;
    }
    out[0] = beta_own.iter().map(|b| b.abs().ln()).sum();
    let zero_y = CMatrix::zeros(nw, no);
    let mut ys: Vec<CMatrix> = vec![zero_y];
    let mut ps: Vec<CMatrix> = vec![CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        no,
        beta_own.iter().map(|&b| Complex64::new(b, 0.0)),
    ))];
    let w0 = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        no,
        beta_own.iter().map(|&b| Complex64::new(1.0 / b, 0.0)),
    ));
    let mut ws: Vec<CMatrix> = vec![w0.clone()];
    for k in 1..=j_max {
        // Y_k from orders < k.
        if k < j_max {
            let prev = &ys[k - 1];
            let mut rhs = a_ww * prev - prev * a_oo;
            if k == 1 {
                rhs += a_wo;
            }
            for i in 1..k.saturating_sub(1) {
                rhs -= &ys[i] * a_ow * &ys[k - 1 - i];
            }
            let yk = CMatrix::from_fn(nw, no, |a, b| rhs[(a, b)] / (beta_other[a] - beta_own[b]));
            ys.push(yk);
        }
        let pk = if k == 1 { -a_oo.clone() } else { -(a_ow * &ys[k - 1]) };
        ps.push(pk);
        // W_{k−1} is already known; D_{k−1} = Σ_{i=0}^{k−1} Tr(W_{k−1−i}(i+1)P_{i+1}).
        let mut d = Complex64::new(0.0, 0.0);
        for i in 0..k {
            d += (&ws[k - 1 - i] * &ps[i + 1]).trace() * (i + 1) as f64;
        }
        out[k] = d.re / k as f64;
        if k < j_max {
            let mut acc = CMatrix::zeros(no, no);
            for i in 1..=k {
                acc += &ps[i] * &ws[k - i];
            }
            ws.push(-(&w0 * acc));
        }
    }
    out
}

/// ℓ_0..=ℓ_{j_max} of −log det K₊(ε) + log det|K₋(ε)|.
fn exact_ell(p: &HxProblem, j_max: usize) -> Result<Vec<f64>> {
    let bd = block_data(&p.data);
    let lp = block_log_det_series(&bd.beta_plus, &bd.beta_minus, &bd.a_pp, &bd.a_pm, &bd.a_mp, &bd.a_mm, j_max);
    let lm = block_log_det_series(&bd.beta_minus, &bd.beta_plus, &bd.a_mm, &bd.a_mp, &bd.a_pm, &bd.a_pp, j_max);
    Ok(lp.iter().zip(&lm).map(|(a, b)| -a + b).collect())
}

/// ℓ_j and Q_j for j ≤ j_max from the trapezoid rule on |ε| = r, where r is
/// half the radius on which the eigenvalues of B − εA keep the signs of
/// their real parts.
pub fn contour_coefficients(data: &CurvatureData, j_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const POINTS: usize = 128;
    let (nm, np) = data.sig();
    let radius = if data.a_norm() > 0.0 {
        0.5 * data.b_min() / data.a_norm()
    } else {
        1.0
    };
    let b = data.b().matrix();
    let a = data.a().matrix();
    let mut samples_l = Vec::with_capacity(POINTS);
    let mut samples_q = Vec::with_capacity(POINTS);
    for k in 0..POINTS {
        let eps = Complex64::from_polar(radius, 2.0 * PI * k as f64 / POINTS as f64);
        let m: CMatrix = b - a * eps;
        let eig = m
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::Validation("Schur decomposition failed".into()))?;
        let (mut l, mut q, mut cp, mut cm) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0, 0);
        for &kappa in eig.iter() {
            if kappa.re > 0.0 {
                let lg = kappa.ln();
                l -= lg;
                q += lg * lg;
                cp += 1;
            } else {
                let lg = (-kappa).ln();
                l += lg;
                q -= lg * lg;
                cm += 1;
            }
        }
        if cp != np || cm != nm {
            return Err(Error::Validation(
                "spectral groups of B − εA merged on the sampling contour".into(),
            ));
        }
        samples_l.push(l);
        samples_q.push(q);
    }
    let coeff = |samples: &[Complex64], j: usize| -> f64 {
        let s: Complex64 = samples
            .iter()
            .enumerate()
            .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / POINTS as f64))
            .sum();
        (s / POINTS as f64).re / radius.powi(j as i32)
    };
    Ok((
        (0..=j_max).map(|j| coeff(&samples_l, j)).collect(),
        (0..=j_max).map(|j| coeff(&samples_q, j)).collect(),
    ))
}

/// Individual contributions to Ĥ′(0), used for the term-level comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct HatPrimeParts {
    /// j = 0 terms (C^{s+1}/(s+1) and log 2C blocks together with log det|B_±|).
    pub boundary: f64,
    /// j = s + 1 terms (the log and squared-log layer).
    pub exceptional: f64,
    /// Remaining j-sums.
    pub series: f64,
    pub terms_used: usize,
}

impl HatPrimeParts {
    pub fn total(&self) -> f64 {
        self.boundary + self.exceptional + self.series
    }
}

/// Number of j-terms making the geometric tail bound fall below `tol`, with
/// ratio [`CurvatureData::series_radius_bound`]/C.
fn series_length(p: &HxProblem, tol: f64) -> Result<(usize, f64)> {
    let n = p.data.n() as f64;
    let bound_ = p.data.series_radius_bound();
    if p.c <= bound_ {
        return Err(Error::ConvergenceDomain { c: p.c, bound: bound_ });
    }
    let r = bound_ / p.c;
    let scale: f64 = 2.0
        * n
        * p.data
            .pencil()
            .a
            .iter()
            .enumerate()
            .map(|(s, a)| a.abs() * p.c.powi(s as i32 + 1))
            .sum::<f64>();
    if r == 0.0 || scale == 0.0 {
        return Ok((p.data.n() + 2, 0.0));
    }
    let mut j = p.data.n() + 2;
    let mut bound = scale * r.powi(j as i32 + 1) / ((j + 1) as f64 * (1.0 - r));
    while bound >= tol {
        j += 1;
        if j > MAX_SERIES_TERMS {
            return Err(Error::SeriesTail { terms: j, bound });
        }
        bound *= r * (j as f64) / (j + 1) as f64;
    }
    Ok((j, bound))
}

fn hat_prime_parts(p: &HxProblem, coeffs: &HatCoefficients, j_max: usize) -> HatPrimeParts {
    let c = p.c;
    let log2c = (2.0 * c).ln();
    let g0 = p.g0();
    let (mut boundary, mut exceptional, mut series) = (0.0, 0.0, 0.0);
    for (s, &a) in p.data.pencil().a.iter().enumerate() {
        let sp1 = (s + 1) as f64;
        if s % 2 == 1 {
            let k = -c.powi(s as i32 + 1) / sp1;
            let kp = k * (1.0 / sp1 - log2c);
            boundary += 2.0 * a * (coeffs.ell[0] * k + g0 * kp);
        }
        exceptional += 2.0 * a * 0.5f64.powi(s as i32 + 1) * (0.5 * coeffs.q[s + 1] - log2c * coeffs.ell[s + 1]);
        for j in 1..=j_max {
            if j == s + 1 || (s + j) % 2 == 0 {
                continue;
            }
            let e = s as i32 + 1 - j as i32;
            series += 2.0 * a * coeffs.ell[j] * 0.5f64.powi(j as i32) * c.powi(e) / (j as f64 - sp1);
        }
    }
    HatPrimeParts {
        boundary,
        exceptional,
        series,
        terms_used: j_max,
    }
}

/// Ĥ′(0) from the exact coefficients, split into its parts.
pub fn hat_h_prime_zero(p: &HxProblem, tol: f64) -> Result<HatPrimeParts> {
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance must be positive, got {tol}")));
    }
    let (j_max, _) = series_length(p, tol)?;
    let coeffs = exact_coefficients(p, j_max)?;
    check_decay(p, &coeffs, j_max, tol)?;
    Ok(hat_prime_parts(p, &coeffs, j_max))
}

/// The last computed terms must respect the predicted tail; otherwise the
/// ε-series has a singularity inside |ε| ≤ 1/(2C).
fn check_decay(p: &HxProblem, coeffs: &HatCoefficients, j_max: usize, tol: f64) -> Result<()> {
    let c = p.c;
    let amp: f64 = p
        .data
        .pencil()
        .a
        .iter()
        .enumerate()
        .map(|(s, a)| a.abs() * c.powi(s as i32 + 1))
        .sum();
    let last = (2.0 * c).powi(-(j_max as i32)) * coeffs.ell[j_max].abs() * 2.0 * amp;
    if last > tol.max(1e-13 * amp) * 1e3 {
        return Err(Error::SeriesTail {
            terms: j_max,
            bound: last,
        });
    }
    Ok(())
}

/// H′(0) = (2π)^{−n−1}[ζ′(0)Ĥ(0) − ½Ĥ′(0)], with the Ĥ′(0) series truncated
/// once its tail bound is below `tol`.
pub fn hx_prime_zero(p: &HxProblem, tol: f64) -> Result<f64> {
    let h0 = hat_h_zero(p)?;
    let hp = hat_h_prime_zero(p, tol)?.total();
    Ok(p.norm() * (ZETA_PRIME_AT_ZERO * h0 - 0.5 * hp))
}

/// One named coefficient in both coefficient sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientDiff {
    pub name: String,
    pub exact: f64,
    pub printed: f64,
}

impl CoefficientDiff {
    pub fn gap(&self) -> f64 {
        (self.exact - self.printed).abs()
    }
}

/// Exact versus printed evaluation of H(0), H′(0), with the coefficient and
/// part-level differences.
#[derive(Debug, Clone, PartialEq)]
pub struct HxPrimeReport {
    pub h0_exact: f64,
    pub h0_printed: f64,
    pub exact: f64,
    pub printed: f64,
    pub parts: Vec<CoefficientDiff>,
    pub coefficients: Vec<CoefficientDiff>,
}

impl HxPrimeReport {
    pub fn max_coefficient_gap(&self) -> f64 {
        self.coefficients.iter().map(CoefficientDiff::gap).fold(0.0, f64::max)
    }
}

pub fn hx_prime_zero_report(p: &HxProblem, tol: f64) -> Result<HxPrimeReport> {
    let (j_max, _) = series_length(p, tol)?;
    let exact = exact_coefficients(p, j_max)?;
    let printed = printed_coefficients(p, j_max)?;
    let pe = hat_prime_parts(p, &exact, j_max);
    let pp = hat_prime_parts(p, &printed, j_max);
    let h0e = hat_h_zero_from(p, &exact.ell);
    let h0p = hat_h_zero_from(p, &printed.ell);
    let norm = p.norm();
    let value = |h0: f64, parts: &HatPrimeParts| norm * (ZETA_PRIME_AT_ZERO * h0 - 0.5 * parts.total());
    let diff = |name: String, exact: f64, printed: f64| CoefficientDiff { name, exact, printed };
    let mut coefficients = Vec::new();
    for j in 0..=(p.data.n() + 2).min(j_max) {
        coefficients.push(diff(format!("ell[{j}]"), exact.ell[j], printed.ell[j]));
    }
    for j in 1..=p.data.n() + 1 {
        coefficients.push(diff(format!("q[{j}]"), exact.q[j], printed.q[j]));
    }
    Ok(HxPrimeReport {
        h0_exact: norm * ZETA_AT_ZERO * h0e,
        h0_printed: norm * ZETA_AT_ZERO * h0p,
        exact: value(h0e, &pe),
        printed: value(h0p, &pp),
        parts: vec![
            diff("boundary".into(), pe.boundary, pp.boundary),
            diff("exceptional".into(), pe.exceptional, pp.exceptional),
            diff("series".into(), pe.series, pp.series),
        ],
        coefficients,
    })
}

/// Empirical decay constants (c, C) with |T(t)| ≤ C e^{−ct} for t ≥ 1:
/// c is half the smallest |μ| on |η| ≥ C, and C is the largest sampled
/// e^{ct}|T(t)| with a tenfold margin.
fn tail_certificate(p: &HxProblem) -> Result<(f64, f64)> {
    let mut m_min = f64::INFINITY;
    for k in 0..400 {
        let u = k as f64 / 400.0;
        let eta = p.c + p.c * u / (1.0 - u);
        for e in [eta, -eta] {
            for m in p.data.mu(e) {
                m_min = m_min.min(m.abs());
            }
        }
    }
    let rate = 0.5 * m_min;
    let mut bound: f64 = 0.0;
    for t in [1.0, 2.0, 4.0, 8.0] {
        bound = bound.max(tail_value(p, t).abs() * (rate * t).exp());
    }
    Ok((rate, 10.0 * bound.max(f64::MIN_POSITIVE)))
}

/// Small-t expansion T(t) ~ Σ_j G_j t^{−n−1+j}, valid on (0, t_series], plus
/// the decay certificate used for the large-t part.
#[derive(Debug, Clone, PartialEq)]
pub struct TailExpansion {
    pub series: AsymptoticSeries,
    pub t_series: f64,
    pub rate: f64,
    pub bound: f64,
}

impl TailExpansion {
    /// Mellin options treating (0, t_series] through the series.
    pub fn mellin_options(&self) -> MellinOptions {
        MellinOptions {
            series_cutoff: Some(self.t_series),
            ..MellinOptions::default()
        }
    }
}

const TAYLOR_TERMS: usize = 40;
const CONTOUR_POINTS: usize = 96;

/// S(N) = Σ_j w_j Π_{i≠j} ν_j over the eigenvalues ν of N, with
/// w_j = bose(−ν_j) for the `q` eigenvalues of smallest real part and
/// bose(ν_j) otherwise. Since bose(−x) = bose(x) + x this equals
/// Σ_j bose(ν_j) Π_{i≠j} ν_i + q det N for every choice of the q
/// eigenvalues, so S is analytic in N; the choice only avoids cancellation.
fn contour_integrand(n_mat: &CMatrix, q: usize) -> Result<Complex64> {
    let mut nu: Vec<Complex64> = n_mat
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Validation("complex Schur form did not converge".into()))?
        .iter()
        .copied()
        .collect();
    nu.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..nu.len() {
        let w = if j < q { bose_complex(-nu[j]) } else { bose_complex(nu[j]) };
        let rest: Complex64 = nu
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &v)| v)
            .product();
        total += w * rest;
    }
    Ok(total)
}

/// Taylor coefficients G_0, …, G_{j_max} of t^{n+1}T(t) at t = 0.
///
/// Substituting η = ±(C + σ/t) on the two tails gives
///   t^{n+1}T(t) = −(2π)^{−n−1} Σ_± ∫_0^∞ S_±(tK_± ∓ 2σB) dσ,  K_± = M(±C),
/// where S_± is [`contour_integrand`] with q the number of negative
/// eigenvalues of K_±. By Bauer–Fike the eigenvalues of tK_± ∓ 2σB stay within
/// |t|·‖K_±‖ of the real axis, away from the poles 2πik of bose, so each side
/// is analytic for |t| < 2π/‖K_±‖. The coefficients follow from the
/// trapezoidal rule on the circle |t| = 2/‖K_±‖.
pub fn tail_taylor_coefficients(p: &HxProblem, j_max: usize) -> Result<Vec<f64>> {
    if j_max + 1 >= CONTOUR_POINTS / 2 {
        return Err(Error::Validation(format!(
            "at most {} Taylor coefficients are resolved",
            CONTOUR_POINTS / 2 - 1
        )));
    }
    let b = p.data.b().matrix();
    let length = 1.0 / (2.0 * p.data.b_min());
    let opts = QuadOptions {
        rel_tol: 1e-14,
        abs_tol: 1e-300,
        ..QuadOptions::default()
    };
    let mut g = vec![0.0; j_max + 1];
    for side in [1.0, -1.0] {
        let k = p.data.m(side * p.c);
        let q = negative_count(&k);
        let radius = 2.0 / k.norm();
        let nodes: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|m| Complex64::from_polar(radius, 2.0 * PI * m as f64 / CONTOUR_POINTS as f64))
            .collect();
        let k = k.matrix();
        let integrand = |u: f64| -> CMatrix {
            let mut out = CMatrix::zeros(j_max + 1, 1);
            let s = 1.0 - u;
            let jac = length / (s * s);
            if !jac.is_finite() {
                return out;
            }
            let sigma = length * u / s;
            for t in &nodes {
                let n_mat = k.map(|x| x * t) - b.map(|x| x * (side * 2.0 * sigma));
                let Ok(v) = contour_integrand(&n_mat, q) else {
                    return CMatrix::from_element(j_max + 1, 1, Complex64::new(f64::NAN, 0.0));
                };
                // Accumulates G_j·radius^j so that all components are O(max|S|).
                let v = v * jac / CONTOUR_POINTS as f64;
                let phase = (t / radius).inv();
                let mut power = Complex64::new(1.0, 0.0);
                for j in 0..=j_max {
                    out[j] += v * power;
                    power *= phase;
                }
            }
            out
        };
        let r = integrate(integrand, 0.0, 1.0, &opts)?;
        for (j, (gj, v)) in g.iter_mut().zip(r.value.iter()).enumerate() {
            *gj -= p.norm() * v.re / radius.powi(j as i32);
        }
    }
    Ok(g)
}

/// Taylor expansion of t^{n+1}T(t) by [`tail_taylor_coefficients`], used on
/// (0, t_series] with t_series = 2/max‖K_±‖, a third of the radius.
pub fn tail_expansion(p: &HxProblem) -> Result<TailExpansion> {
    let k_norm = [p.c, -p.c]
        .iter()
        .map(|&e| p.data.m(e).norm())
        .fold(0.0f64, f64::max);
    let coeffs = tail_taylor_coefficients(p, TAYLOR_TERMS)?;
    let (rate, bound) = tail_certificate(p)?;
    Ok(TailExpansion {
        series: AsymptoticSeries::new(p.data.n() as u32 + 1, coeffs)?,
        t_series: (2.0 / k_norm).min(1.0),
        rate,
        bound,
    })
}

/// Oracle values of H(0) and H′(0) from the Taylor expansion of t^{n+1}T(t).
#[derive(Debug, Clone, PartialEq)]
pub struct HxOracle {
    pub h0: f64,
    pub h_prime0: Estimate,
    pub expansion: TailExpansion,
}

pub fn hx_oracle(p: &HxProblem) -> Result<HxOracle> {
    let expansion = tail_expansion(p)?;
    let trace = DecayingTrace::new(|t| tail_value(p, t), expansion.rate, expansion.bound)?;
    let h_prime0 = mellin_deriv_zero_with(&trace, &expansion.series, &expansion.mellin_options())?;
    Ok(HxOracle {
        h0: expansion.series.f0(),
        h_prime0,
        expansion,
    })
}

/// d/dz at 0 of the Mellin transform of the strip density
/// S(t) = ∫_{c1≤|η|≤c2} supertrace integrand dη. Its small-t series is
/// obtained termwise since the strip is bounded and avoids pencil roots.
pub fn strip_prime_zero(data: &CurvatureData, c1: f64, c2: f64) -> Result<Estimate> {
    let bound_ = data.pencil().max_abs_root();
    if !(c1 > bound_ && c2 > c1) {
        return Err(Error::ConvergenceDomain { c: c1, bound: bound_ });
    }
    const TERMS: usize = 40;
    let n = data.n();
    let norm = (2.0 * PI).powi(-(n as i32) - 1);
    let b = bernoulli(TERMS);
    let opts = QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 1e-300,
        ..QuadOptions::default()
    };
    // Coefficient of t^{k−1}: −(2π)^{−n−1}(B_k/k!)∫ Σ_j |μ_j|^k Π_{i≠j} μ_i dη.
    let moments = |eta: f64| -> CMatrix {
        let mu = data.mu(eta);
        CMatrix::from_fn(TERMS + 1, 1, |k, _| {
            let v: f64 = (0..n)
                .map(|j| {
                    let rest: f64 = (0..n).filter(|&i| i != j).map(|i| mu[i]).product();
                    mu[j].abs().powi(k as i32) * rest
                })
                .sum();
            Complex64::new(v, 0.0)
        })
    };
    let segs = [
        Segment { a: -c2, b: -c1, f: &moments },
        Segment { a: c1, b: c2, f: &moments },
    ];
    let integrals = integrate_segments(&segs, &opts)?.value;
    let mut fact = 1.0;
    let coeffs: Vec<f64> = (0..=TERMS)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            -norm * b[k] / fact * integrals[(k, 0)].re
        })
        .collect();
    let series = AsymptoticSeries::new(1, coeffs)?;
    let strip = |t: f64| -> f64 {
        let f = |eta: f64| supertrace_integrand_mu(&data.mu(eta), t);
        let segs = [Segment { a: -c2, b: -c1, f: &f }, Segment { a: c1, b: c2, f: &f }];
        match integrate_segments(&segs, &opts) {
            Ok(r) => r.value,
            Err(Error::QuadratureFailure { value, .. }) => value,
            Err(_) => f64::NAN,
        }
    };
    let mut m_min = f64::INFINITY;
    for k in 0..=200 {
        let eta = c1 + (c2 - c1) * k as f64 / 200.0;
        for e in [eta, -eta] {
            for m in data.mu(e) {
                m_min = m_min.min(m.abs());
            }
        }
    }
    let rate = 0.5 * m_min;
    let mut bound: f64 = 0.0;
    for t in [1.0, 2.0, 4.0] {
        bound = bound.max(strip(t).abs() * (rate * t).exp());
    }
    let trace = DecayingTrace::new(strip, rate, 10.0 * bound.max(f64::MIN_POSITIVE))?;
    mellin_deriv_zero_with(&trace, &series, &MellinOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::HermitianMatrix;

    fn problem(a: &[Vec<f64>], b: &[Vec<f64>], c: f64) -> HxProblem {
        let data = CurvatureData::new(
            HermitianMatrix::from_real_rows(a).unwrap(),
            HermitianMatrix::from_real_rows(b).unwrap(),
        )
        .unwrap();
        HxProblem::new(data, c).unwrap()
    }

    #[test]
    fn hat_zero_examples() {
        let p = problem(&[vec![2.0]], &[vec![1.0]], 2.0);
        assert!((hat_h_zero(&p).unwrap() - 10.0).abs() < 1e-12);
        let q = problem(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[vec![1.0, 0.0], vec![0.0, -1.0]],
            2.0,
        );
        assert!((hat_h_zero(&q).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn riccati_matches_contour() {
        let p = problem(
            &[vec![0.7, 0.4, -0.2], vec![0.4, -0.3, 0.5], vec![-0.2, 0.5, 1.1]],
            &[vec![2.0, 0.3, 0.0], vec![0.3, -1.5, 0.2], vec![0.0, 0.2, 1.2]],
            6.0,
        );
        let ell = exact_ell(&p, 6).unwrap();
        let (ell_c, _) = contour_coefficients(p.data(), 6).unwrap();
        for j in 0..=6 {
            assert!((ell[j] - ell_c[j]).abs() < 1e-9 * (1.0 + ell[j].abs()), "j = {j}: {} vs {}", ell[j], ell_c[j]);
        }
    }

    #[test]
    fn printed_equals_exact_when_commuting() {
        let p = problem(
            &[vec![1.0, 0.0], vec![0.0, -0.5]],
            &[vec![1.0, 0.0], vec![0.0, -2.0]],
            3.0,
        );
        let e = exact_coefficients(&p, 12).unwrap();
        let pr = printed_coefficients(&p, 12).unwrap();
        for j in 0..=12 {
            assert!((e.ell[j] - pr.ell[j]).abs() < 1e-12);
        }
        for j in 1..=3 {
            assert!((e.q[j] - pr.q[j]).abs() < 1e-9, "q[{j}]: {} vs {}", e.q[j], pr.q[j]);
        }
    }

    #[test]
    fn rejects_small_split() {
        let data = CurvatureData::new(
            HermitianMatrix::from_real_rows(&[vec![2.0]]).unwrap(),
            HermitianMatrix::from_real_rows(&[vec![1.0]]).unwrap(),
        )
        .unwrap();
        assert!(matches!(HxProblem::new(data, 0.9), Err(Error::ConvergenceDomain { .. })));
    }
}
