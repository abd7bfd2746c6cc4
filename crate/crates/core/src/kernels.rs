//! Model kernels on ℂⁿ and the Heisenberg group Hₙ.
//!
//! Forms of type (0, ·) are indexed by bitmasks: bit j set means dz̄_{j+1} is
//! present, wedged in increasing order. Points of ℂⁿ are given as real
//! vectors with z_j = x[2j] + i·x[2j+1]; points of Hₙ carry x_{2n+1} last.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::{eigh, CMatrix, EigenSystem, HermitianMatrix, PencilPartition};
use crate::oracle::{landau_tail_bound, TruncationBound};
use crate::quad::{integrate_line, LineDomain, QuadOptions};
use crate::series::{bose, expm1_complex};

/// Hₙ with T-rigid Levi form diag(λ), drift β and quadratic potential
/// Φ₀(z) = Σ μ_{jl} z̄_j z_l.
#[derive(Debug, Clone)]
pub struct HeisenbergModel {
    lambda: Vec<f64>,
    beta: f64,
    hess: HermitianMatrix,
    pencil: PencilPartition,
}

impl HeisenbergModel {
    pub fn new(lambda: Vec<f64>, beta: f64, hess: HermitianMatrix) -> Result<Self> {
        if lambda.is_empty() || lambda.len() != hess.n() {
            return Err(Error::Validation(format!(
                "λ has {} entries but the Hessian is {}×{}",
                lambda.len(),
                hess.n(),
                hess.n()
            )));
        }
        if let Some(&l) = lambda.iter().find(|l| !(l.is_finite() && **l != 0.0)) {
            return Err(Error::Domain {
                what: "Levi eigenvalue λ_j".into(),
                value: l,
            });
        }
        if !beta.is_finite() {
            return Err(Error::Domain {
                what: "β".into(),
                value: beta,
            });
        }
        let pencil = crate::hermitian::pencil(&hess, &HermitianMatrix::diagonal(&lambda)?)?;
        Ok(Self {
            lambda,
            beta,
            hess,
            pencil,
        })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn hess(&self) -> &HermitianMatrix {
        &self.hess
    }

    /// Partition of ℝ by the number of negative eigenvalues of Ṙ^η.
    pub fn pencil(&self) -> &PencilPartition {
        &self.pencil
    }

    /// (n₋, n₊) of diag(λ).
    pub fn sig(&self) -> (usize, usize) {
        let neg = self.lambda.iter().filter(|&&l| l < 0.0).count();
        (neg, self.n() - neg)
    }

    /// The intervals I_q on which Ṙ^η has exactly q negative eigenvalues.
    pub fn i_q(&self, q: usize) -> Vec<(f64, f64)> {
        self.pencil
            .intervals
            .iter()
            .filter(|iv| iv.q == q)
            .map(|iv| (iv.lo, iv.hi))
            .collect()
    }

    /// Ṙ^η = hess − 2η·diag(λ).
    pub fn fock_weight(&self, eta: f64) -> FockWeight {
        let diag = HermitianMatrix::diagonal(&self.lambda).expect("λ validated in new");
        FockWeight {
            eta,
            matrix: self.hess.combine(1.0, &diag, -2.0 * eta),
        }
    }

    fn check_q(&self, q: usize) -> Result<()> {
        if q > self.n() {
            return Err(Error::Validation(format!("degree q = {q} outside 0..={}", self.n())));
        }
        Ok(())
    }
}

/// The Fock-space weight matrix Ṙ^η at a frequency η.
#[derive(Debug, Clone)]
pub struct FockWeight {
    pub eta: f64,
    pub matrix: HermitianMatrix,
}

impl FockWeight {
    /// Eigen-decomposition, rejecting singular Ṙ^η.
    fn spectrum(&self) -> Result<EigenSystem> {
        let e = eigh(&self.matrix);
        let scale = e.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if e.values.iter().any(|v| v.abs() <= 1e-12 * scale) {
            return Err(Error::PencilRoot { eta: self.eta });
        }
        Ok(e)
    }
}

/// A kernel value scalar·endo, where endo acts on Λ^{0,•} in the bitmask basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FormKernelValue {
    pub scalar: Complex64,
    pub endo: CMatrix,
}

impl FormKernelValue {
    pub fn matrix(&self) -> CMatrix {
        self.endo.map(|v| v * self.scalar)
    }

    /// Trace of the degree-q block.
    pub fn degree_trace(&self, q: usize) -> Complex64 {
        let diag: Complex64 = (0..self.endo.nrows())
            .filter(|&i| (i as u32).count_ones() as usize == q)
            .map(|i| self.endo[(i, i)])
            .sum();
        self.scalar * diag
    }
}

fn degree(mask: usize) -> usize {
    mask.count_ones() as usize
}

fn bits(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|&j| mask >> j & 1 == 1).collect()
}

fn minor(m: &CMatrix, rows: &[usize], cols: &[usize]) -> Complex64 {
    match rows.len() {
        0 => Complex64::new(1.0, 0.0),
        1 => m[(rows[0], cols[0])],
        k => DMatrix::from_fn(k, k, |i, j| m[(rows[i], cols[j])]).determinant(),
    }
}

/// The exterior-algebra extension Λ(m): entries det m[I, J] for |I| = |J|.
pub fn compound(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    let sets: Vec<Vec<usize>> = (0..dim).map(|s| bits(s, n)).collect();
    for i in 0..dim {
        for j in 0..dim {
            if degree(i) == degree(j) {
                out[(i, j)] = minor(m, &sets[i], &sets[j]);
            }
        }
    }
    out
}

/// Plücker coordinates of the span of the columns `cols` of u.
fn plucker(u: &CMatrix, cols: &[usize]) -> Vec<Complex64> {
    let n = u.nrows();
    (0..1usize << n)
        .map(|i| {
            if degree(i) == cols.len() {
                minor(u, &bits(i, n), cols)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

fn outer(v: &[Complex64]) -> CMatrix {
    let d = v.len();
    CMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj())
}

fn complex_coords(x: &[f64], n: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::new(x[2 * j], x[2 * j + 1])).collect()
}

fn check_point(x: &[f64], len: usize, name: &str) -> Result<()> {
    if x.len() != len {
        return Err(Error::Validation(format!(
            "{name} has {} coordinates, expected {len}",
            x.len()
        )));
    }
    if let Some(&v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain {
            what: format!("coordinate of {name}"),
            value: v,
        });
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain {
            what: "t".into(),
            value: t,
        });
    }
    Ok(())
}

/// ⟨a|b⟩ = Σ a_j b̄_j.
fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// (U·diag(d)·U*)·v.
fn apply_diag(e: &EigenSystem, d: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    let n = d.len();
    let coords: Vec<Complex64> = (0..n)
        .map(|k| (0..n).map(|i| e.vectors[(i, k)].conj() * v[i]).sum::<Complex64>() * d[k])
        .collect();
    (0..n)
        .map(|i| (0..n).map(|k| e.vectors[(i, k)] * coords[k]).sum())
        .collect()
}

/// r/(1 − e^{−tr}), positive for every real r.
fn h(r: f64, t: f64) -> f64 {
    bose(-t * r) / t
}

/// ln h(r, t), finite where h underflows.
fn log_h(r: f64, t: f64) -> f64 {
    let a = r.abs();
    let log_denominator = (-(-t * a).exp_m1()).ln();
    if r > 0.0 {
        a.ln() - log_denominator
    } else {
        a.ln() - t * a - log_denominator
    }
}

/// (r/2)/tanh(tr/2).
fn half_coth(r: f64, t: f64) -> f64 {
    let x = t * r;
    if x.abs() < 1e-4 {
        1.0 / t + t * r * r / 12.0
    } else {
        0.5 * r / (0.5 * x).tanh()
    }
}

/// −½⟨T z|z⟩ − ½⟨T w|w⟩ + ⟨G z|w⟩ with T = (Ṙ/2)/tanh(tṘ/2) and
/// G = (Ṙ/2)/sinh(tṘ/2)·e^{tṘ/2}.
fn mehler_exponent(e: &EigenSystem, t: f64, z: &[Complex64], w: &[Complex64]) -> Complex64 {
    let tv: Vec<f64> = e.values.iter().map(|&r| half_coth(r, t)).collect();
    let gv: Vec<f64> = e.values.iter().map(|&r| h(r, t)).collect();
    -0.5 * inner(&apply_diag(e, &tv, z), z) - 0.5 * inner(&apply_diag(e, &tv, w), w)
        + inner(&apply_diag(e, &gv, z), w)
}

/// Heat kernel of the Kodaira Laplacian □_η on ℂⁿ at (x, y):
/// (2π)^{−n}·det Ṙ/det(1 − e^{−tṘ})·e^{quadratic form}·Λ(e^{−tṘ}).
pub fn mehler_kernel(model: &HeisenbergModel, eta: f64, x: &[f64], y: &[f64], t: f64) -> Result<FormKernelValue> {
    let n = model.n();
    check_point(x, 2 * n, "x")?;
    check_point(y, 2 * n, "y")?;
    check_t(t)?;
    let e = model.fock_weight(eta).spectrum()?;
    let z = complex_coords(x, n);
    let w = complex_coords(y, n);
    let log_scalar: f64 = e.values.iter().map(|&r| log_h(r, t)).sum::<f64>() - n as f64 * (2.0 * PI).ln();
    let scalar = (mehler_exponent(&e, t, &z, &w) + log_scalar).exp();
    let decay: Vec<f64> = e.values.iter().map(|&r| (-t * r).exp()).collect();
    if decay.iter().any(|d| !d.is_finite()) || !scalar.is_finite() {
        return Err(Error::Overflow(format!("Mehler kernel at η = {eta}, t = {t}")));
    }
    let m = {
        let mut s = e.vectors.clone();
        for (k, d) in decay.iter().enumerate() {
            s.column_mut(k).scale_mut(*d);
        }
        s * e.vectors.adjoint()
    };
    Ok(FormKernelValue {
        scalar,
        endo: compound(&m),
    })
}

/// (2π)^{−n}Πμ·e_q(e^{−tμ})·Σ_{|k|≤k_max} e^{−t k·μ}: the diagonal
/// (0,q)-trace of the Landau-level expansion, with its truncation bound.
pub fn landau_trace_density(mu: &[f64], q: usize, t: f64, k_max: usize) -> Result<(f64, TruncationBound)> {
    check_t(t)?;
    let bound = landau_tail_bound(mu, q, t, k_max)?;
    let n = mu.len();
    if q > n {
        return Err(Error::Validation(format!("degree q = {q} outside 0..={n}")));
    }
    // poly[s] = Σ_{|k| = s} e^{−t k·μ}, built one coordinate at a time.
    let mut poly = vec![0.0; k_max + 1];
    poly[0] = 1.0;
    for &m in mu {
        let x = (-t * m).exp();
        for s in 1..=k_max {
            poly[s] += x * poly[s - 1];
        }
    }
    let levels: f64 = poly.iter().sum();
    let e_q = crate::density::q_trace_exp(mu, t, q)?;
    let value = (2.0 * PI).powi(-(n as i32)) * mu.iter().product::<f64>() * e_q * levels;
    Ok((value, bound))
}

/// The Szegő integrand at η: `value` is zero with `in_support = false`
/// outside I_q.
#[derive(Debug, Clone, PartialEq)]
pub struct SzegoValue {
    pub value: FormKernelValue,
    pub in_support: bool,
}

struct SzegoParts {
    exponent: Complex64,
    abs_det: f64,
    plucker: Vec<Complex64>,
}

fn szego_parts(model: &HeisenbergModel, eta: f64, x: &[f64], y: &[f64], e: &EigenSystem, q: usize) -> SzegoParts {
    let n = model.n();
    let z = complex_coords(x, n);
    let w = complex_coords(y, n);
    let dt = x[2 * n] - y[2 * n];
    let beta = model.beta;
    let i = Complex64::i();
    let phi = |v: &[Complex64]| apply_diag(e, &e.values, v).iter().zip(v).map(|(a, b)| (a * b.conj()).re).sum::<f64>();
    // z_j(η) = (U* z)_j; eigenvalues ascend, so the negative ones come first.
    let rotate = |v: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|k| (0..n).map(|l| e.vectors[(l, k)].conj() * v[l]).sum())
            .collect()
    };
    let (zr, wr) = (rotate(&z), rotate(&w));
    let psi: Complex64 = (0..n)
        .map(|j| {
            let mu = e.values[j];
            i * mu.abs() * (zr[j] - wr[j]).norm_sqr() + i * mu * (zr[j].conj() * wr[j] - zr[j] * wr[j].conj())
        })
        .sum();
    let levi: f64 = (0..n).map(|j| model.lambda[j] * (w[j].norm_sqr() - z[j].norm_sqr())).sum();
    let exponent = 0.5 * (phi(&z) - phi(&w)) + 0.5 * i * psi + (i * eta + 0.5 * beta) * dt
        - (eta - 0.5 * i * beta) * levi;
    let cols: Vec<usize> = (0..q).collect();
    SzegoParts {
        exponent,
        abs_det: e.values.iter().map(|v| v.abs()).product(),
        plucker: plucker(&e.vectors, &cols),
    }
}

/// Integrand of the Szegő projector on (0,q)-forms of Hₙ at frequency η.
pub fn szego_density(model: &HeisenbergModel, q: usize, eta: f64, x: &[f64], y: &[f64]) -> Result<SzegoValue> {
    let n = model.n();
    model.check_q(q)?;
    check_point(x, 2 * n + 1, "x")?;
    check_point(y, 2 * n + 1, "y")?;
    let e = model.fock_weight(eta).spectrum()?;
    let negatives = e.values.iter().filter(|&&v| v < 0.0).count();
    let dim = 1usize << n;
    if negatives != q {
        return Ok(SzegoValue {
            value: FormKernelValue {
                scalar: Complex64::new(0.0, 0.0),
                endo: CMatrix::zeros(dim, dim),
            },
            in_support: false,
        });
    }
    let p = szego_parts(model, eta, x, y, &e, q);
    let scalar = (2.0 * PI).powi(-(n as i32) - 1) * p.abs_det * p.exponent.exp();
    Ok(SzegoValue {
        value: FormKernelValue {
            scalar,
            endo: outer(&p.plucker),
        },
        in_support: true,
    })
}

/// A kernel value with a quadrature error estimate on its entries.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    pub value: FormKernelValue,
    pub error: f64,
}

/// (0,q)-block of the heat-kernel integrand on Hₙ at η, minus the Szegő
/// integrand when `subtract` holds and η ∈ I_q.
fn heisenberg_integrand(
    model: &HeisenbergModel,
    q: usize,
    eta: f64,
    x: &[f64],
    y: &[f64],
    t: f64,
    subtract: bool,
) -> CMatrix {
    let n = model.n();
    let dim = 1usize << n;
    let Ok(e) = model.fock_weight(eta).spectrum() else {
        // A single frequency of measure zero.
        return CMatrix::zeros(dim, dim);
    };
    let z = complex_coords(x, n);
    let w = complex_coords(y, n);
    let i = Complex64::i();
    let norm = (2.0 * PI).powi(-(n as i32) - 1);
    let coincident = x == y;
    let (pre, quad) = if coincident {
        (Complex64::new(0.0, 0.0), mehler_exponent(&e, t, &z, &z))
    } else {
        let dt = x[2 * n] - y[2 * n];
        let phi0 = |v: &[Complex64]| inner(&apply_diag_h(&model.hess, v), v).re;
        let levi: f64 = (0..n).map(|j| model.lambda[j] * (w[j].norm_sqr() - z[j].norm_sqr())).sum();
        let pre = i * dt * eta + 0.5 * model.beta * (dt + i * levi) + 0.5 * (phi0(&z) - phi0(&w));
        (pre, mehler_exponent(&e, t, &z, &w))
    };
    let log_scalar: f64 = e.values.iter().map(|&r| log_h(r, t)).sum();
    let negatives: Vec<usize> = (0..n).filter(|&j| e.values[j] < 0.0).collect();
    let subtracting = subtract && negatives.len() == q;
    let abs_det: f64 = e.values.iter().map(|v| v.abs()).product();
    let mut out = CMatrix::zeros(dim, dim);
    for mask in (0..dim).filter(|&m| degree(m) == q) {
        let cols = bits(mask, n);
        let shift: f64 = cols.iter().map(|&j| e.values[j]).sum();
        let v = plucker(&e.vectors, &cols);
        let weight = if coincident && subtracting && cols == negatives {
            // e^Q·Π(a + ε) − Πa = e^Q(Π(a + ε) − Πa) + (e^Q − 1)Πa.
            let mut diff = 0.0;
            let mut prefix = 1.0;
            for (k, &r) in e.values.iter().enumerate() {
                let a = r.abs();
                let suffix: f64 = e.values[k + 1..].iter().map(|s| s.abs() + bose(t * s.abs()) / t).product();
                diff += prefix * bose(t * a) / t * suffix;
                prefix *= a;
            }
            quad.exp() * diff + expm1_complex(quad) * abs_det
        } else {
            (pre + quad + log_scalar - t * shift).exp()
        };
        out += outer(&v).map(|c| c * weight * norm);
    }
    if subtracting && !coincident {
        let p = szego_parts(model, eta, x, y, &e, q);
        let s = p.exponent.exp() * p.abs_det * norm;
        out -= outer(&p.plucker).map(|c| c * s);
    }
    out
}

fn apply_diag_h(m: &HermitianMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| m.entry(i, j) * v[j]).sum()).collect()
}

/// The (0,q)-block of ∫ heat integrand dη on Hₙ. For q ∈ {n₋, n₊} the Szegő
/// integrand is subtracted on the unbounded intervals of I_q, which requires
/// `regularize`.
pub fn heisenberg_heat_regularized(
    model: &HeisenbergModel,
    q: usize,
    x: &[f64],
    y: &[f64],
    t: f64,
    regularize: bool,
    quad: &QuadOptions,
) -> Result<KernelEstimate> {
    let n = model.n();
    model.check_q(q)?;
    check_point(x, 2 * n + 1, "x")?;
    check_point(y, 2 * n + 1, "y")?;
    check_t(t)?;
    let (nm, np) = model.sig();
    let divergent = q == nm || q == np;
    if divergent && !regularize {
        return Err(Error::DivergentIntegral { q });
    }
    let p = &model.pencil;
    let first = p.roots.first().copied().unwrap_or(f64::INFINITY);
    let last = p.roots.last().copied().unwrap_or(f64::NEG_INFINITY);
    let f = |eta: f64| -> CMatrix {
        let unbounded = eta < first || eta > last;
        heisenberg_integrand(model, q, eta, x, y, t, divergent && unbounded)
    };
    let b_min = model.lambda.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    let tail_scale = (1.0 / (2.0 * t * b_min)).clamp(0.25, 1e8);
    let r = integrate_line(&f, p.default_split(), &p.roots, tail_scale, LineDomain::Full, quad)?;
    Ok(KernelEstimate {
        value: FormKernelValue {
            scalar: Complex64::new(1.0, 0.0),
            endo: r.value,
        },
        error: r.error,
    })
}
