//! Small dense Hermitian linear algebra: eigendecomposition, spectral
//! functions, signature splitting and the signature partition of the pencil
//! η ↦ A − 2ηB.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported dimension. Exterior-algebra objects have size 2ⁿ.
pub const MAX_DIM: usize = 8;

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: CMatrix,
}

impl HermitianMatrix {
    /// Validates shape and Hermitian symmetry, then symmetrizes exactly.
    pub fn new(data: CMatrix) -> Result<Self> {
        let n = data.nrows();
        if n == 0 || data.ncols() != n {
            return Err(Error::Validation(format!(
                "expected a nonempty square matrix, got {}×{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if n > MAX_DIM {
            return Err(Error::Validation(format!(
                "dimension {n} exceeds the supported maximum {MAX_DIM}"
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        let scale = data.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for i in 0..n {
            for j in 0..=i {
                let gap = (data[(i, j)] - data[(j, i)].conj()).norm();
                if gap > HERMITIAN_TOL * scale {
                    return Err(Error::Validation(format!(
                        "matrix is not Hermitian: entries ({i},{j}) and ({j},{i}) differ by {gap:e}"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(data))
    }

    pub(crate) fn symmetrized(data: CMatrix) -> Self {
        let adj = data.adjoint();
        Self {
            data: (data + adj).scale(0.5),
        }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("matrix rows have unequal length".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let complex: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&complex)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &HermitianMatrix, b: f64) -> HermitianMatrix {
        Self::symmetrized(self.data.scale(a) + other.data.scale(b))
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        Self {
            data: self.data.scale(s),
        }
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn det(&self) -> f64 {
        self.data.clone().determinant().re
    }

    /// Spectral norm, i.e. the largest |eigenvalue|.
    pub fn norm(&self) -> f64 {
        let e = eigh(self);
        e.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn reconstruct(&self) -> CMatrix {
        self.apply_fn_matrix(|x| x)
    }

    fn apply_fn_matrix(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Ascending eigenvalues with eigenvectors whose first non-negligible
/// component is real and positive.
pub fn eigh(h: &HermitianMatrix) -> EigenSystem {
    let n = h.n();
    if n == 1 {
        return EigenSystem {
            values: vec![h.data[(0, 0)].re],
            vectors: CMatrix::identity(1, 1),
        };
    }
    let se = h.data.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = se.eigenvectors.column(k);
        let lead = v
            .iter()
            .find(|c| c.norm() > 1e-8)
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = lead.conj() / lead.norm();
        for i in 0..n {
            vectors[(i, col)] = v[i] * phase;
        }
    }
    EigenSystem { values, vectors }
}

/// `U·diag(f(μ))·U*`; non-finite `f(μ)` is a domain error.
pub fn matrix_fn(h: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    let e = eigh(h);
    for &mu in &e.values {
        if !f(mu).is_finite() {
            return Err(Error::Domain {
                what: "matrix function".into(),
                value: mu,
            });
        }
    }
    Ok(HermitianMatrix::symmetrized(e.apply_fn_matrix(f)))
}

pub fn matrix_exp(h: &HermitianMatrix, t: f64) -> Result<HermitianMatrix> {
    matrix_fn(h, |x| (t * x).exp())
}

pub fn matrix_log(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    require_positive(h, "matrix logarithm")?;
    matrix_fn(h, f64::ln)
}

pub fn matrix_pow(h: &HermitianMatrix, p: f64) -> Result<HermitianMatrix> {
    require_positive(h, "matrix power")?;
    matrix_fn(h, |x| x.powf(p))
}

fn require_positive(h: &HermitianMatrix, what: &str) -> Result<()> {
    let e = eigh(h);
    match e.values.iter().find(|&&v| v <= 0.0) {
        Some(&v) => Err(Error::Domain {
            what: what.into(),
            value: v,
        }),
        None => Ok(()),
    }
}

/// Negative and positive spectral parts of an invertible Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SignatureSplit {
    pub n_minus: usize,
    pub n_plus: usize,
    pub proj_minus: CMatrix,
    pub proj_plus: CMatrix,
    /// `A_−` written in an orthonormal basis of the negative eigenspace.
    pub part_minus: Option<HermitianMatrix>,
    pub part_plus: Option<HermitianMatrix>,
    /// Columns span the negative eigenspace.
    pub basis_minus: CMatrix,
    pub basis_plus: CMatrix,
    pub values_minus: Vec<f64>,
    pub values_plus: Vec<f64>,
}

impl SignatureSplit {
    /// `|A_−| = −A_−`.
    pub fn abs_minus(&self) -> Option<HermitianMatrix> {
        self.part_minus.as_ref().map(|m| m.scale(-1.0))
    }

    pub fn abs_plus(&self) -> Option<HermitianMatrix> {
        self.part_plus.clone()
    }

    /// `Tr f(|A_−|)`, zero on an empty part.
    pub fn trace_fn_minus(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        match self.abs_minus() {
            Some(m) => Ok(matrix_fn(&m, f)?.trace()),
            None => Ok(0.0),
        }
    }

    pub fn trace_fn_plus(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        match &self.part_plus {
            Some(m) => Ok(matrix_fn(m, f)?.trace()),
            None => Ok(0.0),
        }
    }

    /// `log det|A_−|`, zero for an empty part.
    pub fn log_abs_det_minus(&self) -> f64 {
        self.values_minus.iter().map(|v| v.abs().ln()).sum()
    }

    pub fn log_det_plus(&self) -> f64 {
        self.values_plus.iter().map(|v| v.ln()).sum()
    }

    /// `Tr(τ_− X)`.
    pub fn compressed_trace_minus(&self, x: &CMatrix) -> Complex64 {
        (&self.proj_minus * x).trace()
    }

    pub fn compressed_trace_plus(&self, x: &CMatrix) -> Complex64 {
        (&self.proj_plus * x).trace()
    }
}

/// Splits `a` into negative and positive spectral parts. `zero_tol` defaults
/// to `1e-9·‖a‖`.
pub fn signature_split(a: &HermitianMatrix, zero_tol: Option<f64>) -> Result<SignatureSplit> {
    let e = eigh(a);
    let n = a.n();
    let norm = e.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let tol = zero_tol.unwrap_or(1e-9 * norm);
    if let Some(&bad) = e.values.iter().find(|v| v.abs() <= tol) {
        return Err(Error::SingularSplit { eigenvalue: bad });
    }
    let neg: Vec<usize> = (0..n).filter(|&j| e.values[j] < 0.0).collect();
    let pos: Vec<usize> = (0..n).filter(|&j| e.values[j] > 0.0).collect();
    let basis = |idx: &[usize]| CMatrix::from_fn(n, idx.len(), |i, k| e.vectors[(i, idx[k])]);
    let basis_minus = basis(&neg);
    let basis_plus = basis(&pos);
    let part = |b: &CMatrix| {
        if b.ncols() == 0 {
            None
        } else {
            Some(HermitianMatrix::symmetrized(b.adjoint() * a.matrix() * b))
        }
    };
    Ok(SignatureSplit {
        n_minus: neg.len(),
        n_plus: pos.len(),
        proj_minus: &basis_minus * basis_minus.adjoint(),
        proj_plus: &basis_plus * basis_plus.adjoint(),
        part_minus: part(&basis_minus),
        part_plus: part(&basis_plus),
        values_minus: neg.iter().map(|&j| e.values[j]).collect(),
        values_plus: pos.iter().map(|&j| e.values[j]).collect(),
        basis_minus,
        basis_plus,
    })
}

/// `A − 2ηB`.
pub fn pencil_matrix(a: &HermitianMatrix, b: &HermitianMatrix, eta: f64) -> HermitianMatrix {
    a.combine(1.0, b, -2.0 * eta)
}

pub fn negative_count(h: &HermitianMatrix) -> usize {
    eigh(h).values.iter().filter(|&&v| v < 0.0).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilInterval {
    pub lo: f64,
    pub hi: f64,
    pub q: usize,
}

impl PencilInterval {
    pub fn contains(&self, eta: f64) -> bool {
        eta > self.lo && eta < self.hi
    }
}

#[derive(Debug, Clone)]
pub struct PencilPartition {
    /// Coefficients of det(A − 2ηB) = Σ a_s η^s.
    pub a: Vec<f64>,
    /// Distinct real roots, ascending.
    pub roots: Vec<f64>,
    /// Maximal intervals of constant negative-eigenvalue count.
    pub intervals: Vec<PencilInterval>,
    /// Spectral radius of (2B)⁻¹A.
    pub rho: f64,
}

impl PencilPartition {
    pub fn det_poly(&self, eta: f64) -> f64 {
        self.a.iter().rev().fold(0.0, |acc, &c| acc * eta + c)
    }

    /// `F(η) = Σ a_s η^{s+1}/(s+1)`, the antiderivative vanishing at 0.
    pub fn antiderivative(&self, eta: f64) -> f64 {
        self.a
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (s, &c)| acc * eta + c / (s + 1) as f64)
            * eta
    }

    pub fn interval_index(&self, eta: f64) -> Option<usize> {
        self.intervals.iter().position(|iv| iv.contains(eta))
    }

    /// Signature count on the interval containing η; `None` on a boundary.
    pub fn q_at(&self, eta: f64) -> Option<usize> {
        self.interval_index(eta).map(|k| self.intervals[k].q)
    }

    pub fn max_abs_root(&self) -> f64 {
        self.roots.iter().fold(0.0, |m: f64, r| m.max(r.abs()))
    }

    /// Smallest admissible split point: exceeds every |root| and ρ((2B)⁻¹A).
    pub fn split_bound(&self) -> f64 {
        self.max_abs_root().max(self.rho)
    }

    /// `2·max(ρ, max|root|)`, or 1 when both vanish.
    pub fn default_split(&self) -> f64 {
        let b = self.split_bound();
        if b > 0.0 {
            2.0 * b
        } else {
            1.0
        }
    }

    /// Roots strictly inside (lo, hi), used as quadrature breakpoints.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.roots
            .iter()
            .copied()
            .filter(|&r| r > lo && r < hi)
            .collect()
    }
}

/// Signature analysis of det(A − 2ηB).
pub fn pencil(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<PencilPartition> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::Validation(format!(
            "pencil dimensions differ: A is {n}×{n}, B is {}×{}",
            b.n(),
            b.n()
        )));
    }
    let b_norm = b.norm();
    let lu = b.matrix().clone().lu();
    let b_min = eigh(b).values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if b_min <= 1e-12 * b_norm.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularSplit { eigenvalue: b_min });
    }
    let binv_a = lu
        .solve(a.matrix())
        .ok_or(Error::SingularSplit { eigenvalue: b_min })?;
    let gen_eigs = binv_a
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Validation("Schur decomposition failed".into()))?;
    let rho = gen_eigs.iter().fold(0.0, |m: f64, z| m.max(z.norm())) / 2.0;

    let a_coeffs = interpolate_det(a, b, rho.max(1.0))?;
    let scale: f64 = a_coeffs
        .iter()
        .enumerate()
        .map(|(s, c)| c.abs() * rho.max(1.0).powi(s as i32))
        .sum();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegeneratePencil);
    }

    let mut roots: Vec<f64> = gen_eigs
        .iter()
        .filter(|z| z.im.abs() <= 1e-6 * z.re.abs().max(1.0))
        .map(|z| z.re / 2.0)
        .collect();
    roots.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        match distinct.last_mut() {
            Some(last) if (r - *last).abs() <= 1e-9 * r.abs().max(1.0) => {
                *last = 0.5 * (*last + r);
            }
            _ => distinct.push(r),
        }
    }

    let count_at = |eta: f64| negative_count(&pencil_matrix(a, b, eta));
    let mut intervals: Vec<PencilInterval> = Vec::new();
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(distinct.iter().copied());
    edges.push(f64::INFINITY);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let probe = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (false, true) => hi - hi.abs().max(1.0),
            (true, false) => lo + lo.abs().max(1.0),
            (false, false) => 0.0,
        };
        let q = count_at(probe);
        match intervals.last_mut() {
            Some(last) if last.q == q => last.hi = hi,
            _ => intervals.push(PencilInterval { lo, hi, q }),
        }
    }

    Ok(PencilPartition {
        a: a_coeffs,
        roots: distinct,
        intervals,
        rho,
    })
}

/// det(A − 2ηB) at η.
pub fn pencil_det(a: &HermitianMatrix, b: &HermitianMatrix, eta: f64) -> f64 {
    pencil_matrix(a, b, eta).det()
}

/// Interpolates η ↦ det(A − 2ηB) at n+1 Chebyshev nodes on [−r, r].
fn interpolate_det(a: &HermitianMatrix, b: &HermitianMatrix, r: f64) -> Result<Vec<f64>> {
    let n = a.n();
    let m = n + 1;
    let nodes: Vec<f64> = (0..m)
        .map(|k| (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * m) as f64).cos())
        .collect();
    let vander = DMatrix::<f64>::from_fn(m, m, |i, j| nodes[i].powi(j as i32));
    let rhs = DVector::<f64>::from_iterator(m, nodes.iter().map(|&x| pencil_det(a, b, r * x)));
    let c = vander
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Validation("Chebyshev interpolation system is singular".into()))?;
    Ok((0..m).map(|s| c[s] / r.powi(s as i32)).collect())
}
