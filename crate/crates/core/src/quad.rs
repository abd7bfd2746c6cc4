//! Globally adaptive Gauss–Kronrod (10/21) quadrature over unions of finite
//! segments, with rational maps for half-infinite tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::CMatrix;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Values that can be integrated: a vector space with a norm.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, w: f64, x: &Self);
    fn norm(&self) -> f64;
    /// Real summary reported in failure diagnostics.
    fn summary(&self) -> f64 {
        self.norm()
    }
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, w: f64, x: &Self) {
        *self += w * x;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn summary(&self) -> f64 {
        *self
    }
}

impl QuadValue for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, w: f64, x: &Self) {
        *self += x * w;
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn summary(&self) -> f64 {
        self.re
    }
}

impl QuadValue for CMatrix {
    fn zero_like(&self) -> Self {
        CMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&mut self, w: f64, x: &Self) {
        *self += x * Complex64::new(w, 0.0);
    }
    fn norm(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_evals: 1 << 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evals: usize,
}

/// One finite piece of an integration domain.
pub struct Segment<'a, T> {
    pub a: f64,
    pub b: f64,
    pub f: &'a dyn Fn(f64) -> T,
}

struct Panel<T> {
    seg: usize,
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<T: QuadValue>(f: &dyn Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc.zero_like();
    let mut gauss = fc.zero_like();
    kronrod.add_scaled(WGK[10], &fc);
    for k in 0..10 {
        let dx = half * XGK[k];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod.add_scaled(WGK[k], &f1);
        kronrod.add_scaled(WGK[k], &f2);
        if k % 2 == 1 {
            gauss.add_scaled(WG[k / 2], &f1);
            gauss.add_scaled(WG[k / 2], &f2);
        }
    }
    let mut k_val = kronrod.zero_like();
    k_val.add_scaled(half, &kronrod);
    let mut diff = k_val.clone();
    diff.add_scaled(-half, &gauss);
    let err = diff.norm();
    let err = if err.is_finite() { err } else { f64::INFINITY };
    (k_val, err)
}

/// Integrates over the union of segments to `max(abs_tol, rel_tol·‖I‖)`.
pub fn integrate_segments<T: QuadValue>(
    segments: &[Segment<'_, T>],
    opts: &QuadOptions,
) -> Result<QuadResult<T>> {
    assert!(!segments.is_empty(), "no integration segments");
    let mut heap: BinaryHeap<Panel<T>> = BinaryHeap::new();
    let mut evals = 0;
    for (k, s) in segments.iter().enumerate() {
        if s.b <= s.a {
            continue;
        }
        let (value, error) = gk21(s.f, s.a, s.b);
        evals += 21;
        heap.push(Panel {
            seg: k,
            a: s.a,
            b: s.b,
            value,
            error,
        });
    }
    let mut frozen: Vec<Panel<T>> = Vec::new();
    loop {
        let (total, exact_err) = sum_panels(heap.iter().chain(frozen.iter()), segments);
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if exact_err <= tol {
            return Ok(QuadResult {
                value: total,
                error: exact_err,
                evals,
            });
        }
        // Refine a batch of panels between fixed-order re-summations, tracking
        // the error sum incrementally.
        let mut err = exact_err;
        let mut budget = 1 + heap.len() / 8;
        while budget > 0 {
            budget -= 1;
            if evals + 42 > opts.max_evals || heap.is_empty() || !total.norm().is_finite() {
                return Err(Error::QuadratureFailure {
                    value: total.summary(),
                    error: err,
                });
            }
            let worst = heap.pop().expect("nonempty heap");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a
                || mid >= worst.b
                || (worst.b - worst.a) < 4.0 * f64::EPSILON * mid.abs()
            {
                frozen.push(worst);
                continue;
            }
            let f = segments[worst.seg].f;
            let (v1, e1) = gk21(f, worst.a, mid);
            let (v2, e2) = gk21(f, mid, worst.b);
            evals += 42;
            err += e1 + e2 - worst.error;
            heap.push(Panel {
                seg: worst.seg,
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Panel {
                seg: worst.seg,
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
            if err <= 0.5 * tol {
                break;
            }
        }
    }
}

/// Sums panels in (segment, position) order so results do not depend on the
/// heap layout.
fn sum_panels<'p, T: QuadValue + 'p>(
    panels: impl Iterator<Item = &'p Panel<T>>,
    segments: &[Segment<'_, T>],
) -> (T, f64) {
    let mut list: Vec<&Panel<T>> = panels.collect();
    list.sort_by(|x, y| x.seg.cmp(&y.seg).then(x.a.total_cmp(&y.a)));
    let proto = list
        .first()
        .map(|p| p.value.zero_like())
        .unwrap_or_else(|| (segments[0].f)(segments[0].a).zero_like());
    let mut total = proto;
    let mut err = 0.0;
    for p in list {
        total.add_scaled(1.0, &p.value);
        err += p.error;
    }
    (total, err)
}

pub fn integrate<T: QuadValue>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult<T>> {
    let seg = [Segment { a, b, f: &f }];
    integrate_segments(&seg, opts)
}

/// Which part of the real line an η-integral covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineDomain {
    Full,
    Inner,
    Tails,
}

/// Integrates `f` over ℝ (or over [−c, c], or over |η| ≥ c), splitting the
/// inner interval at `breakpoints` and mapping each tail by
/// η = ±(c + L·u/(1−u)).
pub fn integrate_line<T: QuadValue>(
    f: &dyn Fn(f64) -> T,
    c: f64,
    breakpoints: &[f64],
    tail_scale: f64,
    domain: LineDomain,
    opts: &QuadOptions,
) -> Result<QuadResult<T>> {
    let mut pts = vec![-c];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > -c && x < c).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(c);
    let l = tail_scale;
    let right = |u: f64| -> T {
        let s = 1.0 - u;
        let eta = c + l * u / s;
        let v = f(eta);
        let w = l / (s * s);
        let mut r = v.zero_like();
        if w.is_finite() {
            r.add_scaled(w, &v);
        }
        r
    };
    let left = |u: f64| -> T {
        let s = 1.0 - u;
        let eta = -c - l * u / s;
        let v = f(eta);
        let w = l / (s * s);
        let mut r = v.zero_like();
        if w.is_finite() {
            r.add_scaled(w, &v);
        }
        r
    };
    let mut segments: Vec<Segment<'_, T>> = Vec::new();
    if domain != LineDomain::Tails {
        for w in pts.windows(2) {
            segments.push(Segment { a: w[0], b: w[1], f });
        }
    }
    if domain != LineDomain::Inner {
        segments.push(Segment { a: 0.0, b: 1.0, f: &left });
        segments.push(Segment { a: 0.0, b: 1.0, f: &right });
    }
    integrate_segments(&segments, opts)
}

/// n-point Gauss–Legendre rule on [−1, 1] via Golub–Welsch.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    golub_welsch(jacobi, 2.0)
}

/// n-point Gauss–Hermite rule for weight e^{−x²}.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    golub_welsch(jacobi, std::f64::consts::PI.sqrt())
}

fn golub_welsch(jacobi: nalgebra::DMatrix<f64>, mass: f64) -> (Vec<f64>, Vec<f64>) {
    let n = jacobi.nrows();
    let se = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (se.eigenvalues[k], mass * se.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}
