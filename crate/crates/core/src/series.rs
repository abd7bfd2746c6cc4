//! Scalar special functions and series utilities shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Bernoulli numbers B_0..=B_m (with B_1 = −1/2).
pub fn bernoulli(m: usize) -> Vec<f64> {
    let mut b = vec![0.0; m + 1];
    b[0] = 1.0;
    for k in 1..=m {
        // Σ_{j<k+1} C(k+1, j) B_j = 0
        let mut acc = 0.0;
        let mut binom = 1.0;
        for (j, bj) in b.iter().enumerate().take(k) {
            acc += binom * bj;
            binom *= (k + 1 - j) as f64 / (j + 1) as f64;
        }
        b[k] = -acc / (k + 1) as f64;
    }
    b
}

/// Coefficients c_k of 1/(1 − e^x) = −1/x + Σ_{k≥0} c_k x^k, k = 0..=m.
pub fn inv_one_minus_exp_coeffs(m: usize) -> Vec<f64> {
    let b = bernoulli(m + 1);
    // x/(e^x − 1) = Σ B_j x^j / j!, so 1/(1 − e^x) = −Σ B_j x^{j−1}/j!.
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(m + 1);
    for j in 1..=m + 1 {
        fact *= j as f64;
        out.push(-b[j] / fact);
    }
    out
}

/// `1/(1 − e^x)` with a Laurent branch near the pole.
pub fn inv_one_minus_exp(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        -1.0 / x + 0.5 - x / 12.0 + x * x * x / 720.0
    } else {
        -1.0 / x.exp_m1()
    }
}

/// `x/(e^x − 1)` for x ≥ 0, finite at 0.
pub fn bose(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x / 2.0 + x * x / 12.0
    } else {
        x / x.exp_m1()
    }
}

/// e^z − 1 without cancellation for small |z|.
pub fn expm1_complex(z: Complex64) -> Complex64 {
    let half_sin = (0.5 * z.im).sin();
    Complex64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * half_sin * half_sin,
        z.re.exp() * z.im.sin(),
    )
}

/// z/(e^z − 1), finite at 0 and zero once e^z overflows.
pub fn bose_complex(z: Complex64) -> Complex64 {
    if z.norm() < 1e-8 {
        1.0 - z / 2.0
    } else if z.re > 700.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z / expm1_complex(z)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(z) by the Lanczos approximation with reflection for Re z < 1/2.
pub fn gamma(z: Complex64) -> Complex64 {
    let pi = std::f64::consts::PI;
    if z.re < 0.5 {
        pi / ((z * pi).sin() * gamma(Complex64::new(1.0, 0.0) - z))
    } else {
        let z = z - 1.0;
        let mut x = Complex64::new(LANCZOS[0], 0.0);
        for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
            x += p / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        (2.0 * pi).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
    }
}

/// 1/Γ(z), exactly zero at nonpositive integers.
pub fn recip_gamma(z: Complex64) -> Complex64 {
    if nonpositive_integer(z).is_some() {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        let pi = std::f64::consts::PI;
        (z * pi).sin() * gamma(Complex64::new(1.0, 0.0) - z) / pi
    } else {
        1.0 / gamma(z)
    }
}

/// Returns k when z is within 1e-12 of −k, k ∈ ℕ₀.
pub fn nonpositive_integer(z: Complex64) -> Option<u32> {
    let r = z.re.round();
    if r <= 0.0 && (z.re - r).abs() < 1e-12 && z.im.abs() < 1e-12 {
        Some((-r) as u32)
    } else {
        None
    }
}

/// Elementary symmetric polynomials e_0..e_n of `x` by the product recurrence
/// for Π(1 + s x_j).
pub fn elementary_symmetric(x: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; x.len() + 1];
    e[0] = 1.0;
    for (k, &xk) in x.iter().enumerate() {
        for q in (1..=k + 1).rev() {
            e[q] += xk * e[q - 1];
        }
    }
    e
}

/// Coefficients of Π_j (u_j + s·v_j) in s.
pub fn product_poly(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; u.len() + 1];
    p[0] = 1.0;
    for (k, (&uk, &vk)) in u.iter().zip(v).enumerate() {
        for q in (0..=k + 1).rev() {
            let shifted = if q > 0 { p[q - 1] * vk } else { 0.0 };
            p[q] = p[q] * uk + shifted;
        }
    }
    p
}

/// Least-squares polynomial fit y ≈ Σ_{j≤degree} c_j t^j in a Chebyshev basis
/// on [0, t_max]; returns monomial coefficients c_j.
pub fn fit_power_series(ts: &[f64], ys: &[f64], degree: usize, t_max: f64) -> Result<Vec<f64>> {
    let cheb = chebyshev_fit(ts, ys, degree, t_max)?;
    Ok(taylor_at_zero(&cheb, t_max))
}

fn chebyshev_fit(ts: &[f64], ys: &[f64], degree: usize, t_max: f64) -> Result<Vec<f64>> {
    let m = degree + 1;
    if ts.len() < m || ts.len() != ys.len() {
        return Err(Error::Validation(format!(
            "power-series fit of degree {degree} needs at least {m} samples, got {}",
            ts.len()
        )));
    }
    let x = |t: f64| 2.0 * t / t_max - 1.0;
    let design = DMatrix::<f64>::from_fn(ts.len(), m, |i, k| chebyshev_t(k, x(ts[i])));
    let rhs = DVector::from_column_slice(ys);
    let svd = design.svd(true, true);
    let cheb = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Validation(format!("least-squares fit failed: {e}")))?;
    Ok(cheb.iter().copied().collect())
}

fn taylor_at_zero(cheb: &[f64], t_max: f64) -> Vec<f64> {
    let m = cheb.len();
    // Taylor coefficients at t = 0 (x = −1) from
    // T_k^{(j)}(−1) = (−1)^{k+j} Π_{i<j} (k² − i²)/(2i + 1).
    let scale = 2.0 / t_max;
    let mut mono_t = vec![0.0; m];
    for (j, c) in mono_t.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &a) in cheb.iter().enumerate().skip(j) {
            let mut d = 1.0;
            for i in 0..j {
                let (k, i) = (k as f64, i as f64);
                d *= (k * k - i * i) / ((2.0 * i + 1.0) * (i + 1.0));
            }
            let sign = if (k + j) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * a * d;
        }
        *c = acc * scale.powi(j as i32);
    }
    mono_t
}

fn chebyshev_t(k: usize, x: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, x);
    match k {
        0 => t0,
        _ => {
            for _ in 1..k {
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            t1
        }
    }
}

/// Coefficients c_j of (log(1 − x))² = Σ_{j≥2} c_j x^j, j = 0..=m.
pub fn log1m_squared_coeffs(m: usize) -> Vec<f64> {
    let l: Vec<f64> = (0..=m)
        .map(|j| if j == 0 { 0.0 } else { -1.0 / j as f64 })
        .collect();
    (0..=m)
        .map(|j| (0..=j).map(|i| l[i] * l[j - i]).sum())
        .collect()
}
