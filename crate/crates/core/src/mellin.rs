//! Mellin transform M[f](z) = Γ(z)⁻¹∫₀^∞ f(t) t^{z−1} dt with meromorphic
//! continuation from a small-t asymptotic series, and the Riemann zeta
//! function on Re z > 1.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::series::{bernoulli, gamma, nonpositive_integer, recip_gamma, EULER_GAMMA};

pub const ZETA_AT_ZERO: f64 = -0.5;
/// ζ′(0) = −½ log 2π.
pub const ZETA_PRIME_AT_ZERO: f64 = -0.918_938_533_204_672_8;
/// Γ′(1) = −γ.
pub const GAMMA_PRIME_ONE: f64 = -EULER_GAMMA;

/// f(t) ~ Σ_j coeffs[j]·t^{−m+j} as t → 0⁺.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticSeries {
    pub m: u32,
    pub coeffs: Vec<f64>,
}

impl AsymptoticSeries {
    pub fn new(m: u32, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < m as usize + 1 {
            return Err(Error::InsufficientSeries {
                needed: m as usize + 1,
                available: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Validation("series coefficients must be finite".into()));
        }
        Ok(Self { m, coeffs })
    }

    /// The t⁰ coefficient.
    pub fn f0(&self) -> f64 {
        self.coeffs[self.m as usize]
    }

    fn exponent(&self, j: usize) -> f64 {
        j as f64 - self.m as f64
    }

    /// Partial sum Σ_{j≤upto} coeffs[j] t^{−m+j}.
    fn partial(&self, t: f64, upto: usize) -> f64 {
        self.coeffs[..=upto]
            .iter()
            .enumerate()
            .map(|(j, c)| c * t.powf(self.exponent(j)))
            .sum()
    }
}

/// A function on (0, ∞) with |f(t)| ≤ bound·e^{−rate·t} for t ≥ 1.
pub struct DecayingTrace<'a> {
    eval: Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>,
    rate: f64,
    bound: f64,
}

impl<'a> DecayingTrace<'a> {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'a, rate: f64, bound: f64) -> Result<Self> {
        if !(rate > 0.0 && bound > 0.0 && rate.is_finite() && bound.is_finite()) {
            return Err(Error::Validation(format!(
                "decay certificate needs positive constants, got c = {rate}, C = {bound}"
            )));
        }
        Ok(Self {
            eval: Box::new(f),
            rate,
            bound,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    /// Smallest T ≥ 1 with C e^{−cT} T^p below `target`.
    fn truncation(&self, p: f64, target: f64) -> f64 {
        let mut t: f64 = 1.0;
        let step = 1.0 / self.rate;
        while self.bound * (-self.rate * t).exp() * t.powf(p) >= target && t < 1e7 {
            t += step;
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MellinOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// On (0, cutoff] the remainder is replaced by the series terms beyond the
    /// subtraction order. `None` picks the cutoff where the last available
    /// term drops below the tolerance; `Some(0.0)` disables the region.
    pub series_cutoff: Option<f64>,
}

impl Default for MellinOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            series_cutoff: None,
        }
    }
}

impl MellinOptions {
    fn quad(&self) -> QuadOptions {
        QuadOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            ..QuadOptions::default()
        }
    }

    /// Cutoff for a remainder starting after term `upto`.
    fn cutoff(&self, s: &AsymptoticSeries, upto: usize) -> f64 {
        if let Some(c) = self.series_cutoff {
            return c.clamp(0.0, 1.0);
        }
        let scale = s.coeffs[..=upto].iter().fold(0.0f64, |a, c| a.max(c.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let last = (upto + 1..s.coeffs.len())
            .rev()
            .find(|&j| s.coeffs[j] != 0.0 && s.exponent(j) > 0.0);
        match last {
            Some(j) => {
                let t = (self.rel_tol * scale / s.coeffs[j].abs()).powf(1.0 / s.exponent(j));
                t.min(0.5)
            }
            None => 0.0,
        }
    }
}

/// A value together with its accumulated error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

pub fn mellin_value(f: &DecayingTrace<'_>, s: &AsymptoticSeries, z: Complex64) -> Result<Complex64> {
    mellin_value_with(f, s, z, &MellinOptions::default())
}

pub fn mellin_value_with(
    f: &DecayingTrace<'_>,
    s: &AsymptoticSeries,
    z: Complex64,
    opts: &MellinOptions,
) -> Result<Complex64> {
    let m = s.m as i64;
    // Smallest N ≥ 0 with Re z > m − N − 1/2.
    let n_sub = ((m as f64 - 0.5 - z.re).floor() + 1.0).max(0.0) as usize;
    if n_sub >= s.coeffs.len() {
        return Err(Error::InsufficientSeries {
            needed: n_sub + 1,
            available: s.coeffs.len(),
        });
    }
    for j in 0..=n_sub {
        let p = m - j as i64;
        if (z - Complex64::new(p as f64, 0.0)).norm() < 1e-12 {
            let c = s.coeffs[j];
            if p >= 1 {
                if c != 0.0 {
                    return Err(Error::Pole {
                        z,
                        residue: c / gamma(Complex64::new(p as f64, 0.0)).re,
                    });
                }
            } else {
                // Only this pole survives against the zero of 1/Γ:
                // lim (z − p)/Γ(z) = (−1)^k k!, k = −p.
                let k = (-p) as u32;
                let fact: f64 = (1..=k).map(f64::from).product();
                let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                return Ok(Complex64::new(c * sign * fact, 0.0));
            }
        }
    }

    let qo = opts.quad();
    let cutoff = opts.cutoff(s, n_sub);
    let mut head = Complex64::new(0.0, 0.0);
    if cutoff > 0.0 {
        for j in n_sub + 1..s.coeffs.len() {
            let e = z + s.exponent(j);
            head += s.coeffs[j] * Complex64::new(cutoff, 0.0).powc(e) / e;
        }
    }
    // t = u² removes the t^{−1/2} endpoint behaviour of the remainder.
    let near = |u: f64| -> Complex64 {
        let t = u * u;
        let r = f.eval(t) - s.partial(t, n_sub);
        2.0 * r * Complex64::new(u, 0.0).powc(2.0 * z - 1.0)
    };
    let i1 = integrate(near, cutoff.sqrt(), 1.0, &qo)?;
    let poles: Complex64 = (0..=n_sub)
        .map(|j| s.coeffs[j] / (z + s.exponent(j)))
        .sum();
    let t_max = f.truncation((z.re - 1.0).max(0.0), 0.1 * opts.abs_tol);
    let far = |t: f64| f.eval(t) * Complex64::new(t, 0.0).powc(z - 1.0);
    let i2 = integrate(far, 1.0, t_max, &qo)?;
    Ok(recip_gamma(z) * (head + i1.value + poles + i2.value))
}

/// M[f](0) = f_0, after checking it against the numeric continuation.
pub fn mellin_at_zero(f: &DecayingTrace<'_>, s: &AsymptoticSeries) -> Result<f64> {
    mellin_at_zero_with(f, s, &MellinOptions::default())
}

pub fn mellin_at_zero_with(f: &DecayingTrace<'_>, s: &AsymptoticSeries, opts: &MellinOptions) -> Result<f64> {
    let f0 = s.f0();
    let numeric = continuation_at_zero(f, s, opts).unwrap_or(f64::NAN);
    if !((numeric - f0).abs() <= 1e-8 * f0.abs().max(1.0)) {
        return Err(Error::SeriesMismatch { series: f0, numeric });
    }
    Ok(f0)
}

/// Mean of M[f] over a circle of radius 1/8 about 0. M[f] is holomorphic
/// there, so the trapezoid mean converges geometrically to M[f](0).
pub fn continuation_at_zero(f: &DecayingTrace<'_>, s: &AsymptoticSeries, opts: &MellinOptions) -> Result<f64> {
    const K: usize = 16;
    let radius = 0.125;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..K {
        let theta = 2.0 * PI * (k as f64 + 0.5) / K as f64;
        let z = Complex64::from_polar(radius, theta);
        acc += mellin_value_with(f, s, z, opts)?;
    }
    Ok(acc.re / K as f64)
}

/// d/dz M[f](z) at z = 0.
pub fn mellin_deriv_zero(f: &DecayingTrace<'_>, s: &AsymptoticSeries) -> Result<Estimate> {
    mellin_deriv_zero_with(f, s, &MellinOptions::default())
}

pub fn mellin_deriv_zero_with(
    f: &DecayingTrace<'_>,
    s: &AsymptoticSeries,
    opts: &MellinOptions,
) -> Result<Estimate> {
    let k = s.m as usize;
    let qo = opts.quad();
    let cutoff = opts.cutoff(s, k);
    let head: f64 = if cutoff > 0.0 {
        (k + 1..s.coeffs.len())
            .map(|j| s.coeffs[j] * cutoff.powf(s.exponent(j)) / s.exponent(j))
            .sum()
    } else {
        0.0
    };
    let near = |t: f64| (f.eval(t) - s.partial(t, k)) / t;
    let i1 = integrate(near, cutoff, 1.0, &qo)?;
    let t_max = f.truncation(0.0, 0.1 * opts.abs_tol);
    let far = |t: f64| f.eval(t) / t;
    let i2 = integrate(far, 1.0, t_max, &qo)?;
    let poles: f64 = (0..k).map(|j| s.coeffs[j] / s.exponent(j)).sum();
    Ok(Estimate {
        value: head + i1.value + i2.value + poles - GAMMA_PRIME_ONE * s.f0(),
        error: i1.error + i2.error,
    })
}

/// Riemann ζ(z) for Re z > 1 by Euler–Maclaurin summation.
pub fn zeta(z: Complex64) -> Result<Complex64> {
    if z.re <= 1.0 {
        if z.norm() == 0.0 {
            return Ok(Complex64::new(ZETA_AT_ZERO, 0.0));
        }
        return Err(Error::Unsupported(format!(
            "ζ({z}) needs continuation beyond Re z > 1"
        )));
    }
    const N: usize = 24;
    const M: usize = 12;
    let one = Complex64::new(1.0, 0.0);
    let mut sum: Complex64 = (1..N).map(|k| Complex64::new(k as f64, 0.0).powc(-z)).sum();
    let nf = Complex64::new(N as f64, 0.0);
    sum += nf.powc(one - z) / (z - 1.0) + 0.5 * nf.powc(-z);
    let b = bernoulli(2 * M);
    let mut rising = z; // z(z+1)…(z+2j−2)
    let mut fact = 2.0; // (2j)!
    for j in 1..=M {
        sum += b[2 * j] / fact * rising * nf.powc(-z - (2 * j - 1) as f64);
        rising *= (z + (2 * j - 1) as f64) * (z + (2 * j) as f64);
        fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
    }
    Ok(sum)
}

/// Real ζ: Euler–Maclaurin for x > 1 and the pinned value at 0.
pub fn zeta_eval(x: f64) -> Result<f64> {
    Ok(zeta(Complex64::new(x, 0.0))?.re)
}

/// True when z lies on a pole of Γ; used by callers for contract checks.
pub fn is_gamma_pole(z: Complex64) -> bool {
    nonpositive_integer(z).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_trace(lambda: f64) -> (DecayingTrace<'static>, AsymptoticSeries) {
        let f = DecayingTrace::new(move |t| (-lambda * t).exp(), lambda, 1.0).unwrap();
        let coeffs = (0..6)
            .map(|j| (-lambda).powi(j) / (1..=j).product::<i32>().max(1) as f64)
            .collect();
        (f, AsymptoticSeries::new(0, coeffs).unwrap())
    }

    #[test]
    fn exponential_values() {
        let (f, s) = exp_trace(1.0);
        for &z in &[2.0, 0.5, -1.3] {
            let v = mellin_value(&f, &s, Complex64::new(z, 0.0)).unwrap();
            assert!((v.re - 1.0).abs() < 1e-9 && v.im.abs() < 1e-9, "z = {z}: {v}");
        }
        let (f2, s2) = exp_trace(2.0);
        let v = mellin_value(&f2, &s2, Complex64::new(3.0, 0.0)).unwrap();
        assert!((v.re - 0.125).abs() < 1e-10);
    }

    #[test]
    fn shifted_exponential_pole_and_value() {
        let f = DecayingTrace::new(|t: f64| (-t).exp() / t, 1.0, 1.0).unwrap();
        let s = AsymptoticSeries::new(1, vec![1.0, -1.0, 0.5, -1.0 / 6.0]).unwrap();
        let v = mellin_value(&f, &s, Complex64::new(3.0, 0.0)).unwrap();
        assert!((v.re - 0.5).abs() < 1e-10);
        assert!(matches!(
            mellin_value(&f, &s, Complex64::new(1.0, 0.0)),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn zeta_basel_and_pinned() {
        assert!((zeta_eval(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-12);
        assert_eq!(zeta_eval(0.0).unwrap(), -0.5);
        assert!(matches!(zeta_eval(0.5), Err(Error::Unsupported(_))));
        assert!((ZETA_PRIME_AT_ZERO + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
    }
}
