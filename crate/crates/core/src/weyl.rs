//! Weyl sums `g(a) = sum_{bP < x <= cP} e(a h(x))` and their continuous analogues.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polynomials::{horner_dd, RealCoefficient};
use crate::precision::Dd;
use crate::quadrature::{integrate, QuadOptions, QuadResult};

/// Largest number of terms a single Weyl sum may have.
pub const MAX_TERMS: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylRange {
    pub b: f64,
    pub c: f64,
    pub p: f64,
}

impl WeylRange {
    pub fn new(b: f64, c: f64, p: f64) -> Result<Self> {
        if !(b >= 0.0 && c > b && p > 0.0) {
            return Err(Error::Domain(format!("need 0 <= b < c and P > 0, got b={b}, c={c}, P={p}")));
        }
        Ok(WeylRange { b, c, p })
    }

    /// Integers `x` with `bP < x <= cP`, as `(first, last)`.
    pub fn bounds(&self) -> (i64, i64) {
        ((self.b * self.p).floor() as i64 + 1, (self.c * self.p).floor() as i64)
    }

    pub fn len(&self) -> u64 {
        let (lo, hi) = self.bounds();
        (hi - lo + 1).max(0) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `e(x) = exp(2 pi i x)` of a phase already reduced mod 1.
#[inline]
pub fn e_frac(frac: Dd) -> Complex64 {
    let theta = 2.0 * PI * frac.to_f64();
    Complex64::new(theta.cos(), theta.sin())
}

/// `e(alpha h(x))` with the phase reduced mod 1 in double-double.
#[inline]
pub fn phase_term(alpha: f64, hx: Dd) -> Complex64 {
    e_frac((hx.mul_f64(alpha)).fract())
}

pub fn weyl_sum(h: &[RealCoefficient], range: &WeylRange, alpha: f64) -> Result<Complex64> {
    let n = range.len();
    if n > MAX_TERMS {
        return Err(Error::Budget { required: n as u128, limit: MAX_TERMS as u128 });
    }
    let (lo, hi) = range.bounds();
    let mut acc = Complex64::new(0.0, 0.0);
    for x in lo..=hi {
        acc += phase_term(alpha, horner_dd(h, x));
    }
    Ok(acc)
}

/// Weyl sum from precomputed values `h(x)`, in the given order.
pub fn weyl_sum_values(values: &[Dd], alpha: f64) -> Complex64 {
    values.iter().map(|&v| phase_term(alpha, v)).sum()
}

/// `|g|` on a grid of `alpha`, evaluated in parallel, returned in grid order.
pub fn weyl_profile(h: &[RealCoefficient], range: &WeylRange, alphas: &[f64]) -> Result<Vec<Complex64>> {
    let n = range.len();
    if n > MAX_TERMS {
        return Err(Error::Budget { required: n as u128, limit: MAX_TERMS as u128 });
    }
    let (lo, hi) = range.bounds();
    let values: Vec<Dd> = (lo..=hi).map(|x| horner_dd(h, x)).collect();
    Ok(alphas.par_iter().map(|&a| weyl_sum_values(&values, a)).collect())
}

fn eval_f64(h: &[f64], x: f64) -> f64 {
    h.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative(h: &[f64]) -> Vec<f64> {
    h.iter().enumerate().skip(1).map(|(j, &c)| j as f64 * c).collect()
}

/// Real roots of the polynomial `p` inside `(a, b)`, located by sign changes
/// on a fine grid and refined by bisection.
fn roots_in(p: &[f64], a: f64, b: f64) -> Vec<f64> {
    const GRID: usize = 4096;
    let mut roots = Vec::new();
    let mut prev_x = a;
    let mut prev = eval_f64(p, a);
    for i in 1..=GRID {
        let x = a + (b - a) * i as f64 / GRID as f64;
        let fx = eval_f64(p, x);
        if fx == 0.0 && x < b {
            roots.push(x);
        } else if prev != 0.0 && prev.signum() != fx.signum() {
            let (mut l, mut r) = (prev_x, x);
            for _ in 0..80 {
                let m = 0.5 * (l + r);
                if eval_f64(p, m).signum() == eval_f64(p, l).signum() {
                    l = m;
                } else {
                    r = m;
                }
            }
            roots.push(0.5 * (l + r));
        }
        prev_x = x;
        prev = fx;
    }
    roots
}

/// `int_{x1}^{x2} e(alpha h(x)) dx`.
///
/// Panels are placed at the stationary points of `h` and then so that each
/// covers at most half a turn of the phase.
pub fn oscillatory_integral(h: &[RealCoefficient], x1: f64, x2: f64, alpha: f64, tol: f64) -> Result<QuadResult> {
    if !(tol > 0.0) {
        return Err(Error::Domain("tol must be positive".into()));
    }
    if alpha == 0.0 {
        return Ok(QuadResult { value: Complex64::new(x2 - x1, 0.0), error: 0.0, evaluations: 0 });
    }
    let coeffs: Vec<f64> = h.iter().map(|c| c.value().to_f64()).collect();
    let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
    let dh = derivative(&coeffs);
    let mut breaks = roots_in(&dh, lo, hi);

    // walk the phase so that no panel spans more than half a cycle
    let mut x = lo;
    let mut phase_breaks = Vec::new();
    let max_step = (hi - lo) / 4.0;
    while x < hi {
        let rate = (alpha * eval_f64(&dh, x)).abs();
        let step = if rate > 0.0 { (0.5 / rate).min(max_step) } else { max_step };
        let step = step.max((hi - lo) * 1e-9);
        x += step;
        if x < hi {
            phase_breaks.push(x);
        }
        if phase_breaks.len() > 50_000_000 {
            return Err(Error::Budget { required: phase_breaks.len() as u128, limit: 50_000_000 });
        }
    }
    breaks.extend(phase_breaks);

    let f = |x: f64| {
        let theta = 2.0 * PI * (alpha * eval_f64(&coeffs, x)).rem_euclid(1.0);
        Complex64::new(theta.cos(), theta.sin())
    };
    let r = integrate(f, x1, x2, &breaks, QuadOptions { tol, max_panels: 4_000_000 })?;
    Ok(r)
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
