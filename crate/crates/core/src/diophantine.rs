//! Rational approximation by continued fractions and classical major arcs.
//!
//! A real input is carried as an exact rational together with the number of
//! bits it is known to. Convergents are computed exactly from that rational;
//! callers must supply at least `2 log2(q_max) + 32` bits so that every
//! convergent up to `q_max` is also a convergent of the true number.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{parse_rational, sigma};
use crate::polynomials::{horner_dd, Constant, RealCoefficient};
use crate::precision::{f64_to_rational, rational_to_f64, Dd, DD_BITS};
use crate::weyl::{weyl_sum_values, WeylRange};

/// A real number known to `precision_bits` bits (`None` when exact).
#[derive(Clone, Debug, PartialEq)]
pub struct RealInput {
    pub value: BigRational,
    pub precision_bits: Option<u32>,
}

impl RealInput {
    pub fn exact(value: BigRational) -> Self {
        RealInput { value, precision_bits: None }
    }

    /// The double is taken at face value as an exact dyadic rational.
    pub fn from_f64(x: f64) -> Self {
        RealInput::exact(f64_to_rational(x))
    }

    pub fn from_dd(x: Dd, bits: u32) -> Self {
        RealInput { value: x.to_rational(), precision_bits: Some(bits) }
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.value)
    }

    fn add(self, other: RealInput) -> RealInput {
        let bits = match (self.precision_bits, other.precision_bits) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        RealInput { value: self.value + other.value, precision_bits: bits }
    }
}

/// Parses sums of terms like `355/113 + 1e-9`, `1/2 + 1/2*sqrt2`, `pi - 3`.
impl FromStr for RealInput {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut cur = String::new();
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        for (i, &ch) in chars.iter().enumerate() {
            let exponent_sign = i > 0 && matches!(chars[i - 1], 'e' | 'E') && i > 1 && chars[i - 2].is_ascii_digit();
            if (ch == '+' || ch == '-') && !cur.is_empty() && !exponent_sign {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        if !cur.is_empty() {
            terms.push(cur);
        }
        if terms.is_empty() {
            return Err(Error::Parse("empty expression".into()));
        }
        terms
            .iter()
            .map(|t| parse_term(t))
            .try_fold(RealInput::exact(BigRational::zero()), |acc, t| Ok(acc.add(t?)))
    }
}

fn parse_term(term: &str) -> Result<RealInput> {
    let (sign, body) = match term.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, term.strip_prefix('+').unwrap_or(term)),
    };
    let (coef, atom) = match body.rsplit_once('*') {
        Some((c, a)) => (parse_number(c)?, a),
        None => (BigRational::one(), body),
    };
    let coef = coef * BigInt::from(sign);
    if let Ok(c) = Constant::from_str(atom) {
        let coeff = RealCoefficient::tagged(BigRational::zero(), c, coef);
        // two bits of slack for the stored constant and the multiply
        return Ok(RealInput::from_dd(coeff.value(), DD_BITS - 4));
    }
    Ok(RealInput::exact(coef * parse_number(atom)?))
}

/// Rationals `p/q`, decimals and scientific notation, all exact.
fn parse_number(s: &str) -> Result<BigRational> {
    if s.contains('/') || !s.contains(['.', 'e', 'E']) {
        return parse_rational(s);
    }
    let bad = || Error::Parse(format!("not a number: '{s}'"));
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalApprox {
    pub a: i64,
    pub q: u64,
    /// `alpha - a/q`.
    pub beta: f64,
    /// `|q alpha - a|`.
    pub quality: f64,
}

impl RationalApprox {
    fn new(alpha: &BigRational, a: &BigInt, q: &BigInt) -> Result<Self> {
        let beta = alpha - BigRational::new(a.clone(), q.clone());
        let quality = (&beta * q).abs();
        Ok(RationalApprox {
            a: a.to_i64().ok_or_else(|| Error::Domain("numerator exceeds 64 bits".into()))?,
            q: q.to_u64().ok_or_else(|| Error::Domain("denominator exceeds 64 bits".into()))?,
            beta: rational_to_f64(&beta),
            quality: rational_to_f64(&quality),
        })
    }
}

fn check_precision(alpha: &RealInput, q_max: u64) -> Result<()> {
    if let Some(have) = alpha.precision_bits {
        let need = (2.0 * (q_max as f64).log2() + 32.0).ceil() as u32;
        if have < need {
            return Err(Error::Precision { have, need });
        }
    }
    Ok(())
}

/// All continued-fraction convergents `a/q` with `q <= q_max`, in increasing `q`.
pub fn best_approximations(alpha: &RealInput, q_max: u64) -> Result<Vec<RationalApprox>> {
    if q_max < 1 {
        return Err(Error::Domain("q_max must be >= 1".into()));
    }
    check_precision(alpha, q_max)?;
    let limit = BigInt::from(q_max);
    let mut out = Vec::new();
    // (p_{n-1}, q_{n-1}), (p_{n-2}, q_{n-2})
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
    let mut x = alpha.value.clone();
    loop {
        let a = x.floor().to_integer();
        let p = &a * &p1 + &p2;
        let q = &a * &q1 + &q2;
        if q > limit {
            break;
        }
        out.push(RationalApprox::new(&alpha.value, &p, &q)?);
        let frac = &x - BigRational::from_integer(a);
        if frac.is_zero() {
            break;
        }
        x = frac.recip();
        p2 = std::mem::replace(&mut p1, p);
        q2 = std::mem::replace(&mut q1, q);
    }
    Ok(out)
}

/// `(P^{d sigma(d)}, P^{d sigma(d) - d})`: the denominator and closeness bounds.
pub fn major_arc_bounds(p: f64, d: u32) -> Result<(f64, f64)> {
    let s = sigma(d)?;
    let ds = d as f64 * rational_to_f64(&s);
    Ok((p.powf(ds), p.powf(ds - d as f64)))
}

/// Smallest-`q` approximation with `0 < q < P^{d sigma(d)}` and
/// `|q alpha - a| < P^{d sigma(d) - d}`, or `None` on a minor-arc point.
pub fn classify_major_arc(alpha: &RealInput, p: f64, d: u32) -> Result<Option<RationalApprox>> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("P must exceed 1, got {p}")));
    }
    let (q_bound, closeness) = major_arc_bounds(p, d)?;
    // strict q < q_bound
    let q_max = (q_bound.ceil() as u64).saturating_sub(1).max(1);
    let convergents = best_approximations(alpha, q_max)?;
    Ok(convergents
        .into_iter()
        .find(|r| (r.q as f64) < q_bound && r.quality < closeness))
}

/// `q^{-1/d} P (1 + P^d |beta|)^{-1/d}`.
pub fn major_arc_envelope(q: u64, beta: f64, p: f64, d: u32) -> f64 {
    let d = d as f64;
    (q as f64).powf(-1.0 / d) * p * (1.0 + p.powf(d) * beta.abs()).powf(-1.0 / d)
}

#[derive(Clone, Debug, Serialize)]
pub struct HuaReport {
    pub p: f64,
    pub u: u32,
    pub arcs: usize,
    pub points: usize,
    /// Riemann sum of `|g|^u` over classified major-arc points of `[0, 1]`.
    pub integral: f64,
    /// `integral / P^{u-k}`.
    pub normalized: f64,
}

/// Riemann sum of `|g(alpha)|^u` over the major arcs of `[0, 1]`, with
/// `g(alpha) = sum_{0 < x <= P} e(alpha h(x))`.
///
/// The major arcs have width of order `P^{-k}`, far below any uniform grid
/// spacing, so the `points` grid nodes are distributed over the arcs in
/// proportion to their lengths (midpoint rule on each arc). Every node is
/// re-classified and kept only if its smallest-`q` approximation is the arc it
/// was generated for.
pub fn hua_major_arc_moment(h: &[RealCoefficient], p: f64, u: u32, points: usize) -> Result<HuaReport> {
    let k = (h.len() - 1) as u32;
    let (q_bound, closeness) = major_arc_bounds(p, k)?;
    let mut arcs = Vec::new();
    let mut q = 1u64;
    while (q as f64) < q_bound {
        for a in 0..=q {
            if a.gcd(&q) != 1 {
                continue;
            }
            let centre = BigRational::new(BigInt::from(a), BigInt::from(q));
            let half = closeness / q as f64;
            let c = a as f64 / q as f64;
            let lo = (c - half).max(0.0);
            let hi = (c + half).min(1.0);
            if hi > lo {
                arcs.push((a, q, centre, lo, hi));
            }
        }
        q += 1;
    }
    let total: f64 = arcs.iter().map(|(_, _, _, lo, hi)| hi - lo).sum();
    let range = WeylRange::new(0.0, 1.0, p)?;
    let (x_lo, x_hi) = range.bounds();
    let values: Vec<Dd> = (x_lo..=x_hi).map(|x| horner_dd(h, x)).collect();

    let per_arc: Vec<Result<(f64, usize)>> = arcs
        .par_iter()
        .map(|(a, q, _, lo, hi)| {
            let n = ((points as f64) * (hi - lo) / total).round().max(2.0) as usize;
            let step = (hi - lo) / n as f64;
            let mut sum = 0.0;
            let mut kept = 0;
            for i in 0..n {
                let alpha = lo + (i as f64 + 0.5) * step;
                match classify_major_arc(&RealInput::from_f64(alpha), p, k)? {
                    Some(r) if r.q == *q && r.a == *a as i64 => {
                        sum += weyl_sum_values(&values, alpha).norm().powi(u as i32) * step;
                        kept += 1;
                    }
                    _ => {}
                }
            }
            Ok((sum, kept))
        })
        .collect();
    let mut integral = 0.0;
    let mut kept = 0;
    for r in per_arc {
        let (s, n) = r?;
        integral += s;
        kept += n;
    }
    Ok(HuaReport {
        p,
        u,
        arcs: arcs.len(),
        points: kept,
        integral,
        normalized: integral / p.powi(u as i32 - k as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn pi_convergents() {
        let pi: RealInput = "pi".parse().unwrap();
        let c = best_approximations(&pi, 10).unwrap();
        let pairs: Vec<(i64, u64)> = c.iter().map(|r| (r.a, r.q)).collect();
        assert_eq!(pairs, vec![(3, 1), (22, 7)]);
        assert!((c[1].quality - 0.008_851_424_871_447_6).abs() < 1e-15);
    }

    #[test]
    fn rational_input_terminates() {
        let third = RealInput::exact(rat(1, 3));
        let c = best_approximations(&third, 1000).unwrap();
        let last = c.last().unwrap();
        assert_eq!((last.a, last.q), (1, 3));
        assert_eq!(last.quality, 0.0);
    }

    #[test]
    fn golden_ratio_has_fibonacci_denominators() {
        let phi: RealInput = "golden".parse().unwrap();
        let qs: Vec<u64> = best_approximations(&phi, 100).unwrap().iter().map(|r| r.q).collect();
        assert_eq!(qs, vec![1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
    }

    #[test]
    fn precision_contract_enforced() {
        let coarse = RealInput { value: rat(314, 100), precision_bits: Some(40) };
        assert!(matches!(best_approximations(&coarse, 1000), Err(Error::Precision { have: 40, need: 52 })));
        assert!(best_approximations(&coarse, 10).is_ok());
    }

    #[test]
    fn expression_parsing() {
        let x: RealInput = "355/113 + 1e-9".parse().unwrap();
        assert_eq!(x.value, rat(355, 113) + rat(1, 1_000_000_000));
        assert_eq!(x.precision_bits, None);
        let y: RealInput = "pi - 3".parse().unwrap();
        assert!((y.to_f64() - (std::f64::consts::PI - 3.0)).abs() < 1e-15);
        assert!(y.precision_bits.is_some());
        let z: RealInput = "1/2*sqrt2".parse().unwrap();
        assert!((z.to_f64() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-16);
        assert_eq!("-2.5e1".parse::<RealInput>().unwrap().value, rat(-25, 1));
        assert!("pie".parse::<RealInput>().is_err());
    }

    #[test]
    fn exact_rational_on_major_arc() {
        let r = classify_major_arc(&RealInput::exact(rat(3, 7)), 1e4, 2).unwrap().unwrap();
        assert_eq!((r.a, r.q, r.quality), (3, 7, 0.0));
    }

    #[test]
    fn half_plus_small_offset() {
        let p = 100.0f64;
        let alpha = RealInput::exact(rat(1, 2) + rat(1, 100_000_000));
        let r = classify_major_arc(&alpha, p, 4).unwrap().unwrap();
        assert_eq!((r.a, r.q), (1, 2));
        assert!((r.quality - 2e-8).abs() < 1e-20);
        assert!(r.quality < p.powf(0.5 - 4.0));
    }

    #[test]
    fn golden_ratio_is_minor() {
        let phi: RealInput = "golden".parse().unwrap();
        for &p in &[50.0, 200.0, 1000.0] {
            for d in 3..=6 {
                assert!(classify_major_arc(&phi, p, d).unwrap().is_none(), "P = {p}, d = {d}");
            }
        }
        // for d = 2 the window (P/sqrt5, P) always holds a Fibonacci denominator
        assert!(classify_major_arc(&phi, 200.0, 2).unwrap().is_some());
    }

    #[test]
    fn envelope_values() {
        assert_eq!(major_arc_envelope(1, 0.0, 37.0, 4), 37.0);
        assert!((major_arc_envelope(1 << 40, 0.0, 37.0, 4) - 37.0 / 1024.0).abs() < 1e-12);
        assert!(major_arc_envelope(3, 1e-3, 37.0, 4) < major_arc_envelope(3, 0.0, 37.0, 4));
    }
}
