//! Exact exponent bookkeeping for diminishing-range arguments.
//!
//! Everything here is computed over `BigRational`. The k-goodness predicate is
//! an equality test on `E*`, so no float ever enters a decision; floats only
//! appear in [`large_k_envelope`], which is for display and comparison.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rational = BigRational;

fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn floor_to_i64(r: &Rational) -> i64 {
    r.floor().to_integer().to_i64().unwrap_or(i64::MAX)
}

/// Per-variable Weyl saving: `1/2^(d-1)` for `d <= 8`, `1/(4(d^2-3d+3))` for `d >= 9`.
pub fn sigma(d: u32) -> Result<Rational> {
    if d < 2 {
        return Err(Error::Domain(format!("sigma(d) needs d >= 2, got {d}")));
    }
    Ok(sigma_unchecked(d))
}

// d = 1 is allowed internally: v = sigma(k-1) for k = 2 gives 2^0.
fn sigma_unchecked(d: u32) -> Rational {
    if d <= 8 {
        Rational::new(BigInt::one(), BigInt::one() << (d - 1))
    } else {
        let d = d as i64;
        rat(1, 4 * (d * d - 3 * d + 3))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeVariant {
    /// `lambda = 1 - 1/k`.
    Classic,
    /// `lambda = 1 - (1 - v)/k` with `v = sigma(k-1)`.
    Slow,
}

impl std::str::FromStr for RangeVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(RangeVariant::Classic),
            "slow" => Ok(RangeVariant::Slow),
            other => Err(Error::Parse(format!("unknown range variant '{other}'"))),
        }
    }
}

/// Exponent data for one `(k, t, variant)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentProfile {
    pub k: u32,
    pub variant: RangeVariant,
    pub t: u32,
    pub v: Rational,
    pub lambda: Rational,
    /// `lambda^(j-1)` for `j = 1..=t`.
    pub lambdas: Vec<Rational>,
    pub delta: Rational,
    /// `e_1..e_t`; empty for the classic variant.
    pub e_values: Vec<Rational>,
    /// `max(0, e_1, ..., e_t)`; zero for the classic variant.
    pub e_star: Rational,
}

impl ExponentProfile {
    /// `lambda_j` with the convention `lambda_{t+1} = 0`.
    pub fn lambda_at(&self, j: usize) -> Rational {
        if j >= 1 && j <= self.lambdas.len() {
            self.lambdas[j - 1].clone()
        } else {
            Rational::zero()
        }
    }
}

pub fn build_profile(k: u32, t: u32, variant: RangeVariant) -> Result<ExponentProfile> {
    if k < 2 {
        return Err(Error::Domain(format!("degree k must be >= 2, got {k}")));
    }
    if t < 1 {
        return Err(Error::Domain("t must be >= 1".into()));
    }
    if variant == RangeVariant::Slow && k < 3 {
        return Err(Error::Domain("slow ranges need k >= 3 so that sigma(k) is defined".into()));
    }
    let kr = int(k as i64);
    let v = sigma_unchecked(k - 1);
    let lambda = match variant {
        RangeVariant::Classic => Rational::one() - kr.recip(),
        RangeVariant::Slow => Rational::one() - (Rational::one() - &v) / &kr,
    };
    let mut lambdas = Vec::with_capacity(t as usize);
    let mut cur = Rational::one();
    for _ in 0..t {
        lambdas.push(cur.clone());
        cur *= &lambda;
    }
    let delta: Rational = lambdas.iter().sum();

    let (e_values, e_star) = match variant {
        RangeVariant::Classic => (Vec::new(), Rational::zero()),
        RangeVariant::Slow => {
            let e = slow_defects(k, &v, &lambdas, &delta);
            let star = e.iter().fold(Rational::zero(), |m, x| if *x > m { x.clone() } else { m });
            (e, star)
        }
    };

    Ok(ExponentProfile { k, variant, t, v, lambda, lambdas, delta, e_values, e_star })
}

// e_1 and e_l (2 <= l <= t) for the slow ranges.
fn slow_defects(k: u32, v: &Rational, lambdas: &[Rational], delta: &Rational) -> Vec<Rational> {
    let t = lambdas.len();
    let sk = sigma_unchecked(k);
    let kr = int(k as i64);
    let one = Rational::one();
    let two = int(2);
    let mut out = Vec::with_capacity(t);

    let e1 = v + rat(1, 2)
        + (delta - &one) * (int(2 * k as i64 - 1) - &two * &sk) / int(2 * k as i64 - 2)
        - delta;
    out.push(e1);

    // tails[l] = lambda_{l+1} + ... + lambda_t, with lambda_{t+1} = 0
    let mut tails = vec![Rational::zero(); t + 1];
    for l in (1..t).rev() {
        tails[l] = &tails[l + 1] + &lambdas[l];
    }

    for l in 2..=t {
        let weight = &one + int(2 * (1 - l as i64)) / &kr;
        let weight = if weight.is_negative() { Rational::zero() } else { weight };
        let m_l = weight * &lambdas[l - 1] * &kr * &sk;
        let e = v + delta - &two - &two * &sk * &tails[l] + int(k as i64 - 2) * (v - &one) + m_l;
        out.push(e);
    }
    out
}

/// `n` is k-good when `E* = 0` for every `t = 1..=n`.
pub fn is_k_good(k: u32, n: u32) -> Result<bool> {
    if k < 4 {
        return Err(Error::Domain(format!("k-goodness is defined here for k >= 4, got {k}")));
    }
    Ok(max_k_good(k, n)? >= n)
}

// Largest m <= cap with m k-good. Goodness is downward closed.
fn max_k_good(k: u32, cap: u32) -> Result<u32> {
    for t in 1..=cap {
        if !build_profile(k, t, RangeVariant::Slow)?.e_star.is_zero() {
            return Ok(t - 1);
        }
    }
    Ok(cap)
}

fn check_k(k: u32) -> Result<()> {
    if k < 4 {
        return Err(Error::Domain(format!("k must be >= 4, got {k}")));
    }
    Ok(())
}

/// `1 + max(2k-2, floor(k (1-1/k)^t / sigma(k)))`.
pub fn e_basic(k: u32, t: u32) -> Result<i64> {
    check_k(k)?;
    if t < 1 {
        return Err(Error::Domain("t must be >= 1".into()));
    }
    let lambda = Rational::one() - int(k as i64).recip();
    Ok(e_basic_from_power(k, &pow(&lambda, t)))
}

fn e_basic_from_power(k: u32, lambda_t: &Rational) -> i64 {
    let arm = int(k as i64) * lambda_t / sigma_unchecked(k);
    1 + (2 * k as i64 - 2).max(floor_to_i64(&arm))
}

/// `1 + max(k-1, floor(k (lambda^t - v) / (sigma(k) (1-v))))` for slow ranges.
pub fn e_slow(k: u32, t: u32) -> Result<i64> {
    check_k(k)?;
    if t < 1 {
        return Err(Error::Domain("t must be >= 1".into()));
    }
    let v = sigma_unchecked(k - 1);
    let lambda = Rational::one() - (Rational::one() - &v) / int(k as i64);
    Ok(e_slow_from_power(k, &v, &pow(&lambda, t)))
}

fn e_slow_from_power(k: u32, v: &Rational, lambda_t: &Rational) -> i64 {
    let arm = int(k as i64) * (lambda_t - v) / (sigma_unchecked(k) * (Rational::one() - v));
    1 + (k as i64 - 1).max(floor_to_i64(&arm))
}

fn pow(x: &Rational, n: u32) -> Rational {
    num_traits::pow(x.clone(), n as usize)
}

/// Upper end of the `t` search window, `ceil(8 k ln k)`.
pub fn t_search_limit(k: u32) -> u32 {
    let k = k as f64;
    (8.0 * k * k.ln()).ceil() as u32
}

/// `4k ln k + (2 + 2 ln 2) k - 3`.
pub fn large_k_envelope(k: u32) -> f64 {
    let k = k as f64;
    4.0 * k * k.ln() + (2.0 + 2.0 * std::f64::consts::LN_2) * k - 3.0
}

/// The closed-form choice `t = ceil(2k ln k + k ln 2)`.
pub fn specialized_t(k: u32) -> u32 {
    let k = k as f64;
    (2.0 * k * k.ln() + k * std::f64::consts::LN_2).ceil() as u32
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundResult {
    pub k: u32,
    pub iota: u8,
    pub t_opt: u32,
    /// The `E` in `2t + E`.
    pub e: i64,
    pub bound: i64,
    pub witness: ExponentProfile,
}

/// Outcome of a constrained `t` search. Infeasibility is reported, not raised.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundOutcome {
    Feasible(BoundResult),
    Infeasible { k: u32, iota: u8, t_max: u32 },
}

impl BoundOutcome {
    pub fn feasible(&self) -> Option<&BoundResult> {
        match self {
            BoundOutcome::Feasible(r) => Some(r),
            BoundOutcome::Infeasible { .. } => None,
        }
    }
}

/// Minimise `2t + e_basic(k, t)`; ties go to the smaller `t`.
pub fn bound_s0(k: u32) -> Result<BoundResult> {
    check_k(k)?;
    let lambda = Rational::one() - int(k as i64).recip();
    let floor_arm = 2 * k as i64 - 1;
    let mut power = lambda.clone();
    let mut best: Option<(i64, u32, i64)> = None;
    for t in 1..=t_search_limit(k) {
        let e = e_basic_from_power(k, &power);
        let b = 2 * t as i64 + e;
        if best.is_none_or(|(bb, _, _)| b < bb) {
            best = Some((b, t, e));
        }
        // once the max has collapsed, 2t + E only grows
        if e == floor_arm {
            break;
        }
        power *= &lambda;
    }
    let (bound, t_opt, e) = best.expect("t = 1 is always evaluated");
    Ok(BoundResult {
        k,
        iota: 0,
        t_opt,
        e,
        bound,
        witness: build_profile(k, t_opt, RangeVariant::Classic)?,
    })
}

/// Minimise `2t + e_slow(k, t)` over k-good `t` with
/// `lambda^(t-1) > v / (1 - sigma(k))` and `2t + E >= 4k`.
pub fn bound_s1(k: u32) -> Result<BoundOutcome> {
    check_k(k)?;
    if k == 4 {
        // Hardcoded choice t = 4, E = 8 for quartics. 4 is not 4-good, so the
        // generic constraint set would reject it.
        return Ok(BoundOutcome::Feasible(BoundResult {
            k,
            iota: 1,
            t_opt: 4,
            e: 8,
            bound: 16,
            witness: build_profile(4, 4, RangeVariant::Slow)?,
        }));
    }
    let t_max = t_search_limit(k);
    let v = sigma_unchecked(k - 1);
    let sk = sigma_unchecked(k);
    let lambda = Rational::one() - (Rational::one() - &v) / int(k as i64);
    let threshold = &v / (Rational::one() - &sk);
    let mut best: Option<(i64, u32, i64)> = None;
    let mut lambda_prev = Rational::one(); // lambda^(t-1)
    for t in 1..=t_max {
        if !build_profile(k, t, RangeVariant::Slow)?.e_star.is_zero() {
            break;
        }
        if lambda_prev > threshold {
            let power = &lambda_prev * &lambda;
            let e = e_slow_from_power(k, &v, &power);
            let b = 2 * t as i64 + e;
            if b >= 4 * k as i64 && best.is_none_or(|(bb, _, _)| b < bb) {
                best = Some((b, t, e));
            }
        }
        lambda_prev *= &lambda;
    }
    Ok(match best {
        Some((bound, t_opt, e)) => BoundOutcome::Feasible(BoundResult {
            k,
            iota: 1,
            t_opt,
            e,
            bound,
            witness: build_profile(k, t_opt, RangeVariant::Slow)?,
        }),
        None => BoundOutcome::Infeasible { k, iota: 1, t_max },
    })
}

/// Largest k-good integer not exceeding the search window.
pub fn largest_k_good(k: u32) -> Result<u32> {
    check_k(k)?;
    max_k_good(k, t_search_limit(k))
}

pub fn rational_to_string(r: &Rational) -> String {
    let r = r.reduced();
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q` or an integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: '{s}'"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(p))
        }
    }
}
