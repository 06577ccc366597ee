//! Exact enumeration of solutions to `|H(x) - tau| < eta` over integer boxes.
//!
//! Every counter reduces to the same shape: `s` variables, each with a table
//! of term values `f_i(x)` over its box, and a strict window around `tau`.
//! `count_brute` walks the full product; `count_mitm` streams partial sums of
//! the first `split` variables against a sorted list of the remaining ones.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::ExponentProfile;
use crate::polynomials::{horner_dd, RealCoefficient, SeparableForm, Target};
use crate::precision::{rational_to_f64, Dd};

/// Default limit on enumerated work units and list lengths.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Fractional bits of the fixed-point sort keys.
const KEY_BITS: i32 = 20;
/// Partial sums must stay below this magnitude so keys fit in an `i64`.
const KEY_RANGE: f64 = (1u64 << 42) as f64;

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityInstance {
    pub target: Target,
    pub tau: f64,
    pub eta: f64,
    /// `(lo, hi]` for each variable.
    pub bounds: Vec<(i64, i64)>,
}

impl InequalityInstance {
    pub fn new(target: Target, tau: f64, eta: f64, bounds: Vec<(i64, i64)>) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("eta must be positive, got {eta}")));
        }
        if !tau.is_finite() {
            return Err(Error::Domain("tau must be finite".into()));
        }
        if bounds.len() != target.arity() {
            return Err(Error::Dimension { expected: target.arity(), got: bounds.len() });
        }
        if let Some((i, _)) = bounds.iter().enumerate().find(|(_, (lo, hi))| hi < lo) {
            return Err(Error::Domain(format!("box {i} has hi < lo")));
        }
        Ok(InequalityInstance { target, tau, eta, bounds })
    }

    /// Number of integer points in the box (saturating).
    pub fn box_size(&self) -> u128 {
        self.bounds.iter().fold(1u128, |acc, &(lo, hi)| acc.saturating_mul((hi - lo) as u128))
    }

    fn tables(&self) -> Vec<Vec<Dd>> {
        self.bounds
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| (lo + 1..=hi).map(|x| self.target.term(i, x)).collect())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Mitm,
    Hash,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountResult {
    pub count: u64,
    pub method: Method,
    /// Work units: enumerated tuples or partial sums, plus high-precision rechecks.
    pub enumerated: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl CountResult {
    pub fn wall_ms(&self) -> f64 {
        self.wall_time.as_secs_f64() * 1e3
    }
}

fn product(lens: &[usize]) -> u128 {
    lens.iter().fold(1u128, |acc, &n| acc.saturating_mul(n as u128))
}

fn check_budget(required: u128, budget: u64) -> Result<()> {
    if required > budget as u128 {
        return Err(Error::Budget { required, limit: budget as u128 });
    }
    Ok(())
}

/// Calls `f` on every sum `t_0[i_0] + ... + t_m[i_m]`, last index fastest.
fn for_each_sum<F: FnMut(Dd)>(tables: &[Vec<Dd>], base: Dd, f: &mut F) {
    match tables.split_first() {
        None => f(base),
        Some((first, [])) => first.iter().for_each(|&v| f(base + v)),
        Some((first, rest)) => {
            for &v in first {
                for_each_sum(rest, base + v, f);
            }
        }
    }
}

/// Parallel over the first table; each worker enumerates the rest in order.
fn par_fold_sums<F>(tables: &[Vec<Dd>], f: F) -> u64
where
    F: Fn(Dd) -> u64 + Sync,
{
    match tables.split_first() {
        None => f(Dd::ZERO),
        Some((first, rest)) => first
            .par_iter()
            .map(|&v| {
                let mut acc = 0u64;
                for_each_sum(rest, v, &mut |s| acc += f(s));
                acc
            })
            .sum(),
    }
}

fn brute_tables(tables: &[Vec<Dd>], tau: f64, eta: f64, budget: u64) -> Result<(u64, u64)> {
    let lens: Vec<usize> = tables.iter().map(Vec::len).collect();
    let total = product(&lens);
    check_budget(total, budget)?;
    if total == 0 {
        return Ok((0, 0));
    }
    let lo = Dd::from_f64(tau) - Dd::from_f64(eta);
    let hi = Dd::from_f64(tau) + Dd::from_f64(eta);
    let count = par_fold_sums(tables, |s| u64::from(s > lo && s < hi));
    Ok((count, total as u64))
}

pub fn count_brute(inst: &InequalityInstance, budget: u64) -> Result<CountResult> {
    check_budget(inst.box_size(), budget)?;
    let start = Instant::now();
    let (count, enumerated) = brute_tables(&inst.tables(), inst.tau, inst.eta, budget)?;
    Ok(CountResult { count, method: Method::Brute, enumerated, wall_time: start.elapsed() })
}

/// Split point that balances the two list lengths; on a tie the larger half
/// goes to the streamed side.
pub fn default_split(lens: &[usize]) -> usize {
    let s = lens.len();
    let logs: Vec<f64> = lens.iter().map(|&n| (n.max(1) as f64).ln()).collect();
    let total: f64 = logs.iter().sum();
    let mut best = (f64::INFINITY, 1);
    let mut left = 0.0;
    for split in 1..s {
        left += logs[split - 1];
        let right = total - left;
        // prefer left >= right at equal imbalance
        let score = (left - right).abs() + if left < right { 1e-9 } else { 0.0 };
        if score < best.0 {
            best = (score, split);
        }
    }
    best.1
}

fn key_of(x: Dd) -> i64 {
    let f = x.mul_f64((1u64 << KEY_BITS) as f64).floor();
    f.hi as i64 + f.lo as i64
}

fn mitm_tables(tables: &[Vec<Dd>], split: usize, tau: f64, eta: f64, budget: u64) -> Result<(u64, u64)> {
    let s = tables.len();
    if split < 1 || split >= s {
        return Err(Error::Domain(format!("split must lie in 1..{s}, got {split}")));
    }
    let (side_a, side_b) = tables.split_at(split);
    let len_a = product(&side_a.iter().map(Vec::len).collect::<Vec<_>>());
    let len_b = product(&side_b.iter().map(Vec::len).collect::<Vec<_>>());
    check_budget(len_a.max(len_b), budget)?;
    if len_a == 0 || len_b == 0 {
        return Ok((0, 0));
    }

    let span = |side: &[Vec<Dd>]| -> f64 {
        side.iter()
            .map(|t| t.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max))
            .sum()
    };
    if span(side_a) + span(side_b) + tau.abs() + eta >= KEY_RANGE {
        return Err(Error::Domain("partial sums exceed the fixed-point key range".into()));
    }

    let mut list: Vec<(i64, Dd)> = Vec::with_capacity(len_b as usize);
    for_each_sum(side_b, Dd::ZERO, &mut |v| list.push((key_of(v), v)));
    list.sort_unstable_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));

    let lo = Dd::from_f64(tau) - Dd::from_f64(eta);
    let hi = Dd::from_f64(tau) + Dd::from_f64(eta);
    let first_at_least = |k: i64| list.partition_point(|e| e.0 < k);

    // Keys floor(v 2^20) lie within one unit of the true scaled value, so a
    // key at distance >= 2 from the scaled window edge decides membership.
    let (count, rechecks) = {
        let per_a = |a: Dd| -> (u64, u64) {
            let kl = key_of(lo - a);
            let kh = key_of(hi - a);
            let outer_lo = first_at_least(kl.saturating_sub(1));
            let outer_hi = first_at_least(kh.saturating_add(2));
            let (inner_lo, inner_hi) = if kl.saturating_add(2) <= kh.saturating_sub(1) {
                (first_at_least(kl + 2), first_at_least(kh - 1))
            } else {
                (outer_lo, outer_lo)
            };
            let sure = (inner_hi - inner_lo) as u64;
            let mut hits = 0u64;
            let mut checked = 0u64;
            for e in list[outer_lo..inner_lo].iter().chain(&list[inner_hi.max(inner_lo)..outer_hi]) {
                let sum = a + e.1;
                checked += 1;
                if sum > lo && sum < hi {
                    hits += 1;
                }
            }
            (sure + hits, checked)
        };
        match side_a.split_first() {
            Some((first, rest)) => first
                .par_iter()
                .map(|&v| {
                    let mut acc = (0u64, 0u64);
                    for_each_sum(rest, v, &mut |a| {
                        let (c, r) = per_a(a);
                        acc.0 += c;
                        acc.1 += r;
                    });
                    acc
                })
                .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1)),
            None => unreachable!("split >= 1"),
        }
    };
    Ok((count, len_a as u64 + len_b as u64 + rechecks))
}

/// Meet-in-the-middle count; `split = None` balances the list lengths.
pub fn count_mitm(inst: &InequalityInstance, split: Option<usize>, budget: u64) -> Result<CountResult> {
    let lens: Vec<usize> = inst.bounds.iter().map(|&(lo, hi)| (hi - lo) as usize).collect();
    if lens.len() < 2 {
        return Err(Error::Domain("meet-in-the-middle needs at least two variables".into()));
    }
    let split = split.unwrap_or_else(|| default_split(&lens));
    if split < 1 || split >= lens.len() {
        return Err(Error::Domain(format!("split must lie in 1..{}, got {split}", lens.len())));
    }
    check_budget(product(&lens[..split]).max(product(&lens[split..])), budget)?;
    let start = Instant::now();
    let (count, enumerated) = mitm_tables(&inst.tables(), split, inst.tau, inst.eta, budget)?;
    Ok(CountResult { count, method: Method::Mitm, enumerated, wall_time: start.elapsed() })
}

/// `2t`-tuples with `P^{lambda_j} < x_j, y_j <= c P^{lambda_j}` and
/// `|sum_j h_j(x_j) - h_j(y_j)| < eta`.
pub fn moment_count(
    polys: &[Vec<RealCoefficient>],
    profile: &ExponentProfile,
    p: f64,
    eta: f64,
    c: f64,
    budget: u64,
) -> Result<CountResult> {
    let t = profile.t as usize;
    if polys.len() != t {
        return Err(Error::Dimension { expected: t, got: polys.len() });
    }
    if !(p > 1.0 && c > 1.0 && eta > 0.0) {
        return Err(Error::Domain(format!("need P > 1, c > 1, eta > 0; got P={p}, c={c}, eta={eta}")));
    }
    let bounds: Vec<(i64, i64)> = profile
        .lambdas
        .iter()
        .map(|l| {
            let base = p.powf(rational_to_f64(l));
            (base.floor() as i64, (c * base).floor() as i64)
        })
        .collect();
    let column = |j: usize, sign: f64| -> Vec<Dd> {
        let (lo, hi) = bounds[j];
        (lo + 1..=hi).map(|x| horner_dd(&polys[j], x).mul_f64(sign)).collect()
    };
    // x_1..x_t on the streamed side, y_1..y_t sorted
    let mut tables: Vec<Vec<Dd>> = (0..t).map(|j| column(j, 1.0)).collect();
    tables.extend((0..t).map(|j| column(j, -1.0)));
    windowed_count(tables, eta, budget)
}

fn windowed_count(tables: Vec<Vec<Dd>>, eta: f64, budget: u64) -> Result<CountResult> {
    let start = Instant::now();
    let (count, enumerated, method) = if tables.len() < 2 {
        let (c, e) = brute_tables(&tables, 0.0, eta, budget)?;
        (c, e, Method::Brute)
    } else {
        let lens: Vec<usize> = tables.iter().map(Vec::len).collect();
        let (c, e) = mitm_tables(&tables, default_split(&lens), 0.0, eta, budget)?;
        (c, e, Method::Mitm)
    };
    Ok(CountResult { count, method, enumerated, wall_time: start.elapsed() })
}

/// `U_{phi,t}(X)`: `1 <= x_j, y_j <= X` with `|sum_j phi(x_j) - phi(y_j)| < eta`.
pub fn u_phi_count(phi: &[RealCoefficient], t: u32, x_max: i64, eta: f64, budget: u64) -> Result<CountResult> {
    if t < 1 || x_max < 1 || !(eta > 0.0) {
        return Err(Error::Domain(format!("need t >= 1, X >= 1, eta > 0; got t={t}, X={x_max}, eta={eta}")));
    }
    let plus: Vec<Dd> = (1..=x_max).map(|x| horner_dd(phi, x)).collect();
    let minus: Vec<Dd> = plus.iter().map(|&v| -v).collect();
    let mut tables = vec![plus; t as usize];
    tables.extend(std::iter::repeat_n(minus, t as usize));
    windowed_count(tables, eta, budget)
}

/// `J_{t,k}(X)`: `1 <= x_j, y_j <= X` with equal power sums of degrees `1..=k`.
pub fn vinogradov_count(t: u32, k: u32, x_max: i64, budget: u64) -> Result<CountResult> {
    if t < 1 || k < 1 || x_max < 1 {
        return Err(Error::Domain(format!("need t, k, X >= 1; got t={t}, k={k}, X={x_max}")));
    }
    let half = (x_max as u128).checked_pow(t).unwrap_or(u128::MAX);
    check_budget(half, budget)?;
    if (x_max as f64).powi(k as i32) * t as f64 >= i64::MAX as f64 {
        return Err(Error::Domain("power sums overflow 64 bits".into()));
    }
    let start = Instant::now();
    let mut freq: HashMap<Vec<i64>, u64> = HashMap::new();
    let mut tuple = vec![1i64; t as usize];
    loop {
        let key: Vec<i64> = (1..=k).map(|l| tuple.iter().map(|&x| x.pow(l)).sum()).collect();
        *freq.entry(key).or_insert(0) += 1;
        let mut i = 0;
        while i < tuple.len() && tuple[i] == x_max {
            tuple[i] = 1;
            i += 1;
        }
        if i == tuple.len() {
            break;
        }
        tuple[i] += 1;
    }
    let count = freq.values().map(|&n| n * n).sum();
    Ok(CountResult { count, method: Method::Hash, enumerated: half as u64, wall_time: start.elapsed() })
}
