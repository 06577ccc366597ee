//! Main term `2 eta Gamma(1 + 1/k)^s / Gamma(s/k) tau^{s/k - 1}`, a Monte Carlo
//! check of the Dirichlet integral behind it, and the count-vs-main-term scan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::counting::{count_brute, count_mitm, InequalityInstance, Method};
use crate::error::{Error, Result};
use crate::polynomials::{ShiftedForm, Target};

pub fn main_term(s: u32, k: u32, tau: f64, eta: f64) -> Result<f64> {
    if s < 1 || k < 2 || !(tau > 0.0) || !(eta > 0.0) {
        return Err(Error::Domain(format!("need s >= 1, k >= 2, tau > 0, eta > 0; got s={s}, k={k}, tau={tau}, eta={eta}")));
    }
    let (s, k) = (s as f64, k as f64);
    let log = s * libm::lgamma(1.0 + 1.0 / k) - libm::lgamma(s / k) + (s / k - 1.0) * tau.ln();
    Ok(2.0 * eta * log.exp())
}

/// `Gamma(1/k)^s / Gamma(s/k)`.
pub fn singular_integral_exact(s: u32, k: u32) -> f64 {
    let (s, k) = (s as f64, k as f64);
    (s * libm::lgamma(1.0 / k) - libm::lgamma(s / k)).exp()
}

const MC_CHUNK: u64 = 1 << 14;

/// Monte Carlo estimate of `int (u_1 ... u_{s-1} Y)^{1/k - 1} du'` over the
/// simplex `u_1 + ... + u_{s-1} < 1`, `Y = 1 - sum u_i`. Returns
/// `(estimate, standard error)`.
///
/// The integrand is symmetric in `(u_1, ..., u_{s-1}, Y)`, so the integral is
/// `s` times the part where `Y` is the largest coordinate. There `Y >= 1/s`
/// and, after `u_i = w_i^k`, the integrand becomes the bounded function
/// `s k^{s-1} Y^{1/k - 1}` on `[0, 1]^{s-1}`.
pub fn singular_integral_mc(s: u32, k: u32, samples: u64, seed: u64) -> Result<(f64, f64)> {
    if s < 2 || k < 1 {
        return Err(Error::Domain(format!("need s >= 2, k >= 1; got s={s}, k={k}")));
    }
    if samples < 10_000 {
        return Err(Error::Domain(format!("need at least 10^4 samples, got {samples}")));
    }
    let dim = (s - 1) as usize;
    let scale = s as f64 * (k as f64).powi(s as i32 - 1);
    let expo = 1.0 / k as f64 - 1.0;
    let chunks = samples.div_ceil(MC_CHUNK);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut acc = (0.0, 0.0);
            let mut u = vec![0.0; dim];
            for _ in 0..n {
                for ui in u.iter_mut() {
                    *ui = rng.gen::<f64>().powi(k as i32);
                }
                let y = 1.0 - u.iter().sum::<f64>();
                let v = if y > 0.0 && u.iter().all(|&ui| ui <= y) { scale * y.powf(expo) } else { 0.0 };
                acc.0 += v;
                acc.1 += v * v;
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub tau: f64,
    pub count: u64,
    pub main_term: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticReport {
    pub k: u32,
    pub s: usize,
    pub eta: f64,
    pub method: Method,
    pub rows: Vec<ScanRow>,
}

impl AsymptoticReport {
    /// The row with the largest `tau`.
    pub fn last(&self) -> Option<&ScanRow> {
        self.rows.last()
    }
}

/// Counts over `mu_i < x_i <= P`, `P = tau^{1/k}`, for each `tau`.
pub fn asymptotic_scan(
    form: &ShiftedForm,
    eta: f64,
    tau_list: &[f64],
    method: Method,
    budget: u64,
) -> Result<AsymptoticReport> {
    if let Some(mu) = form.shifts.iter().map(|m| m.value().to_f64()).find(|m| !(0.0..1.0).contains(m)) {
        return Err(Error::Domain(format!("shifts must lie in [0, 1), got {mu}")));
    }
    let s = form.shifts.len();
    let mut rows = Vec::with_capacity(tau_list.len());
    for &tau in tau_list {
        let p = tau.powf(1.0 / form.k as f64);
        let hi = p.floor() as i64;
        let bounds = vec![(0, hi.max(0)); s];
        let inst = InequalityInstance::new(Target::Form(form.clone()), tau, eta, bounds)?;
        let result = match method {
            Method::Brute => count_brute(&inst, budget)?,
            Method::Mitm if s >= 2 => count_mitm(&inst, None, budget)?,
            _ => count_brute(&inst, budget)?,
        };
        let main = main_term(s as u32, form.k, tau, eta)?;
        rows.push(ScanRow { tau, count: result.count, main_term: main, ratio: result.count as f64 / main });
    }
    Ok(AsymptoticReport { k: form.k, s, eta, method, rows })
}
