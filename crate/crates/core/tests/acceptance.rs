//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use waring_shifts::asymptotic::{asymptotic_scan, singular_integral_exact, singular_integral_mc};
use waring_shifts::counting::{count_brute, count_mitm, moment_count, InequalityInstance, Method, DEFAULT_BUDGET};
use waring_shifts::diophantine::{
    best_approximations, classify_major_arc, hua_major_arc_moment, major_arc_bounds, RealInput,
};
use waring_shifts::exponents::{bound_s0, build_profile, is_k_good, large_k_envelope, parse_rational, RangeVariant};
use waring_shifts::kernels::{indicator, kernel_fourier, kernel_fourier_quadrature, KernelSpec, KernelVariant};
use waring_shifts::polynomials::{monomial, Constant, InstanceFile, RealCoefficient, ShiftedForm, Target};
use waring_shifts::precision::{f64_to_rational, rational_to_f64};

type Outcome = (bool, String);

fn table(iota: &str) -> (Vec<i64>, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_waring"))
        .args(["tables", "--iota", iota, "--k-min", "4", "--k-max", "12"])
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("k,t_opt,E,bound,envelope"));
    (lines.map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect(), elapsed)
}

fn criterion_table(iota: &str, expected: &[i64]) -> Outcome {
    let (bounds, t) = table(iota);
    (bounds == expected && t < Duration::from_secs(10), format!("bounds {bounds:?}"))
}

fn criterion_3() -> Outcome {
    let good = is_k_good(4, 3).unwrap() && !is_k_good(4, 4).unwrap();
    let p = build_profile(4, 4, RangeVariant::Slow).unwrap();
    let total = &p.delta + &p.e_star;
    let ok = total <= parse_rational("3011/1000").unwrap();
    (good && ok, format!("Delta + E* = {total} (~{:.6})", rational_to_f64(&total)))
}

fn criterion_4() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for k in 4..=60 {
        let b = bound_s0(k).unwrap().bound as f64;
        let gap = large_k_envelope(k) - b;
        ok &= gap > 1e-9;
        worst = worst.min(gap);
    }
    (ok, format!("smallest envelope margin {worst:.4}"))
}

fn criterion_5() -> Outcome {
    let tol = 1e-8;
    let mut worst: f64 = 0.0;
    let mut sandwich = true;
    for &eta in &[0.1, 1.0, 5.0] {
        let grid: Vec<f64> = (0..201).map(|i| -3.0 * eta + 6.0 * eta * i as f64 / 200.0).collect();
        let specs = [
            KernelSpec::new(KernelVariant::K, eta, None).unwrap(),
            KernelSpec::new(KernelVariant::K1, eta, Some(10.0)).unwrap(),
            KernelSpec::new(KernelVariant::K2plus, eta, Some(10.0)).unwrap(),
            KernelSpec::new(KernelVariant::K2minus, eta, Some(10.0)).unwrap(),
        ];
        for spec in &specs {
            for &t in &grid {
                let q = kernel_fourier_quadrature(spec, t, tol).unwrap().value;
                worst = worst.max((q - kernel_fourier(spec, t).unwrap()).abs());
            }
        }
        let k = KernelSpec::new(KernelVariant::K, eta, None).unwrap();
        let k2 = KernelSpec::new(KernelVariant::K2alpha, eta, None).unwrap();
        let plus = KernelSpec::new(KernelVariant::Kplus, eta, Some(10.0)).unwrap();
        let minus = KernelSpec::new(KernelVariant::Kminus, eta, Some(10.0)).unwrap();
        for &t in &grid {
            let f = |s: &KernelSpec| kernel_fourier_quadrature(s, t, tol).unwrap().value;
            let (fk, fk2, fp, fm) = (f(&k), f(&k2), f(&plus), f(&minus));
            let u = indicator(eta, t);
            let e = 1e-6;
            sandwich &= -e <= fk && fk <= u + e && u <= fk2 + e && fk2 <= 2.0 * indicator(2.0 * eta, t) + e;
            sandwich &= -e <= fm && fm <= u + e && u <= fp + e && fp <= 1.0 + e;
        }
    }
    (worst < 1e-6 && sandwich, format!("max |quadrature - closed form| = {worst:.2e}, sandwiches hold: {sandwich}"))
}

fn random_shift(rng: &mut ChaCha8Rng) -> RealCoefficient {
    let r = BigRational::new(BigInt::from(rng.gen_range(0..97)), BigInt::from(97));
    if rng.gen_bool(0.5) {
        let c = [Constant::Sqrt2, Constant::Sqrt3, Constant::Pi, Constant::E, Constant::Golden][rng.gen_range(0..5)];
        let m = BigRational::new(BigInt::from(rng.gen_range(1..8)), BigInt::from(rng.gen_range(1..9)));
        RealCoefficient::tagged(r, c, m)
    } else {
        RealCoefficient::rational(r)
    }
}

/// Random instance with a window centred near an attained value.
fn random_instance(rng: &mut ChaCha8Rng) -> InequalityInstance {
    let s = rng.gen_range(2..=4);
    let k = rng.gen_range(2..=5);
    let shifts: Vec<RealCoefficient> = (0..s).map(|_| random_shift(rng)).collect();
    let bounds: Vec<(i64, i64)> = (0..s)
        .map(|_| {
            let lo = rng.gen_range(-15..10);
            (lo, lo + rng.gen_range(1..=30))
        })
        .collect();
    let target = Target::Form(ShiftedForm::new(k, shifts).unwrap());
    let point: Vec<i64> = bounds.iter().map(|&(lo, hi)| rng.gen_range(lo + 1..=hi)).collect();
    use waring_shifts::polynomials::SeparableForm;
    let centre = target.evaluate(&point).unwrap().to_f64();
    let scale = centre.abs().max(1.0);
    let tau = centre + rng.gen_range(-0.5..0.5);
    let eta = scale * 10f64.powf(rng.gen_range(-6.0..-0.5));
    InequalityInstance::new(target, tau, eta.max(1e-3), bounds).unwrap()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let start = Instant::now();
    let mut mismatches = 0;
    let mut nonzero = 0;
    for _ in 0..100 {
        let inst = random_instance(&mut rng);
        let b = count_brute(&inst, DEFAULT_BUDGET).unwrap().count;
        let m = count_mitm(&inst, None, DEFAULT_BUDGET).unwrap().count;
        mismatches += usize::from(b != m);
        nonzero += usize::from(b > 0);
    }
    let t = start.elapsed();
    (mismatches == 0 && t < Duration::from_secs(60), format!("{mismatches} mismatches, {nonzero}/100 non-empty, {t:.1?}"))
}

fn criterion_7() -> Outcome {
    let file = InstanceFile::from_json(include_str!("../instances/five_squares.json")).unwrap();
    let form = match file.target().unwrap() {
        Target::Form(f) => f,
        Target::System(_) => unreachable!(),
    };
    let start = Instant::now();
    let report = asymptotic_scan(&form, 0.25, &[1e3, 1e4, 1e5], Method::Mitm, DEFAULT_BUDGET).unwrap();
    let t = start.elapsed();
    let ratios: Vec<f64> = report.rows.iter().map(|r| r.ratio).collect();
    let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let trend = dev.windows(2).all(|w| w[1] <= w[0] + 0.05);
    let last = *ratios.last().unwrap();
    let ok = (0.8..=1.2).contains(&last) && trend && t < Duration::from_secs(300);
    (ok, format!("ratios {ratios:.4?}, {t:.1?}"))
}

fn criterion_8() -> Outcome {
    let profile = build_profile(4, 2, RangeVariant::Classic).unwrap();
    let delta = rational_to_f64(&profile.delta);
    let polys = vec![monomial(4); 2];
    let ps = [40.0f64, 80.0, 160.0];
    let counts: Vec<f64> = ps
        .iter()
        .map(|&p| moment_count(&polys, &profile, p, 1.0, 2.0, DEFAULT_BUDGET).unwrap().count as f64)
        .collect();
    let xs: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| c.ln()).collect();
    let slope = waring_shifts::weyl::fitted_slope(&xs, &ys);
    let normalised: Vec<f64> = counts.iter().zip(&ps).map(|(c, p)| c / p.powf(delta)).collect();
    let non_increasing = normalised.windows(2).all(|w| w[1] <= 1.25 * w[0]);
    let ok = (slope - delta).abs() <= 0.15 && non_increasing;
    (ok, format!("counts {counts:?}, slope {slope:.4} vs Delta {delta}, count/P^Delta {normalised:.4?}"))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let (m, e) = singular_integral_mc(5, 2, 1_000_000, 42).unwrap();
    let exact = singular_integral_exact(5, 2);
    let ok = (m - exact).abs() < 3.0 * e && ((m - exact) / exact).abs() < 0.02 && start.elapsed() < Duration::from_secs(30);
    (ok, format!("{m:.5} +- {e:.5} vs {exact:.5}"))
}

fn distance_to_nearest(x: &BigRational) -> BigRational {
    let r = x.round();
    (x - r).abs()
}

/// The best approximations of the second kind up to `q_max`, by brute force:
/// denominators where `||q alpha||` sets a new strict record.
fn brute_best(alpha: &BigRational, q_max: u64) -> Vec<(i64, u64)> {
    let mut out = Vec::new();
    let mut record: Option<BigRational> = None;
    for q in 1..=q_max {
        let qa = alpha * BigInt::from(q);
        let d = distance_to_nearest(&qa);
        if record.as_ref().map_or(true, |r| &d < r) {
            out.push((qa.round().to_integer().to_i64().unwrap(), q));
            let zero = d == BigRational::from_integer(0.into());
            record = Some(d);
            if zero {
                break;
            }
        }
    }
    out
}

fn exhaustive_arc(alpha: &BigRational, p: f64, d: u32) -> Option<(i64, u64)> {
    let (q_bound, closeness) = major_arc_bounds(p, d).unwrap();
    let mut q = 1u64;
    while (q as f64) < q_bound {
        let qa = alpha * BigInt::from(q);
        for a in [qa.floor(), qa.ceil()] {
            let gap = rational_to_f64(&(&qa - &a).abs());
            if gap < closeness {
                return Some((a.to_integer().to_i64().unwrap(), q));
            }
        }
        q += 1;
    }
    None
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    for expr in ["pi", "sqrt2", "golden", "355/113 + 1e-9"] {
        let x: RealInput = expr.parse().unwrap();
        let mut conv: Vec<(i64, u64)> = best_approximations(&x, 1000).unwrap().iter().map(|r| (r.a, r.q)).collect();
        // q = 1 can appear twice; the later entry is the nearer one
        conv.dedup_by(|later, earlier| {
            let same = later.1 == earlier.1;
            if same {
                *earlier = *later;
            }
            same
        });
        ok &= conv == brute_best(&x.value, 1000);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut disagreements = 0;
    let mut majors = 0;
    for _ in 0..1000 {
        let alpha = if rng.gen_bool(0.3) {
            // near a small-denominator rational so that major arcs are exercised
            let q = rng.gen_range(1..20);
            rng.gen_range(0..q) as f64 / q as f64 + rng.gen_range(-1e-6..1e-6)
        } else {
            rng.gen::<f64>()
        };
        let p = rng.gen_range(10.0..1000.0);
        let d = rng.gen_range(2..=6);
        let fast = classify_major_arc(&RealInput::from_f64(alpha), p, d).unwrap().map(|r| (r.a, r.q));
        let slow = exhaustive_arc(&f64_to_rational(alpha), p, d);
        disagreements += usize::from(fast != slow);
        majors += usize::from(slow.is_some());
    }
    let t = start.elapsed();
    (
        ok && disagreements == 0 && t < Duration::from_secs(60),
        format!("convergents match brute force: {ok}; {disagreements} classification disagreements ({majors} major), {t:.1?}"),
    )
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let h = monomial(4);
    let values: Vec<f64> = [64.0, 128.0, 256.0]
        .iter()
        .map(|&p| hua_major_arc_moment(&h, p, 9, 20_000).unwrap().normalized)
        .collect();
    let growth: Vec<f64> = values.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    let ok = growth.iter().all(|&g| g < 0.10) && start.elapsed() < Duration::from_secs(300);
    (ok, format!("normalised moments {values:.4?}, growth per doubling {growth:.3?}"))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("Table 1 reproduction", || criterion_table("1", &[16, 27, 38, 51, 70, 87, 104, 120, 135])),
        ("Table 2 reproduction", || criterion_table("0", &[18, 29, 43, 59, 79, 99, 115, 132, 149])),
        ("k-good spot checks", criterion_3),
        ("large-k envelope", criterion_4),
        ("kernel Fourier identities", criterion_5),
        ("brute force vs meet-in-the-middle", criterion_6),
        ("five shifted squares asymptotic", criterion_7),
        ("moment growth", criterion_8),
        ("singular integral", criterion_9),
        ("rational approximation", criterion_10),
        ("major-arc moment growth", criterion_11),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        failures += usize::from(!ok);
        println!(
            "criterion {:>2} {}: {name} ({detail}; {:.1?})",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed()
        );
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
