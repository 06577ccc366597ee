use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use waring_shifts::asymptotic::{asymptotic_scan, main_term, singular_integral_exact, singular_integral_mc};
use waring_shifts::counting::{
    count_brute, count_mitm, moment_count, u_phi_count, vinogradov_count, CountResult, InequalityInstance, Method,
};
use waring_shifts::diophantine::{best_approximations, classify_major_arc, RealInput};
use waring_shifts::exponents::{
    bound_s0, bound_s1, build_profile, is_k_good, large_k_envelope, largest_k_good, rational_to_string,
    BoundOutcome, BoundResult, RangeVariant,
};
use waring_shifts::kernels::{indicator, kernel_fourier, kernel_fourier_quadrature, KernelSpec, KernelVariant};
use waring_shifts::polynomials::{monomial, InstanceFile, RealCoefficient, Target};
use waring_shifts::weyl::{fitted_slope, weyl_profile, WeylRange};
use waring_shifts::{Error, Result};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "waring", version, about = "Diophantine inequalities in shifted k-th powers")]
struct Cli {
    /// Seed for every randomised computation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores). WARING_THREADS overrides.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Work-unit budget for enumerations.
    #[arg(long, global = true, default_value_t = 100_000_000)]
    budget: u64,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Leave wall-clock timings out so that reruns are byte-identical.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CountMethod {
    Brute,
    Mitm,
}

impl From<CountMethod> for Method {
    fn from(m: CountMethod) -> Self {
        match m {
            CountMethod::Brute => Method::Brute,
            CountMethod::Mitm => Method::Mitm,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Variable-count bounds for a range of k.
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        iota: u8,
        #[arg(long, default_value_t = 4)]
        k_min: u32,
        #[arg(long, default_value_t = 12)]
        k_max: u32,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Optimised bound for one k, with its exponent profile.
    Bound {
        #[arg(long)]
        k: u32,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        iota: u8,
    },
    /// Whether n is k-good (largest k-good value when --n is omitted).
    Kgood {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Count solutions of |F(x) - tau| < eta in a box.
    Count {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = CountMethod::Mitm)]
        method: CountMethod,
        #[arg(long)]
        split: Option<usize>,
        /// Overrides the instance's tau.
        #[arg(long)]
        tau: Option<f64>,
        /// Overrides the instance's eta.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Diminishing-range moment counts over a list of P.
    Moment {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        t: u32,
        #[arg(long, default_value = "classic")]
        variant: RangeVariant,
        #[arg(long = "P-list", value_delimiter = ',')]
        p_list: Vec<f64>,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        /// Polynomials h_1..h_t (instance file); defaults to x^k for each.
        #[arg(long)]
        polys: Option<PathBuf>,
    },
    /// Vinogradov mean value J_{t,k}(X).
    Vinogradov {
        #[arg(long)]
        t: u32,
        #[arg(long)]
        k: u32,
        #[arg(long = "X")]
        x: i64,
    },
    /// U_{phi,t}(X) for phi from a file (first member) or x^k.
    Uphi {
        #[arg(long)]
        poly: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        k: u32,
        #[arg(long)]
        t: u32,
        #[arg(long = "X")]
        x: i64,
        #[arg(long)]
        eta: f64,
    },
    /// Weyl sum over (bP, cP] on an alpha grid.
    WeylProfile {
        #[arg(long)]
        poly: PathBuf,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        c: f64,
        #[arg(long = "P")]
        p: f64,
        #[arg(long)]
        alpha_min: f64,
        #[arg(long)]
        alpha_max: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Closed-form kernel transform against quadrature on [-3 eta, 3 eta].
    KernelCheck {
        #[arg(long)]
        variant: KernelVariant,
        #[arg(long)]
        eta: f64,
        #[arg(long = "L")]
        l: Option<f64>,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Continued-fraction convergents, optionally with major-arc classification.
    Approx {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long)]
        qmax: u64,
        #[arg(long = "P")]
        p: Option<f64>,
        #[arg(long, default_value_t = 2)]
        d: u32,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Counts against the main term over a list of tau.
    Asym {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        tau_list: Vec<f64>,
        #[arg(long, value_enum, default_value_t = CountMethod::Mitm)]
        method: CountMethod,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Quick invariant checks across all modules.
    Selftest,
}

/// Exit status for a result that was demanded but does not exist.
struct Infeasible(String);

enum Failure {
    Lib(Error),
    Infeasible(Infeasible),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

struct Ctx {
    seed: u64,
    config_hash: String,
    timing: bool,
}

impl Ctx {
    fn meta(&self) -> Value {
        json!({ "version": VERSION, "seed": self.seed, "config_hash": self.config_hash })
    }

    fn csv_header(&self) -> String {
        format!("# waring-shifts {VERSION}\n# seed {}\n# config {}\n", self.seed, self.config_hash)
    }

    fn json(&self, mut body: Value) -> String {
        body.as_object_mut().expect("object body").insert("meta".into(), self.meta());
        serde_json::to_string_pretty(&body).expect("serialisable") + "\n"
    }

    fn count_json(&self, r: &CountResult) -> Value {
        let mut v = json!({ "count": r.count, "method": r.method, "enumerated": r.enumerated });
        if self.timing {
            v["wall_ms"] = json!(r.wall_ms());
        }
        v
    }
}

fn config_hash() -> String {
    let mut h = Sha256::new();
    for a in std::env::args().skip(1) {
        h.update(a.as_bytes());
        h.update([0]);
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn load_instance(path: &PathBuf) -> Result<InstanceFile> {
    InstanceFile::from_json(&fs::read_to_string(path)?)
}

fn first_poly(path: &PathBuf) -> Result<Vec<RealCoefficient>> {
    let sys = load_instance(path)?.target()?.as_system();
    Ok(sys.polys[0].clone())
}

fn bound_row(r: &BoundResult) -> String {
    format!("{},{},{},{},{:.4}", r.k, r.t_opt, r.e, r.bound, large_k_envelope(r.k))
}

fn bound_json(r: &BoundResult) -> Value {
    let w = &r.witness;
    json!({
        "k": r.k,
        "iota": r.iota,
        "t_opt": r.t_opt,
        "E": r.e,
        "bound": r.bound,
        "envelope": large_k_envelope(r.k),
        "profile": {
            "variant": w.variant,
            "lambda": rational_to_string(&w.lambda),
            "delta": rational_to_string(&w.delta),
            "e_star": rational_to_string(&w.e_star),
        }
    })
}

fn bound_for(k: u32, iota: u8) -> std::result::Result<BoundResult, Failure> {
    if iota == 0 {
        return Ok(bound_s0(k)?);
    }
    match bound_s1(k)? {
        BoundOutcome::Feasible(r) => Ok(r),
        BoundOutcome::Infeasible { k, t_max, .. } => {
            Err(Failure::Infeasible(Infeasible(format!("no admissible t <= {t_max} for k = {k}"))))
        }
    }
}

fn run(cli: &Cli, ctx: &Ctx) -> std::result::Result<String, Failure> {
    Ok(match &cli.command {
        Command::Tables { iota, k_min, k_max, format } => {
            let rows = (*k_min..=*k_max).map(|k| bound_for(k, *iota)).collect::<std::result::Result<Vec<_>, _>>()?;
            match format {
                Format::Csv => {
                    let mut s = ctx.csv_header();
                    s.push_str("k,t_opt,E,bound,envelope\n");
                    for r in &rows {
                        s.push_str(&bound_row(r));
                        s.push('\n');
                    }
                    s
                }
                Format::Json => ctx.json(json!({ "iota": iota, "rows": rows.iter().map(bound_json).collect::<Vec<_>>() })),
            }
        }
        Command::Bound { k, iota } => ctx.json(bound_json(&bound_for(*k, *iota)?)),
        Command::Kgood { k, n } => match n {
            Some(n) => ctx.json(json!({ "k": k, "n": n, "good": is_k_good(*k, *n)? })),
            None => ctx.json(json!({ "k": k, "largest": largest_k_good(*k)? })),
        },
        Command::Count { instance, method, split, tau, eta } => {
            let file = load_instance(instance)?;
            let target = file.target()?;
            let tau = tau.or(file.tau).ok_or_else(|| Error::Parse("tau missing from instance and flags".into()))?;
            let eta = eta.or(file.eta).ok_or_else(|| Error::Parse("eta missing from instance and flags".into()))?;
            let bounds = file.bounds.clone().ok_or_else(|| Error::Parse("instance has no 'box'".into()))?;
            let inst = InequalityInstance::new(target, tau, eta, bounds)?;
            let r = match method {
                CountMethod::Brute => count_brute(&inst, cli.budget)?,
                CountMethod::Mitm => count_mitm(&inst, *split, cli.budget)?,
            };
            ctx.json(ctx.count_json(&r))
        }
        Command::Moment { k, t, variant, p_list, eta, c, polys } => {
            let profile = build_profile(*k, *t, *variant)?;
            let hs = match polys {
                Some(path) => load_instance(path)?.target()?.as_system().polys,
                None => vec![monomial(*k); *t as usize],
            };
            let mut rows = Vec::new();
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for &p in p_list {
                let r = moment_count(&hs, &profile, p, *eta, *c, cli.budget)?;
                xs.push(p.ln());
                ys.push((r.count as f64).ln());
                let mut row = ctx.count_json(&r);
                row["P"] = json!(p);
                rows.push(row);
            }
            let slope = if xs.len() >= 2 { Some(fitted_slope(&xs, &ys)) } else { None };
            ctx.json(json!({
                "k": k, "t": t, "variant": variant,
                "delta": rational_to_string(&profile.delta),
                "delta_f64": waring_shifts::precision::rational_to_f64(&profile.delta),
                "rows": rows,
                "slope": slope,
            }))
        }
        Command::Vinogradov { t, k, x } => ctx.json(ctx.count_json(&vinogradov_count(*t, *k, *x, cli.budget)?)),
        Command::Uphi { poly, k, t, x, eta } => {
            let phi = match poly {
                Some(path) => first_poly(path)?,
                None => monomial(*k),
            };
            ctx.json(ctx.count_json(&u_phi_count(&phi, *t, *x, *eta, cli.budget)?))
        }
        Command::WeylProfile { poly, b, c, p, alpha_min, alpha_max, steps } => {
            let h = first_poly(poly)?;
            let range = WeylRange::new(*b, *c, *p)?;
            let n = (*steps).max(1);
            let alphas: Vec<f64> = (0..=n).map(|i| alpha_min + (alpha_max - alpha_min) * i as f64 / n as f64).collect();
            let g = weyl_profile(&h, &range, &alphas)?;
            let mut s = ctx.csv_header();
            s.push_str("alpha,re,im,abs\n");
            for (a, z) in alphas.iter().zip(&g) {
                s.push_str(&format!("{a:.12e},{:.12e},{:.12e},{:.12e}\n", z.re, z.im, z.norm()));
            }
            s
        }
        Command::KernelCheck { variant, eta, l, grid, tol } => {
            let spec = KernelSpec::new(*variant, *eta, *l)?;
            let n = (*grid).max(2);
            let mut s = ctx.csv_header();
            s.push_str("t,closed_form,quadrature,abs_err\n");
            for i in 0..n {
                let t = -3.0 * eta + 6.0 * eta * i as f64 / (n - 1) as f64;
                let q = kernel_fourier_quadrature(&spec, t, *tol)?.value;
                let exact = kernel_fourier(&spec, t)?;
                s.push_str(&format!("{t:.12e},{exact:.12e},{q:.12e},{:.3e}\n", (q - exact).abs()));
            }
            s
        }
        Command::Approx { alpha, qmax, p, d, format } => {
            let x: RealInput = alpha.parse()?;
            let conv = best_approximations(&x, *qmax)?;
            let arc = match p {
                Some(p) => Some(classify_major_arc(&x, *p, *d)?),
                None => None,
            };
            match format {
                Format::Json => ctx.json(json!({
                    "alpha": alpha,
                    "alpha_f64": x.to_f64(),
                    "convergents": conv,
                    "major_arc": arc,
                })),
                Format::Csv => {
                    let mut s = ctx.csv_header();
                    s.push_str("a,q,beta,quality\n");
                    for r in &conv {
                        s.push_str(&format!("{},{},{:e},{:e}\n", r.a, r.q, r.beta, r.quality));
                    }
                    s
                }
            }
        }
        Command::Asym { instance, eta, tau_list, method, format } => {
            let file = load_instance(instance)?;
            let form = match file.target()? {
                Target::Form(f) => f,
                Target::System(_) => return Err(Error::Domain("asym needs a shifted form".into()).into()),
            };
            let eta = eta.or(file.eta).ok_or_else(|| Error::Parse("eta missing from instance and flags".into()))?;
            let report = asymptotic_scan(&form, eta, tau_list, (*method).into(), cli.budget)?;
            match format {
                Format::Csv => {
                    let mut s = ctx.csv_header();
                    s.push_str("tau,count,main_term,ratio\n");
                    for r in &report.rows {
                        s.push_str(&format!("{},{},{:.6},{:.6}\n", r.tau, r.count, r.main_term, r.ratio));
                    }
                    s
                }
                Format::Json => ctx.json(json!({ "report": report, "tolerance": "[0.8, 1.2] (empirical)" })),
            }
        }
        Command::Selftest => {
            let checks = selftest(ctx.seed);
            let failed = checks.iter().filter(|c| !c.1).count();
            let mut s = String::new();
            for (name, ok) in &checks {
                s.push_str(&format!("{} {name}\n", if *ok { "ok  " } else { "FAIL" }));
            }
            if failed > 0 {
                return Err(Error::Domain(format!("{failed} self-test check(s) failed")).into());
            }
            s
        }
    })
}

fn selftest(seed: u64) -> Vec<(&'static str, bool)> {
    let table = |iota: u8| -> Option<Vec<i64>> {
        (4..=12).map(|k| bound_for(k, iota).ok().map(|r| r.bound)).collect()
    };
    let mut checks = vec![
        ("table s1(k), k = 4..12", table(1) == Some(vec![16, 27, 38, 51, 70, 87, 104, 120, 135])),
        ("table s0(k), k = 4..12", table(0) == Some(vec![18, 29, 43, 59, 79, 99, 115, 132, 149])),
        ("3 is 4-good, 4 is not", is_k_good(4, 3).ok() == Some(true) && is_k_good(4, 4).ok() == Some(false)),
        ("s0(k) below the large-k envelope", (4..=60).all(|k| bound_s0(k).map_or(false, |r| (r.bound as f64) < large_k_envelope(k)))),
    ];
    let kernels_ok = [KernelVariant::K, KernelVariant::K2alpha].iter().all(|&v| {
        let spec = KernelSpec::new(v, 1.0, None).expect("valid spec");
        [-1.5, -0.5, 0.0, 0.7].iter().all(|&t| {
            match (kernel_fourier_quadrature(&spec, t, 1e-8), kernel_fourier(&spec, t)) {
                (Ok(q), Ok(e)) => (q.value - e).abs() < 1e-6,
                _ => false,
            }
        })
    });
    checks.push(("kernel transforms match closed forms", kernels_ok));
    let freeman_ok = {
        let plus = KernelSpec::new(KernelVariant::Kplus, 1.0, Some(10.0)).expect("valid spec");
        let minus = KernelSpec::new(KernelVariant::Kminus, 1.0, Some(10.0)).expect("valid spec");
        [0.0, 0.5, 0.95, 1.05, 2.0].iter().all(|&t| {
            let u = indicator(1.0, t);
            match (kernel_fourier_quadrature(&minus, t, 1e-8), kernel_fourier_quadrature(&plus, t, 1e-8)) {
                (Ok(m), Ok(p)) => m.value <= u + 1e-6 && u <= p.value + 1e-6 && p.value <= 1.0 + 1e-6,
                _ => false,
            }
        })
    };
    checks.push(("Freeman sandwich", freeman_ok));
    let squares = Target::Form(
        waring_shifts::polynomials::ShiftedForm::new(2, vec![RealCoefficient::zero(); 3]).expect("valid form"),
    );
    let counting_ok = InequalityInstance::new(squares, 50.0, 3.0, vec![(-5, 8); 3]).map_or(false, |inst| {
        matches!((count_brute(&inst, 1_000_000), count_mitm(&inst, None, 1_000_000)), (Ok(a), Ok(b)) if a.count == b.count)
    });
    checks.push(("brute force and meet-in-the-middle agree", counting_ok));
    checks.push(("J_{2,1}(2) = 6", vinogradov_count(2, 1, 2, 1000).map_or(false, |r| r.count == 6)));
    let pi_ok = "pi"
        .parse::<RealInput>()
        .ok()
        .and_then(|x| best_approximations(&x, 1000).ok())
        .map_or(false, |c| c.iter().map(|r| r.q).collect::<Vec<_>>() == vec![1, 7, 106, 113]);
    checks.push(("convergents of pi", pi_ok));
    let mc_ok = singular_integral_mc(5, 2, 200_000, seed)
        .map_or(false, |(m, e)| (m - singular_integral_exact(5, 2)).abs() < 4.0 * e);
    checks.push(("singular integral Monte Carlo", mc_ok));
    let mt_ok = main_term(5, 2, 100.0, 0.5)
        .map_or(false, |m| (m / (1000.0 * std::f64::consts::PI.powi(2) / 24.0) - 1.0).abs() < 1e-12);
    checks.push(("main term closed form", mt_ok));
    checks
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Dimension { .. } => "dimension",
        Error::Budget { .. } => "budget",
        Error::Quadrature { .. } => "quadrature",
        Error::Precision { .. } => "precision",
        Error::NoClosedForm(_) => "no_closed_form",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("WARING_THREADS").ok().and_then(|v| v.parse().ok()).unwrap_or(cli.threads);
    if threads > 0 {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let ctx = Ctx { seed: cli.seed, config_hash: config_hash(), timing: !cli.no_timing };

    let (payload, code) = match run(&cli, &ctx) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, out.as_bytes()),
                None => std::io::stdout().write_all(out.as_bytes()),
            };
            match written {
                Ok(()) => return ExitCode::SUCCESS,
                Err(e) => (json!({ "error": "io", "message": e.to_string() }), 1),
            }
        }
        Err(Failure::Lib(e)) => {
            let code = if matches!(e, Error::Budget { .. }) { 2 } else { 1 };
            (json!({ "error": error_kind(&e), "message": e.to_string() }), code)
        }
        Err(Failure::Infeasible(Infeasible(msg))) => (json!({ "error": "infeasible", "message": msg }), 3),
    };
    eprintln!("{payload}");
    ExitCode::from(code)
}
