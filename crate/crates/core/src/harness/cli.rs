//! `mindiff` command line: `run`, `check` and `rates`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deriv::{differentiate, DerivOptions, DerivativeSeed, Variant};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, ObjectiveKind};
use crate::harness::experiment::{build_objective, run_experiment};
use crate::harness::output::emit_csv;
use crate::objective::{quadratic_objective, Coupling, ParametricObjective, QuadraticObjective};
use crate::oracle;
use crate::solver::{optimal_params_gd, optimal_params_hb, run, Algorithm, ParamMode, SolverConfig};

#[derive(Parser, Debug)]
#[command(name = "mindiff", version, about = "Derivatives of minimizers by differentiating GD and heavy-ball iterations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment from a key=value config and write CSVs.
    Run(RunArgs),
    /// Self-tests against closed forms on built-in quadratics.
    Check,
    /// Print optimal step parameters and rates.
    Rates(RatesArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset path, `surrogate` or `surrogate:<seed>`.
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Algorithm or variant label; repeatable.
    #[arg(long = "algo")]
    algo: Vec<String>,
    #[arg(long = "K")]
    k: Option<usize>,
    /// Scalar, comma list or uniform(lo,hi).
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["optimal", "suboptimal", "manual"])]
    params: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[arg(long)]
    m: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "logreg-scalar")]
    objective: String,
}

/// Parses `argv` (program name first) and runs the command. Returns the
/// process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => {
            if args.config.is_none() {
                let mut cmd = Cli::command();
                let usage = cmd
                    .find_subcommand_mut("run")
                    .map(|c| c.render_usage().to_string())
                    .unwrap_or_default();
                eprintln!("{usage}\nerror: run needs --config <FILE>");
                return 2;
            }
            cmd_run(args)
        }
        Command::Check => cmd_check(),
        Command::Rates(args) => cmd_rates(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let path = args.config.as_ref().expect("checked by caller");
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(d) = &args.data {
        cfg.set("data", d)?;
    }
    if !args.algo.is_empty() {
        cfg.set("algorithms", &args.algo.join(","))?;
    }
    if let Some(k) = args.k {
        cfg.set("K", &k.to_string())?;
    }
    if let Some(u) = &args.u {
        cfg.set("u", u)?;
    }
    if let Some(s) = args.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(p) = &args.params {
        cfg.set("params", p)?;
    }
    if let Some(a) = args.alpha {
        cfg.set("alpha", &a.to_string())?;
    }
    if let Some(b) = args.beta {
        cfg.set("beta", &b.to_string())?;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Config("no output directory (set `out` or pass --out)".into()))?;

    let report = run_experiment(&cfg)?;
    if let Some(ds) = &report.dataset {
        if ds.surrogate {
            println!("note: synthetic Banknote-shaped data ({}), not the real dataset", ds.source);
        }
        println!("dataset {} sha256 {}", ds.source, ds.sha256);
    }
    println!("{:<6} {:>24} {:>24} {:>12}", "algo", "final_original_err", "final_derivative_err", "rate");
    let mut failed = 0;
    for e in &report.entries {
        match &e.outcome {
            Ok(r) => println!(
                "{:<6} {:>24.6e} {:>24} {:>12.6}",
                e.entry.label(),
                r.final_original_err,
                r.final_derivative_err.map(|d| format!("{d:.6e}")).unwrap_or_default(),
                r.predicted_rate.q
            ),
            Err(msg) => {
                failed += 1;
                println!("{:<6} failed: {msg}", e.entry.label());
            }
        }
    }
    let written = emit_csv(&report, &out)?;
    println!("wrote {} files to {} in {:.2?}", written.len(), out.display(), report.wall_time);
    Ok(if failed == 0 { 0 } else { 1 })
}

fn cmd_rates(args: RatesArgs) -> Result<i32> {
    let (m, l) = match (args.m, args.l, &args.data) {
        (Some(m), Some(l), _) => (m, l),
        (None, None, Some(data)) => {
            let mut cfg = ExperimentConfig::default();
            cfg.set("objective", &args.objective)?;
            if cfg.objective == ObjectiveKind::Quadratic {
                return Err(Error::Config("rates from data need a logreg objective".into()));
            }
            cfg.set("data", data)?;
            if let Some(u) = &args.u {
                cfg.set("u", u)?;
            }
            cfg.seed = args.seed;
            let (obj, _) = build_objective(&cfg)?;
            let u = cfg.u.resolve(obj.dim_u(), cfg.seed)?;
            let (m, l) = obj
                .curvature_bounds(&u)
                .ok_or(Error::MissingCurvatureBounds("rates"))?;
            println!("m={m} L={l}");
            (m, l)
        }
        _ => return Err(Error::Config("give --m and --L, or --data [--u]".into())),
    };
    let (a_gd, q_gd) = optimal_params_gd(m, l)?;
    let (a_hb, b_hb, q_hb) = optimal_params_hb(m, l)?;
    println!("GD: α*={a_gd} q*={q_gd}");
    println!("HB: α*={a_hb} β*={b_hb} q*={q_hb}");
    Ok(0)
}

/// One named self-check with its outcome and detail.
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_regularizer_quadratic(rng: &mut ChaCha8Rng, n: usize) -> Result<(QuadraticObjective, DVector<f64>, DMatrix<f64>)> {
    let h = DVector::from_fn(n, |_, _| rng.random_range(0.0..2.0));
    let c = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let u = DVector::from_fn(n, |_, _| rng.random_range(1.0..8.0));
    let q = quadratic_objective(h, c, Coupling::RegularizerPerCoordinate)?;
    let d = q.minimizer_jacobian(&u);
    Ok((q, u, d))
}

/// Closed-form and consistency checks on small quadratics.
pub fn self_checks() -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut out = Vec::new();
    let (q, u, d) = random_regularizer_quadratic(&mut rng, 4)?;

    let x_star = q.minimizer(&u);
    let err = (oracle::phi(&q, &x_star, &u)? - &d).norm();
    out.push(CheckResult {
        name: "phi matches closed form",
        passed: err <= 1e-12,
        detail: format!("{err:.2e}"),
    });

    let mut worst = 0.0f64;
    for (alg, mode, fwd, rev) in [
        (Algorithm::GradientDescent, ParamMode::Optimal, Variant::GdForward, Variant::GdReverse),
        (Algorithm::HeavyBall, ParamMode::Optimal, Variant::HbForward, Variant::HbReverse),
    ] {
        let trace = run(&q, &u, &SolverConfig::new(alg, mode, 60))?;
        let opts = DerivOptions::default();
        let f = differentiate(fwd, &q, &trace, &u, &DerivativeSeed::identity_forward(4), 0, &opts)?;
        let r = differentiate(rev, &q, &trace, &u, &DerivativeSeed::identity_reverse(4), 0, &opts)?;
        worst = worst.max((f.estimate - &r.estimate).norm() / (1.0 + r.estimate.norm()));
    }
    out.push(CheckResult {
        name: "forward and reverse exact modes agree",
        passed: worst <= 1e-10,
        detail: format!("{worst:.2e}"),
    });

    let cfg = SolverConfig::new(Algorithm::HeavyBall, ParamMode::Optimal, 30);
    let trace = run(&q, &u, &cfg)?;
    let ad = differentiate(Variant::HbForward, &q, &trace, &u, &DerivativeSeed::identity_forward(4), 0, &DerivOptions::default())?;
    let fd = oracle::fd_jacobian_of_solver(&q, &u, &cfg, Some(1e-5))?;
    let rel = (&ad.estimate - &fd).norm() / fd.norm().max(1e-300);
    out.push(CheckResult {
        name: "exact AD matches finite differences",
        passed: rel <= 1e-6,
        detail: format!("{rel:.2e}"),
    });

    let diag = quadratic_objective(DVector::from_vec(vec![1.0, 9.0]), DVector::zeros(2), Coupling::ShiftTarget)?;
    let z = DVector::zeros(2);
    let (a_gd, _) = optimal_params_gd(1.0, 9.0)?;
    let (a_hb, b_hb, _) = optimal_params_hb(1.0, 9.0)?;
    let q_gd = oracle::rate_gd(&diag, &z, &z, a_gd)?.q;
    let q_hb = oracle::rate_hb(&diag, &z, &z, a_hb, b_hb)?.q;
    out.push(CheckResult {
        name: "predicted rates on diag(1, 9)",
        passed: (q_gd - 0.8).abs() < 1e-12 && (q_hb - 0.5).abs() < 1e-12,
        detail: format!("q_GD={q_gd} q_HB={q_hb}"),
    });

    let mut worst = 0.0f64;
    for alg in [Algorithm::GradientDescent, Algorithm::HeavyBall] {
        let trace = run(&q, &u, &SolverConfig::new(alg, ParamMode::Optimal, 2000))?;
        for v in Variant::ALL_GD_HB.iter().filter(|v| v.algorithm() == alg) {
            let seed = if v.is_reverse() {
                DerivativeSeed::identity_reverse(4)
            } else {
                DerivativeSeed::identity_forward(4)
            };
            let r = differentiate(*v, &q, &trace, &u, &seed, 2000, &DerivOptions::default())?;
            worst = worst.max((r.estimate - &d).norm());
        }
    }
    out.push(CheckResult {
        name: "all variants converge to the Jacobian",
        passed: worst <= 1e-8,
        detail: format!("{worst:.2e}"),
    });
    Ok(out)
}

fn cmd_check() -> Result<i32> {
    let results = self_checks()?;
    for r in &results {
        println!("{} {} ({})", if r.passed { "ok  " } else { "FAIL" }, r.name, r.detail);
    }
    Ok(if results.iter().all(|r| r.passed) { 0 } else { 1 })
}
