//! Acceptance suite. Each test prints one `PASS`/`FAIL` line and then
//! asserts the same condition at its pinned tolerance.
//!
//! Banknote-based criteria read the CSV named by `MINDIFF_BANKNOTE` and fall
//! back to the synthetic Banknote-shaped data otherwise; the line says which.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mindiff::deriv::{
    differentiate, forward_exact_gd, forward_exact_hb, forward_inexact_gd, forward_inexact_hb,
    reverse_exact_gd, reverse_exact_hb, reverse_inexact_gd, reverse_inexact_hb, FrozenStep,
};
use mindiff::harness::config::ParamsSpec;
use mindiff::harness::experiment::ExperimentReport;
use mindiff::harness::{run_experiment, DataSource, Entry, ExperimentConfig, ObjectiveKind};
use mindiff::oracle::{fd_jacobian_of_solver, phi, rate_gd};
use mindiff::solver::{optimal_params_gd, run};
use mindiff::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: &str, title: &str, passed: bool, detail: &str) {
    println!("{} criterion {id}: {title} | {detail}", if passed { "PASS" } else { "FAIL" });
}

fn gaussian_logreg(rng: &mut ChaCha8Rng, m: usize, n: usize) -> LogRegData {
    let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
    let b = DVector::from_fn(m, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    LogRegData::new(a, b).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

#[test]
fn c1_mode_duality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = DerivOptions::default();
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let obj = logreg_diag(gaussian_logreg(&mut rng, 20, 4));
        let u = DVector::from_fn(4, |_, _| rng.random_range(0.1..5.0));
        let (_, l) = obj.curvature_bounds(&u).unwrap();
        let s = random_matrix(&mut rng, 4, 3);
        let r = random_matrix(&mut rng, 2, 4);
        for (alpha, beta) in [(1.0 / l, 0.0), (1.0 / l, 0.3)] {
            let mode = ParamMode::Manual { alpha, beta };
            let (fwd, rev) = if beta == 0.0 {
                let t = run(&obj, &u, &SolverConfig::new(Algorithm::GradientDescent, mode, 100)).unwrap();
                (
                    forward_exact_gd(&obj, &t, &u, &s, &opts).unwrap(),
                    reverse_exact_gd(&obj, &t, &u, &r, &opts).unwrap(),
                )
            } else {
                let t = run(&obj, &u, &SolverConfig::new(Algorithm::HeavyBall, mode, 100)).unwrap();
                (
                    forward_exact_hb(&obj, &t, &u, &s, &opts).unwrap(),
                    reverse_exact_hb(&obj, &t, &u, &r, &opts).unwrap(),
                )
            };
            let lhs = &r * &fwd.estimate;
            let rhs = &rev.estimate * &s;
            worst = worst.max((lhs - &rhs).norm() / (1.0 + rhs.norm()));
        }
    }
    let elapsed = start.elapsed();
    let passed = worst <= 1e-10 && elapsed < Duration::from_secs(5);
    verdict(
        "1",
        "exact forward/reverse duality, 25 logreg instances, GD and HB (beta 0.3), K=100",
        passed,
        &format!("max |R J_fwd - J_rev S|/(1+|J_rev S|) = {worst:.2e} (tol 1e-10), {elapsed:.2?} (limit 5s)"),
    );
    assert!(passed);
}

fn banknote() -> &'static (LogRegData, DataSource) {
    static DATA: OnceLock<(LogRegData, DataSource)> = OnceLock::new();
    DATA.get_or_init(|| {
        let src = DataSource::from_env();
        let (d, _) = src.load().expect("Banknote data");
        (d, src)
    })
}

fn data_note() -> String {
    let (_, src) = banknote();
    if src.is_surrogate() {
        format!("data: {src} (synthetic stand-in; set MINDIFF_BANKNOTE for the real file)")
    } else {
        format!("data: {src}")
    }
}

#[test]
fn c2_ad_matches_finite_differences() {
    let start = Instant::now();
    let obj = logreg_scalar(banknote().0.clone());
    let u = DVector::from_element(1, 2.0);
    let (m, l) = obj.curvature_bounds(&u).unwrap();
    let (alpha, _) = optimal_params_gd(m, l).unwrap();
    let cfg = SolverConfig::new(Algorithm::GradientDescent, ParamMode::Manual { alpha, beta: 0.0 }, 50);
    let trace = run(&obj, &u, &cfg).unwrap();
    let ad = forward_exact_gd(&obj, &trace, &u, &DMatrix::identity(1, 1), &DerivOptions::default()).unwrap();
    let fd = fd_jacobian_of_solver(&obj, &u, &cfg, Some(1e-5)).unwrap();
    let rel = (&ad.estimate - &fd).norm() / fd.norm();
    let elapsed = start.elapsed();
    let passed = rel <= 1e-5 && elapsed < Duration::from_secs(10);
    verdict(
        "2",
        "GD-F at K=50 on f_1 (u=2, optimal alpha) vs central differences (h=1e-5)",
        passed,
        &format!("relative error {rel:.2e} (tol 1e-5), {elapsed:.2?} (limit 10s); {}", data_note()),
    );
    assert!(passed);
}

#[test]
fn c3_quadratic_ground_truth() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let k = 2000;
    for _ in 0..20 {
        let n = rng.random_range(1..=5);
        let spectrum = DVector::from_fn(n, |_, _| rng.random_range(1.0..10.0));
        let u = DVector::from_fn(n, |i, _| rng.random_range(0.1..1.0) * spectrum[i]);
        let h = &spectrum - &u;
        let c = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let q = quadratic_objective(h, c, Coupling::RegularizerPerCoordinate).unwrap();
        let d = q.minimizer_jacobian(&u);
        for alg in [Algorithm::GradientDescent, Algorithm::HeavyBall] {
            let trace = run(&q, &u, &SolverConfig::new(alg, ParamMode::Optimal, k)).unwrap();
            for v in Variant::ALL_GD_HB.iter().filter(|v| v.algorithm() == alg) {
                let seed = if v.is_reverse() {
                    DerivativeSeed::identity_reverse(n)
                } else {
                    DerivativeSeed::identity_forward(n)
                };
                let r = differentiate(*v, &q, &trace, &u, &seed, k, &DerivOptions::default()).unwrap();
                worst = worst.max((r.estimate - &d).norm());
            }
        }
    }
    let elapsed = start.elapsed();
    let passed = worst <= 1e-8 && elapsed < Duration::from_secs(5);
    verdict(
        "3",
        "all eight GD/HB variants reach the closed-form Jacobian on 20 quadratics by K=2000",
        passed,
        &format!("max Frobenius error {worst:.2e} (tol 1e-8), {elapsed:.2?} (limit 5s)"),
    );
    assert!(passed);
}

/// Contraction of `e_{k+1} = R e_k − β e_{k−1}` from `e_0 = e_{−1} = −φ S`,
/// the error of the frozen recurrence, averaged over `[a, b]`.
fn frozen_error_rate(step: &FrozenStep, e0: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let (mut prev, mut cur) = (e0.clone(), e0.clone());
    let mut norms = vec![cur.norm()];
    for _ in 0..b {
        let next = step.forward(&cur, &prev);
        prev = std::mem::replace(&mut cur, next);
        norms.push(cur.norm());
    }
    (norms[b] / norms[a]).powf(1.0 / (b - a) as f64)
}

#[test]
fn c4_rate_transfer() {
    let q = quadratic_objective(DVector::from_vec(vec![1.0, 9.0]), DVector::zeros(2), Coupling::ShiftTarget).unwrap();
    let u = DVector::from_vec(vec![1.0, -1.0]);
    let s = DMatrix::identity(2, 2);
    let mut rates = Vec::new();
    for alg in [Algorithm::GradientDescent, Algorithm::HeavyBall] {
        let trace = run(&q, &u, &SolverConfig::new(alg, ParamMode::Optimal, 400)).unwrap();
        let x_k = trace.last();
        let step = FrozenStep::at(&q, x_k, &u, trace.last_step_size().unwrap(), trace.beta).unwrap();
        let target = phi(&q, x_k, &u).unwrap() * &s;
        // The pinned window lies far below double-precision resolution of
        // the estimate itself (0.8^200 ~ 1e-20), so the error is propagated
        // directly with the frozen step the inexact variants use.
        let rate = frozen_error_rate(&step, &(-&target), 200, 400);
        // Cross-check against the actual estimates above the roundoff floor.
        let opts = DerivOptions::with_history();
        let alpha = trace.last_step_size().unwrap();
        let run = match alg {
            Algorithm::GradientDescent => forward_inexact_gd(&q, x_k, &u, &s, alpha, 60, &opts),
            Algorithm::HeavyBall => forward_inexact_hb(&q, x_k, &u, &s, alpha, trace.beta, 30, &opts),
        }
        .unwrap();
        let hist = run.history.unwrap();
        let (a, b) = match alg {
            Algorithm::GradientDescent => (20, 60),
            Algorithm::HeavyBall => (10, 30),
        };
        let direct = ((&hist[b - 1] - &target).norm() / (&hist[a - 1] - &target).norm()).powf(1.0 / (b - a) as f64);
        rates.push((rate, direct));
    }
    let (gd, hb) = (rates[0], rates[1]);
    let passed = (0.75..=0.85).contains(&gd.0) && (0.45..=0.55).contains(&hb.0);
    verdict(
        "4",
        "inexact derivative error contraction on diag(1, 9), iterations 200-400",
        passed,
        &format!(
            "GD-FI {:.4} in [0.75, 0.85] (direct k=20..60: {:.4}), HB-FI {:.4} in [0.45, 0.55] (direct k=10..30: {:.4})",
            gd.0, gd.1, hb.0, hb.1
        ),
    );
    assert!(passed);
}

struct Suite {
    f1_optimal: ExperimentReport,
    f1_optimal_time: Duration,
    f1_suboptimal: ExperimentReport,
    fn_optimal: ExperimentReport,
    fn_suboptimal: ExperimentReport,
}

fn table_config(objective: ObjectiveKind, params: ParamsSpec) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        objective,
        data: Some(banknote().1.clone()),
        iterations: 6000,
        params,
        record_history: false,
        ..ExperimentConfig::default()
    };
    if objective == ObjectiveKind::LogRegDiag {
        cfg.set("u", "uniform(0,5)").unwrap();
        cfg.seed = Some(5);
    }
    cfg
}

fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let f1_optimal = run_experiment(&table_config(ObjectiveKind::LogRegScalar, ParamsSpec::Optimal)).unwrap();
        let f1_optimal_time = start.elapsed();
        Suite {
            f1_optimal,
            f1_optimal_time,
            f1_suboptimal: run_experiment(&table_config(ObjectiveKind::LogRegScalar, ParamsSpec::Suboptimal)).unwrap(),
            fn_optimal: run_experiment(&table_config(ObjectiveKind::LogRegDiag, ParamsSpec::Optimal)).unwrap(),
            fn_suboptimal: run_experiment(&table_config(ObjectiveKind::LogRegDiag, ParamsSpec::Suboptimal)).unwrap(),
        }
    })
}

/// The accuracy reported for an entry: derivative error for variants,
/// iterate error for the solvers.
fn accuracy(report: &ExperimentReport, entry: Entry) -> f64 {
    let r = report.result(entry.label()).unwrap_or_else(|| panic!("{entry} failed"));
    r.final_derivative_err.unwrap_or(r.final_original_err)
}

#[test]
fn c5_table_ordering() {
    let s = suite();
    let acc = |l: &str| accuracy(&s.f1_optimal, l.parse().unwrap());
    let (hb_fi, hb_f, gd_fi, gd_f) = (acc("HB-FI"), acc("HB-F"), acc("GD-FI"), acc("GD-F"));
    let passed = hb_fi < hb_f
        && hb_f < gd_fi
        && gd_fi < gd_f
        && hb_fi * 1e3 <= gd_fi
        && gd_fi * 3.0 <= gd_f
        && s.f1_optimal_time < Duration::from_secs(60);
    verdict(
        "5",
        "f_1, u=2, K=6000, optimal: HB-FI < HB-F < GD-FI < GD-F, HB-FI <= 1e-3 GD-FI, GD-FI <= GD-F/3",
        passed,
        &format!(
            "HB-FI {hb_fi:.2e}, HB-F {hb_f:.2e}, GD-FI {gd_fi:.2e}, GD-F {gd_f:.2e}, GD {:.2e}, HB {:.2e}; {:.2?} (limit 60s); {}",
            acc("GD"),
            acc("HB"),
            s.f1_optimal_time,
            data_note()
        ),
    );
    assert!(passed);
}

#[test]
fn c6_suboptimal_degradation() {
    let s = suite();
    let mut lines = Vec::new();
    let mut passed = true;
    for entry in Entry::table_rows() {
        let opt = accuracy(&s.f1_optimal, entry);
        let sub = accuracy(&s.f1_suboptimal, entry);
        let ok = sub >= 1e2 * opt;
        passed &= ok;
        lines.push(format!("{entry} {opt:.1e}->{sub:.1e}{}", if ok { "" } else { " (!)" }));
    }
    verdict(
        "6",
        "suboptimal (alpha/3, beta/3) accuracies at least 100x worse than optimal, all ten rows",
        passed,
        &format!("{}; {}", lines.join(", "), data_note()),
    );
    assert!(passed);
}

#[test]
fn c7_exact_ad_lag() {
    // D_u x* = 0 here (c = 0, so x* = 0), which keeps every error free of
    // cancellation against the reference; x0 = (1, 1) keeps the run nontrivial.
    let q = quadratic_objective(DVector::from_vec(vec![0.0, 8.0]), DVector::zeros(2), Coupling::RegularizerPerCoordinate)
        .unwrap();
    let u = DVector::from_vec(vec![1.0, 1.0]);
    let d = q.minimizer_jacobian(&u);
    assert_eq!(d.norm(), 0.0);
    let s = DMatrix::identity(2, 2);
    let x0 = DVector::from_vec(vec![1.0, 1.0]);
    let cfg = |k| SolverConfig::new(Algorithm::GradientDescent, ParamMode::Optimal, k).with_x0(x0.clone());
    let (alpha, _) = optimal_params_gd(1.0, 9.0).unwrap();
    let q_rate = rate_gd(&q, &DVector::zeros(2), &u, alpha).unwrap().q;
    let full = run(&q, &u, &cfg(300)).unwrap();
    let exact = forward_exact_gd(&q, &full, &u, &s, &DerivOptions::with_history()).unwrap();
    let hist = exact.history.unwrap();
    let mut ratios = Vec::new();
    for k in 50..=300 {
        let t = run(&q, &u, &cfg(k)).unwrap();
        let fi = forward_inexact_gd(&q, t.last(), &u, &s, t.last_step_size().unwrap(), k, &DerivOptions::default())
            .unwrap();
        let err_f = (&hist[k - 1] - &d).norm();
        let err_fi = (&fi.estimate - &d).norm();
        ratios.push(err_f / err_fi);
    }
    let drops = ratios.windows(2).filter(|w| w[1] < w[0]).count();
    let passed = drops == 0 && (q_rate - 0.8).abs() < 1e-12;
    verdict(
        "7",
        "error(GD-F, k) / error(GD-FI, k) nondecreasing for k in [50, 300] at q = 0.8",
        passed,
        &format!(
            "q = {q_rate}, ratio {:.3e} at k=50 -> {:.3e} at k=300, {drops} decreases",
            ratios[0],
            ratios[ratios.len() - 1]
        ),
    );
    assert!(passed);
}

#[test]
fn c8_corollaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = DerivOptions::default();
    let mut worst_a = 0.0f64;
    let mut worst_b = 0.0f64;
    for trial in 0..10 {
        let n = 4;
        let h = DVector::from_fn(n, |_, _| rng.random_range(0.0..9.0));
        let c = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let u = DVector::from_fn(n, |_, _| rng.random_range(1.0..3.0));
        let q = quadratic_objective(h, c, Coupling::RegularizerPerCoordinate).unwrap();
        let s = random_matrix(&mut rng, n, 2);
        let r = random_matrix(&mut rng, 3, n);

        // (a) backtracking, then GD-FI at the last accepted step
        let bt = SolverConfig::new(Algorithm::GradientDescent, ParamMode::Backtracking(BacktrackingParams::default()), 15 + trial);
        let trace = run(&q, &u, &bt).unwrap();
        let x_k = trace.last();
        let alpha = trace.last_step_size().unwrap();
        let target = phi(&q, x_k, &u).unwrap();
        let fwd = forward_inexact_gd(&q, x_k, &u, &s, alpha, 5000, &opts).unwrap();
        let rev = reverse_inexact_gd(&q, x_k, &u, &r, alpha, 5000, &opts).unwrap();
        worst_a = worst_a.max((fwd.estimate - &target * &s).norm()).max((rev.estimate - &r * &target).norm());

        // (b) heavy-ball iterate fed to GD-FI vs HB-FI
        let hb = run(&q, &u, &SolverConfig::new(Algorithm::HeavyBall, ParamMode::Optimal, 20)).unwrap();
        let x_k = hb.last();
        let (m, l) = q.curvature_bounds(&u).unwrap();
        let (a_gd, _) = optimal_params_gd(m, l).unwrap();
        let gd_fi = forward_inexact_gd(&q, x_k, &u, &s, a_gd, 5000, &opts).unwrap();
        let hb_fi = forward_inexact_hb(&q, x_k, &u, &s, hb.last_step_size().unwrap(), hb.beta, 5000, &opts).unwrap();
        let gd_ri = reverse_inexact_gd(&q, x_k, &u, &r, a_gd, 5000, &opts).unwrap();
        let hb_ri = reverse_inexact_hb(&q, x_k, &u, &r, hb.last_step_size().unwrap(), hb.beta, 5000, &opts).unwrap();
        worst_b = worst_b
            .max((gd_fi.estimate - hb_fi.estimate).norm())
            .max((gd_ri.estimate - hb_ri.estimate).norm());
    }
    let passed = worst_a <= 1e-8 && worst_b <= 1e-8;
    verdict(
        "8",
        "(a) backtracking GD then GD-FI/GD-RI reach phi(x_K)S; (b) HB iterate through GD-FI matches HB-FI",
        passed,
        &format!("(a) max error {worst_a:.2e}, (b) max gap {worst_b:.2e} (tol 1e-8), 10 quadratics"),
    );
    assert!(passed);
}

#[test]
fn c9_monotone_descent() {
    let s = suite();
    let mut checked = Vec::new();
    let mut total = 0;
    for (name, report) in [
        ("f_1 optimal", &s.f1_optimal),
        ("f_1 suboptimal", &s.f1_suboptimal),
        ("f_N optimal", &s.fn_optimal),
        ("f_N suboptimal", &s.fn_suboptimal),
    ] {
        for alg in ["GD", "HB"] {
            let r = report.result(alg).unwrap_or_else(|| panic!("{name} {alg} failed"));
            if r.descent_compliant {
                total += r.descent_violations;
                checked.push(format!("{name} {alg}: {}", r.descent_violations));
            }
        }
    }
    let passed = total == 0 && !checked.is_empty();
    verdict(
        "9",
        "no increase of f on any f_1/f_N run whose step satisfies the descent condition",
        passed,
        &format!("violations per compliant run [{}]; {}", checked.join(", "), data_note()),
    );
    assert!(passed);
}
