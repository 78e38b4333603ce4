//! Experiment orchestration: reference solution, solver runs, derivative
//! variants and their error curves.

use std::time::{Duration, Instant};

use log::{info, warn};
use nalgebra::{DMatrix, DVector};

use crate::deriv::{differentiate, DerivOptions, DerivativeSeed};
use crate::error::{Error, Result};
use crate::harness::config::{Entry, ExperimentConfig, ObjectiveKind};
use crate::objective::{logreg_diag, logreg_scalar, quadratic_objective, ParametricObjective};
use crate::oracle::{self, RatePrediction};
use crate::solver::{self, Algorithm, IterateTrace, SolverConfig, StepParams};

/// Relative slack when counting increases of `f` along a run.
pub const DESCENT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetInfo {
    pub source: String,
    pub sha256: String,
    pub surrogate: bool,
}

/// Measurements for one report row.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryResult {
    /// `|x^(k) − x*|` for `k = 0..=K`.
    pub original_errors: Vec<f64>,
    /// `|D^(k) − D_u x*|_F` for every derivative iteration including the
    /// zero start; `None` for solver rows or when history is off.
    pub derivative_errors: Option<Vec<f64>>,
    pub final_original_err: f64,
    pub final_derivative_err: Option<f64>,
    pub derivative_iterations: Option<usize>,
    pub estimate: Option<DMatrix<f64>>,
    pub step: StepParams,
    pub predicted_rate: RatePrediction,
    /// Whether the step satisfies the monotone-descent condition.
    pub descent_compliant: bool,
    pub descent_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryReport {
    pub entry: Entry,
    /// Failures keep their message; other entries are unaffected.
    pub outcome: std::result::Result<EntryResult, String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub dataset: Option<DatasetInfo>,
    pub u: DVector<f64>,
    pub x_star: DVector<f64>,
    pub reference: DMatrix<f64>,
    pub entries: Vec<EntryReport>,
    pub wall_time: Duration,
}

impl ExperimentReport {
    pub fn entry(&self, label: &str) -> Option<&EntryReport> {
        self.entries.iter().find(|e| e.entry.label() == label)
    }

    /// The successful result for `label`.
    pub fn result(&self, label: &str) -> Option<&EntryResult> {
        self.entry(label).and_then(|e| e.outcome.as_ref().ok())
    }

    /// Equality of everything except wall time.
    pub fn same_results(&self, other: &ExperimentReport) -> bool {
        self.config == other.config
            && self.dataset == other.dataset
            && self.u == other.u
            && self.x_star == other.x_star
            && self.reference == other.reference
            && self.entries == other.entries
    }
}

/// The objective named by the config, plus dataset provenance.
pub fn build_objective(
    cfg: &ExperimentConfig,
) -> Result<(Box<dyn ParametricObjective>, Option<DatasetInfo>)> {
    match cfg.objective {
        ObjectiveKind::Quadratic => {
            let q = cfg
                .quad
                .as_ref()
                .ok_or_else(|| Error::Config("quad objective needs quad_h and quad_c".into()))?;
            let obj = quadratic_objective(
                DVector::from_column_slice(&q.h),
                DVector::from_column_slice(&q.c),
                q.coupling,
            )?;
            Ok((Box::new(obj), None))
        }
        ObjectiveKind::LogRegScalar | ObjectiveKind::LogRegDiag => {
            let source = cfg
                .data
                .as_ref()
                .ok_or_else(|| Error::Config("logistic regression needs a dataset".into()))?;
            let (data, sha256) = source.load()?;
            if source.is_surrogate() {
                warn!("using synthetic Banknote-shaped data ({source}), not the real dataset");
            }
            let info = DatasetInfo {
                source: source.to_string(),
                sha256,
                surrogate: source.is_surrogate(),
            };
            let obj: Box<dyn ParametricObjective> = if cfg.objective == ObjectiveKind::LogRegScalar {
                Box::new(logreg_scalar(data))
            } else {
                Box::new(logreg_diag(data))
            };
            Ok((obj, Some(info)))
        }
    }
}

struct SolverRun {
    trace: IterateTrace,
    step: StepParams,
    rate: RatePrediction,
    original_errors: Vec<f64>,
    descent_compliant: bool,
    descent_violations: usize,
}

fn run_solver(
    obj: &dyn ParametricObjective,
    u: &DVector<f64>,
    x_star: &DVector<f64>,
    algorithm: Algorithm,
    cfg: &ExperimentConfig,
) -> Result<SolverRun> {
    let sc = SolverConfig::new(algorithm, cfg.params.mode(), cfg.iterations);
    let step = sc
        .resolve(obj, u)?
        .ok_or_else(|| Error::Config("experiments need constant step parameters".into()))?;
    let trace = solver::run(obj, u, &sc)?;
    let rate = match algorithm {
        Algorithm::GradientDescent => oracle::rate_gd(obj, x_star, u, step.alpha)?,
        Algorithm::HeavyBall => oracle::rate_hb(obj, x_star, u, step.alpha, step.beta)?,
    };
    let original_errors = trace.iterates.iter().map(|x| (x - x_star).norm()).collect();
    let descent_compliant = obj
        .curvature_bounds(u)
        .is_some_and(|(_, l)| step.is_descent_compliant(algorithm, l));
    let descent_violations = trace.descent_violations(DESCENT_REL_TOL);
    Ok(SolverRun {
        trace,
        step,
        rate,
        original_errors,
        descent_compliant,
        descent_violations,
    })
}

fn entry_result(
    entry: Entry,
    obj: &dyn ParametricObjective,
    u: &DVector<f64>,
    reference: &DMatrix<f64>,
    run: &SolverRun,
    cfg: &ExperimentConfig,
) -> Result<EntryResult> {
    let mut result = EntryResult {
        original_errors: run.original_errors.clone(),
        derivative_errors: None,
        final_original_err: *run.original_errors.last().expect("K+1 iterates"),
        final_derivative_err: None,
        derivative_iterations: None,
        estimate: None,
        step: run.step,
        predicted_rate: run.rate.clone(),
        descent_compliant: run.descent_compliant,
        descent_violations: run.descent_violations,
    };
    if let Entry::Derivative(variant) = entry {
        // identity seeds: both modes target the full Jacobian
        let seed = if variant.is_reverse() {
            DerivativeSeed::identity_reverse(obj.dim_x())
        } else {
            DerivativeSeed::identity_forward(obj.dim_u())
        };
        let opts = DerivOptions {
            record_history: cfg.record_history,
            stop_tol: None,
        };
        let d = differentiate(variant, obj, &run.trace, u, &seed, cfg.inexact_iterations(), &opts)?;
        let err = |m: &DMatrix<f64>| (m - reference).norm();
        result.derivative_errors = d.history.as_ref().map(|h| {
            std::iter::once(reference.norm())
                .chain(h.iter().map(err))
                .collect()
        });
        result.final_derivative_err = Some(err(&d.estimate));
        result.derivative_iterations = Some(d.iterations);
        result.estimate = Some(d.estimate);
    }
    Ok(result)
}

/// Runs every configured entry. Only a failure of the reference solution
/// aborts; solver and variant failures are recorded per entry.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (obj, dataset) = build_objective(cfg)?;
    let obj: &dyn ParametricObjective = obj.as_ref();
    let u = cfg.u.resolve(obj.dim_u(), cfg.seed)?;
    let (x_star, reference) = oracle::reference_derivative(obj, &u, None)?;

    let mut algorithms: Vec<Algorithm> = Vec::new();
    for e in &cfg.entries {
        if !algorithms.contains(&e.algorithm()) {
            algorithms.push(e.algorithm());
        }
    }
    let runs: Vec<(Algorithm, std::result::Result<SolverRun, String>)> = std::thread::scope(|s| {
        let handles: Vec<_> = algorithms
            .iter()
            .map(|&a| {
                let (u, x_star) = (&u, &x_star);
                (a, s.spawn(move || run_solver(obj, u, x_star, a, cfg).map_err(|e| e.to_string())))
            })
            .collect();
        handles
            .into_iter()
            .map(|(a, h)| (a, h.join().expect("solver thread panicked")))
            .collect()
    });

    let entries: Vec<EntryReport> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .entries
            .iter()
            .map(|&entry| {
                let run = &runs.iter().find(|(a, _)| *a == entry.algorithm()).expect("solver ran").1;
                let (u, reference) = (&u, &reference);
                s.spawn(move || {
                    let outcome = match run {
                        Ok(run) => entry_result(entry, obj, u, reference, run, cfg).map_err(|e| e.to_string()),
                        Err(msg) => Err(msg.clone()),
                    };
                    EntryReport { entry, outcome }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("entry thread panicked")).collect()
    });
    for e in &entries {
        if let Err(msg) = &e.outcome {
            warn!("{}: {msg}", e.entry);
        }
    }
    let wall_time = start.elapsed();
    info!("experiment finished in {wall_time:?}");
    Ok(ExperimentReport {
        config: cfg.clone(),
        dataset,
        u,
        x_star,
        reference,
        entries,
        wall_time,
    })
}
