//! Differentiation with all derivative information frozen at the last
//! iterate. No tape is needed and the iteration count is free.

use nalgebra::{DMatrix, DVector};

use super::generic::StepJacobian;
use super::{
    check_forward_seed, check_point, check_reverse_seed, DerivOptions, DerivativeRun,
    HistoryRecorder, RunStatus, Variant,
};
use crate::error::Result;
use crate::objective::ParametricObjective;
use crate::solver::StepParams;

/// The linear part of the frozen recurrence: propagator
/// `(1+β)I − α∇²_x f(x_K, u)`, input map `−α∇_xu f(x_K, u)` and momentum `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenStep {
    pub propagator: DMatrix<f64>,
    pub input: DMatrix<f64>,
    pub beta: f64,
}

impl FrozenStep {
    pub fn at(
        obj: &dyn ParametricObjective,
        x_last: &DVector<f64>,
        u: &DVector<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        check_point(obj, x_last, u)?;
        StepParams::new(alpha, beta)?;
        let jac = StepJacobian::momentum(obj, x_last, u, alpha, beta)?;
        Ok(FrozenStep {
            propagator: jac.dx,
            input: jac.du,
            beta,
        })
    }

    /// Homogeneous forward step `R cur − β prev`.
    pub fn forward(&self, cur: &DMatrix<f64>, prev: &DMatrix<f64>) -> DMatrix<f64> {
        let mut next = &self.propagator * cur;
        if self.beta != 0.0 {
            next -= prev * self.beta;
        }
        next
    }

    /// Homogeneous reverse step `cur R − β later`.
    pub fn reverse(&self, cur: &DMatrix<f64>, later: &DMatrix<f64>) -> DMatrix<f64> {
        let mut earlier = cur * &self.propagator;
        if self.beta != 0.0 {
            earlier -= later * self.beta;
        }
        earlier
    }
}

fn converged(opts: &DerivOptions, next: &DMatrix<f64>, cur: &DMatrix<f64>) -> bool {
    opts.stop_tol.is_some_and(|tol| (next - cur).norm() <= tol)
}

fn forward(
    variant: Variant,
    step: &FrozenStep,
    s: &DMatrix<f64>,
    iterations: usize,
    opts: &DerivOptions,
) -> DerivativeRun {
    let forcing = &step.input * s;
    let mut history = HistoryRecorder::new(opts, iterations);
    // x̂^(0) = x̂^(−1) = 0
    let mut cur = DMatrix::zeros(step.propagator.nrows(), s.ncols());
    let mut prev = cur.clone();
    let mut status = if iterations == 0 {
        RunStatus::NoIterations
    } else {
        RunStatus::Completed
    };
    let mut done = 0;
    for _ in 0..iterations {
        let next = step.forward(&cur, &prev) + &forcing;
        history.push(&next);
        done += 1;
        let stop = converged(opts, &next, &cur);
        prev = std::mem::replace(&mut cur, next);
        if stop {
            status = RunStatus::Converged;
            break;
        }
    }
    DerivativeRun {
        variant,
        estimate: cur,
        history: history.finish(),
        iterations: done,
        status,
    }
}

fn reverse(
    variant: Variant,
    step: &FrozenStep,
    r: &DMatrix<f64>,
    iterations: usize,
    opts: &DerivOptions,
) -> DerivativeRun {
    let mut history = HistoryRecorder::new(opts, iterations);
    // x̃^(K) = R, x̃^(K+1) = 0, ũ_0 = 0
    let mut bar = r.clone();
    let mut later = DMatrix::zeros(r.nrows(), r.ncols());
    let mut acc = DMatrix::zeros(r.nrows(), step.input.ncols());
    let mut status = if iterations == 0 {
        RunStatus::NoIterations
    } else {
        RunStatus::Completed
    };
    let mut done = 0;
    for _ in 0..iterations {
        let next = &acc + &bar * &step.input;
        history.push(&next);
        done += 1;
        let stop = converged(opts, &next, &acc);
        acc = next;
        if stop {
            status = RunStatus::Converged;
            break;
        }
        let earlier = step.reverse(&bar, &later);
        later = std::mem::replace(&mut bar, earlier);
    }
    DerivativeRun {
        variant,
        estimate: acc,
        history: history.finish(),
        iterations: done,
        status,
    }
}

/// `x̂^(k+1) = R_GD(x_K) x̂^(k) − α ∇_xu f(x_K, u) S` from `x̂^(0) = 0`.
pub fn forward_inexact_gd(
    obj: &dyn ParametricObjective,
    x_last: &DVector<f64>,
    u: &DVector<f64>,
    s: &DMatrix<f64>,
    alpha: f64,
    iterations: usize,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    check_forward_seed(s, obj.dim_u())?;
    let step = FrozenStep::at(obj, x_last, u, alpha, 0.0)?;
    Ok(forward(Variant::GdForwardInexact, &step, s, iterations, opts))
}

/// Reverse counterpart of [`forward_inexact_gd`]; converges to `R φ(x_K, u)`.
pub fn reverse_inexact_gd(
    obj: &dyn ParametricObjective,
    x_last: &DVector<f64>,
    u: &DVector<f64>,
    r: &DMatrix<f64>,
    alpha: f64,
    iterations: usize,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    check_reverse_seed(r, obj.dim_x())?;
    let step = FrozenStep::at(obj, x_last, u, alpha, 0.0)?;
    Ok(reverse(Variant::GdReverseInexact, &step, r, iterations, opts))
}

/// `x̂^(k+1) = R_HB(x_K) x̂^(k) − α ∇_xu f(x_K, u) S − β x̂^(k−1)` from
/// `x̂^(−1) = x̂^(0) = 0`.
#[allow(clippy::too_many_arguments)]
pub fn forward_inexact_hb(
    obj: &dyn ParametricObjective,
    x_last: &DVector<f64>,
    u: &DVector<f64>,
    s: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    iterations: usize,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    check_forward_seed(s, obj.dim_u())?;
    let step = FrozenStep::at(obj, x_last, u, alpha, beta)?;
    Ok(forward(Variant::HbForwardInexact, &step, s, iterations, opts))
}

/// Two-term frozen backward recurrence with `x̃^(K+1) = 0`, `x̃^(K) = R`.
#[allow(clippy::too_many_arguments)]
pub fn reverse_inexact_hb(
    obj: &dyn ParametricObjective,
    x_last: &DVector<f64>,
    u: &DVector<f64>,
    r: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    iterations: usize,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    check_reverse_seed(r, obj.dim_x())?;
    let step = FrozenStep::at(obj, x_last, u, alpha, beta)?;
    Ok(reverse(Variant::HbReverseInexact, &step, r, iterations, opts))
}
