//! Differentiation through every stored iterate.

use nalgebra::{DMatrix, DVector};

use super::generic::{forward_step, StepJacobian};
use super::{
    check_forward_seed, check_reverse_seed, check_trace, DerivOptions, DerivativeRun,
    HistoryRecorder, RunStatus, Variant,
};
use crate::error::{Error, Result};
use crate::objective::ParametricObjective;
use crate::solver::IterateTrace;

fn require_plain_gd(trace: &IterateTrace) -> Result<()> {
    if trace.beta != 0.0 {
        return Err(Error::TraceMismatch(format!(
            "gradient-descent recurrence given a trace with momentum {}",
            trace.beta
        )));
    }
    Ok(())
}

fn status_for(iterations: usize) -> RunStatus {
    if iterations == 0 {
        RunStatus::NoIterations
    } else {
        RunStatus::Completed
    }
}

fn forward(
    variant: Variant,
    obj: &dyn ParametricObjective,
    trace: &IterateTrace,
    u: &DVector<f64>,
    s: &DMatrix<f64>,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    check_trace(obj, trace, u)?;
    check_forward_seed(s, obj.dim_u())?;
    let beta = trace.beta;
    let k_max = trace.iterations();
    let mut history = HistoryRecorder::new(opts, k_max);

    // ẋ^(0) = ẋ^(−1) = 0
    let mut cur = DMatrix::zeros(obj.dim_x(), s.ncols());
    let mut prev = cur.clone();
    for (x, &alpha) in trace.iterates.iter().zip(&trace.step_sizes) {
        let jac = StepJacobian::momentum(obj, x, u, alpha, beta)?;
        let mut next = forward_step(&jac, &cur, s);
        if beta != 0.0 {
            next -= &prev * beta;
        }
        history.push(&next);
        prev = std::mem::replace(&mut cur, next);
    }

    Ok(DerivativeRun {
        variant,
        estimate: cur,
        history: history.finish(),
        iterations: k_max,
        status: status_for(k_max),
    })
}

fn reverse(
    variant: Variant,
    obj: &dyn ParametricObjective,
    trace: &IterateTrace,
    u: &DVector<f64>,
    r: &DMatrix<f64>,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    check_trace(obj, trace, u)?;
    check_reverse_seed(r, obj.dim_x())?;
    let beta = trace.beta;
    let k_max = trace.iterations();
    let mut history = HistoryRecorder::new(opts, k_max);

    // x̄^(K) = R, x̄^(K+1) = 0, ū_0 = 0
    let mut bar = r.clone();
    let mut bar_next = DMatrix::zeros(r.nrows(), r.ncols());
    let mut acc = DMatrix::zeros(r.nrows(), obj.dim_u());
    for k in (0..k_max).rev() {
        let jac = StepJacobian::momentum(obj, &trace.iterates[k], u, trace.step_sizes[k], beta)?;
        acc += &bar * &jac.du;
        let mut earlier = &bar * &jac.dx;
        if beta != 0.0 {
            earlier -= &bar_next * beta;
        }
        history.push(&acc);
        bar_next = std::mem::replace(&mut bar, earlier);
    }

    Ok(DerivativeRun {
        variant,
        estimate: acc,
        history: history.finish(),
        iterations: k_max,
        status: status_for(k_max),
    })
}

/// `ẋ^(k+1) = R_GD^(k) ẋ^(k) − α ∇_xu f(x^(k), u) S` with `ẋ^(0) = 0`;
/// returns `D_u x^(K) S`.
pub fn forward_exact_gd(
    obj: &dyn ParametricObjective,
    trace: &IterateTrace,
    u: &DVector<f64>,
    s: &DMatrix<f64>,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    require_plain_gd(trace)?;
    forward(Variant::GdForward, obj, trace, u, s, opts)
}

/// Backward sweep over the stored gradient-descent trace; returns
/// `R D_u x^(K)`.
pub fn reverse_exact_gd(
    obj: &dyn ParametricObjective,
    trace: &IterateTrace,
    u: &DVector<f64>,
    r: &DMatrix<f64>,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    require_plain_gd(trace)?;
    reverse(Variant::GdReverse, obj, trace, u, r, opts)
}

/// `ẋ^(k+1) = R_HB^(k) ẋ^(k) − α ∇_xu f(x^(k), u) S − β ẋ^(k−1)` with
/// `ẋ^(−1) = ẋ^(0) = 0`, using the momentum recorded in the trace.
pub fn forward_exact_hb(
    obj: &dyn ParametricObjective,
    trace: &IterateTrace,
    u: &DVector<f64>,
    s: &DMatrix<f64>,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    forward(Variant::HbForward, obj, trace, u, s, opts)
}

/// Two-term backward sweep
/// `x̄^(k) = x̄^(k+1) R_HB^(k) − β x̄^(k+2)` with `x̄^(K+1) = 0`.
pub fn reverse_exact_hb(
    obj: &dyn ParametricObjective,
    trace: &IterateTrace,
    u: &DVector<f64>,
    r: &DMatrix<f64>,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    reverse(Variant::HbReverse, obj, trace, u, r, opts)
}
