//! Derivative propagation through gradient descent and heavy-ball runs.
//!
//! Forward modes push a block of parameter directions `S` (`P × q`) through
//! the iteration and return an `N × q` block; reverse modes pull a block of
//! covectors `R` (`q × N`) back and return a `q × P` block. Identity seeds
//! give the full Jacobian either way.
//!
//! *Exact* variants differentiate the stored run step by step. *Inexact*
//! variants freeze every derivative matrix at the last iterate and may run
//! for any number of iterations; they converge to the action of
//! `phi(x^(K), u) = −∇²_x f⁻¹ ∇_xu f`.

mod exact;
mod generic;
mod inexact;

pub use exact::{forward_exact_gd, forward_exact_hb, reverse_exact_gd, reverse_exact_hb};
pub use generic::{forward_exact_generic, gd_step_jacobians, reverse_exact_generic, StepJacobian};
pub use inexact::{
    forward_inexact_gd, forward_inexact_hb, reverse_inexact_gd, reverse_inexact_hb, FrozenStep,
};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objective::ParametricObjective;
use crate::solver::{Algorithm, IterateTrace};

/// Every derivative recurrence this crate knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    GdForward,
    GdReverse,
    GdForwardInexact,
    GdReverseInexact,
    HbForward,
    HbReverse,
    HbForwardInexact,
    HbReverseInexact,
    IterationMapForward,
    IterationMapReverse,
}

impl Variant {
    pub const ALL_GD_HB: [Variant; 8] = [
        Variant::GdForward,
        Variant::GdReverse,
        Variant::HbForward,
        Variant::HbReverse,
        Variant::GdForwardInexact,
        Variant::GdReverseInexact,
        Variant::HbForwardInexact,
        Variant::HbReverseInexact,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::GdForward => "GD-F",
            Variant::GdReverse => "GD-R",
            Variant::GdForwardInexact => "GD-FI",
            Variant::GdReverseInexact => "GD-RI",
            Variant::HbForward => "HB-F",
            Variant::HbReverse => "HB-R",
            Variant::HbForwardInexact => "HB-FI",
            Variant::HbReverseInexact => "HB-RI",
            Variant::IterationMapForward => "IM-F",
            Variant::IterationMapReverse => "IM-R",
        }
    }

    pub fn is_reverse(self) -> bool {
        matches!(
            self,
            Variant::GdReverse
                | Variant::GdReverseInexact
                | Variant::HbReverse
                | Variant::HbReverseInexact
                | Variant::IterationMapReverse
        )
    }

    pub fn is_inexact(self) -> bool {
        matches!(
            self,
            Variant::GdForwardInexact
                | Variant::GdReverseInexact
                | Variant::HbForwardInexact
                | Variant::HbReverseInexact
        )
    }

    /// The solver whose iterates this variant differentiates.
    pub fn algorithm(self) -> Algorithm {
        match self {
            Variant::HbForward
            | Variant::HbReverse
            | Variant::HbForwardInexact
            | Variant::HbReverseInexact => Algorithm::HeavyBall,
            _ => Algorithm::GradientDescent,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v = match s.trim().to_ascii_uppercase().as_str() {
            "GD-F" => Variant::GdForward,
            "GD-R" => Variant::GdReverse,
            "GD-FI" => Variant::GdForwardInexact,
            "GD-RI" => Variant::GdReverseInexact,
            "HB-F" => Variant::HbForward,
            "HB-R" => Variant::HbReverse,
            "HB-FI" => Variant::HbForwardInexact,
            "HB-RI" => Variant::HbReverseInexact,
            "IM-F" => Variant::IterationMapForward,
            "IM-R" => Variant::IterationMapReverse,
            other => return Err(Error::InvalidArgument(format!("unknown variant '{other}'"))),
        };
        Ok(v)
    }
}

/// A block of forward directions (`P × q`) or reverse covectors (`q × N`).
#[derive(Debug, Clone, PartialEq)]
pub enum DerivativeSeed {
    Forward(DMatrix<f64>),
    Reverse(DMatrix<f64>),
}

impl DerivativeSeed {
    pub fn identity_forward(p: usize) -> Self {
        DerivativeSeed::Forward(DMatrix::identity(p, p))
    }

    pub fn identity_reverse(n: usize) -> Self {
        DerivativeSeed::Reverse(DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        match self {
            DerivativeSeed::Forward(m) | DerivativeSeed::Reverse(m) => m,
        }
    }

    pub fn is_reverse(&self) -> bool {
        matches!(self, DerivativeSeed::Reverse(_))
    }

    /// Checks `q ≥ 1` and the block shape against `N`, `P`.
    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        match self {
            DerivativeSeed::Forward(s) => check_forward_seed(s, p),
            DerivativeSeed::Reverse(r) => check_reverse_seed(r, n),
        }
    }
}

pub(crate) fn check_forward_seed(s: &DMatrix<f64>, p: usize) -> Result<()> {
    if s.nrows() != p {
        return Err(Error::dims("forward seed rows", p, s.nrows()));
    }
    if s.ncols() == 0 {
        return Err(Error::InvalidArgument("seed block needs at least one direction".into()));
    }
    Ok(())
}

pub(crate) fn check_reverse_seed(r: &DMatrix<f64>, n: usize) -> Result<()> {
    if r.ncols() != n {
        return Err(Error::dims("reverse seed columns", n, r.ncols()));
    }
    if r.nrows() == 0 {
        return Err(Error::InvalidArgument("seed block needs at least one covector".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// Zero iterations were requested; the estimate is the zero block.
    NoIterations,
    /// Stopped early on the successive-iterate tolerance.
    Converged,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DerivOptions {
    /// Keep every intermediate estimate.
    pub record_history: bool,
    /// Stop inexact runs once successive estimates differ by at most this
    /// (Frobenius norm). Off by default.
    pub stop_tol: Option<f64>,
}

impl DerivOptions {
    pub fn with_history() -> Self {
        DerivOptions {
            record_history: true,
            stop_tol: None,
        }
    }
}

/// Result of one derivative propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeRun {
    pub variant: Variant,
    /// `N × q` for forward variants, `q × P` for reverse ones.
    pub estimate: DMatrix<f64>,
    /// Estimates after iterations `1..=iterations` when recording was on.
    pub history: Option<Vec<DMatrix<f64>>>,
    pub iterations: usize,
    pub status: RunStatus,
}

pub(crate) struct HistoryRecorder {
    items: Option<Vec<DMatrix<f64>>>,
}

impl HistoryRecorder {
    pub(crate) fn new(opts: &DerivOptions, capacity: usize) -> Self {
        HistoryRecorder {
            items: opts.record_history.then(|| Vec::with_capacity(capacity)),
        }
    }

    pub(crate) fn push(&mut self, m: &DMatrix<f64>) {
        if let Some(items) = self.items.as_mut() {
            items.push(m.clone());
        }
    }

    pub(crate) fn finish(self) -> Option<Vec<DMatrix<f64>>> {
        self.items
    }
}

pub(crate) fn check_point(
    obj: &dyn ParametricObjective,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<()> {
    obj.check_dims(x, u)
}

pub(crate) fn check_trace(
    obj: &dyn ParametricObjective,
    trace: &IterateTrace,
    u: &DVector<f64>,
) -> Result<()> {
    if trace.iterates.len() != trace.step_sizes.len() + 1 {
        return Err(Error::TraceMismatch(format!(
            "{} iterates for {} steps",
            trace.iterates.len(),
            trace.step_sizes.len()
        )));
    }
    for x in &trace.iterates {
        obj.check_dims(x, u)?;
    }
    Ok(())
}

/// Runs `variant` with the seed's block. Exact variants use the full trace;
/// inexact ones use its last iterate and last step size and run
/// `inexact_iterations` steps.
pub fn differentiate(
    variant: Variant,
    obj: &dyn ParametricObjective,
    trace: &IterateTrace,
    u: &DVector<f64>,
    seed: &DerivativeSeed,
    inexact_iterations: usize,
    opts: &DerivOptions,
) -> Result<DerivativeRun> {
    if seed.is_reverse() != variant.is_reverse() {
        return Err(Error::InvalidArgument(format!(
            "{variant} needs a {} seed",
            if variant.is_reverse() { "reverse" } else { "forward" }
        )));
    }
    let block = seed.matrix();
    let alpha = || {
        trace
            .last_step_size()
            .ok_or_else(|| Error::TraceMismatch("inexact variants need at least one step".into()))
    };
    match variant {
        Variant::GdForward => forward_exact_gd(obj, trace, u, block, opts),
        Variant::GdReverse => reverse_exact_gd(obj, trace, u, block, opts),
        Variant::HbForward => forward_exact_hb(obj, trace, u, block, opts),
        Variant::HbReverse => reverse_exact_hb(obj, trace, u, block, opts),
        Variant::GdForwardInexact => {
            forward_inexact_gd(obj, trace.last(), u, block, alpha()?, inexact_iterations, opts)
        }
        Variant::GdReverseInexact => {
            reverse_inexact_gd(obj, trace.last(), u, block, alpha()?, inexact_iterations, opts)
        }
        Variant::HbForwardInexact => forward_inexact_hb(
            obj,
            trace.last(),
            u,
            block,
            alpha()?,
            trace.beta,
            inexact_iterations,
            opts,
        ),
        Variant::HbReverseInexact => reverse_inexact_hb(
            obj,
            trace.last(),
            u,
            block,
            alpha()?,
            trace.beta,
            inexact_iterations,
            opts,
        ),
        Variant::IterationMapForward | Variant::IterationMapReverse => {
            if trace.beta != 0.0 {
                return Err(Error::TraceMismatch(
                    "iteration-map variants take a single-step (gradient descent) trace".into(),
                ));
            }
            let jac = gd_step_jacobians(obj, trace, u)?;
            let estimate = if variant == Variant::IterationMapForward {
                forward_exact_generic(&jac, block)?
            } else {
                reverse_exact_generic(&jac, block)?
            };
            Ok(DerivativeRun {
                variant,
                estimate,
                history: None,
                iterations: jac.len(),
                status: RunStatus::Completed,
            })
        }
    }
}
