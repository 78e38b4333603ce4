//! Derivatives of the minimizer of a parametric problem `min_x f(x, u)` with
//! respect to `u`, obtained by differentiating gradient descent and the
//! heavy-ball method, either through every stored iterate (exact) or with all
//! derivative matrices frozen at the last iterate (inexact).
//!
//! The crate is organised bottom-up:
//!
//! * [`objective`]: the [`ParametricObjective`] capability trait plus the
//!   diagonal quadratic and L2-regularised logistic regression families.
//! * [`solver`]: gradient descent / heavy-ball runs producing an
//!   [`IterateTrace`], parameter selection and Armijo backtracking.
//! * [`deriv`]: forward and reverse propagation of derivatives, exact and
//!   inexact, plus the generic iteration-map forms.
//! * [`oracle`]: the implicit derivative `phi`, Newton refinement, finite
//!   difference Jacobians and contraction-rate predictions.
//! * [`harness`]: dataset ingestion, experiment orchestration, CSV output and
//!   the command line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deriv;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod objective;
pub mod oracle;
pub mod solver;

pub use deriv::{DerivOptions, DerivativeRun, DerivativeSeed, RunStatus, Variant};
pub use error::{Error, Result};
pub use objective::{
    logistic_weights, logreg_diag, logreg_scalar, quadratic_objective, Coupling, LogRegData,
    LogRegObjective, ParametricObjective, QuadraticObjective,
};
pub use oracle::{RatePrediction, RateSource};
pub use solver::{Algorithm, BacktrackingParams, IterateTrace, ParamMode, SolverConfig};

pub use nalgebra::{DMatrix, DVector};
