//! Parametric objectives `f(x, u)` and their first and second derivatives.

mod logreg;
mod quadratic;

pub use logreg::{
    logistic_weights, logreg_diag, logreg_scalar, log1p_exp, sigmoid, LogRegData,
    LogRegObjective,
};
pub use quadratic::{quadratic_objective, Coupling, QuadraticObjective};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Everything the solvers and derivative recurrences need from `f(x, u)`,
/// with `x` in `R^N` and `u` in `R^P`.
///
/// Implementations are immutable once built, so evaluation may happen from
/// several threads at once.
pub trait ParametricObjective: Send + Sync {
    /// Decision dimension `N`.
    fn dim_x(&self) -> usize;

    /// Parameter dimension `P`.
    fn dim_u(&self) -> usize;

    fn value(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64>;

    /// `∇_x f(x, u)`, length `N`.
    fn gradient(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>>;

    /// `∇²_x f(x, u)`, symmetric `N × N`.
    fn hessian(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// Mixed derivative `∇_xu f(x, u)`, `N × P`.
    fn cross_derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// Global bounds `(m(u), L(u))` with `m I ⪯ ∇²_x f(·, u) ⪯ L I`, when known.
    fn curvature_bounds(&self, _u: &DVector<f64>) -> Option<(f64, f64)> {
        None
    }

    fn check_dims(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim_x() {
            return Err(Error::dims("x", self.dim_x(), x.len()));
        }
        if u.len() != self.dim_u() {
            return Err(Error::dims("u", self.dim_u(), u.len()));
        }
        Ok(())
    }
}

impl<T: ParametricObjective + ?Sized> ParametricObjective for &T {
    fn dim_x(&self) -> usize {
        (**self).dim_x()
    }
    fn dim_u(&self) -> usize {
        (**self).dim_u()
    }
    fn value(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        (**self).value(x, u)
    }
    fn gradient(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).gradient(x, u)
    }
    fn hessian(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        (**self).hessian(x, u)
    }
    fn cross_derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        (**self).cross_derivative(x, u)
    }
    fn curvature_bounds(&self, u: &DVector<f64>) -> Option<(f64, f64)> {
        (**self).curvature_bounds(u)
    }
}

impl<T: ParametricObjective + ?Sized> ParametricObjective for Box<T> {
    fn dim_x(&self) -> usize {
        (**self).dim_x()
    }
    fn dim_u(&self) -> usize {
        (**self).dim_u()
    }
    fn value(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        (**self).value(x, u)
    }
    fn gradient(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).gradient(x, u)
    }
    fn hessian(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        (**self).hessian(x, u)
    }
    fn cross_derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        (**self).cross_derivative(x, u)
    }
    fn curvature_bounds(&self, u: &DVector<f64>) -> Option<(f64, f64)> {
        (**self).curvature_bounds(u)
    }
}
