use nalgebra::{DMatrix, DVector};

use super::{check_forward_seed, check_reverse_seed, check_trace};
use crate::error::{Error, Result};
use crate::objective::ParametricObjective;
use crate::solver::IterateTrace;

/// Partial derivatives `(D_x g, D_u g)` of one step `x ↦ g(x, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepJacobian {
    /// `N × N`
    pub dx: DMatrix<f64>,
    /// `N × P`
    pub du: DMatrix<f64>,
}

impl StepJacobian {
    /// Jacobians of the momentum step at `x`: `D_x = (1+β)I − α∇²_x f` and
    /// `D_u = −α∇_xu f`. The `−βI` coupling to the previous iterate is
    /// handled by the callers.
    pub fn momentum(
        obj: &dyn ParametricObjective,
        x: &DVector<f64>,
        u: &DVector<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let h = obj.hessian(x, u)?;
        let n = h.nrows();
        let dx = DMatrix::identity(n, n) * (1.0 + beta) - h * alpha;
        let du = obj.cross_derivative(x, u)? * -alpha;
        Ok(StepJacobian { dx, du })
    }
}

/// `D_x g · cur + D_u g · s`
pub(crate) fn forward_step(jac: &StepJacobian, cur: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    &jac.dx * cur + &jac.du * s
}

/// The per-step Jacobians of a gradient-descent trace,
/// `(I − α_k ∇²_x f(x^(k)), −α_k ∇_xu f(x^(k)))`.
pub fn gd_step_jacobians(
    obj: &dyn ParametricObjective,
    trace: &IterateTrace,
    u: &DVector<f64>,
) -> Result<Vec<StepJacobian>> {
    check_trace(obj, trace, u)?;
    trace
        .iterates
        .iter()
        .zip(&trace.step_sizes)
        .map(|(x, &alpha)| StepJacobian::momentum(obj, x, u, alpha, 0.0))
        .collect()
}

fn check_chain(jacobians: &[StepJacobian]) -> Result<(usize, usize)> {
    let first = jacobians
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty Jacobian sequence".into()))?;
    let (n, p) = (first.dx.nrows(), first.du.ncols());
    for j in jacobians {
        if j.dx.shape() != (n, n) {
            return Err(Error::dims("step Jacobian D_x g", n, j.dx.nrows()));
        }
        if j.du.shape() != (n, p) {
            return Err(Error::dims("step Jacobian D_u g", p, j.du.ncols()));
        }
    }
    Ok((n, p))
}

/// Forward propagation `ẋ^(k+1) = D_x g^(k) ẋ^(k) + D_u g^(k) S` from
/// `ẋ^(0) = 0`; returns `ẋ^(K)`.
pub fn forward_exact_generic(jacobians: &[StepJacobian], s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = check_chain(jacobians)?;
    check_forward_seed(s, p)?;
    let mut cur = DMatrix::zeros(n, s.ncols());
    for jac in jacobians {
        cur = forward_step(jac, &cur, s);
    }
    Ok(cur)
}

/// Reverse sweep over the stored chain starting from `x̄^(K) = R`,
/// accumulating `ū += x̄^(k+1) D_u g^(k)` and `x̄^(k) = x̄^(k+1) D_x g^(k)`.
pub fn reverse_exact_generic(jacobians: &[StepJacobian], r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = check_chain(jacobians)?;
    check_reverse_seed(r, n)?;
    let mut bar = r.clone();
    let mut acc = DMatrix::zeros(r.nrows(), p);
    for jac in jacobians.iter().rev() {
        acc += &bar * &jac.du;
        bar = &bar * &jac.dx;
    }
    Ok(acc)
}
