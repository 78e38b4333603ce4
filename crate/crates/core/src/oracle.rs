//! Ground truth for the derivative sequences: the implicit derivative `phi`,
//! a Newton-refined minimizer, finite differences of the solver map and the
//! linear rates predicted from the Hessian spectrum.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::ParametricObjective;
use crate::solver::{
    backtracking_step, gd_step, run, BacktrackingParams, IterateTrace, ParamMode, SolverConfig,
    StepParams,
};

/// Gradient norm at which the gradient-descent warm start hands over to Newton.
pub const WARM_START_GRAD_TOL: f64 = 1e-3;
/// Cap on warm-start iterations.
pub const WARM_START_MAX_ITERS: usize = 2_000_000;
pub const NEWTON_MAX_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateSource {
    /// `|I − α∇²_x f|_2`
    GdNorm,
    /// Spectral radius of the heavy-ball companion matrix.
    HbSpectral,
}

impl fmt::Display for RateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateSource::GdNorm => "gd-norm",
            RateSource::HbSpectral => "hb-spectral",
        })
    }
}

/// A predicted linear contraction factor, tied to the point it was
/// evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePrediction {
    pub q: f64,
    pub source: RateSource,
    pub at: DVector<f64>,
}

impl RatePrediction {
    /// `q < 1` certifies local linear convergence.
    pub fn certifies_convergence(&self) -> bool {
        self.q < 1.0
    }
}

fn cholesky(h: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(h).ok_or(Error::NotPositiveDefinite)
}

/// `phi(x, u) = −∇²_x f(x, u)⁻¹ ∇_xu f(x, u)` via a Cholesky solve.
pub fn phi(obj: &dyn ParametricObjective, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
    let chol = cholesky(obj.hessian(x, u)?)?;
    let rhs = -obj.cross_derivative(x, u)?;
    Ok(chol.solve(&rhs))
}

/// Undamped Newton iterations until `|∇_x f| ≤ tol`
/// (default `1e-12·(1 + |∇_x f(x0)|)`).
pub fn newton_refine(
    obj: &dyn ParametricObjective,
    x0: &DVector<f64>,
    u: &DVector<f64>,
    tol: Option<f64>,
    max_iters: usize,
) -> Result<DVector<f64>> {
    let mut x = x0.clone();
    let mut g = obj.gradient(&x, u)?;
    let tol = tol.unwrap_or(1e-12 * (1.0 + g.norm()));
    for _ in 0..max_iters {
        if g.norm() <= tol {
            return Ok(x);
        }
        let step = cholesky(obj.hessian(&x, u)?)?.solve(&g);
        x -= step;
        g = obj.gradient(&x, u)?;
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                iteration: 0,
                x_norm: x.norm(),
            });
        }
    }
    if g.norm() <= tol {
        return Ok(x);
    }
    Err(Error::NewtonNotConverged {
        iterations: max_iters,
        grad_norm: g.norm(),
    })
}

/// Gradient descent from zero until `|∇_x f| ≤ grad_tol`, with step `1/L`
/// when curvature bounds are known and Armijo backtracking otherwise.
pub fn warm_start(
    obj: &dyn ParametricObjective,
    u: &DVector<f64>,
    grad_tol: f64,
) -> Result<DVector<f64>> {
    let mut x = DVector::zeros(obj.dim_x());
    let fixed = obj.curvature_bounds(u).map(|(_, l)| 1.0 / l);
    let bt = BacktrackingParams::default();
    for _ in 0..WARM_START_MAX_ITERS {
        if obj.gradient(&x, u)?.norm() <= grad_tol {
            return Ok(x);
        }
        x = match fixed {
            Some(alpha) => gd_step(obj, &x, u, alpha)?,
            None => backtracking_step(obj, &x, u, &bt)?.0,
        };
    }
    Err(Error::NewtonNotConverged {
        iterations: WARM_START_MAX_ITERS,
        grad_norm: obj.gradient(&x, u)?.norm(),
    })
}

/// `(x*(u), D_u x*(u))`: warm start, Newton refinement, then `phi` at the
/// refined point.
pub fn reference_derivative(
    obj: &dyn ParametricObjective,
    u: &DVector<f64>,
    tol: Option<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let x_warm = warm_start(obj, u, WARM_START_GRAD_TOL)?;
    let x_star = newton_refine(obj, &x_warm, u, tol, NEWTON_MAX_ITERS)?;
    let d = phi(obj, &x_star, u)?;
    Ok((x_star, d))
}

/// Default finite-difference step for parameter `u_j`.
pub fn default_fd_step(u_j: f64) -> f64 {
    1e-5 * (1.0 + u_j.abs())
}

/// Central differences of `u ↦ x^(K)(u)`, column by column. Step size and
/// momentum are resolved once at `u` and held fixed for the perturbed runs,
/// matching what the derivative recurrences differentiate. `h = None` uses
/// [`default_fd_step`] per coordinate.
pub fn fd_jacobian_of_solver(
    obj: &dyn ParametricObjective,
    u: &DVector<f64>,
    config: &SolverConfig,
    h: Option<f64>,
) -> Result<DMatrix<f64>> {
    let params = config.resolve(obj, u)?.ok_or_else(|| {
        Error::InvalidArgument("the backtracking solver map is not differentiable".into())
    })?;
    if let Some(h) = h {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
        }
    }
    let frozen = SolverConfig {
        param_mode: ParamMode::Manual {
            alpha: params.alpha,
            beta: params.beta,
        },
        ..config.clone()
    };
    let final_iterate = |u: &DVector<f64>| -> Result<DVector<f64>> {
        let trace: IterateTrace = run(obj, u, &frozen)?;
        Ok(trace.last().clone())
    };
    let mut out = DMatrix::zeros(obj.dim_x(), obj.dim_u());
    for j in 0..obj.dim_u() {
        let step = h.unwrap_or_else(|| default_fd_step(u[j]));
        let mut up = u.clone();
        let mut um = u.clone();
        up[j] += step;
        um[j] -= step;
        let col = (final_iterate(&up)? - final_iterate(&um)?) / (2.0 * step);
        out.set_column(j, &col);
    }
    Ok(out)
}

/// `q = |I − α∇²_x f(x, u)|_2 = max_λ |1 − αλ|`.
pub fn rate_gd(
    obj: &dyn ParametricObjective,
    x: &DVector<f64>,
    u: &DVector<f64>,
    alpha: f64,
) -> Result<RatePrediction> {
    let ev = linalg::symmetric_eigenvalues(&obj.hessian(x, u)?);
    let q = ev.iter().map(|&l| (1.0 - alpha * l).abs()).fold(0.0, f64::max);
    Ok(RatePrediction {
        q,
        source: RateSource::GdNorm,
        at: x.clone(),
    })
}

/// Spectral radius of `T = [[(1+β)I − α∇²_x f, −βI], [I, 0]]`, computed per
/// Hessian eigenvalue from the 2×2 companion blocks.
pub fn rate_hb(
    obj: &dyn ParametricObjective,
    x: &DVector<f64>,
    u: &DVector<f64>,
    alpha: f64,
    beta: f64,
) -> Result<RatePrediction> {
    StepParams::new(alpha, beta)?;
    let ev = linalg::symmetric_eigenvalues(&obj.hessian(x, u)?);
    let q = ev
        .iter()
        .map(|&l| linalg::companion_radius(1.0 + beta - alpha * l, beta))
        .fold(0.0, f64::max);
    Ok(RatePrediction {
        q,
        source: RateSource::HbSpectral,
        at: x.clone(),
    })
}

/// The full `2N × 2N` heavy-ball companion matrix at `x`.
pub fn companion_matrix(
    obj: &dyn ParametricObjective,
    x: &DVector<f64>,
    u: &DVector<f64>,
    alpha: f64,
    beta: f64,
) -> Result<DMatrix<f64>> {
    let h = obj.hessian(x, u)?;
    let n = h.nrows();
    let mut t = DMatrix::zeros(2 * n, 2 * n);
    let r = DMatrix::identity(n, n) * (1.0 + beta) - h * alpha;
    t.view_mut((0, 0), (n, n)).copy_from(&r);
    t.view_mut((0, n), (n, n)).copy_from(&(DMatrix::identity(n, n) * -beta));
    t.view_mut((n, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
    Ok(t)
}
