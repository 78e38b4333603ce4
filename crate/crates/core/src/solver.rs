//! Gradient descent and the heavy-ball method with a recorded iterate trace.

use log::warn;
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::objective::ParametricObjective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    GradientDescent,
    HeavyBall,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::GradientDescent => "GD",
            Algorithm::HeavyBall => "HB",
        }
    }
}

/// Armijo backtracking settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacktrackingParams {
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub max_shrinks: usize,
}

impl Default for BacktrackingParams {
    fn default() -> Self {
        BacktrackingParams {
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_shrinks: 60,
        }
    }
}

impl BacktrackingParams {
    fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !(self.initial_step > 0.0) || !in_unit(self.shrink) || !in_unit(self.sufficient_decrease)
        {
            return Err(Error::InvalidArgument(format!(
                "backtracking needs initial step > 0 and shrink, decrease constant in (0, 1): {self:?}"
            )));
        }
        Ok(())
    }
}

/// How step size and momentum are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamMode {
    /// Fixed `alpha`, and `beta` for the heavy-ball method (ignored by GD).
    Manual { alpha: f64, beta: f64 },
    /// Best-rate parameters from the curvature bounds.
    Optimal,
    /// Best-rate parameters with step size and momentum divided by three.
    OptimalOverThree,
    /// Armijo line search every iteration (gradient descent only).
    Backtracking(BacktrackingParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub param_mode: ParamMode,
    /// Number of iterations `K`; runs never stop early.
    pub iterations: usize,
    /// Starting point; zero when `None`.
    pub x0: Option<DVector<f64>>,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, param_mode: ParamMode, iterations: usize) -> Self {
        SolverConfig {
            algorithm,
            param_mode,
            iterations,
            x0: None,
        }
    }

    pub fn with_x0(mut self, x0: DVector<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    /// Constant `(alpha, beta)` for this objective and parameter, or `None`
    /// under backtracking.
    pub fn resolve(
        &self,
        obj: &dyn ParametricObjective,
        u: &DVector<f64>,
    ) -> Result<Option<StepParams>> {
        let params = match self.param_mode {
            ParamMode::Manual { alpha, beta } => {
                let beta = match self.algorithm {
                    Algorithm::GradientDescent => 0.0,
                    Algorithm::HeavyBall => beta,
                };
                StepParams::new(alpha, beta)?
            }
            ParamMode::Optimal | ParamMode::OptimalOverThree => {
                let (m, l) = obj
                    .curvature_bounds(u)
                    .ok_or(Error::MissingCurvatureBounds("optimal parameters"))?;
                let p = match self.algorithm {
                    Algorithm::GradientDescent => {
                        let (alpha, _) = optimal_params_gd(m, l)?;
                        StepParams { alpha, beta: 0.0 }
                    }
                    Algorithm::HeavyBall => {
                        let (alpha, beta, _) = optimal_params_hb(m, l)?;
                        StepParams { alpha, beta }
                    }
                };
                if self.param_mode == ParamMode::OptimalOverThree {
                    StepParams {
                        alpha: p.alpha / 3.0,
                        beta: p.beta / 3.0,
                    }
                } else {
                    p
                }
            }
            ParamMode::Backtracking(bt) => {
                bt.validate()?;
                if self.algorithm == Algorithm::HeavyBall {
                    return Err(Error::InvalidArgument(
                        "backtracking is only supported for gradient descent".into(),
                    ));
                }
                return Ok(None);
            }
        };
        Ok(Some(params))
    }
}

/// A validated constant step size and momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub alpha: f64,
    pub beta: f64,
}

impl StepParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {alpha}")));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidArgument(format!("momentum must lie in [0, 1), got {beta}")));
        }
        Ok(StepParams { alpha, beta })
    }

    /// Whether the step satisfies the monotone-descent condition for the
    /// given Lipschitz bound: `alpha ≤ 1/L` (GD), `alpha ≤ 2(1+beta)/L` (HB).
    pub fn is_descent_compliant(&self, algorithm: Algorithm, lipschitz: f64) -> bool {
        match algorithm {
            Algorithm::GradientDescent => self.alpha <= 1.0 / lipschitz,
            Algorithm::HeavyBall => self.alpha <= 2.0 * (1.0 + self.beta) / lipschitz,
        }
    }
}

/// The stored run `x^(0..K)`: the tape for exact reverse differentiation.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub algorithm: Algorithm,
    pub beta: f64,
    pub iterates: Vec<DVector<f64>>,
    pub step_sizes: Vec<f64>,
    pub f_values: Vec<f64>,
}

impl IterateTrace {
    /// Number of steps `K`.
    pub fn iterations(&self) -> usize {
        self.step_sizes.len()
    }

    pub fn last(&self) -> &DVector<f64> {
        self.iterates.last().expect("trace always holds x^(0)")
    }

    /// Step size of the final iteration; `None` for an empty run.
    pub fn last_step_size(&self) -> Option<f64> {
        self.step_sizes.last().copied()
    }

    /// The common step size when every iteration used the same one.
    pub fn constant_step_size(&self) -> Option<f64> {
        let first = *self.step_sizes.first()?;
        self.step_sizes.iter().all(|&a| a == first).then_some(first)
    }

    /// Count of `k` with `f(x^(k+1)) > f(x^(k)) + tol·max(1, |f(x^(k))|)`.
    pub fn descent_violations(&self, rel_tol: f64) -> usize {
        self.f_values
            .windows(2)
            .filter(|w| w[1] > w[0] + rel_tol * w[0].abs().max(1.0))
            .count()
    }
}

fn checked_gradient(
    obj: &dyn ParametricObjective,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    let g = obj.gradient(x, u)?;
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::NonFinite {
            iteration: 0,
            x_norm: x.norm(),
        })
    }
}

/// `x − alpha ∇_x f(x, u)`.
pub fn gd_step(
    obj: &dyn ParametricObjective,
    x: &DVector<f64>,
    u: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {alpha}")));
    }
    let g = checked_gradient(obj, x, u)?;
    Ok(x - g * alpha)
}

/// `x − alpha ∇_x f(x, u) + beta (x − x_prev)`.
pub fn hb_step(
    obj: &dyn ParametricObjective,
    x: &DVector<f64>,
    x_prev: &DVector<f64>,
    u: &DVector<f64>,
    alpha: f64,
    beta: f64,
) -> Result<DVector<f64>> {
    StepParams::new(alpha, beta)?;
    if x_prev.len() != x.len() {
        return Err(Error::dims("previous iterate", x.len(), x_prev.len()));
    }
    let mut next = gd_step(obj, x, u, alpha)?;
    if beta != 0.0 {
        next += (x - x_prev) * beta;
    }
    Ok(next)
}

/// One Armijo-backtracked gradient step: the first `alpha = a0·shrink^i`
/// with `f(x − alpha g) ≤ f(x) − c·alpha·|g|²`.
pub fn backtracking_step(
    obj: &dyn ParametricObjective,
    x: &DVector<f64>,
    u: &DVector<f64>,
    params: &BacktrackingParams,
) -> Result<(DVector<f64>, f64)> {
    params.validate()?;
    let g = checked_gradient(obj, x, u)?;
    let g_sq = g.norm_squared();
    if g_sq == 0.0 {
        return Ok((x.clone(), params.initial_step));
    }
    let fx = obj.value(x, u)?;
    let mut alpha = params.initial_step;
    for _ in 0..=params.max_shrinks {
        let trial = x - &g * alpha;
        let ft = obj.value(&trial, u)?;
        if ft <= fx - params.sufficient_decrease * alpha * g_sq {
            return Ok((trial, alpha));
        }
        alpha *= params.shrink;
    }
    Err(Error::LineSearchFailed {
        shrinks: params.max_shrinks,
        last_step: alpha / params.shrink,
    })
}

/// Runs exactly `K` iterations of the configured method from `x^(0)`
/// (heavy-ball starts with `x^(−1) = x^(0)`).
pub fn run(
    obj: &dyn ParametricObjective,
    u: &DVector<f64>,
    config: &SolverConfig,
) -> Result<IterateTrace> {
    let n = obj.dim_x();
    let x0 = config.x0.clone().unwrap_or_else(|| DVector::zeros(n));
    obj.check_dims(&x0, u)?;
    let params = config.resolve(obj, u)?;

    if let (Some(p), ParamMode::Manual { .. }) = (params, config.param_mode) {
        if let Some((_, l)) = obj.curvature_bounds(u) {
            if !p.is_descent_compliant(config.algorithm, l) {
                warn!(
                    "{} step size {} exceeds the descent bound for L = {l}",
                    config.algorithm.label(),
                    p.alpha
                );
            }
        }
    }

    let k_max = config.iterations;
    let mut iterates = Vec::with_capacity(k_max + 1);
    let mut step_sizes = Vec::with_capacity(k_max);
    let mut f_values = Vec::with_capacity(k_max + 1);
    f_values.push(obj.value(&x0, u)?);
    iterates.push(x0);

    let at = |k: usize| {
        move |e: Error| match e {
            Error::NonFinite { x_norm, .. } => Error::NonFinite {
                iteration: k,
                x_norm,
            },
            other => other,
        }
    };

    for k in 0..k_max {
        let x = &iterates[k];
        let (next, alpha) = match params {
            None => {
                let ParamMode::Backtracking(bt) = config.param_mode else {
                    unreachable!("only backtracking resolves to no constant step")
                };
                backtracking_step(obj, x, u, &bt).map_err(at(k))?
            }
            Some(p) => {
                let next = match config.algorithm {
                    Algorithm::GradientDescent => gd_step(obj, x, u, p.alpha),
                    Algorithm::HeavyBall => {
                        let prev = &iterates[k.saturating_sub(1)];
                        hb_step(obj, x, prev, u, p.alpha, p.beta)
                    }
                }
                .map_err(at(k))?;
                (next, p.alpha)
            }
        };
        f_values.push(obj.value(&next, u)?);
        iterates.push(next);
        step_sizes.push(alpha);
    }

    Ok(IterateTrace {
        algorithm: config.algorithm,
        beta: params.map_or(0.0, |p| p.beta),
        iterates,
        step_sizes,
        f_values,
    })
}

fn check_curvature(m: f64, l: f64) -> Result<()> {
    if !(m > 0.0) || !(l >= m) || !l.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need 0 < m ≤ L, got m = {m}, L = {l}"
        )));
    }
    Ok(())
}

/// `(alpha*, q*) = (2/(L+m), (L−m)/(L+m))`.
pub fn optimal_params_gd(m: f64, l: f64) -> Result<(f64, f64)> {
    check_curvature(m, l)?;
    Ok((2.0 / (l + m), (l - m) / (l + m)))
}

/// `(alpha*, beta*, q*)` with `q* = (√L−√m)/(√L+√m)`, `alpha* = 4/(√L+√m)²`
/// and `beta* = q*²`.
pub fn optimal_params_hb(m: f64, l: f64) -> Result<(f64, f64, f64)> {
    check_curvature(m, l)?;
    let (sm, sl) = (m.sqrt(), l.sqrt());
    let q = (sl - sm) / (sl + sm);
    Ok((4.0 / ((sl + sm) * (sl + sm)), q * q, q))
}
