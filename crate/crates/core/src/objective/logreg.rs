use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::ParametricObjective;
use crate::error::{Error, Result};
use crate::linalg;

/// Logistic sigmoid, evaluated without overflow for any finite input.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))`.
pub fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Feature matrix `A` (one row per sample), labels in `{-1, +1}` and the
/// cached squared spectral norm of `A`.
#[derive(Debug, Clone)]
pub struct LogRegData {
    a: DMatrix<f64>,
    b: DVector<f64>,
    spectral_norm_sq: f64,
}

impl LogRegData {
    /// Labels must already be `±1`.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidArgument("empty feature matrix".into()));
        }
        if b.len() != a.nrows() {
            return Err(Error::dims("labels", a.nrows(), b.len()));
        }
        if let Some(i) = b.iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidArgument(format!(
                "label {} at row {i} is not ±1",
                b[i]
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        let spectral_norm_sq = linalg::spectral_norm_sq(&a);
        Ok(LogRegData {
            a,
            b,
            spectral_norm_sq,
        })
    }

    /// Maps `{0, 1}` class labels to `{-1, +1}`.
    pub fn from_binary_labels(a: DMatrix<f64>, classes: &[u8]) -> Result<Self> {
        let b = classes
            .iter()
            .enumerate()
            .map(|(i, &c)| match c {
                0 => Ok(-1.0),
                1 => Ok(1.0),
                other => Err(Error::InvalidArgument(format!(
                    "class {other} at row {i} is not 0 or 1"
                ))),
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(a, DVector::from_vec(b))
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn n_samples(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.a.ncols()
    }

    /// `|A|_2^2`.
    pub fn spectral_norm_sq(&self) -> f64 {
        self.spectral_norm_sq
    }

    /// Margins `z_i = b_i <a_i, x>`.
    fn margins(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.a * x).component_mul(&self.b)
    }
}

/// `w_i = σ(z_i) σ(−z_i)` with `z_i = b_i <a_i, x>`; every entry lies in
/// `[0, 0.25]`.
pub fn logistic_weights(x: &DVector<f64>, data: &LogRegData) -> DVector<f64> {
    data.margins(x).map(|z| sigmoid(z) * sigmoid(-z))
}

/// L2-regularised logistic regression, with either one shared
/// regularisation weight (`P = 1`) or one per coordinate (`P = N`).
#[derive(Debug, Clone)]
pub struct LogRegObjective {
    data: Arc<LogRegData>,
    shared: bool,
}

/// `f_1(x, u) = Σ log(1 + exp(−b_i <a_i, x>)) + ½ u |x|²`.
pub fn logreg_scalar(data: impl Into<Arc<LogRegData>>) -> LogRegObjective {
    LogRegObjective {
        data: data.into(),
        shared: true,
    }
}

/// `f_N(x, u) = Σ log(1 + exp(−b_i <a_i, x>)) + ½ Σ u_j x_j²`.
pub fn logreg_diag(data: impl Into<Arc<LogRegData>>) -> LogRegObjective {
    LogRegObjective {
        data: data.into(),
        shared: false,
    }
}

impl LogRegObjective {
    pub fn data(&self) -> &LogRegData {
        &self.data
    }

    pub fn is_shared(&self) -> bool {
        self.shared
    }

    fn checked(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        self.check_dims(x, u)?;
        if let Some(bad) = u.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "regularisation weights must be positive (got {bad})"
            )));
        }
        Ok(())
    }

    /// Per-coordinate regularisation weights.
    fn weights(&self, u: &DVector<f64>) -> DVector<f64> {
        if self.shared {
            DVector::from_element(self.dim_x(), u[0])
        } else {
            u.clone()
        }
    }
}

impl ParametricObjective for LogRegObjective {
    fn dim_x(&self) -> usize {
        self.data.n_features()
    }

    fn dim_u(&self) -> usize {
        if self.shared {
            1
        } else {
            self.data.n_features()
        }
    }

    fn value(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        self.checked(x, u)?;
        let loss: f64 = self.data.margins(x).iter().map(|&z| log1p_exp(-z)).sum();
        let reg: f64 = x
            .iter()
            .zip(self.weights(u).iter())
            .map(|(xi, wi)| wi * xi * xi)
            .sum();
        Ok(loss + 0.5 * reg)
    }

    fn gradient(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.checked(x, u)?;
        // d/dz log(1 + exp(-z)) = -σ(-z)
        let coef = self
            .data
            .margins(x)
            .zip_map(&self.data.b, |z, b| -b * sigmoid(-z));
        Ok(self.data.a.tr_mul(&coef) + self.weights(u).component_mul(x))
    }

    fn hessian(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.checked(x, u)?;
        let w = logistic_weights(x, &self.data);
        let mut scaled = self.data.a.clone();
        for (mut row, wi) in scaled.row_iter_mut().zip(w.iter()) {
            row *= *wi;
        }
        let mut h = self.data.a.tr_mul(&scaled);
        // symmetrise away the rounding asymmetry of the product
        h = (&h + h.transpose()) * 0.5;
        for (j, wj) in self.weights(u).iter().enumerate() {
            h[(j, j)] += wj;
        }
        Ok(h)
    }

    fn cross_derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.checked(x, u)?;
        Ok(if self.shared {
            DMatrix::from_column_slice(x.len(), 1, x.as_slice())
        } else {
            DMatrix::from_diagonal(x)
        })
    }

    fn curvature_bounds(&self, u: &DVector<f64>) -> Option<(f64, f64)> {
        if u.len() != self.dim_u() || u.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let norm_sq = self.data.spectral_norm_sq;
        Some((u.min(), norm_sq + u.max()))
    }
}
