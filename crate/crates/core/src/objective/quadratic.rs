use nalgebra::{DMatrix, DVector};

use super::ParametricObjective;
use crate::error::{Error, Result};

/// How the parameter enters a diagonal quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// `f(x, u) = ½ Σ (H_j + u_j) x_j² − cᵀx`
    RegularizerPerCoordinate,
    /// `f(x, u) = ½ Σ H_j (x_j − u_j)²`
    ShiftTarget,
}

/// Diagonal quadratic test family with closed-form minimizer and Jacobian.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    h: DVector<f64>,
    c: DVector<f64>,
    coupling: Coupling,
}

/// Builds a diagonal quadratic. `ShiftTarget` needs `H > 0`;
/// `RegularizerPerCoordinate` accepts `H ≥ 0` since the parameter adds to
/// the curvature.
pub fn quadratic_objective(
    h_diag: DVector<f64>,
    c: DVector<f64>,
    coupling: Coupling,
) -> Result<QuadraticObjective> {
    if h_diag.is_empty() {
        return Err(Error::InvalidArgument("empty curvature vector".into()));
    }
    if c.len() != h_diag.len() {
        return Err(Error::dims("quadratic linear term", h_diag.len(), c.len()));
    }
    let ok = match coupling {
        Coupling::ShiftTarget => h_diag.iter().all(|&h| h > 0.0 && h.is_finite()),
        Coupling::RegularizerPerCoordinate => h_diag.iter().all(|&h| h >= 0.0 && h.is_finite()),
    };
    if !ok {
        return Err(Error::InvalidArgument(format!(
            "curvature entries must be positive (got {:?})",
            h_diag.as_slice()
        )));
    }
    Ok(QuadraticObjective {
        h: h_diag,
        c,
        coupling,
    })
}

impl QuadraticObjective {
    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn curvature(&self) -> &DVector<f64> {
        &self.h
    }

    fn diag_curvature(&self, u: &DVector<f64>) -> DVector<f64> {
        match self.coupling {
            Coupling::RegularizerPerCoordinate => &self.h + u,
            Coupling::ShiftTarget => self.h.clone(),
        }
    }

    /// Closed-form `x*(u)`.
    pub fn minimizer(&self, u: &DVector<f64>) -> DVector<f64> {
        match self.coupling {
            Coupling::RegularizerPerCoordinate => {
                DVector::from_fn(self.h.len(), |j, _| self.c[j] / (self.h[j] + u[j]))
            }
            Coupling::ShiftTarget => u.clone(),
        }
    }

    /// Closed-form `D_u x*(u)`.
    pub fn minimizer_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        match self.coupling {
            Coupling::RegularizerPerCoordinate => {
                let d = DVector::from_fn(self.h.len(), |j, _| {
                    let a = self.h[j] + u[j];
                    -self.c[j] / (a * a)
                });
                DMatrix::from_diagonal(&d)
            }
            Coupling::ShiftTarget => DMatrix::identity(self.h.len(), self.h.len()),
        }
    }
}

impl ParametricObjective for QuadraticObjective {
    fn dim_x(&self) -> usize {
        self.h.len()
    }

    fn dim_u(&self) -> usize {
        self.h.len()
    }

    fn value(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        self.check_dims(x, u)?;
        Ok(match self.coupling {
            Coupling::RegularizerPerCoordinate => {
                let a = self.diag_curvature(u);
                0.5 * x.iter().zip(a.iter()).map(|(xi, ai)| ai * xi * xi).sum::<f64>()
                    - self.c.dot(x)
            }
            Coupling::ShiftTarget => {
                0.5 * x
                    .iter()
                    .zip(u.iter())
                    .zip(self.h.iter())
                    .map(|((xi, ui), hi)| hi * (xi - ui) * (xi - ui))
                    .sum::<f64>()
            }
        })
    }

    fn gradient(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dims(x, u)?;
        Ok(match self.coupling {
            Coupling::RegularizerPerCoordinate => {
                self.diag_curvature(u).component_mul(x) - &self.c
            }
            Coupling::ShiftTarget => self.h.component_mul(&(x - u)),
        })
    }

    fn hessian(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dims(x, u)?;
        Ok(DMatrix::from_diagonal(&self.diag_curvature(u)))
    }

    fn cross_derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dims(x, u)?;
        Ok(match self.coupling {
            Coupling::RegularizerPerCoordinate => DMatrix::from_diagonal(x),
            Coupling::ShiftTarget => DMatrix::from_diagonal(&(-&self.h)),
        })
    }

    fn curvature_bounds(&self, u: &DVector<f64>) -> Option<(f64, f64)> {
        if u.len() != self.dim_u() {
            return None;
        }
        let a = self.diag_curvature(u);
        let m = a.min();
        (m > 0.0).then(|| (m, a.max()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::fd;

    fn one_d() -> QuadraticObjective {
        quadratic_objective(
            DVector::from_element(1, 0.0),
            DVector::from_element(1, 1.0),
            Coupling::RegularizerPerCoordinate,
        )
        .unwrap()
    }

    #[test]
    fn one_d_closed_form() {
        let q = one_d();
        let u = DVector::from_element(1, 2.0);
        assert_eq!(q.minimizer(&u)[0], 0.5);
        assert_eq!(q.minimizer_jacobian(&u)[(0, 0)], -0.25);
    }

    #[test]
    fn one_d_hand_evaluation() {
        let q = one_d();
        let u = DVector::from_element(1, 2.0);
        let x = DVector::from_element(1, 1.0);
        assert_eq!(q.gradient(&x, &u).unwrap()[0], 1.0);
        assert_eq!(q.hessian(&x, &u).unwrap()[(0, 0)], 2.0);
        assert_eq!(q.cross_derivative(&x, &u).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn shift_target_jacobian_is_identity() {
        let q = quadratic_objective(
            DVector::from_vec(vec![1.0, 4.0, 9.0]),
            DVector::zeros(3),
            Coupling::ShiftTarget,
        )
        .unwrap();
        let u = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        assert_eq!(q.minimizer(&u), u);
        assert_eq!(q.minimizer_jacobian(&u), DMatrix::identity(3, 3));
        // the gradient vanishes at the minimizer
        assert_eq!(q.gradient(&u, &u).unwrap().norm(), 0.0);
    }

    #[test]
    fn rejects_bad_curvature() {
        let bad = quadratic_objective(
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::zeros(2),
            Coupling::ShiftTarget,
        );
        assert!(matches!(bad, Err(Error::InvalidArgument(_))));
        let neg = quadratic_objective(
            DVector::from_vec(vec![-1.0]),
            DVector::zeros(1),
            Coupling::RegularizerPerCoordinate,
        );
        assert!(neg.is_err());
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let q = one_d();
        let err = q.gradient(&DVector::zeros(2), &DVector::zeros(1));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let q = quadratic_objective(
            DVector::from_vec(vec![0.5, 2.0, 3.0]),
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
            Coupling::RegularizerPerCoordinate,
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.4, -0.2, 1.1]);
        let u = DVector::from_vec(vec![1.0, 0.5, 2.0]);
        let h = 1e-6 * (1.0 + x.norm());
        let g = q.gradient(&x, &u).unwrap();
        assert!((fd::gradient_fd(&q, &x, &u, h) - &g).norm() <= 1e-6 * g.norm());
        let hx = q.hessian(&x, &u).unwrap();
        assert!((fd::hessian_fd(&q, &x, &u, 1e-5) - &hx).norm() <= 1e-5 * hx.norm());
        let c = q.cross_derivative(&x, &u).unwrap();
        assert!((fd::cross_fd(&q, &x, &u, 1e-5) - &c).norm() <= 1e-5 * c.norm());
    }
}
