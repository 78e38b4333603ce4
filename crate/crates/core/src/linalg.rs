//! Small dense linear-algebra kernels shared by the objective and oracle code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

const POWER_MAX_ITERS: usize = 100_000;
const POWER_REL_TOL: f64 = 1e-14;

/// Squared spectral norm `|A|_2^2`, i.e. the largest eigenvalue of `AᵀA`,
/// by power iteration on the Gram matrix.
pub fn spectral_norm_sq(a: &DMatrix<f64>) -> f64 {
    let gram = a.transpose() * a;
    largest_eigenvalue_psd(&gram)
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
pub fn largest_eigenvalue_psd(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // ones plus an index ramp: not orthogonal to the dominant eigenvector
    // for any matrix we meet in practice
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - estimate).abs() <= POWER_REL_TOL * next.abs() {
            // one more Rayleigh quotient with the updated vector
            return v.dot(&(m * &v));
        }
        estimate = next;
    }
    estimate
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Spectral radius of the 2×2 companion block `[[t, -beta], [1, 0]]`, i.e.
/// the largest root modulus of `mu^2 - t mu + beta`.
pub fn companion_radius(t: f64, beta: f64) -> f64 {
    let disc = t * t - 4.0 * beta;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // stable pairing of the roots
        let big = if t >= 0.0 { 0.5 * (t + s) } else { 0.5 * (t - s) };
        let small = if big != 0.0 { beta / big } else { 0.0 };
        big.abs().max(small.abs())
    } else {
        // complex pair, |mu|^2 = beta
        beta.sqrt()
    }
}

/// Spectral (operator 2-) norm of a general matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Relative difference `|a - b| / max(|b|, floor)` in Frobenius norm.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_matches_svd() {
        let a = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 2.0, 0.5, -1.0, 0.3, 2.0, 4.0, -2.0, 1.0, 0.0, 1.5, -0.7],
        );
        let s = spectral_norm(&a);
        let p = spectral_norm_sq(&a);
        assert!((p - s * s).abs() <= 1e-10 * s * s, "{p} vs {}", s * s);
    }

    #[test]
    fn companion_roots() {
        // mu^2 - 1 mu + 0.25 = (mu - 0.5)^2
        assert!((companion_radius(1.0, 0.25) - 0.5).abs() < 1e-15);
        // beta = 0 reduces to |t|
        assert_eq!(companion_radius(-0.7, 0.0), 0.7);
        // complex pair
        assert!((companion_radius(0.1, 0.36) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_sorted() {
        let m = DMatrix::from_row_slice(2, 2, &[9.0, 0.0, 0.0, 1.0]);
        assert_eq!(symmetric_eigenvalues(&m), vec![1.0, 9.0]);
    }
}
