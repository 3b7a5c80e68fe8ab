//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::wfa::WeightedAutomaton;

/// Largest matrix dimension for which spectral radii use a full eigenvalue
/// decomposition; larger matrices fall back to power iteration.
pub const DENSE_EIGEN_LIMIT: usize = 400;
pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

/// `M = Σ_a A_a ⊗ A_a`, the n²×n² matrix with `Σ_{|x|=t} A_x ⊗ A_x = Mᵗ`.
pub fn kron_square_sum(a: &WeightedAutomaton) -> DMatrix<f64> {
    let n = a.states();
    let mut m = DMatrix::zeros(n * n, n * n);
    for t in a.transitions() {
        m += t.kronecker(t);
    }
    m
}

/// Spectral radius. Dense eigenvalues up to [`DENSE_EIGEN_LIMIT`], power
/// iteration above.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() <= DENSE_EIGEN_LIMIT {
        m.clone().complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    } else {
        spectral_radius_power(m, POWER_TOLERANCE, POWER_MAX_ITERATIONS)
    }
}

/// Power iteration estimate of `ρ(M)`: the geometric mean growth of
/// `‖Mᵏx‖` over a trailing window, which also handles complex dominant
/// pairs where single-step ratios oscillate.
pub fn spectral_radius_power(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> f64 {
    let dim = m.nrows();
    let mut x = DVector::from_element(dim, 1.0 / (dim as f64).sqrt());
    // a generic start avoids invariant subspaces of structured matrices
    for (i, v) in x.iter_mut().enumerate() {
        *v *= 1.0 + 0.01 * ((i * 7919) % 101) as f64 / 101.0;
    }
    x.normalize_mut();
    const WINDOW: usize = 16;
    let mut logs: Vec<f64> = Vec::with_capacity(max_iter);
    let mut prev = f64::NAN;
    for it in 0..max_iter {
        let y = m * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        logs.push(norm.ln());
        x = y / norm;
        if it + 1 >= WINDOW {
            let est = (logs[logs.len() - WINDOW..].iter().sum::<f64>() / WINDOW as f64).exp();
            if (est - prev).abs() <= tol * est.max(1.0) {
                return est;
            }
            prev = est;
        }
    }
    prev
}

/// Solves `(I - M) y = b`.
pub fn solve_resolvent(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let dim = m.nrows();
    let lhs = DMatrix::identity(dim, dim) - m;
    let lu = lhs.lu();
    let y = lu.solve(b).ok_or_else(|| Error::numeric("linear solve failed: I - M is singular"))?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("linear solve produced non-finite values"));
    }
    Ok(y)
}

/// Column-major `vec(X)` back to an n×n matrix.
pub fn unvec(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Induced 1-norm: maximum absolute column sum.
pub fn max_abs_column_sum(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Induced ∞-norm: maximum absolute row sum.
pub fn max_abs_row_sum(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}
