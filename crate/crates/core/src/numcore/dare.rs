//! Discrete algebraic Riccati equation via fixed-point iteration.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DareError {
    #[error("dimension mismatch: F is {f_rows}x{f_cols}, G is {g_rows}x{g_cols}, Q is {q_rows}x{q_cols}, R is {r_rows}x{r_cols}")]
    Dimensions {
        f_rows: usize,
        f_cols: usize,
        g_rows: usize,
        g_cols: usize,
        q_rows: usize,
        q_cols: usize,
        r_rows: usize,
        r_cols: usize,
    },
    #[error("R + G'PG became singular during iteration {0}")]
    SingularInnerTerm(usize),
    #[error("no convergence after {0} iterations (residual {1:.3e})")]
    NoConvergence(usize, f64),
}

/// Stabilizing solution of the discrete algebraic Riccati equation.
#[derive(Debug, Clone)]
pub struct DareSolution {
    /// Cost-to-go matrix (symmetric positive semidefinite).
    pub p: DMatrix<f64>,
    /// State-feedback gain; the stabilizing policy is `u = -K x`.
    pub k: DMatrix<f64>,
    /// Fixed-point iterations performed.
    pub iterations: usize,
    /// Spectral radius of the closed loop `F - G K`.
    pub spectral_radius: f64,
}

/// Solves `P = F'PF + Q - F'PG (R + G'PG)^-1 G'PF` by iterating from
/// `P0 = Q`, symmetrizing each iterate. Converges whenever `(F, G)` is
/// stabilizable and `(F, Q^{1/2})` detectable; the iteration is the
/// value-recursion of the associated infinite-horizon regulator, so the
/// limit is the stabilizing solution.
///
/// `tol` bounds the max-abs change between iterates; `1e-12` is a good
/// default for well-scaled problems.
pub fn dare(
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DareSolution, DareError> {
    let n = f.nrows();
    let m = g.ncols();
    if f.ncols() != n || g.nrows() != n || q.nrows() != n || q.ncols() != n || r.nrows() != m || r.ncols() != m {
        return Err(DareError::Dimensions {
            f_rows: f.nrows(),
            f_cols: f.ncols(),
            g_rows: g.nrows(),
            g_cols: g.ncols(),
            q_rows: q.nrows(),
            q_cols: q.ncols(),
            r_rows: r.nrows(),
            r_cols: r.ncols(),
        });
    }

    let mut p = q.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        iterations = it;
        let pg = &p * g;
        let inner = r + g.transpose() * &pg;
        let inner_inv = inner
            .clone()
            .try_inverse()
            .ok_or(DareError::SingularInnerTerm(it))?;
        let pf = &p * f;
        let next = f.transpose() * &pf + q - f.transpose() * &pg * &inner_inv * g.transpose() * &pf;
        // Symmetrize to stop round-off drift from accumulating.
        let next = (&next + next.transpose()) * 0.5;
        residual = (&next - &p).amax();
        p = next;
        if residual <= tol {
            break;
        }
    }
    if residual > tol {
        return Err(DareError::NoConvergence(iterations, residual));
    }

    let inner = r + g.transpose() * &p * g;
    let inner_inv = inner
        .try_inverse()
        .ok_or(DareError::SingularInnerTerm(iterations))?;
    let k = &inner_inv * g.transpose() * &p * f;
    let closed = f - g * &k;
    let spectral_radius = spectral_radius(&closed);

    Ok(DareSolution {
        p,
        k,
        iterations,
        spectral_radius,
    })
}

fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    let eigs: DVector<nalgebra::Complex<f64>> = a.clone().complex_eigenvalues();
    eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
