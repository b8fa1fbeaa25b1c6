//! Dense symmetric positive-definite solves and the smallest eigenpair of a
//! symmetric-definite pencil.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Cholesky factorization that keeps the matrix for one step of iterative
/// refinement.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(matrix.clone()).ok_or(Error::NotSpd)?;
        Ok(SpdFactor { matrix, chol })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Solves `A x = b` followed by one refinement step.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(b);
        let r = b - &self.matrix * &x;
        x += self.chol.solve(&r);
        x
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = self.chol.solve(b);
        let r = b - &self.matrix * &x;
        x += self.chol.solve(&r);
        x
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.chol.inverse();
        inv = (&inv + inv.transpose()) * 0.5;
        inv
    }
}

/// Smallest eigenpair of `A x = lambda B x` by inverse iteration with
/// Rayleigh-quotient estimates; both matrices symmetric, `A` positive
/// definite (factored), `B` positive semi-definite on the iterates.
pub fn smallest_pencil_eigenvalue(a: &SpdFactor, b: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<(f64, DVector<f64>)> {
    let n = a.dim();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::InvalidParameter("pencil matrices differ in size".into()));
    }
    // smooth positive start vector overlaps the ground state
    let mut x = DVector::from_fn(n, |i, _| {
        let t = (i as f64 + 1.0) / (n as f64 + 1.0);
        (std::f64::consts::PI * t).sin() + 0.01
    });
    let mut lambda = f64::INFINITY;
    for _ in 0..max_iter {
        let bx = b * &x;
        let y = a.solve(&bx);
        let by = b * &y;
        let ybn = y.dot(&by);
        if !(ybn > 0.0) {
            return Err(Error::Numerical("pencil is not definite on the iterate".into()));
        }
        let ay = a.matrix() * &y;
        let next = y.dot(&ay) / ybn;
        x = y / ybn.sqrt();
        if (next - lambda).abs() <= tol * next.abs() {
            return Ok((next, x));
        }
        lambda = next;
    }
    Err(Error::Numerical(format!("inverse iteration did not converge in {max_iter} steps")))
}
