//! Dense factorizations and estimates: LU solve, numerical rank, spectral
//! radius.
//!
//! Nothing here computes eigenvalues. The spectral radius uses the norm-root
//! limit of repeated squaring, which also handles dominant complex-conjugate
//! pairs where plain power iteration stalls.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, DenseVector};

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Norm bound above which iterates and operands are treated as diverged.
pub const OVERFLOW_LIMIT: f64 = 1e150;

/// LU factorization with partial (row) pivoting.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factor a square matrix. Pivots below `1e-14 * ||A||_F` are treated as
    /// singular.
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        assert!(a.is_square(), "LU requires a square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let threshold = 1e-14 * a.frobenius_norm();

        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_mag = lu[(col, col)].abs();
            for row in (col + 1)..n {
                let mag = lu[(row, col)].abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = row;
                }
            }
            if pivot_mag < threshold || pivot_mag == 0.0 {
                return Err(Error::SingularMatrix { column: col, pivot: pivot_mag });
            }
            if pivot_row != col {
                for j in 0..n {
                    let tmp = lu[(col, j)];
                    lu[(col, j)] = lu[(pivot_row, j)];
                    lu[(pivot_row, j)] = tmp;
                }
                perm.swap(col, pivot_row);
            }
            let pivot = lu[(col, col)];
            for row in (col + 1)..n {
                let factor = lu[(row, col)] / pivot;
                lu[(row, col)] = factor;
                for j in (col + 1)..n {
                    let delta = factor * lu[(col, j)];
                    lu[(row, j)] -= delta;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve_vector(&self, b: &DenseVector) -> DenseVector {
        let n = self.lu.rows();
        assert_eq!(b.dim(), n, "rhs dimension mismatch");
        let mut x = DenseVector::zeros(n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        // forward substitution (unit lower triangle)
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        // back substitution
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows(), self.lu.rows(), "rhs dimension mismatch");
        let mut x = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            x.set_column(j, &self.solve_vector(&b.column(j)));
        }
        x
    }
}

/// Solve A x = b by LU with partial pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &DenseVector) -> Result<DenseVector> {
    Ok(LuFactors::factor(a)?.solve_vector(b))
}

/// Solve A X = B for a matrix right-hand side.
pub fn lu_solve_matrix(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(LuFactors::factor(a)?.solve_matrix(b))
}

/// Numerical rank by Gaussian elimination with full pivoting. A pivot counts
/// while its magnitude exceeds `tol * ||M||_F`.
pub fn rank_estimate(m: &DenseMatrix, tol: f64) -> usize {
    assert!(tol > 0.0, "rank tolerance must be positive");
    let threshold = tol * m.frobenius_norm();
    let mut work = m.clone();
    let rows = work.rows();
    let cols = work.cols();
    let steps = rows.min(cols);
    let mut rank = 0;

    for step in 0..steps {
        // full pivot over the remaining submatrix
        let mut pi = step;
        let mut pj = step;
        let mut pmag = 0.0;
        for i in step..rows {
            for j in step..cols {
                let mag = work[(i, j)].abs();
                if mag > pmag {
                    pmag = mag;
                    pi = i;
                    pj = j;
                }
            }
        }
        if pmag <= threshold {
            break;
        }
        if pi != step {
            for j in 0..cols {
                let tmp = work[(step, j)];
                work[(step, j)] = work[(pi, j)];
                work[(pi, j)] = tmp;
            }
        }
        if pj != step {
            for i in 0..rows {
                let tmp = work[(i, step)];
                work[(i, step)] = work[(i, pj)];
                work[(i, pj)] = tmp;
            }
        }
        let pivot = work[(step, step)];
        for i in (step + 1)..rows {
            let factor = work[(i, step)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in step..cols {
                let delta = factor * work[(step, j)];
                work[(i, j)] -= delta;
            }
        }
        rank += 1;
    }
    rank
}

/// Diagonal pivots of symmetric Gaussian elimination (LDL'-style, no
/// pivoting). All pivots positive means positive definite; pivots no smaller
/// than a tolerance-scaled negative bound is the working positive-semidefinite
/// check. Elimination is skipped on numerically zero pivots.
pub fn symmetric_elimination_pivots(m: &DenseMatrix) -> Vec<f64> {
    assert!(m.is_square(), "pivot check requires a square matrix");
    let n = m.rows();
    let scale = m.frobenius_norm().max(1.0);
    let mut work = m.clone();
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let pivot = work[(k, k)];
        pivots.push(pivot);
        if pivot.abs() <= 1e-14 * scale {
            continue;
        }
        for i in (k + 1)..n {
            let factor = work[(i, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in (k + 1)..n {
                let delta = factor * work[(k, j)];
                work[(i, j)] -= delta;
            }
        }
    }
    pivots
}

/// Spectral radius estimate with a convergence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRadiusEstimate {
    pub value: f64,
    /// False when the doubling budget ran out before the estimate settled.
    pub converged: bool,
}

/// Estimate rho(M) as the limit of ||M^(2^j)||_F^(1/2^j).
///
/// The running power is renormalized to unit Frobenius norm before each
/// squaring, with the scale carried logarithmically, so intermediate powers
/// neither overflow nor underflow regardless of rho. Doubling stops once two
/// consecutive estimates differ by less than `tol * max(1, estimate)` or
/// after `max_doublings` squarings (the estimate is still returned, flagged
/// unconverged).
pub fn spectral_radius_estimate(
    m: &DenseMatrix,
    tol: f64,
    max_doublings: usize,
) -> Result<SpectralRadiusEstimate> {
    assert!(m.is_square(), "spectral radius requires a square matrix");
    assert!(tol > 0.0, "tolerance must be positive");

    let norm = m.frobenius_norm();
    if !norm.is_finite() || norm > OVERFLOW_LIMIT {
        return Err(Error::Overflow { step: 0 });
    }
    if norm == 0.0 {
        return Ok(SpectralRadiusEstimate { value: 0.0, converged: true });
    }

    // invariant: M^(2^j) = exp(log_scale) * b, with ||b||_F = 1 on entry
    let mut b = m.scale(1.0 / norm);
    let mut log_scale = norm.ln();
    let mut power = 1.0;
    let mut estimate = norm;

    for _ in 0..max_doublings {
        b = b.matmul(&b);
        log_scale *= 2.0;
        power *= 2.0;
        let nb = b.frobenius_norm();
        if nb == 0.0 {
            // exactly nilpotent
            return Ok(SpectralRadiusEstimate { value: 0.0, converged: true });
        }
        log_scale += nb.ln();
        b = b.scale(1.0 / nb);
        let next = (log_scale / power).exp();
        if (next - estimate).abs() < tol * next.abs().max(1.0) {
            return Ok(SpectralRadiusEstimate { value: next, converged: true });
        }
        estimate = next;
    }
    Ok(SpectralRadiusEstimate { value: estimate, converged: false })
}
