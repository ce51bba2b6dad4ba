//! Jacobi splitting A = L + D + U and the classical fixed-point iteration
//! x_{m+1} = phi * x_m + h with phi = -D^{-1}(L+U), h = D^{-1} b.

use crate::error::{Error, Result};
use crate::linalg::OVERFLOW_LIMIT;
use crate::matrix::{DenseMatrix, DenseVector};

/// The additive split of a square matrix into strictly lower, diagonal and
/// strictly upper parts. Reassembles exactly: L + D + U = A.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSplit {
    pub lower: DenseMatrix,
    pub diagonal: DenseMatrix,
    pub upper: DenseMatrix,
}

/// Fixed-point iteration data (phi, h), possibly w-scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSystem {
    pub phi: DenseMatrix,
    pub h: DenseVector,
    /// 1.0 for an unscaled system; `scale_system` records its w here.
    pub scale_w: f64,
}

impl IterationSystem {
    pub fn new(phi: DenseMatrix, h: DenseVector) -> Self {
        assert!(phi.is_square(), "iteration matrix must be square");
        assert_eq!(phi.rows(), h.dim(), "phi/h dimension mismatch");
        Self { phi, h, scale_w: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }
}

/// Hard-stop outcome of an iteration loop, kept internal to the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum IterationExit {
    /// All requested steps ran.
    Completed,
    /// Two consecutive relative changes fell below the stagnation tolerance.
    Stagnated { at_step: usize },
    /// A component exceeded the overflow limit at this step.
    Overflowed { at_step: usize },
}

/// Recorded iterates of a fixed-point run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// x_0 ... x_M in order; never empty.
    pub iterates: Vec<DenseVector>,
    /// ||x_m - x_hat|| per iterate, when a reference fixed point was supplied.
    pub error_norms: Option<Vec<f64>>,
    pub(crate) exit: IterationExit,
}

impl IterationTrace {
    pub fn last(&self) -> &DenseVector {
        self.iterates.last().expect("trace is never empty")
    }

    /// Steps actually applied (iterate count minus the start vector).
    pub fn steps(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn stagnated(&self) -> bool {
        matches!(self.exit, IterationExit::Stagnated { .. })
    }

    /// Fill `error_norms` against a reference fixed point.
    pub fn set_reference(&mut self, x_hat: &DenseVector) {
        self.error_norms = Some(
            self.iterates
                .iter()
                .map(|x| x.sub(x_hat).norm())
                .collect(),
        );
    }
}

/// Shared iteration loop: x <- iteration_matrix * x + offset, with overflow
/// guard and optional stagnation exit (fp_tol = 0 disables it).
pub(crate) fn run_iteration(
    iteration_matrix: &DenseMatrix,
    offset: &DenseVector,
    x0: &DenseVector,
    max_steps: usize,
    fp_tol: f64,
) -> IterationTrace {
    assert_eq!(iteration_matrix.rows(), x0.dim(), "start vector dimension mismatch");
    let mut iterates = Vec::with_capacity(max_steps + 1);
    iterates.push(x0.clone());
    let mut exit = IterationExit::Completed;
    let mut previous_small = false;

    for step in 1..=max_steps {
        let x = iterates.last().unwrap();
        let next = iteration_matrix.matvec(x).add(offset);
        if next.max_abs() > OVERFLOW_LIMIT {
            exit = IterationExit::Overflowed { at_step: step };
            break;
        }
        let change = next.sub(x).norm() / next.norm().max(1.0);
        iterates.push(next);
        if change < fp_tol {
            if previous_small {
                exit = IterationExit::Stagnated { at_step: step };
                break;
            }
            previous_small = true;
        } else {
            previous_small = false;
        }
    }
    IterationTrace { iterates, error_norms: None, exit }
}

/// Split A exactly into strictly lower, diagonal and strictly upper parts.
pub fn jacobi_split(a: &DenseMatrix) -> JacobiSplit {
    assert!(a.is_square(), "Jacobi splitting requires a square matrix");
    let n = a.rows();
    let mut lower = DenseMatrix::zeros(n, n);
    let mut diagonal = DenseMatrix::zeros(n, n);
    let mut upper = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            match i.cmp(&j) {
                std::cmp::Ordering::Greater => lower[(i, j)] = v,
                std::cmp::Ordering::Equal => diagonal[(i, j)] = v,
                std::cmp::Ordering::Less => upper[(i, j)] = v,
            }
        }
    }
    JacobiSplit { lower, diagonal, upper }
}

/// Build the fixed-point form phi = -D^{-1}(L+U), h = D^{-1} b.
pub fn build_iteration(a: &DenseMatrix, b: &DenseVector) -> Result<IterationSystem> {
    assert!(a.is_square(), "system matrix must be square");
    assert_eq!(a.rows(), b.dim(), "rhs dimension mismatch");
    let n = a.rows();
    for i in 0..n {
        if a[(i, i)].abs() < 1e-300 {
            return Err(Error::ZeroDiagonal(i));
        }
    }
    let mut phi = DenseMatrix::zeros(n, n);
    let mut h = DenseVector::zeros(n);
    for i in 0..n {
        let d = a[(i, i)];
        for j in 0..n {
            if i != j {
                phi[(i, j)] = -a[(i, j)] / d;
            }
        }
        h[i] = b[i] / d;
    }
    Ok(IterationSystem::new(phi, h))
}

/// Run the classical iteration for exactly `steps` steps (no stagnation
/// exit). Diverging magnitudes are tolerated up to the overflow limit.
pub fn classic_iterate(
    sys: &IterationSystem,
    x0: &DenseVector,
    steps: usize,
) -> Result<IterationTrace> {
    let trace = run_iteration(&sys.phi, &sys.h, x0, steps, 0.0);
    if let IterationExit::Overflowed { at_step } = trace.exit {
        return Err(Error::Overflow { step: at_step });
    }
    Ok(trace)
}
