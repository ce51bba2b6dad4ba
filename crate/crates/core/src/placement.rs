//! Controllability test and eigenvalue placement for the rank-one feedback
//! loop phi_tilde = phi - h * k'.
//!
//! The gain comes from Ackermann's construction: k' = (last row of C^{-1})
//! times the desired characteristic polynomial evaluated at phi, where C is
//! the controllability matrix. Placement verification compares characteristic
//! polynomials computed by the Faddeev-LeVerrier trace recursion, so no
//! eigenvalue solver is involved anywhere.

use crate::error::{Error, Result};
use crate::jacobi::IterationSystem;
use crate::linalg::{rank_estimate, LuFactors, DEFAULT_RANK_TOL};
use crate::matrix::{DenseMatrix, DenseVector};

/// Requested closed-loop eigenvalues (real targets only).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTuple {
    values: Vec<f64>,
}

impl EigenTuple {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidShape("empty eigenvalue tuple".into()));
        }
        for v in &values {
            if !v.is_finite() {
                return Err(Error::InvalidParams("non-finite eigenvalue target".into()));
            }
        }
        Ok(Self { values })
    }

    /// The deadbeat tuple: all eigenvalues at zero.
    pub fn deadbeat(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when every target lies strictly inside the unit circle, which is
    /// what a convergent iteration requires.
    pub fn is_contractive(&self) -> bool {
        self.values.iter().all(|v| v.abs() < 1.0)
    }
}

/// Feedback gain closing the loop phi_tilde = phi - h * k'.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector {
    pub k: DenseVector,
}

impl GainVector {
    pub fn zero(n: usize) -> Self {
        Self { k: DenseVector::zeros(n) }
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }
}

/// Close the loop: phi - h * k'.
pub fn closed_loop(sys: &IterationSystem, gain: &GainVector) -> DenseMatrix {
    assert_eq!(sys.dim(), gain.dim(), "gain dimension mismatch");
    sys.phi.sub(&DenseMatrix::outer(&sys.h, &gain.k))
}

/// Controllability matrix with column j = phi^j * h.
pub fn controllability_matrix(sys: &IterationSystem) -> DenseMatrix {
    let n = sys.dim();
    let mut c = DenseMatrix::zeros(n, n);
    let mut v = sys.h.clone();
    for j in 0..n {
        c.set_column(j, &v);
        if j + 1 < n {
            v = sys.phi.matvec(&v);
        }
    }
    c
}

/// Rank test on the controllability matrix.
pub fn is_controllable(sys: &IterationSystem, tol: f64) -> bool {
    rank_estimate(&controllability_matrix(sys), tol) == sys.dim()
}

/// Coefficients of prod (x - r_i), monic, highest power first. The factors
/// are combined pairwise (balanced product tree) to limit coefficient
/// roundoff; the roots are multiplied in the order given.
fn poly_from_roots(roots: &[f64]) -> Vec<f64> {
    match roots.len() {
        0 => vec![1.0],
        1 => vec![1.0, -roots[0]],
        len => {
            let (a, b) = roots.split_at(len / 2);
            poly_mul(&poly_from_roots(a), &poly_from_roots(b))
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Evaluate a monic polynomial (coefficients highest first) at a matrix,
/// by Horner's scheme.
fn poly_eval_matrix(coeffs: &[f64], m: &DenseMatrix) -> DenseMatrix {
    let n = m.rows();
    let mut acc = DenseMatrix::identity(n).scale(coeffs[0]);
    for &c in &coeffs[1..] {
        acc = acc.matmul(m);
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}

/// Characteristic polynomial of a square matrix via the Faddeev-LeVerrier
/// trace recursion: monic, highest power first, length n+1.
pub fn characteristic_polynomial(m: &DenseMatrix) -> Vec<f64> {
    assert!(m.is_square());
    let n = m.rows();
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(1.0);
    let mut work = m.clone();
    for step in 1..=n {
        let trace: f64 = (0..n).map(|i| work[(i, i)]).sum();
        let c = -trace / step as f64;
        coeffs.push(c);
        if step < n {
            let mut shifted = work.clone();
            for i in 0..n {
                shifted[(i, i)] += c;
            }
            work = m.matmul(&shifted);
        }
    }
    coeffs
}

/// Synthesize the gain placing the eigenvalues of phi - h*k' at `targets`.
///
/// The target tuple is sorted into a canonical order before expansion, so
/// permuted-but-equal tuples produce bitwise-identical gains.
pub fn place_gain(sys: &IterationSystem, targets: &EigenTuple) -> Result<GainVector> {
    let n = sys.dim();
    assert_eq!(targets.len(), n, "target tuple dimension mismatch");

    let c = controllability_matrix(sys);
    let rank = rank_estimate(&c, DEFAULT_RANK_TOL);
    if rank < n {
        return Err(Error::NotControllable { rank, dim: n });
    }

    let mut sorted = targets.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let desired = poly_from_roots(&sorted);
    let p_phi = poly_eval_matrix(&desired, &sys.phi);

    // last row of C^{-1}: solve C' y = e_n
    let factors = LuFactors::factor(&c.transpose())?;
    let y = factors.solve_vector(&DenseVector::unit(n, n - 1));
    Ok(GainVector { k: p_phi.vecmat(&y) })
}

/// Check that phi - h*k' has the requested characteristic polynomial, each
/// coefficient within `tol * (1 + |coefficient|)`.
pub fn verify_placement(
    sys: &IterationSystem,
    gain: &GainVector,
    targets: &EigenTuple,
    tol: f64,
) -> bool {
    assert_eq!(targets.len(), sys.dim(), "target tuple dimension mismatch");
    let mut sorted = targets.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let desired = poly_from_roots(&sorted);
    let actual = characteristic_polynomial(&closed_loop(sys, gain));
    desired
        .iter()
        .zip(&actual)
        .all(|(want, got)| (want - got).abs() <= tol * (1.0 + want.abs()))
}
