//! Finite-horizon LQR gain synthesis by the backward matrix Riccati
//! difference recursion, with the algebraic-Riccati residual as the
//! stagnation test.
//!
//! The recursion
//!
//! ```text
//! P_m = Q + phi' [ P_{m+1} - P_{m+1} h h' P_{m+1} / (r + h' P_{m+1} h) ] phi
//! ```
//!
//! runs from the terminal weight P_N = S down to P_1; each P_{m+1} yields the
//! time-varying gain k_m' = (h' P_{m+1} phi) / (r + h' P_{m+1} h). Once the
//! step-to-step change stagnates, the last gain approximates the stationary
//! gain of the algebraic equation, and the closed loop phi - h*k' is
//! contractive without any eigenvalue computation.

use crate::error::{Error, Result};
use crate::jacobi::{run_iteration, IterationExit, IterationSystem};
use crate::linalg::{rank_estimate, symmetric_elimination_pivots, OVERFLOW_LIMIT};
use crate::matrix::{DenseMatrix, DenseVector};
use crate::placement::GainVector;

/// Default control weight r.
pub const DEFAULT_CONTROL_WEIGHT: f64 = 0.5;
/// Default relative stagnation threshold on the Riccati residual.
pub const DEFAULT_DARE_TOL: f64 = 1e-12;

/// Weights and horizon of the quadratic criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrParams {
    /// Output vector c; the state weight is Q = c*c'.
    pub c: DenseVector,
    /// Control weight, strictly positive.
    pub r: f64,
    /// Terminal weight S, symmetric positive definite.
    pub s: DenseMatrix,
    /// Horizon N >= 1; the backward recursion takes N-1 steps.
    pub horizon: usize,
    /// Relative early-stop threshold: stop when ||Delta||_F < dare_tol * ||P||_F.
    /// Zero disables early stopping.
    pub dare_tol: f64,
}

impl LqrParams {
    pub fn new(
        c: DenseVector,
        r: f64,
        s: DenseMatrix,
        horizon: usize,
        dare_tol: f64,
    ) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParams(format!("control weight r = {r} must be > 0")));
        }
        if horizon < 1 {
            return Err(Error::InvalidParams("horizon must be >= 1".into()));
        }
        if !(dare_tol >= 0.0) {
            return Err(Error::InvalidParams("dare_tol must be >= 0".into()));
        }
        if !s.is_square() || s.rows() != c.dim() {
            return Err(Error::InvalidParams(format!(
                "terminal weight is {}x{}, output vector has dimension {}",
                s.rows(),
                s.cols(),
                c.dim()
            )));
        }
        let scale = s.frobenius_norm().max(1.0);
        for i in 0..s.rows() {
            for j in (i + 1)..s.cols() {
                if (s[(i, j)] - s[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParams("terminal weight is not symmetric".into()));
                }
            }
        }
        if symmetric_elimination_pivots(&s).iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidParams(
                "terminal weight is not positive definite".into(),
            ));
        }
        Ok(Self { c, r, s, horizon, dare_tol })
    }

    /// r = 0.5, S = identity, relative dare_tol = 1e-12.
    pub fn with_defaults(c: DenseVector, horizon: usize) -> Self {
        let n = c.dim();
        Self {
            c,
            r: DEFAULT_CONTROL_WEIGHT,
            s: DenseMatrix::identity(n),
            horizon,
            dare_tol: DEFAULT_DARE_TOL,
        }
    }
}

/// Result of the backward recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiTrace {
    /// P_1 (or the stagnated P when the recursion stopped early).
    pub p_final: DenseMatrix,
    /// Gains in computation order: k_{N-1} first, the k_0 approximation last.
    pub gains: Vec<GainVector>,
    /// ||Delta||_F of the final P, i.e. the algebraic-equation residual.
    pub delta_norm: f64,
    /// Backward steps actually taken (at most horizon - 1).
    pub steps_run: usize,
}

impl RiccatiTrace {
    /// The k_0 approximation: the last gain computed.
    pub fn final_gain(&self) -> &GainVector {
        self.gains.last().expect("recursion produces at least one gain")
    }

    /// Gains reordered for forward simulation: k_0 first.
    pub fn gains_in_time_order(&self) -> Vec<GainVector> {
        self.gains.iter().rev().cloned().collect()
    }
}

/// Simulated closed-loop cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CostEvaluation {
    pub cost: f64,
    /// z_0 ... z_N.
    pub z_trace: Vec<DenseVector>,
    /// u_0 ... u_{N-1}.
    pub u_trace: Vec<f64>,
}

/// Rank-one state weight Q = c*c' (exactly symmetric by construction).
pub fn build_q(c: &DenseVector) -> DenseMatrix {
    DenseMatrix::outer(c, c)
}

/// Rank test on the stacked output rows c', c'phi, ..., c'phi^{n-1}.
pub fn check_output_rank(sys: &IterationSystem, c: &DenseVector, tol: f64) -> bool {
    let n = sys.dim();
    assert_eq!(c.dim(), n, "output vector dimension mismatch");
    let mut stacked = DenseMatrix::zeros(n, n);
    let mut row = c.clone();
    for i in 0..n {
        for j in 0..n {
            stacked[(i, j)] = row[j];
        }
        if i + 1 < n {
            row = sys.phi.vecmat(&row);
        }
    }
    rank_estimate(&stacked, tol) == n
}

/// One backward step of the Riccati difference recursion; the result is
/// re-symmetrized to stop roundoff drift from accumulating over long runs.
pub fn riccati_step(p: &DenseMatrix, sys: &IterationSystem, q: &DenseMatrix, r: f64) -> DenseMatrix {
    let n = sys.dim();
    assert!(p.is_square() && p.rows() == n, "P dimension mismatch");
    let v = p.matvec(&sys.h);
    let denominator = r + sys.h.dot(&v);
    assert!(denominator >= r, "quadratic term h'Ph = {} must be nonnegative", denominator - r);
    let inner = p.sub(&DenseMatrix::outer(&v, &v).scale(1.0 / denominator));
    let propagated = sys.phi.transpose().matmul(&inner).matmul(&sys.phi);
    q.add(&propagated).symmetrized()
}

/// Gain k' = (h' P phi) / (r + h' P h).
pub fn gain_from_p(p: &DenseMatrix, sys: &IterationSystem, r: f64) -> GainVector {
    let v = p.transpose().matvec(&sys.h); // h'P as a vector
    let denominator = r + sys.h.dot(&p.matvec(&sys.h));
    assert!(denominator >= r, "quadratic term h'Ph must be nonnegative");
    GainVector { k: sys.phi.vecmat(&v).scale(1.0 / denominator) }
}

/// Residual of the algebraic Riccati equation at P: ||step(P) - P||_F.
pub fn dare_residual(p: &DenseMatrix, sys: &IterationSystem, q: &DenseMatrix, r: f64) -> f64 {
    riccati_step(p, sys, q, r).sub(p).frobenius_norm()
}

/// Solve backward from P_N = S, collecting the gain at every level.
///
/// Runs at most `horizon - 1` steps; stops as soon as the step-to-step change
/// falls below `dare_tol * ||P||_F`, at which point the last gain already
/// approximates the stationary one. The output-rank condition on (c, phi) is
/// deliberately not enforced here — callers surface it as a warning.
pub fn riccati_backward(sys: &IterationSystem, params: &LqrParams) -> Result<RiccatiTrace> {
    let n = sys.dim();
    if params.c.dim() != n {
        return Err(Error::InvalidParams(format!(
            "output vector has dimension {}, system has {}",
            params.c.dim(),
            n
        )));
    }
    let q = build_q(&params.c);
    let mut p = params.s.clone();
    let mut gains = vec![gain_from_p(&p, sys, params.r)];
    let mut steps_run = 0;

    for _ in 1..params.horizon {
        let next = riccati_step(&p, sys, &q, params.r);
        let change = next.sub(&p).frobenius_norm();
        p = next;
        gains.push(gain_from_p(&p, sys, params.r));
        steps_run += 1;
        if change < params.dare_tol * p.frobenius_norm() {
            break;
        }
    }
    let delta_norm = dare_residual(&p, sys, &q, params.r);
    Ok(RiccatiTrace { p_final: p, gains, delta_norm, steps_run })
}

/// Simulate z_{m+1} = phi z_m + h u_m with u_m = -k_m' z_m and accumulate the
/// quadratic cost. `gains` is in time order, k_0 first.
pub fn cost_evaluate(
    sys: &IterationSystem,
    gains: &[GainVector],
    z0: &DenseVector,
    params: &LqrParams,
) -> Result<CostEvaluation> {
    assert_eq!(z0.dim(), sys.dim(), "start vector dimension mismatch");
    let q = build_q(&params.c);
    let mut z_trace = Vec::with_capacity(gains.len() + 1);
    let mut u_trace = Vec::with_capacity(gains.len());
    let mut cost = 0.0;
    let mut z = z0.clone();

    for (step, gain) in gains.iter().enumerate() {
        let u = -gain.k.dot(&z);
        cost += 0.5 * (z.dot(&q.matvec(&z)) + params.r * u * u);
        z_trace.push(z.clone());
        u_trace.push(u);
        z = sys.phi.matvec(&z).add(&sys.h.scale(u));
        if z.max_abs() > OVERFLOW_LIMIT {
            return Err(Error::Overflow { step: step + 1 });
        }
    }
    cost += 0.5 * z.dot(&params.s.matvec(&z));
    z_trace.push(z);
    Ok(CostEvaluation { cost, z_trace, u_trace })
}

/// Closed-loop homogeneous run z_{m+1} = (phi - h k') z_m, used by tests and
/// diagnostics.
pub fn closed_loop_decay(
    sys: &IterationSystem,
    gain: &GainVector,
    z0: &DenseVector,
    steps: usize,
) -> Result<Vec<f64>> {
    let phit = crate::placement::closed_loop(sys, gain);
    let trace = run_iteration(&phit, &DenseVector::zeros(sys.dim()), z0, steps, 0.0);
    if let IterationExit::Overflowed { at_step } = trace.exit {
        return Err(Error::Overflow { step: at_step });
    }
    Ok(trace.iterates.iter().map(|z| z.norm()).collect())
}
