//! End-to-end solves: the extended iteration x~_{m+1} = (phi - h k') x~_m + h,
//! the back-transform x = x~ / (1 - k'x~) that recovers the solution of
//! A x = b from the extended fixed point, w-scaling, and the full pipelines
//! behind the CLI modes.
//!
//! Pipeline shape, common to every feedback mode:
//!
//! 1. split A and form (phi, h);
//! 2. synthesize a gain k (pole placement, deadbeat, or Riccati recursion,
//!    the latter optionally on the w-scaled system);
//! 3. iterate the closed loop from x~_0;
//! 4. back-transform and report the residual A x - b, recomputed from the
//!    original data.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::jacobi::{build_iteration, run_iteration, IterationExit, IterationSystem, IterationTrace};
use crate::linalg::spectral_radius_estimate;
use crate::matrix::{DenseMatrix, DenseVector};
use crate::placement::{closed_loop, place_gain, EigenTuple, GainVector};
use crate::riccati::{check_output_rank, riccati_backward, LqrParams};

/// Default relative stagnation tolerance of the extended iteration.
pub const DEFAULT_FP_TOL: f64 = 1e-14;
/// Smallest accepted spectral-radius bound w.
pub const MIN_SCALE_W: f64 = 1e-6;

/// Solver pipeline selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Classical iteration, no feedback. Diverges when rho(phi) >= 1.
    Jacobi,
    /// All closed-loop eigenvalues at zero: the fixed point is exact after n steps.
    Deadbeat,
    /// User-chosen closed-loop eigenvalue tuple.
    Place,
    /// Riccati/LQR gain on the unscaled system: rho < 1 guaranteed, value unknown.
    Lqr,
    /// Riccati/LQR gain on the w-scaled system: rho < w guaranteed.
    LqrW,
}

impl fmt::Display for SolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SolveMode::Jacobi => "jacobi",
            SolveMode::Deadbeat => "deadbeat",
            SolveMode::Place => "place",
            SolveMode::Lqr => "lqr",
            SolveMode::LqrW => "lqr-w",
        };
        f.write_str(name)
    }
}

/// Everything a solve needs beyond (A, b).
#[derive(Debug, Clone)]
pub struct SolveParams {
    pub mode: SolveMode,
    /// Spectral-radius bound for `LqrW`, in [1e-6, 1].
    pub w: f64,
    /// Fixed-point steps M; `None` means 2n (deadbeat always uses n).
    pub steps: Option<usize>,
    /// Start vector; `None` means zero.
    pub x0: Option<DenseVector>,
    /// Closed-loop eigenvalue targets (mode `Place`).
    pub targets: Option<EigenTuple>,
    /// Riccati weights and horizon (modes `Lqr`, `LqrW`).
    pub lqr: Option<LqrParams>,
    /// Stagnation exit tolerance; 0 disables early exit.
    pub fp_tol: f64,
    /// Compatibility switch: iterate with the scaled closed loop
    /// (phi_w - h_w k') instead of (phi - h k'). The scaled variant converges
    /// to a different fixed point and does not recover the solution; it is
    /// off by default and exists only to reproduce the alternative map.
    pub scaled_iteration: bool,
}

impl SolveParams {
    pub fn new(mode: SolveMode) -> Self {
        Self {
            mode,
            w: if mode == SolveMode::LqrW { 0.1 } else { 1.0 },
            steps: None,
            x0: None,
            targets: None,
            lqr: None,
            fp_tol: DEFAULT_FP_TOL,
            scaled_iteration: false,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.w > 0.0 && self.w <= 1.0) {
            return Err(Error::InvalidParams(format!("w = {} must lie in (0, 1]", self.w)));
        }
        if self.w < MIN_SCALE_W {
            return Err(Error::InvalidParams(format!(
                "w = {} below the supported minimum {MIN_SCALE_W}",
                self.w
            )));
        }
        if self.steps == Some(0) {
            return Err(Error::InvalidParams("step count M must be >= 1".into()));
        }
        if !(self.fp_tol >= 0.0) || !self.fp_tol.is_finite() {
            return Err(Error::InvalidParams("fp_tol must be a finite nonnegative value".into()));
        }
        if let Some(x0) = &self.x0 {
            if x0.dim() != n {
                return Err(Error::InvalidParams(format!(
                    "start vector has dimension {}, system has {n}",
                    x0.dim()
                )));
            }
        }
        match self.mode {
            SolveMode::Place => match &self.targets {
                None => {
                    return Err(Error::InvalidParams("mode place needs an eigenvalue tuple".into()))
                }
                Some(t) => {
                    if t.len() != n {
                        return Err(Error::InvalidParams(format!(
                            "target tuple has {} entries, system has {n}",
                            t.len()
                        )));
                    }
                    if !t.is_contractive() {
                        return Err(Error::InvalidParams(
                            "all target eigenvalues must satisfy |lambda| < 1".into(),
                        ));
                    }
                }
            },
            SolveMode::Lqr | SolveMode::LqrW => match &self.lqr {
                None => {
                    return Err(Error::InvalidParams(
                        "LQR modes need weights (c, r, S) and a horizon".into(),
                    ))
                }
                Some(lqr) => {
                    if lqr.c.dim() != n {
                        return Err(Error::InvalidParams(format!(
                            "output vector has dimension {}, system has {n}",
                            lqr.c.dim()
                        )));
                    }
                }
            },
            _ => {}
        }
        Ok(())
    }

    fn start_vector(&self, n: usize) -> DenseVector {
        self.x0.clone().unwrap_or_else(|| DenseVector::zeros(n))
    }

    fn step_count(&self, n: usize) -> usize {
        self.steps.unwrap_or(2 * n)
    }
}

/// Outcome of a solve: final iterates, recovered solution, end-to-end
/// residual and assorted diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub mode: SolveMode,
    /// Final iterate of the (extended) iteration.
    pub x_tilde: DenseVector,
    /// Back-transformed solution of A x = b.
    pub x: DenseVector,
    /// r = A x - b, recomputed from the original data at report time.
    pub residual: DenseVector,
    pub residual_norm: f64,
    /// Iteration steps actually applied.
    pub steps_used: usize,
    /// Steps requested (M).
    pub steps_requested: usize,
    pub gain: GainVector,
    /// w for mode `LqrW`: the guaranteed bound on rho(phi - h k').
    pub spectral_bound: Option<f64>,
    /// Config echo for reporting.
    pub w: f64,
    /// Riccati horizon (0 for the non-LQR modes).
    pub horizon: usize,
    /// Labeled scalar diagnostics (residuals, rho estimates, warnings).
    pub diagnostics: BTreeMap<String, f64>,
}

impl SolveReport {
    pub fn dim(&self) -> usize {
        self.x.dim()
    }
}

/// Run the extended iteration with the loop closed by `gain`, for up to
/// `steps` steps, stopping early once two consecutive relative changes fall
/// below `fp_tol`. With a zero gain this is exactly the classical iteration.
pub fn extended_iterate(
    sys: &IterationSystem,
    gain: &GainVector,
    x0: &DenseVector,
    steps: usize,
    fp_tol: f64,
) -> Result<IterationTrace> {
    let phi_tilde = closed_loop(sys, gain);
    let trace = run_iteration(&phi_tilde, &sys.h, x0, steps, fp_tol);
    if let IterationExit::Overflowed { at_step } = trace.exit {
        return Err(Error::Overflow { step: at_step });
    }
    Ok(trace)
}

/// Recover the solution of A x = b from the extended fixed point:
/// x = x~ / (1 - k' x~).
pub fn back_transform(x_tilde: &DenseVector, gain: &GainVector) -> Result<DenseVector> {
    let kx = gain.k.dot(x_tilde);
    let denominator = 1.0 - kx;
    if denominator.abs() <= 1e-12 * (1.0 + kx.abs()) {
        return Err(Error::DegenerateBackTransform { denominator });
    }
    Ok(x_tilde.scale(1.0 / denominator))
}

/// r = A x - b.
pub fn residual(a: &DenseMatrix, x: &DenseVector, b: &DenseVector) -> DenseVector {
    a.matvec(x).sub(b)
}

/// Divide phi and h entrywise by w; records w in the system.
pub fn scale_system(sys: &IterationSystem, w: f64) -> IterationSystem {
    assert!(w > 0.0, "scale factor must be positive");
    IterationSystem {
        phi: sys.phi.scale(1.0 / w),
        h: sys.h.scale(1.0 / w),
        scale_w: w,
    }
}

fn rho_diagnostic(diagnostics: &mut BTreeMap<String, f64>, label: &str, m: &DenseMatrix) {
    if let Ok(est) = spectral_radius_estimate(m, 1e-6, 40) {
        diagnostics.insert(label.to_string(), est.value);
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    a: &DenseMatrix,
    b: &DenseVector,
    mode: SolveMode,
    trace: IterationTrace,
    gain: GainVector,
    params: &SolveParams,
    steps_requested: usize,
    horizon: usize,
    spectral_bound: Option<f64>,
    mut diagnostics: BTreeMap<String, f64>,
) -> Result<(SolveReport, IterationTrace)> {
    let x_tilde = trace.last().clone();
    let x = if mode == SolveMode::Jacobi {
        x_tilde.clone()
    } else {
        back_transform(&x_tilde, &gain)?
    };
    let r = residual(a, &x, b);
    diagnostics.insert("stagnated".into(), if trace.stagnated() { 1.0 } else { 0.0 });
    let report = SolveReport {
        mode,
        residual_norm: r.norm(),
        residual: r,
        x_tilde,
        x,
        steps_used: trace.steps(),
        steps_requested,
        gain,
        spectral_bound,
        w: params.w,
        horizon,
        diagnostics,
    };
    Ok((report, trace))
}

/// Solve A x = b with the pipeline selected by `params.mode`, also returning
/// the iteration trace for plotting or inspection.
pub fn solve_with_trace(
    a: &DenseMatrix,
    b: &DenseVector,
    params: &SolveParams,
) -> Result<(SolveReport, IterationTrace)> {
    assert!(a.is_square(), "system matrix must be square");
    assert_eq!(a.rows(), b.dim(), "rhs dimension mismatch");
    let n = b.dim();
    params.validate(n)?;
    let sys = build_iteration(a, b)?;
    let x0 = params.start_vector(n);
    let steps = params.step_count(n);
    let mut diagnostics = BTreeMap::new();

    match params.mode {
        SolveMode::Jacobi => {
            // divergence is an expected outcome here: keep the partial trace
            let trace = run_iteration(&sys.phi, &sys.h, &x0, steps, params.fp_tol);
            if let IterationExit::Overflowed { at_step } = trace.exit {
                diagnostics.insert("overflow_step".into(), at_step as f64);
            }
            rho_diagnostic(&mut diagnostics, "rho_iteration_matrix", &sys.phi);
            finish_report(
                a,
                b,
                SolveMode::Jacobi,
                trace,
                GainVector::zero(n),
                params,
                steps,
                0,
                None,
                diagnostics,
            )
        }
        SolveMode::Deadbeat => {
            let gain = deadbeat_gain(&sys)?;
            let trace = extended_iterate(&sys, &gain, &x0, n, params.fp_tol)?;
            rho_diagnostic(&mut diagnostics, "rho_closed_loop", &closed_loop(&sys, &gain));
            finish_report(a, b, SolveMode::Deadbeat, trace, gain, params, n, 0, None, diagnostics)
        }
        SolveMode::Place => {
            let targets = params.targets.as_ref().expect("validated");
            let gain = place_gain(&sys, targets)?;
            let trace = extended_iterate(&sys, &gain, &x0, steps, params.fp_tol)?;
            rho_diagnostic(&mut diagnostics, "rho_closed_loop", &closed_loop(&sys, &gain));
            finish_report(a, b, SolveMode::Place, trace, gain, params, steps, 0, None, diagnostics)
        }
        SolveMode::Lqr => {
            let lqr = params.lqr.as_ref().expect("validated");
            if !check_output_rank(&sys, &lqr.c, 1e-10) {
                diagnostics.insert("output_rank_ok".into(), 0.0);
            } else {
                diagnostics.insert("output_rank_ok".into(), 1.0);
            }
            let riccati = riccati_backward(&sys, lqr)?;
            let gain = riccati.final_gain().clone();
            let p_norm = riccati.p_final.frobenius_norm();
            diagnostics.insert("dare_residual".into(), riccati.delta_norm);
            diagnostics.insert(
                "dare_residual_rel".into(),
                riccati.delta_norm / p_norm.max(1e-300),
            );
            diagnostics.insert("riccati_steps".into(), riccati.steps_run as f64);
            let trace = extended_iterate(&sys, &gain, &x0, steps, params.fp_tol)?;
            rho_diagnostic(&mut diagnostics, "rho_closed_loop", &closed_loop(&sys, &gain));
            finish_report(a, b, SolveMode::Lqr, trace, gain, params, steps, lqr.horizon, None, diagnostics)
        }
        SolveMode::LqrW => {
            let lqr = params.lqr.as_ref().expect("validated");
            let scaled = scale_system(&sys, params.w);
            if !check_output_rank(&scaled, &lqr.c, 1e-10) {
                diagnostics.insert("output_rank_ok".into(), 0.0);
            } else {
                diagnostics.insert("output_rank_ok".into(), 1.0);
            }
            let riccati = riccati_backward(&scaled, lqr)?;
            let gain = riccati.final_gain().clone();
            let p_norm = riccati.p_final.frobenius_norm();
            diagnostics.insert("dare_residual".into(), riccati.delta_norm);
            diagnostics.insert(
                "dare_residual_rel".into(),
                riccati.delta_norm / p_norm.max(1e-300),
            );
            diagnostics.insert("riccati_steps".into(), riccati.steps_run as f64);

            // the production loop closes (phi - h k') and adds the UNSCALED h;
            // the scaled variant is a compatibility map with a different
            // fixed point
            let iteration_matrix = if params.scaled_iteration {
                closed_loop(&scaled, &gain)
            } else {
                closed_loop(&sys, &gain)
            };
            let trace = run_iteration(&iteration_matrix, &sys.h, &x0, steps, params.fp_tol);
            if let IterationExit::Overflowed { at_step } = trace.exit {
                return Err(Error::Overflow { step: at_step });
            }
            rho_diagnostic(&mut diagnostics, "rho_closed_loop", &iteration_matrix);
            finish_report(
                a,
                b,
                SolveMode::LqrW,
                trace,
                gain,
                params,
                steps,
                lqr.horizon,
                Some(params.w),
                diagnostics,
            )
        }
    }
}

/// As `solve_with_trace`, discarding the trace.
pub fn solve(a: &DenseMatrix, b: &DenseVector, params: &SolveParams) -> Result<SolveReport> {
    solve_with_trace(a, b, params).map(|(report, _)| report)
}

fn deadbeat_gain(sys: &IterationSystem) -> Result<GainVector> {
    let n = sys.dim();
    match place_gain(sys, &EigenTuple::deadbeat(n)) {
        Ok(gain) => Ok(gain),
        Err(Error::NotControllable { rank, dim }) => {
            // an already-nilpotent phi needs no feedback at all
            let phi_n = sys.phi.power(n).frobenius_norm();
            if phi_n <= 1e-8 * sys.phi.frobenius_norm().powi(n as i32).max(1.0) {
                Ok(GainVector::zero(n))
            } else {
                Err(Error::NotControllable { rank, dim })
            }
        }
        Err(other) => Err(other),
    }
}

/// Deadbeat pipeline: place all closed-loop eigenvalues at zero and run
/// exactly n steps; the fixed point is then exact up to roundoff.
pub fn deadbeat_solve(a: &DenseMatrix, b: &DenseVector, x0: &DenseVector) -> Result<SolveReport> {
    let mut params = SolveParams::new(SolveMode::Deadbeat);
    params.x0 = Some(x0.clone());
    solve(a, b, &params)
}

/// The bounded-spectral-radius pipeline: synthesize the gain on the
/// (phi/w, h/w) system, then iterate phi - h k' on the original data. The
/// closed loop satisfies rho < w once the Riccati recursion has stagnated.
pub fn lqr_w_solve(a: &DenseMatrix, b: &DenseVector, params: &SolveParams) -> Result<SolveReport> {
    assert_eq!(params.mode, SolveMode::LqrW, "lqr_w_solve requires mode lqr-w");
    solve(a, b, params)
}
