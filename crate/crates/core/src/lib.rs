//! Stationary iterative solution of dense linear systems with forced
//! convergence.
//!
//! The classical Jacobi iteration x_{m+1} = phi x_m + h converges only when
//! the spectral radius of phi is below one. This crate closes a rank-one
//! feedback loop around the iteration,
//!
//! ```text
//! x~_{m+1} = (phi - h k') x~_m + h,
//! ```
//!
//! and synthesizes k so that the closed loop contracts regardless of the
//! open-loop spectrum:
//!
//! * [`placement`] places the closed-loop eigenvalues anywhere, including all
//!   at zero (deadbeat), where the fixed point is reached exactly after n
//!   steps;
//! * [`riccati`] produces a stabilizing gain from the backward matrix Riccati
//!   recursion alone — no eigenvalue computation anywhere;
//! * [`solver`] adds w-scaling, which bounds the closed-loop spectral radius
//!   by a chosen w, and recovers the solution of A x = b from the shifted
//!   fixed point by the scalar back-transform x = x~ / (1 - k'x~).
//!
//! Everything runs on the small dense kernel in [`matrix`] and [`linalg`];
//! there are no external numerical dependencies.

pub mod error;
pub mod jacobi;
pub mod linalg;
pub mod matrix;
pub mod placement;
pub mod riccati;
pub mod solver;

pub use error::{Error, Result};
pub use jacobi::{build_iteration, classic_iterate, jacobi_split, IterationSystem, IterationTrace, JacobiSplit};
pub use linalg::{
    lu_solve, lu_solve_matrix, rank_estimate, spectral_radius_estimate, LuFactors,
    SpectralRadiusEstimate, DEFAULT_RANK_TOL,
};
pub use matrix::{DenseMatrix, DenseVector};
pub use placement::{
    characteristic_polynomial, closed_loop, controllability_matrix, is_controllable, place_gain,
    verify_placement, EigenTuple, GainVector,
};
pub use riccati::{
    build_q, check_output_rank, cost_evaluate, dare_residual, gain_from_p, riccati_backward,
    riccati_step, CostEvaluation, LqrParams, RiccatiTrace,
};
pub use solver::{
    back_transform, deadbeat_solve, extended_iterate, lqr_w_solve, residual, scale_system, solve,
    solve_with_trace, SolveMode, SolveParams, SolveReport,
};
