//! Delayed two-player antagonistic games.
//!
//! Two players are attacked by independent Poisson streams of rates `lambda`
//! (casualties to A) and `mu` (casualties to B). The state of the game is only
//! observed at the epochs of a renewal process; the game ends at the first
//! observation where A's cumulative casualties reach `M` or B's reach `N`.
//!
//! The crate evaluates the joint transform
//! `E[u^{A_rho} v^{B_rho} exp(-theta tau_rho)]` along two independent analytic
//! routes (a closed form and a truncated-series operator pipeline), inverts
//! its marginals into distributions, and simulates the game to cross-check
//! every analytic result.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inversion;
pub mod model;
pub mod series;
pub mod sim;
pub mod stats;
pub mod transforms;
pub mod validation;

pub use error::{GameError, Result};
pub use model::{
    exit_indices, DeltaLaw, ExitIndices, GameParams, PathOutcome, RawDeltaLaw, RawParams,
    TransformQuery,
};
pub use num_complex::Complex64;
