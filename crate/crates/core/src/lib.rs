//! Low-rank inducing penalties that combine a weighted nuclear norm with
//! per-index rank jumps, their quadratic envelope, its proximal operator and
//! an ADMM solver for masked matrix completion.
//!
//! The penalty charges each non-zero singular value `σ_i` the amount
//! `2·a_i·σ_i + b_i` with non-decreasing `a` and `b`. Special cases include
//! the nuclear norm, weighted nuclear norms, `μ·rank` and hard rank limits.

pub mod bench;
pub mod envelope;
pub mod error;
pub mod linalg;
mod monotone;
pub mod penalty;
pub mod proximal;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{compose, svd, DenseMatrix, SvdFactors};
pub use penalty::{PenaltyWeights, Preset, Spectrum};
