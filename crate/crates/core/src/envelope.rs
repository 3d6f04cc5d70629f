//! The quadratic envelope `R_h` and the convex envelope of `h + ‖· − X0‖²`.
//!
//! `R_h(X)` is a concave maximization over the singular values of an
//! auxiliary matrix `Z`:
//!
//! ```text
//! R_h(X) = max_{σ(Z)}  Σ_i min(b_i, [σ_i(Z) − a_i]_+²) + σ_i(Z)²
//!                         − (σ_i(X) − σ_i(Z))² − [σ_i(Z) − a_i]_+²
//! ```
//!
//! The maximizing sequence is found by starting from the per-index maximizers
//! `a_i + max(√b_i, σ_i(X))` and pooling adjacent indices whose values break
//! the ordering; each pooled block carries a single value.
//!
//! An index with `b_i = +∞` is never charged by the `min` term. When that
//! leaves a block unbounded above, the block value is replaced by a large
//! finite cap that exceeds every bounded block optimum.

use crate::error::{check_same_shape, Result};
use crate::linalg::{singular_values, DenseMatrix};
use crate::monotone::SpectralProblem;
use crate::penalty::{PenaltyWeights, Spectrum};

pub use crate::monotone::{BlockSolution, SegmentSolve};

/// Per-index maximizers `a_i + max(√b_i, σ_i)` ignoring the ordering.
pub fn unconstrained_maximizers(sx: &[f64], w: &PenaltyWeights) -> Result<Vec<f64>> {
    let problem = SpectralProblem::new(sx, w, 1.0)?;
    Ok(sx
        .iter()
        .zip(w.iter())
        .map(|(&s, (a, b))| {
            let root = if b.is_finite() {
                b.sqrt()
            } else {
                problem.cap()
            };
            a + root.max(s)
        })
        .collect())
}

/// Maximizes the envelope objective of a contiguous block held at one value
/// `s ∈ [lo, hi]`.
pub fn segment_max(
    block: std::ops::RangeInclusive<usize>,
    lo: f64,
    hi: f64,
    sx: &[f64],
    w: &PenaltyWeights,
) -> Result<SegmentSolve> {
    SpectralProblem::new(sx, w, 1.0)?.segment_max(block, lo, hi)
}

/// The envelope objective `Σ_i f_i(z_i)` at an arbitrary candidate `z`.
pub fn envelope_objective(z: &[f64], sx: &[f64], w: &PenaltyWeights) -> Result<f64> {
    let problem = SpectralProblem::new(sx, w, 1.0)?;
    w.check_len(z.len())?;
    Ok(problem.objective(z))
}

/// Maximizing sequence together with its block structure and pooling trace.
pub fn maximizing_sequence(sx: &[f64], w: &PenaltyWeights) -> Result<BlockSolution> {
    SpectralProblem::new(sx, w, 1.0)?.solve()
}

/// The singular values of the maximizing `Z` for `R_h(X)`.
pub fn maximizing_spectrum(sx: &[f64], w: &PenaltyWeights) -> Result<Spectrum> {
    Spectrum::new(maximizing_sequence(sx, w)?.values)
}

/// `R_h` evaluated on a spectrum.
pub fn eval_rh(sx: &[f64], w: &PenaltyWeights) -> Result<f64> {
    let problem = SpectralProblem::new(sx, w, 1.0)?;
    let solution = problem.solve()?;
    Ok(problem.objective(&solution.values))
}

/// `R_h(σ(x))`.
pub fn eval_rh_matrix(x: &DenseMatrix, w: &PenaltyWeights) -> Result<f64> {
    eval_rh(singular_values(x)?.values(), w)
}

/// The convex envelope `R_h(X) + ‖X − X0‖²`.
pub fn eval_envelope(x: &DenseMatrix, x0: &DenseMatrix, w: &PenaltyWeights) -> Result<f64> {
    check_same_shape(x0.shape(), x.shape())?;
    Ok(eval_rh_matrix(x, w)? + x.sub(x0)?.frobenius_norm_sq())
}

/// The unrelaxed objective `h(σ(X)) + ‖X − X0‖²`.
pub fn eval_unrelaxed(x: &DenseMatrix, x0: &DenseMatrix, w: &PenaltyWeights) -> Result<f64> {
    check_same_shape(x0.shape(), x.shape())?;
    Ok(crate::penalty::eval_h(&singular_values(x)?, w)? + x.sub(x0)?.frobenius_norm_sq())
}

/// Fenchel conjugate of `h(σ(·)) + ‖· − X0‖²` at `y`.
///
/// With `Z = y/2 + x0` this is
/// `Σ [σ_i(Z) − a_i]_+² − ‖x0‖² − Σ min(b_i, [σ_i(Z) − a_i]_+²)`.
pub fn fenchel_conjugate(y: &DenseMatrix, x0: &DenseMatrix, w: &PenaltyWeights) -> Result<f64> {
    check_same_shape(x0.shape(), y.shape())?;
    let z = y.lin_comb(0.5, x0, 1.0)?;
    let sz = singular_values(&z)?;
    w.check_len(sz.len())?;
    let excess: f64 = sz
        .values()
        .iter()
        .zip(w.iter())
        .map(|(&s, (a, b))| {
            let p = (s - a).max(0.0);
            let p2 = p * p;
            p2 - b.min(p2)
        })
        .sum();
    Ok(excess - x0.frobenius_norm_sq())
}
