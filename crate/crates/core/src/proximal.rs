//! Proximal maps of the convex envelope and of `R_h` alone.
//!
//! `argmin_X R_h(X) + ‖X − X0‖² + ρ‖X − M‖²` is a convex-concave saddle point
//! problem. Eliminating `X` leaves a maximization over `σ(Z)` with data
//! `Y = (X0 + ρM)/(1 + ρ)`; the minimizer is then `X = ((ρ+1)Y − Z)/ρ` with
//! `Z` sharing the singular vectors of `Y`.

use crate::error::{check_same_shape, Error, Result};
use crate::linalg::{compose_values, svd, DenseMatrix};
use crate::monotone::SpectralProblem;
use crate::penalty::{PenaltyWeights, Spectrum};

fn check_rho(rho: f64) -> Result<f64> {
    if rho > 0.0 && rho.is_finite() {
        Ok(rho)
    } else {
        Err(Error::InvalidInput(format!(
            "rho must be positive, got {rho}"
        )))
    }
}

fn curvature(rho: f64) -> f64 {
    (rho + 1.0) / rho
}

/// Per-index maximizers of the proximal objective, ignoring the ordering.
pub fn prox_unconstrained(sy: &[f64], w: &PenaltyWeights, rho: f64) -> Result<Vec<f64>> {
    let rho = check_rho(rho)?;
    w.check_len(sy.len())?;
    Ok(sy
        .iter()
        .zip(w.iter())
        .map(|(&y, (a, b))| {
            let root = b.sqrt();
            if a / (rho + 1.0) + root < y {
                a * rho / (rho + 1.0) + y
            } else if (a + root) / (1.0 + rho) <= y {
                a + root
            } else {
                (1.0 + rho) * y
            }
        })
        .collect())
}

/// The proximal objective `Σ_i q_i(z_i)` at an arbitrary candidate `z`.
pub fn prox_objective_spectral(z: &[f64], sy: &[f64], w: &PenaltyWeights, rho: f64) -> Result<f64> {
    let problem = SpectralProblem::new(sy, w, curvature(check_rho(rho)?))?;
    w.check_len(z.len())?;
    Ok(problem.objective(z))
}

/// Maximizing `σ(Z)` of the proximal subproblem over the monotone cone.
pub fn prox_spectrum(sy: &[f64], w: &PenaltyWeights, rho: f64) -> Result<Spectrum> {
    let problem = SpectralProblem::new(sy, w, curvature(check_rho(rho)?))?;
    Spectrum::new(problem.solve()?.values)
}

/// Minimizer of the proximal objective together with its singular values.
#[derive(Debug, Clone)]
pub struct ProxOutput {
    pub x: DenseMatrix,
    pub spectrum: Spectrum,
}

pub(crate) fn prox_envelope_parts(
    m: &DenseMatrix,
    x0: &DenseMatrix,
    w: &PenaltyWeights,
    rho: f64,
) -> Result<ProxOutput> {
    let rho = check_rho(rho)?;
    check_same_shape(m.shape(), x0.shape())?;
    let y = x0.lin_comb(1.0 / (1.0 + rho), m, rho / (1.0 + rho))?;
    let factors = svd(&y)?;
    let sy = factors.spectrum.values();
    let sz = prox_spectrum(sy, w, rho)?;
    let sx: Vec<f64> = sy
        .iter()
        .zip(sz.values())
        .map(|(&y, &z)| ((rho + 1.0) * y - z) / rho)
        .collect();
    let x = compose_values(&factors.u, &sx, &factors.v)?;
    let mut abs: Vec<f64> = sx.iter().map(|s| s.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    Ok(ProxOutput {
        x,
        spectrum: Spectrum::new(abs)?,
    })
}

/// `argmin_X R_h(X) + ‖X − x0‖² + ρ‖X − m‖²`.
pub fn prox_envelope(
    m: &DenseMatrix,
    x0: &DenseMatrix,
    w: &PenaltyWeights,
    rho: f64,
) -> Result<DenseMatrix> {
    Ok(prox_envelope_parts(m, x0, w, rho)?.x)
}

/// The objective minimized by [`prox_envelope`].
pub fn prox_envelope_objective(
    x: &DenseMatrix,
    m: &DenseMatrix,
    x0: &DenseMatrix,
    w: &PenaltyWeights,
    rho: f64,
) -> Result<f64> {
    check_same_shape(m.shape(), x.shape())?;
    Ok(crate::envelope::eval_envelope(x, x0, w)? + rho * x.sub(m)?.frobenius_norm_sq())
}

fn check_tau(tau: f64) -> Result<f64> {
    if tau > 1.0 && tau.is_finite() {
        Ok(tau)
    } else {
        Err(Error::InvalidStrength(tau))
    }
}

pub(crate) fn prox_rh_parts(n: &DenseMatrix, w: &PenaltyWeights, tau: f64) -> Result<ProxOutput> {
    let tau = check_tau(tau)?;
    prox_envelope_parts(n, n, w, tau - 1.0)
}

/// `argmin_X R_h(X) + τ‖X − n‖²` for `τ > 1`.
pub fn prox_rh(n: &DenseMatrix, w: &PenaltyWeights, tau: f64) -> Result<DenseMatrix> {
    Ok(prox_rh_parts(n, w, tau)?.x)
}
