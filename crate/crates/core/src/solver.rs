//! ADMM for masked matrix completion with the `R_h` relaxation:
//!
//! ```text
//! min_X  R_h(σ(X)) + γ ‖W ⊙ (X − M)‖²
//! ```
//!
//! The splitting keeps `X` for the spectral term and `Y` for the data term:
//!
//! ```text
//! X ← prox_Rh(Y − Λ, ρ)
//! Y ← (ρ (X + Λ) + γ W ⊙ M) / (ρ + γ W)
//! Λ ← Λ + X − Y
//! ```

use crate::envelope::eval_rh;
use crate::error::{check_same_shape, Error, Result};
use crate::linalg::{singular_values, DenseMatrix};
use crate::penalty::PenaltyWeights;
use crate::proximal::prox_rh_parts;

/// Measurements `m` and a 0/1 mask `w` of the same shape (1 = observed).
#[derive(Debug, Clone)]
pub struct MaskedObservations {
    m: DenseMatrix,
    w: DenseMatrix,
}

impl MaskedObservations {
    pub fn new(m: DenseMatrix, w: DenseMatrix) -> Result<Self> {
        check_same_shape(m.shape(), w.shape())?;
        if let Some(v) = w.iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::InvalidInput(format!(
                "mask entries must be 0 or 1, got {v}"
            )));
        }
        Ok(Self { m, w })
    }

    /// Every entry observed.
    pub fn full(m: DenseMatrix) -> Self {
        let (r, c) = m.shape();
        let w = DenseMatrix::from_nalgebra_unchecked(nalgebra::DMatrix::from_element(r, c, 1.0));
        Self { m, w }
    }

    pub fn measurements(&self) -> &DenseMatrix {
        &self.m
    }

    pub fn mask(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn shape(&self) -> (usize, usize) {
        self.m.shape()
    }

    /// `W ⊙ M`, unobserved entries set to zero.
    pub fn zero_filled(&self) -> DenseMatrix {
        self.m
            .hadamard(&self.w)
            .expect("shapes checked on construction")
    }

    /// `W ⊙ (x − M)`.
    pub fn masked_residual(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        x.sub(&self.m)?.hadamard(&self.w)
    }

    pub fn observed_count(&self) -> usize {
        self.w.iter().filter(|v| **v == 1.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    /// Penalty parameter; must exceed 1 so every `X` step is convex.
    pub rho: f64,
    pub max_iters: usize,
    /// Stop once `‖X − Y‖_F` falls to this level.
    pub primal_tol: f64,
    /// Stop once the relative objective change over the last
    /// [`STALL_WINDOW`] iterations falls to this level.
    pub rel_obj_tol: f64,
    /// Scale `γ` of the data term. Values below 1 make the sampling operator a
    /// strict contraction.
    pub data_scale: f64,
}

/// Iterations over which the relative objective change is measured.
pub const STALL_WINDOW: usize = 10;

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 1.5,
            max_iters: 2000,
            primal_tol: 1e-6,
            rel_obj_tol: 1e-10,
            data_scale: 1.0,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!(
                "rho must be greater than 1, got {}",
                self.rho
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if self.primal_tol.is_nan()
            || self.primal_tol <= 0.0
            || self.rel_obj_tol.is_nan()
            || self.rel_obj_tol <= 0.0
        {
            return Err(Error::Config(format!(
                "tolerances must be positive, got primal {} and relative {}",
                self.primal_tol, self.rel_obj_tol
            )));
        }
        if !(self.data_scale > 0.0 && self.data_scale <= 1.0) {
            return Err(Error::Config(format!(
                "data_scale must lie in (0, 1], got {}",
                self.data_scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    PrimalResidual,
    ObjectiveStall,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct AdmmDiagnostics {
    pub iterations: usize,
    /// `R_h(σ(X_t)) + γ‖W ⊙ (X_t − M)‖²` after each iteration.
    pub objective_trace: Vec<f64>,
    /// `‖X_t − Y_t‖_F` after each iteration.
    pub primal_residual_trace: Vec<f64>,
    pub stop_reason: StopReason,
    /// Whether the final primal residual is within `primal_tol`.
    pub converged: bool,
}

/// Elementwise minimizer of `ρ‖t − y‖² + ‖W ⊙ (y − M)‖²`.
pub fn data_update(t: &DenseMatrix, obs: &MaskedObservations, rho: f64) -> Result<DenseMatrix> {
    scaled_data_update(t, obs, rho, 1.0)
}

fn scaled_data_update(
    t: &DenseMatrix,
    obs: &MaskedObservations,
    rho: f64,
    gamma: f64,
) -> Result<DenseMatrix> {
    check_same_shape(obs.shape(), t.shape())?;
    let t = t.as_nalgebra();
    let mut y = t.clone();
    for ((y, &w), &m) in y
        .iter_mut()
        .zip(obs.w.as_nalgebra().iter())
        .zip(obs.m.as_nalgebra().iter())
    {
        if w != 0.0 {
            *y = (rho * *y + gamma * w * m) / (rho + gamma * w);
        }
    }
    DenseMatrix::from_nalgebra(y)
}

/// `R_h(σ(x)) + ‖W ⊙ (x − M)‖²`.
pub fn solve_objective(
    x: &DenseMatrix,
    obs: &MaskedObservations,
    w: &PenaltyWeights,
) -> Result<f64> {
    scaled_objective(x, obs, w, 1.0)
}

fn scaled_objective(
    x: &DenseMatrix,
    obs: &MaskedObservations,
    w: &PenaltyWeights,
    gamma: f64,
) -> Result<f64> {
    let rh = eval_rh(singular_values(x)?.values(), w)?;
    Ok(rh + gamma * obs.masked_residual(x)?.frobenius_norm_sq())
}

/// Runs ADMM from `X = Y = Λ = 0` and returns the data-side iterate `Y`.
pub fn admm_complete(
    obs: &MaskedObservations,
    w: &PenaltyWeights,
    cfg: &AdmmConfig,
) -> Result<(DenseMatrix, AdmmDiagnostics)> {
    cfg.validate()?;
    let (rows, cols) = obs.shape();
    w.check_len(rows.min(cols))?;
    let gamma = cfg.data_scale;

    let mut y = DenseMatrix::zeros(rows, cols);
    let mut lambda = DenseMatrix::zeros(rows, cols);
    let mut objective_trace = Vec::new();
    let mut primal_residual_trace = Vec::new();
    let mut stop_reason = StopReason::MaxIterations;

    for iter in 0..cfg.max_iters {
        let step = prox_rh_parts(&y.sub(&lambda)?, w, cfg.rho)?;
        let x = step.x;
        let x_plus_lambda = x.add(&lambda)?;
        y = scaled_data_update(&x_plus_lambda, obs, cfg.rho, gamma)?;
        let residual = x.sub(&y)?;
        lambda = lambda.add(&residual)?;

        let objective = eval_rh(step.spectrum.values(), w)?
            + gamma * obs.masked_residual(&x)?.frobenius_norm_sq();
        let primal = residual.frobenius_norm();
        objective_trace.push(objective);
        primal_residual_trace.push(primal);

        if primal <= cfg.primal_tol {
            stop_reason = StopReason::PrimalResidual;
            break;
        }
        if iter >= STALL_WINDOW {
            let past = objective_trace[iter - STALL_WINDOW];
            let change = (objective - past).abs() / past.abs().max(f64::MIN_POSITIVE);
            if change <= cfg.rel_obj_tol {
                stop_reason = StopReason::ObjectiveStall;
                break;
            }
        }
    }

    let iterations = objective_trace.len();
    let converged = primal_residual_trace
        .last()
        .is_some_and(|&r| r <= cfg.primal_tol);
    Ok((
        y,
        AdmmDiagnostics {
            iterations,
            objective_trace,
            primal_residual_trace,
            stop_reason,
            converged,
        },
    ))
}
