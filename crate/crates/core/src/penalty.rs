//! The `(a, b)` penalty model.
//!
//! Each non-zero singular value `σ_i` is charged `2·a_i·σ_i + b_i`: the `a`
//! part is a weighted nuclear norm, the `b` part a per-index rank jump.
//! A zero singular value costs nothing. `b_i = +∞` forbids index `i` from
//! being non-zero, which is how hard rank constraints are expressed.

use crate::error::{Error, Result};

/// Default `ε` guarding the inverse-singular-value weight heuristic.
pub const DEFAULT_EPS: f64 = 1e-6;

/// A non-increasing, non-negative vector of singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "singular values must be finite and non-negative, got {v}"
            )));
        }
        if let Some(w) = values.windows(2).find(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(format!(
                "singular values must be non-increasing, got {} before {}",
                w[0], w[1]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest value, or zero for an empty spectrum.
    pub fn max(&self) -> f64 {
        self.0.first().copied().unwrap_or(0.0)
    }
}

/// Validated `(a, b)` sequences.
///
/// Both are non-decreasing and non-negative; `a` is finite, `b` may hold `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyWeights {
    a: Vec<f64>,
    b: Vec<f64>,
}

fn check_sequence(name: &str, values: &[f64], allow_inf: bool) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        let ok = if allow_inf {
            !v.is_nan() && v >= 0.0
        } else {
            v.is_finite() && v >= 0.0
        };
        if !ok {
            return Err(Error::InvalidWeights(format!("{name}[{i}] = {v}")));
        }
    }
    if let Some(i) = (1..values.len()).find(|&i| values[i] < values[i - 1]) {
        return Err(Error::InvalidWeights(format!(
            "{name} must be non-decreasing: {name}[{}] = {} > {name}[{i}] = {}",
            i - 1,
            values[i - 1],
            values[i]
        )));
    }
    Ok(())
}

impl PenaltyWeights {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidWeights(format!(
                "a has {} entries but b has {}",
                a.len(),
                b.len()
            )));
        }
        check_sequence("a", &a, false)?;
        check_sequence("b", &b, true)?;
        Ok(Self { a, b })
    }

    /// All-zero weights: `h ≡ 0`.
    pub fn zeros(k: usize) -> Self {
        Self {
            a: vec![0.0; k],
            b: vec![0.0; k],
        }
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `(a_i, b_i)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.a.iter().copied().zip(self.b.iter().copied())
    }

    /// Weights scaled as `a → c·a`, `b → c²·b`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.a.iter().map(|a| a * c).collect(),
            self.b.iter().map(|b| b * c * c).collect(),
        )
    }

    pub(crate) fn check_len(&self, k: usize) -> Result<()> {
        if self.len() != k {
            return Err(Error::InvalidInput(format!(
                "weights have length {} but the spectrum has {k} values",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Evaluates `h(s) = Σ_{s_i ≠ 0} 2·a_i·s_i + b_i`.
pub fn eval_h(s: &Spectrum, w: &PenaltyWeights) -> Result<f64> {
    w.check_len(s.len())?;
    Ok(s.values()
        .iter()
        .zip(w.iter())
        .filter(|(&s, _)| s != 0.0)
        .map(|(&s, (a, b))| 2.0 * a * s + b)
        .sum())
}

/// Minimizer of `h(σ(X)) + ‖X − X0‖²` on the spectrum of `X0`.
///
/// Index `i` keeps `σ0_i − a_i` when that is at least `√b_i` and is zeroed
/// otherwise. At equality the non-zero branch is taken.
pub fn shrink_spectrum(s0: &Spectrum, w: &PenaltyWeights) -> Result<Spectrum> {
    w.check_len(s0.len())?;
    let values = s0
        .values()
        .iter()
        .zip(w.iter())
        .map(|(&s, (a, b))| {
            let shifted = s - a;
            if shifted >= b.sqrt() && shifted > 0.0 {
                shifted
            } else {
                0.0
            }
        })
        .collect();
    Spectrum::new(values)
}

/// `w_i = c / (s0_i + eps)`; non-decreasing because `s0` is non-increasing.
pub fn heuristic_weights(s0: &Spectrum, c: f64, eps: f64) -> Result<Vec<f64>> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput(format!("c must be positive, got {c}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "eps must be positive, got {eps}"
        )));
    }
    Ok(s0.values().iter().map(|s| c / (s + eps)).collect())
}

/// Weights used for the synthetic completion study:
/// `a_i = √μ / (σ_i + ε)` and `b_i = μ / (σ_i + ε)`.
pub fn inverse_spectrum_weights(s0: &Spectrum, mu: f64, eps: f64) -> Result<PenaltyWeights> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "mu must be positive, got {mu}"
        )));
    }
    let a = heuristic_weights(s0, mu.sqrt(), eps)?;
    let b = heuristic_weights(s0, mu, eps)?;
    PenaltyWeights::new(a, b)
}

/// Classical regularizers expressed as `(a, b)` weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `μ‖X‖_*`
    Nuclear { mu: f64 },
    /// `Σ w_i σ_i` with non-decreasing `w`.
    Wnnm { weights: Vec<f64> },
    /// `μ·rank(X)`
    Rmu { mu: f64 },
    /// `rank(X) ≤ r`
    HardRank { rank: usize },
}

impl Preset {
    pub fn weights(&self, k: usize) -> Result<PenaltyWeights> {
        let check_mu = |mu: f64| {
            if mu >= 0.0 && mu.is_finite() {
                Ok(mu)
            } else {
                Err(Error::InvalidWeights(format!(
                    "mu must be non-negative, got {mu}"
                )))
            }
        };
        match self {
            Preset::Nuclear { mu } => {
                let mu = check_mu(*mu)?;
                PenaltyWeights::new(vec![mu / 2.0; k], vec![0.0; k])
            }
            Preset::Wnnm { weights } => {
                if weights.len() != k {
                    return Err(Error::InvalidWeights(format!(
                        "expected {k} wnnm weights, got {}",
                        weights.len()
                    )));
                }
                PenaltyWeights::new(weights.iter().map(|w| w / 2.0).collect(), vec![0.0; k])
            }
            Preset::Rmu { mu } => {
                let mu = check_mu(*mu)?;
                PenaltyWeights::new(vec![0.0; k], vec![mu; k])
            }
            Preset::HardRank { rank } => {
                let b = (0..k)
                    .map(|i| if i < *rank { 0.0 } else { f64::INFINITY })
                    .collect();
                PenaltyWeights::new(vec![0.0; k], b)
            }
        }
    }
}
