//! Separable concave maximization over the monotone cone `s_1 ≥ … ≥ s_k ≥ 0`.
//!
//! Both the envelope and the proximal map reduce to maximizing
//!
//! ```text
//! Σ_i  s_i² − κ (s_i − d_i)² − [ ([s_i − a_i]_+)² − b_i ]_+
//! ```
//!
//! with `κ = 1` for the envelope and `κ = (ρ+1)/ρ` for the proximal map. Each
//! term is concave and quadratic on either side of its knot `a_i + √b_i`, so a
//! block of indices sharing one value can be solved exactly by walking the
//! knots. Adjacent blocks that violate the ordering are pooled until none do.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::penalty::PenaltyWeights;

/// Optimal common value for a contiguous block of indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSolve {
    pub index_range: RangeInclusive<usize>,
    pub argmax: f64,
    pub value: f64,
}

/// Pooled solution plus the objective after each pooling step.
#[derive(Debug, Clone)]
pub struct BlockSolution {
    pub values: Vec<f64>,
    pub blocks: Vec<SegmentSolve>,
    /// Objective of the partially constrained problem: entry 0 is the sum of
    /// the per-index maxima, each later entry follows one more pooling.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SpectralProblem<'a> {
    data: &'a [f64],
    weights: &'a PenaltyWeights,
    kappa: f64,
    /// Stand-in for `+∞` when a block has no finite maximizer.
    cap: f64,
}

impl<'a> SpectralProblem<'a> {
    pub(crate) fn new(data: &'a [f64], weights: &'a PenaltyWeights, kappa: f64) -> Result<Self> {
        weights.check_len(data.len())?;
        if let Some(d) = data.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "singular values must be finite and non-negative, got {d}"
            )));
        }
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "curvature must be at least 1, got {kappa}"
            )));
        }
        let k = data.len() as f64;
        let a_max = weights.a().iter().copied().fold(0.0, f64::max);
        let d_max = data.iter().copied().fold(0.0, f64::max);
        let sqrt_b_max = weights
            .b()
            .iter()
            .filter(|b| b.is_finite())
            .map(|b| b.sqrt())
            .fold(0.0, f64::max);
        let cap = 10.0 * (k * (a_max + d_max) + sqrt_b_max) + 1.0;
        Ok(Self {
            data,
            weights,
            kappa,
            cap,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.data.len()
    }

    pub(crate) fn cap(&self) -> f64 {
        self.cap
    }

    fn knot(&self, i: usize) -> f64 {
        self.weights.a()[i] + self.weights.b()[i].sqrt()
    }

    pub(crate) fn term(&self, i: usize, s: f64) -> f64 {
        let d = self.data[i];
        let a = self.weights.a()[i];
        let b = self.weights.b()[i];
        let p = (s - a).max(0.0);
        let hinge = (p * p - b).max(0.0);
        (1.0 - self.kappa) * s * s + self.kappa * d * (2.0 * s - d) - hinge
    }

    pub(crate) fn block_value(&self, block: &RangeInclusive<usize>, s: f64) -> f64 {
        block.clone().map(|i| self.term(i, s)).sum()
    }

    pub(crate) fn objective(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(i, &s)| self.term(i, s))
            .sum()
    }

    /// Exact maximizer of the block objective over `[lo, hi]`.
    ///
    /// Flat pieces resolve to their left endpoint.
    pub(crate) fn segment_max(
        &self,
        block: RangeInclusive<usize>,
        lo: f64,
        hi: f64,
    ) -> Result<SegmentSolve> {
        if block.is_empty() || *block.end() >= self.len() {
            return Err(Error::InvalidInput(format!(
                "block {block:?} is empty or outside 0..{}",
                self.len()
            )));
        }
        if !(lo >= 0.0 && lo <= hi) || lo.is_infinite() || hi.is_nan() {
            return Err(Error::InvalidInput(format!("invalid bounds [{lo}, {hi}]")));
        }

        let mut knots: Vec<f64> = block
            .clone()
            .map(|i| self.knot(i))
            .filter(|&t| t > lo && t < hi)
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let n = block.clone().count() as f64;
        let base_linear: f64 = block.clone().map(|i| 2.0 * self.kappa * self.data[i]).sum();
        let base_quad = n * (1.0 - self.kappa);
        let a_max = block
            .clone()
            .map(|i| self.weights.a()[i])
            .fold(0.0, f64::max);

        let mut best_s = lo;
        let mut best_v = self.block_value(&block, lo);
        let consider = |s: f64, best_s: &mut f64, best_v: &mut f64| {
            let v = self.block_value(&block, s);
            if v > *best_v {
                *best_s = s;
                *best_v = v;
            }
        };

        let mut left = lo;
        for right in knots.iter().copied().chain(std::iter::once(hi)) {
            // On (left, right) the hinge is live exactly for knots at or left of `left`.
            let mut quad = base_quad;
            let mut linear = base_linear;
            for i in block.clone() {
                if self.knot(i) <= left {
                    quad -= 1.0;
                    linear += 2.0 * self.weights.a()[i];
                }
            }
            let candidate = if quad < 0.0 {
                (-linear / (2.0 * quad)).clamp(left, right)
            } else if linear > 0.0 {
                if right.is_finite() {
                    right
                } else {
                    left.max(self.cap + a_max)
                }
            } else {
                left
            };
            consider(candidate, &mut best_s, &mut best_v);
            if right.is_finite() {
                consider(right, &mut best_s, &mut best_v);
            }
            left = right;
        }

        Ok(SegmentSolve {
            index_range: block,
            argmax: best_s,
            value: best_v,
        })
    }

    /// Pools adjacent violators until the block values are non-increasing.
    pub(crate) fn solve(&self) -> Result<BlockSolution> {
        let k = self.len();
        let singles: Vec<SegmentSolve> = (0..k)
            .map(|i| self.segment_max(i..=i, 0.0, f64::INFINITY))
            .collect::<Result<_>>()?;
        let mut total: f64 = singles.iter().map(|s| s.value).sum();
        let mut trace = vec![total];

        let mut stack: Vec<SegmentSolve> = Vec::with_capacity(k);
        for single in singles {
            stack.push(single);
            while stack.len() >= 2 && stack[stack.len() - 2].argmax < stack[stack.len() - 1].argmax
            {
                let right = stack.pop().expect("len >= 2");
                let left = stack.pop().expect("len >= 2");
                let merged = self.segment_max(
                    *left.index_range.start()..=*right.index_range.end(),
                    0.0,
                    f64::INFINITY,
                )?;
                total += merged.value - left.value - right.value;
                trace.push(total);
                stack.push(merged);
            }
        }

        let mut values = vec![0.0; k];
        for block in &stack {
            for i in block.index_range.clone() {
                values[i] = block.argmax;
            }
        }
        Ok(BlockSolution {
            values,
            blocks: stack,
            objective_trace: trace,
        })
    }
}
