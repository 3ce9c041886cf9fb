//! Discriminatory price-weight iteration and fixed-point diagnostics.
//!
//! The trading center assigns every player a personal multiplicative weight on
//! the clearing-price estimate. Weights are updated by relaxation toward the
//! equilibrium profile implied by the converged allocation, then clamped to a
//! positive floor and L1-normalized so each side's weights sum to one.

use serde::{Deserialize, Serialize};

use crate::flow::Side;

/// Positive floor applied to every weight before normalization.
pub const WEIGHT_FLOOR: f64 = 1e-8;

/// One side's price-weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceWeights {
    pub values: Vec<f64>,
    pub side: Side,
}

impl PriceWeights {
    /// Uniform normalized weights, the standard starting point (and the Kelly
    /// baseline's frozen profile).
    pub fn uniform(count: usize, side: Side) -> Self {
        PriceWeights {
            values: vec![1.0 / count as f64; count],
            side,
        }
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Clamp every entry to the positive floor, then rescale to unit L1 norm.
    /// Rescaling can push an entry back under the floor, so the pair of steps
    /// is iterated to its fixed point, which makes normalization idempotent.
    pub fn normalize(&mut self) {
        for _ in 0..32 {
            let mut clamped = false;
            for v in &mut self.values {
                if *v < WEIGHT_FLOOR {
                    *v = WEIGHT_FLOOR;
                    clamped = true;
                }
            }
            let norm = self.l1();
            let mut rescaled = false;
            if norm != 1.0 {
                for v in &mut self.values {
                    *v /= norm;
                }
                rescaled = true;
            }
            if !clamped && !rescaled {
                break;
            }
        }
    }

    /// L1 distance to another weight vector.
    pub fn distance(&self, other: &PriceWeights) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Relaxation step for the demand-side weights given a converged allocation.
///
/// `p'_i = p_i + delta * [ (S - d_i)/(I-1) - p_i * S / |p|_1 ]`, followed by
/// the floor-clamp and L1 normalization. With normalized input this is a move
/// of length `delta * S` toward the profile `p*_i = (S - d_i) / ((I-1) S)`.
pub fn update_demand_weights(
    p: &PriceWeights,
    d: &[f64],
    total_supply: f64,
    delta: f64,
) -> PriceWeights {
    let count = d.len() as f64;
    let norm = p.l1();
    let mut next = p.clone();
    for (i, v) in next.values.iter_mut().enumerate() {
        let bracket = (total_supply - d[i]) / (count - 1.0) - *v * total_supply / norm;
        *v += delta * bracket;
    }
    next.normalize();
    next
}

/// Relaxation step for the supply-side weights given a converged allocation.
///
/// `q'_j = q_j + delta * [ ((J-2) D + s_j)/(J-1)^2 - q_j * D / |q|_1 ]`,
/// followed by the floor-clamp and L1 normalization.
pub fn update_supply_weights(
    q: &PriceWeights,
    s: &[f64],
    total_demand: f64,
    delta: f64,
) -> PriceWeights {
    let count = s.len() as f64;
    let norm = q.l1();
    let mut next = q.clone();
    for (j, v) in next.values.iter_mut().enumerate() {
        let bracket = ((count - 2.0) * total_demand + s[j]) / ((count - 1.0) * (count - 1.0))
            - *v * total_demand / norm;
        *v += delta * bracket;
    }
    next.normalize();
    next
}

/// Distance of normalized weights from the equilibrium profile implied by the
/// allocation. A zero vector means the weights are a fixed point of the
/// relaxation updates above.
pub fn weight_fixed_point_residual(
    weights: &PriceWeights,
    allocation: &[f64],
    total_opposite: f64,
) -> Vec<f64> {
    let count = allocation.len() as f64;
    let norm = weights.l1();
    weights
        .values
        .iter()
        .zip(allocation)
        .map(|(w, a)| {
            let target = match weights.side {
                Side::Demand => (total_opposite - a) / ((count - 1.0) * total_opposite),
                Side::Supply => {
                    ((count - 2.0) * total_opposite + a)
                        / ((count - 1.0) * (count - 1.0) * total_opposite)
                }
            };
            w / norm - target
        })
        .collect()
}

/// Step-size controller for the weight loop: halves the step after three
/// consecutive direction reversals of the update, a cheap oscillation guard.
#[derive(Debug, Clone)]
pub struct StepController {
    pub delta: f64,
    flips: usize,
    last_update: Option<Vec<f64>>,
}

impl StepController {
    pub fn new(delta: f64) -> Self {
        StepController {
            delta,
            flips: 0,
            last_update: None,
        }
    }

    /// Record the latest update direction (`next - prev`) and adapt the step.
    pub fn observe(&mut self, prev: &PriceWeights, next: &PriceWeights) {
        let update: Vec<f64> = next
            .values
            .iter()
            .zip(&prev.values)
            .map(|(n, p)| n - p)
            .collect();
        if let Some(last) = &self.last_update {
            let dot: f64 = last.iter().zip(&update).map(|(a, b)| a * b).sum();
            if dot < 0.0 {
                self.flips += 1;
                if self.flips >= 3 {
                    self.delta *= 0.5;
                    self.flips = 0;
                }
            } else {
                self.flips = 0;
            }
        }
        self.last_update = Some(update);
    }
}
