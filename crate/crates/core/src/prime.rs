//! Prime-joint masks, part-level coverage, and density-weighted masking plans.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::JointLayout;

pub const DEFAULT_BETA: f64 = 0.65;
pub const DEFAULT_MASK_RATIO: f64 = 0.9;
pub const DEFAULT_MASK_TEMPERATURE: f64 = 1.0;

/// Frame-resolved prime indicator, frames x joints.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeMask {
    pub mask: Array2<bool>,
    pub beta: f64,
    /// Set when no entry met the threshold and the maximum was promoted.
    pub fallback: bool,
}

impl PrimeMask {
    pub fn frames(&self) -> usize {
        self.mask.dim().0
    }

    pub fn joints(&self) -> usize {
        self.mask.dim().1
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// 1.0 for prime entries, 0.0 otherwise.
    pub fn weights(&self) -> Array2<f64> {
        self.mask.mapv(|m| if m { 1.0 } else { 0.0 })
    }

    /// Complement weights, for pooling over the non-prime joints.
    pub fn complement_weights(&self) -> Array2<f64> {
        self.mask.mapv(|m| if m { 0.0 } else { 1.0 })
    }

    /// A joint counts as prime if it is prime in any frame.
    pub fn joint_aggregate(&self) -> Vec<bool> {
        self.mask
            .columns()
            .into_iter()
            .map(|col| col.iter().any(|&m| m))
            .collect()
    }

    pub fn to_json(&self) -> MaskJson {
        let (t, v) = self.mask.dim();
        MaskJson {
            shape: [t, v],
            beta: self.beta,
            fallback: self.fallback,
            values: self.mask.iter().map(|&m| m as u8).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskJson {
    pub shape: [usize; 2],
    pub beta: f64,
    pub fallback: bool,
    pub values: Vec<u8>,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta {beta} outside [0, 1]")));
    }
    Ok(())
}

/// `normalized >= beta`, without the empty-mask fallback.
pub fn threshold_mask(normalized: &Array2<f64>, beta: f64) -> Result<Array2<bool>> {
    check_beta(beta)?;
    Ok(normalized.mapv(|x| x >= beta))
}

/// Thresholds the normalized change. If nothing passes, the largest entry
/// (first in row-major order on ties) becomes the single prime entry.
pub fn detect_prime(normalized: &Array2<f64>, beta: f64) -> Result<PrimeMask> {
    let mut mask = threshold_mask(normalized, beta)?;
    let mut fallback = false;
    if !mask.iter().any(|&m| m) {
        if let Some((idx, _)) = normalized
            .indexed_iter()
            .fold(None, |best: Option<((usize, usize), f64)>, (idx, &x)| match best {
                Some((_, b)) if b >= x => best,
                _ => Some((idx, x)),
            })
        {
            mask[idx] = true;
            fallback = true;
        }
    }
    Ok(PrimeMask {
        mask,
        beta,
        fallback,
    })
}

/// Expands prime joints to their whole body part, frame by frame.
pub fn prime_parts(mask: &Array2<bool>, layout: &JointLayout) -> Result<Array2<bool>> {
    let (t, v) = mask.dim();
    if layout.joint_count() != v {
        return Err(Error::PartMapIncomplete(format!(
            "layout has {} joints, mask has {v}",
            layout.joint_count()
        )));
    }
    layout.check_partition()?;
    let mut out = Array2::from_elem((t, v), false);
    for ti in 0..t {
        for joints in layout.part_map.values() {
            if joints.iter().any(|&j| mask[[ti, j]]) {
                for &j in joints {
                    out[[ti, j]] = true;
                }
            }
        }
    }
    Ok(out)
}

/// A set of (frame, joint) entries to hide from a reconstruction model.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskingPlan {
    /// Sorted (frame, joint) pairs.
    pub masked_indices: Vec<(usize, usize)>,
    pub probabilities: Array2<f64>,
    pub ratio: f64,
    pub seed: u64,
}

impl MaskingPlan {
    pub fn to_json(&self) -> PlanJson {
        let (t, v) = self.probabilities.dim();
        PlanJson {
            shape: [t, v],
            ratio: self.ratio,
            seed: self.seed,
            masked: self.masked_indices.iter().map(|&(a, b)| [a, b]).collect(),
            probabilities: self.probabilities.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub shape: [usize; 2],
    pub ratio: f64,
    pub seed: u64,
    pub masked: Vec<[usize; 2]>,
    pub probabilities: Vec<f64>,
}

/// Draws `floor(ratio * T * V)` entries without replacement, each with
/// probability proportional to `softmax(normalized / temperature)`.
pub fn sample_mask_plan(
    normalized: &Array2<f64>,
    ratio: f64,
    temperature: f64,
    seed: u64,
) -> Result<MaskingPlan> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!("mask ratio {ratio} outside [0, 1]")));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidArgument(format!("temperature {temperature} must be positive")));
    }
    if normalized.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput("normalized change"));
    }
    let (t, v) = normalized.dim();
    let n = t * v;
    let max = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = normalized.mapv(|x| ((x - max) / temperature).exp());
    let total = exps.sum();
    let probabilities = exps / total;
    let amount = ((ratio * n as f64) + 1e-9).floor() as usize;
    let amount = amount.min(n);

    let flat: Vec<f64> = probabilities.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masked: Vec<(usize, usize)> = if amount == n {
        (0..n).map(|i| (i / v, i % v)).collect()
    } else {
        rand::seq::index::sample_weighted(&mut rng, n, |i| flat[i], amount)
            .map_err(|e| Error::InvalidArgument(format!("weighted sampling: {e}")))?
            .into_iter()
            .map(|i| (i / v, i % v))
            .collect()
    };
    masked.sort_unstable();
    Ok(MaskingPlan {
        masked_indices: masked,
        probabilities,
        ratio,
        seed,
    })
}
