//! The two augmentation streams: a standard composition (shear, temporal
//! crop-and-resize, Gaussian noise, left/right flip) and a region-aware
//! variant whose shear and noise strength differ between prime and
//! non-prime entries.
//!
//! Both streams consume the same random draws for a given seed, in a fixed
//! order, so with equal region strengths `s` the region-aware stream equals the
//! standard one run with shear amplitude and noise sigma scaled by `s`.

use ndarray::{s, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prime::PrimeMask;
use crate::skeleton::{resample_values, SkeletonSequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub shear_amplitude: f64,
    pub crop_ratio_range: (f64, f64),
    pub noise_sigma: f64,
    pub flip_probability: f64,
    pub prime_strength: f64,
    pub nonprime_strength: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            shear_amplitude: 0.3,
            crop_ratio_range: (0.8, 1.0),
            noise_sigma: 0.01,
            flip_probability: 0.5,
            prime_strength: 0.5,
            nonprime_strength: 1.0,
        }
    }
}

impl AugmentConfig {
    /// Configuration under which both streams return their input unchanged.
    pub fn identity() -> Self {
        Self {
            shear_amplitude: 0.0,
            crop_ratio_range: (1.0, 1.0),
            noise_sigma: 0.0,
            flip_probability: 0.0,
            prime_strength: 1.0,
            nonprime_strength: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.crop_ratio_range;
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.shear_amplitude >= 0.0 && self.shear_amplitude.is_finite()) {
            return bad("shear_amplitude must be >= 0");
        }
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return bad("crop ratios must satisfy 0 < lo <= hi <= 1");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return bad("flip_probability must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.prime_strength) || !(0.0..=1.0).contains(&self.nonprime_strength)
        {
            return bad("region strengths must lie in [0, 1]");
        }
        Ok(())
    }
}

/// 3x3 shear with unit diagonal.
pub fn shear_matrix(off_diagonal: [f64; 6]) -> [[f64; 3]; 3] {
    let [a, b, c, d, e, f] = off_diagonal;
    [[1.0, a, b], [c, 1.0, d], [e, f, 1.0]]
}

pub fn apply_shear(m: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (row, o) in m.iter().zip(out.iter_mut()) {
        *o = row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
    }
    out
}

/// The random choices behind one augmentation, drawn up front.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentDraw {
    /// Shear off-diagonals before scaling by the amplitude, each in [-1, 1].
    pub shear_unit: [f64; 6],
    pub crop_start: usize,
    pub crop_len: usize,
    /// Unit normal noise, channels x joints x frames.
    pub noise: Array3<f64>,
    pub flip: bool,
}

impl AugmentDraw {
    pub fn sample(cfg: &AugmentConfig, shape: (usize, usize, usize), seed: u64) -> Self {
        let (c, v, t) = shape;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shear_unit = [0.0; 6];
        for s in shear_unit.iter_mut() {
            *s = rng.random_range(-1.0..=1.0);
        }
        let (lo, hi) = cfg.crop_ratio_range;
        let ratio = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let crop_len = ((ratio * t as f64).round() as usize).clamp(1, t);
        let crop_start = rng.random_range(0..=t - crop_len);
        let noise = Array3::from_shape_simple_fn((c, v, t), || rng.sample(StandardNormal));
        let flip = rng.random::<f64>() < cfg.flip_probability;
        Self {
            shear_unit,
            crop_start,
            crop_len,
            noise,
            flip,
        }
    }

    /// Source frame (before crop) nearest to each output frame.
    fn source_frames(&self, frames: usize) -> Vec<usize> {
        (0..frames)
            .map(|k| {
                let pos = if frames == 1 {
                    0.0
                } else {
                    (k * (self.crop_len - 1)) as f64 / (frames - 1) as f64
                };
                self.crop_start + pos.round() as usize
            })
            .collect()
    }

    /// Carries a frames x joints mask through the crop and flip.
    pub fn transform_mask(&self, mask: &Array2<bool>, perm: &[usize]) -> Array2<bool> {
        let (t, v) = mask.dim();
        let src = self.source_frames(t);
        Array2::from_shape_fn((t, v), |(ti, j)| {
            let joint = if self.flip { perm[j] } else { j };
            mask[[src[ti], joint]]
        })
    }
}

fn region_strength(mask: Option<&Array2<bool>>, cfg: &AugmentConfig, t: usize, v: usize) -> f64 {
    match mask {
        None => 1.0,
        Some(m) if m[[t, v]] => cfg.prime_strength,
        Some(_) => cfg.nonprime_strength,
    }
}

fn apply(
    seq: &SkeletonSequence,
    cfg: &AugmentConfig,
    draw: &AugmentDraw,
    region: Option<&Array2<bool>>,
) -> Result<SkeletonSequence> {
    cfg.validate()?;
    let (c, v, t) = seq.values().dim();
    if c != 3 && (cfg.shear_amplitude != 0.0 || cfg.flip_probability > 0.0) {
        return Err(Error::UnsupportedChannelCount(c));
    }
    let perm = seq.layout().flip_permutation();
    let mut x = seq.values().clone();

    if cfg.shear_amplitude != 0.0 {
        for ti in 0..t {
            for vi in 0..v {
                let s = cfg.shear_amplitude * region_strength(region, cfg, ti, vi);
                let m = shear_matrix(draw.shear_unit.map(|u| u * s));
                let p = [x[[0, vi, ti]], x[[1, vi, ti]], x[[2, vi, ti]]];
                let q = apply_shear(&m, p);
                for ci in 0..3 {
                    x[[ci, vi, ti]] = q[ci];
                }
            }
        }
    }

    let cropped = x
        .slice(s![.., .., draw.crop_start..draw.crop_start + draw.crop_len])
        .to_owned();
    let mut x = resample_values(&cropped, t)?;
    let region_after_crop = region.map(|m| {
        let keep_joints = AugmentDraw {
            flip: false,
            ..draw.clone()
        };
        keep_joints.transform_mask(m, &perm)
    });

    if cfg.noise_sigma != 0.0 {
        for ci in 0..c {
            for vi in 0..v {
                for ti in 0..t {
                    let s = cfg.noise_sigma * region_strength(region_after_crop.as_ref(), cfg, ti, vi);
                    x[[ci, vi, ti]] += s * draw.noise[[ci, vi, ti]];
                }
            }
        }
    }

    if draw.flip {
        let src = x.clone();
        for (j, &from) in perm.iter().enumerate() {
            x.slice_mut(s![.., j, ..]).assign(&src.slice(s![.., from, ..]));
        }
    }
    seq.with_values(x)
}

/// Standard augmentation stream.
pub fn transform_t2(seq: &SkeletonSequence, cfg: &AugmentConfig, seed: u64) -> Result<SkeletonSequence> {
    let draw = AugmentDraw::sample(cfg, seq.values().dim(), seed);
    apply(seq, cfg, &draw, None)
}

/// Standard stream plus the prime mask carried into the output's frame and joint order.
pub fn transform_t2_with_mask(
    seq: &SkeletonSequence,
    mask: &PrimeMask,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<(SkeletonSequence, Array2<bool>)> {
    check_mask(seq, mask)?;
    let draw = AugmentDraw::sample(cfg, seq.values().dim(), seed);
    let out = apply(seq, cfg, &draw, None)?;
    let carried = draw.transform_mask(&mask.mask, &seq.layout().flip_permutation());
    Ok((out, carried))
}

/// Region-aware stream: shear and noise scaled by `prime_strength` on prime
/// entries and `nonprime_strength` elsewhere; crop and flip act globally.
pub fn transform_t1(
    seq: &SkeletonSequence,
    mask: &PrimeMask,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<SkeletonSequence> {
    check_mask(seq, mask)?;
    let draw = AugmentDraw::sample(cfg, seq.values().dim(), seed);
    apply(seq, cfg, &draw, Some(&mask.mask))
}

fn check_mask(seq: &SkeletonSequence, mask: &PrimeMask) -> Result<()> {
    let expected = (seq.frames(), seq.joints());
    if mask.mask.dim() != expected {
        return Err(Error::MaskShapeMismatch {
            expected,
            found: mask.mask.dim(),
        });
    }
    Ok(())
}
