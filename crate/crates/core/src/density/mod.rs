//! Gaussian joint density, its temporal change, and change normalization.
//!
//! For frame `t` and evaluation joint `r` the density is
//!
//! ```text
//! D_t(r) = 1/V * sum_i prod_c N(x[c, r, t] - x[c, i, t]; 0, h_i^2)
//! ```
//!
//! with one bandwidth `h_i` per joint shared by all channels. The sum runs over
//! every joint including `r` itself and is accumulated in ascending `i`, so a
//! given entry is bit-reproducible regardless of how frames are scheduled.

mod bandwidth;
mod taylor;

use std::f64::consts::PI;

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bandwidth::{
    density_gradient_bandwidth, fit_bandwidths, leave_one_out_objective, silverman_bandwidth,
    BandwidthFit, FitOptions,
};
pub use taylor::{taylor_decompose, TaylorDecomposition};

pub const DEFAULT_H_MIN: f64 = 1e-3;

/// Per-joint kernel bandwidths, each at least `h_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthVector {
    h: Vec<f64>,
}

impl BandwidthVector {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        Self::with_min(h, DEFAULT_H_MIN)
    }

    pub fn with_min(h: Vec<f64>, h_min: f64) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::InvalidArgument("empty bandwidth vector".into()));
        }
        if let Some(bad) = h.iter().find(|&&x| !(x.is_finite() && x >= h_min)) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth {bad} below minimum {h_min}"
            )));
        }
        Ok(Self { h })
    }

    pub fn uniform(joints: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; joints])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::with_min(self.h.iter().map(|x| x * s).collect(), 0.0)
    }
}

/// `D_t(r)` laid out frames x joints.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub values: Array2<f64>,
}

/// Absolute density change and its normalized form, both frames x joints.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityChangeField {
    pub raw: Array2<f64>,
    pub normalized: Array2<f64>,
}

/// JSON export shape shared by density and change fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

impl FieldJson {
    pub fn from_array(a: &Array2<f64>) -> Self {
        let (t, v) = a.dim();
        Self {
            shape: [t, v],
            values: a.iter().copied().collect(),
        }
    }

    pub fn to_array(&self) -> Result<Array2<f64>> {
        Array2::from_shape_vec((self.shape[0], self.shape[1]), self.values.clone())
            .map_err(|e| Error::ShapeMismatch(e.to_string()))
    }
}

/// Which entries share one softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftmaxAxis {
    /// One softmax over all frames and joints.
    #[default]
    Global,
    /// A separate softmax (and min-max) per frame.
    PerFrame,
}

/// How raw change values are scaled before the softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftmaxScale {
    /// Divide by the largest raw value in the softmax group, so the logits lie
    /// in `[0, 1]` and the result does not depend on coordinate units.
    #[default]
    MaxRaw,
    /// Feed raw values to the softmax unchanged.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NormalizeOptions {
    pub axis: SoftmaxAxis,
    pub scale: SoftmaxScale,
}

fn check_inputs(x: &Array3<f64>, h: &BandwidthVector) -> Result<()> {
    let (c, v, t) = x.dim();
    if c == 0 || v == 0 || t == 0 {
        return Err(Error::ShapeMismatch(format!("empty input {c}x{v}x{t}")));
    }
    if h.len() != v {
        return Err(Error::ShapeMismatch(format!(
            "{} bandwidths for {v} joints",
            h.len()
        )));
    }
    if x.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFiniteInput("joint coordinates"));
    }
    Ok(())
}

/// Squared joint-to-joint distances, indexed `[t, r, i]`.
pub fn pairwise_sq_dists(x: &Array3<f64>) -> Array3<f64> {
    let (c, v, t) = x.dim();
    let mut out = Array3::<f64>::zeros((t, v, v));
    for ti in 0..t {
        for r in 0..v {
            for i in 0..v {
                let mut d2 = 0.0;
                for ci in 0..c {
                    let d = x[[ci, r, ti]] - x[[ci, i, ti]];
                    d2 += d * d;
                }
                out[[ti, r, i]] = d2;
            }
        }
    }
    out
}

/// Gaussian normalizer `(h sqrt(2 pi))^-C`.
#[inline]
pub(crate) fn kernel_norm(h: f64, channels: usize) -> f64 {
    (h * (2.0 * PI).sqrt()).powi(-(channels as i32))
}

pub fn compute_density(x: &Array3<f64>, h: &BandwidthVector) -> Result<DensityField> {
    check_inputs(x, h)?;
    let (c, v, t) = x.dim();
    let d2 = pairwise_sq_dists(x);
    let hs = h.as_slice();
    let norms: Vec<f64> = hs.iter().map(|&hi| kernel_norm(hi, c)).collect();
    let mut values = Array2::<f64>::zeros((t, v));
    for ti in 0..t {
        for r in 0..v {
            let mut acc = 0.0;
            for i in 0..v {
                acc += norms[i] * (-0.5 * d2[[ti, r, i]] / (hs[i] * hs[i])).exp();
            }
            values[[ti, r]] = acc / v as f64;
        }
    }
    Ok(DensityField { values })
}

/// Density of frame `t` evaluated at an arbitrary location `y` (one value per channel).
pub fn density_at(x: &Array3<f64>, h: &BandwidthVector, t: usize, y: &[f64]) -> Result<f64> {
    check_inputs(x, h)?;
    let (c, v, frames) = x.dim();
    if t >= frames {
        return Err(Error::IndexOutOfBounds { index: t, len: frames });
    }
    if y.len() != c {
        return Err(Error::ShapeMismatch(format!("{} query coordinates for {c} channels", y.len())));
    }
    let mut acc = 0.0;
    for (i, &hi) in h.as_slice().iter().enumerate() {
        let d2: f64 = (0..c).map(|ci| (y[ci] - x[[ci, i, t]]).powi(2)).sum();
        acc += kernel_norm(hi, c) * (-0.5 * d2 / (hi * hi)).exp();
    }
    Ok(acc / v as f64)
}

/// Absolute change `|D_{t+dt}(r) - D_t(r)|` for `t` in `1..T-dt`; row 0 and the
/// trailing rows without a partner frame are zero.
pub fn density_change(x: &Array3<f64>, h: &BandwidthVector, delta_t: usize) -> Result<Array2<f64>> {
    let frames = x.dim().2;
    if delta_t == 0 {
        return Err(Error::InvalidArgument("delta_t must be at least 1".into()));
    }
    if frames <= delta_t {
        return Err(Error::SequenceTooShort { frames, delta_t });
    }
    let d = compute_density(x, h)?.values;
    Ok(change_from_density(&d, delta_t))
}

pub(crate) fn change_from_density(d: &Array2<f64>, delta_t: usize) -> Array2<f64> {
    let (t, v) = d.dim();
    let mut raw = Array2::<f64>::zeros((t, v));
    for ti in 1..t.saturating_sub(delta_t) {
        for r in 0..v {
            raw[[ti, r]] = (d[[ti + delta_t, r]] - d[[ti, r]]).abs();
        }
    }
    raw
}

/// Softmax followed by min-max rescaling to `[0, 1]`.
///
/// A group whose softmax is constant maps to all zeros.
pub fn normalize_change(raw: &Array2<f64>, opts: NormalizeOptions) -> Array2<f64> {
    match opts.axis {
        SoftmaxAxis::Global => {
            let flat: Vec<f64> = raw.iter().copied().collect();
            Array2::from_shape_vec(raw.dim(), softmax_min_max(&flat, opts.scale))
                .expect("same shape")
        }
        SoftmaxAxis::PerFrame => {
            let mut out = Array2::<f64>::zeros(raw.dim());
            for (src, mut dst) in raw.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
                let row: Vec<f64> = src.iter().copied().collect();
                for (o, n) in dst.iter_mut().zip(softmax_min_max(&row, opts.scale)) {
                    *o = n;
                }
            }
            out
        }
    }
}

fn softmax_min_max(values: &[f64], scale: SoftmaxScale) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let divisor = match scale {
        SoftmaxScale::MaxRaw if max > 0.0 => max,
        _ => 1.0,
    };
    let shift = max / divisor;
    let exps: Vec<f64> = values.iter().map(|&x| (x / divisor - shift).exp()).collect();
    let total: f64 = exps.iter().sum();
    let s: Vec<f64> = exps.iter().map(|e| e / total).collect();
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return vec![0.0; values.len()];
    }
    s.iter().map(|&x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
}

/// Computes raw and normalized density change in one pass.
pub fn density_change_field(
    x: &Array3<f64>,
    h: &BandwidthVector,
    delta_t: usize,
    opts: NormalizeOptions,
) -> Result<DensityChangeField> {
    let raw = density_change(x, h, delta_t)?;
    let normalized = normalize_change(&raw, opts);
    Ok(DensityChangeField { raw, normalized })
}
