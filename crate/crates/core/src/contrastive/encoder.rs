//! Reference encoder: a per-joint linear map, one pass of normalized
//! adjacency mixing over joints, a second linear map, rectifiers after both
//! linear maps.
//!
//! ```text
//! U = relu(W2 * mix_A(relu(W1 * X)))
//! ```
//!
//! Activations are stored as `channels x (T * V)` matrices with column
//! `t * V + v`, so every step is a plain matrix product.

use ndarray::{Array2, Array3, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    /// hidden x input channels
    pub w1: Array2<f64>,
    /// hidden x hidden
    pub w2: Array2<f64>,
    /// Row-normalized joint adjacency with self-loops; fixed by the layout.
    pub adjacency: Array2<f64>,
}

/// Encoder output, hidden x frames x joints.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap(pub Array3<f64>);

impl FeatureMap {
    pub fn channels(&self) -> usize {
        self.0.dim().0
    }

    /// The `channels x (T * V)` view used by pooling.
    pub fn as_matrix(&self) -> Array2<f64> {
        let (d, t, v) = self.0.dim();
        self.0
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((d, t * v))
            .expect("contiguous")
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub frames: usize,
    pub joints: usize,
    input: Array2<f64>,
    pre1: Array2<f64>,
    mixed: Array2<f64>,
    pre2: Array2<f64>,
    pub output: Array2<f64>,
}

impl ForwardCache {
    pub fn feature_map(&self) -> FeatureMap {
        let d = self.output.nrows();
        FeatureMap(
            self.output
                .clone()
                .into_shape_with_order((d, self.frames, self.joints))
                .expect("contiguous"),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGrads {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

fn relu(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|x| x.max(0.0))
}

impl EncoderParams {
    /// He-style Gaussian initialization.
    pub fn random<R: Rng>(in_channels: usize, hidden: usize, adjacency: Array2<f64>, rng: &mut R) -> Self {
        let s1 = (2.0 / in_channels as f64).sqrt();
        let s2 = (2.0 / hidden as f64).sqrt();
        let w1 = Array2::from_shape_simple_fn((hidden, in_channels), || {
            s1 * rng.sample::<f64, _>(StandardNormal)
        });
        let w2 = Array2::from_shape_simple_fn((hidden, hidden), || {
            s2 * rng.sample::<f64, _>(StandardNormal)
        });
        Self { w1, w2, adjacency }
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn in_channels(&self) -> usize {
        self.w1.ncols()
    }

    pub fn joints(&self) -> usize {
        self.adjacency.nrows()
    }

    fn check(&self, x: &Array3<f64>) -> Result<()> {
        let (c, v, _) = x.dim();
        let d = self.hidden();
        if self.w2.dim() != (d, d) {
            return Err(Error::ShapeMismatch(format!("w2 is {:?}, expected {d}x{d}", self.w2.dim())));
        }
        if c != self.in_channels() {
            return Err(Error::ShapeMismatch(format!(
                "input has {c} channels, encoder expects {}",
                self.in_channels()
            )));
        }
        if self.adjacency.dim() != (v, v) {
            return Err(Error::ShapeMismatch(format!(
                "input has {v} joints, adjacency is {:?}",
                self.adjacency.dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Array3<f64>) -> Result<ForwardCache> {
        self.check(x)?;
        let (c, v, t) = x.dim();
        let d = self.hidden();
        let input = x
            .view()
            .permuted_axes([0, 2, 1])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((c, t * v))
            .expect("contiguous");
        let pre1 = self.w1.dot(&input);
        let h1 = relu(&pre1)
            .into_shape_with_order((d * t, v))
            .expect("contiguous");
        let mixed = h1
            .dot(&self.adjacency.t())
            .into_shape_with_order((d, t * v))
            .expect("contiguous");
        let pre2 = self.w2.dot(&mixed);
        let output = relu(&pre2);
        Ok(ForwardCache {
            frames: t,
            joints: v,
            input,
            pre1,
            mixed,
            pre2,
            output,
        })
    }

    pub fn encode(&self, x: &Array3<f64>) -> Result<FeatureMap> {
        Ok(self.forward(x)?.feature_map())
    }

    /// Weight gradients given `dL/dU` as a `hidden x (T * V)` matrix.
    pub fn backward(&self, cache: &ForwardCache, d_output: &Array2<f64>) -> EncoderGrads {
        let d = self.hidden();
        let (t, v) = (cache.frames, cache.joints);
        let mut d_pre2 = d_output.clone();
        d_pre2.zip_mut_with(&cache.pre2, |g, &p| {
            if p <= 0.0 {
                *g = 0.0
            }
        });
        let w2 = d_pre2.dot(&cache.mixed.t());
        let d_mixed = self
            .w2
            .t()
            .dot(&d_pre2)
            .into_shape_with_order((d * t, v))
            .expect("contiguous");
        let mut d_pre1 = d_mixed
            .dot(&self.adjacency)
            .into_shape_with_order((d, t * v))
            .expect("contiguous");
        d_pre1.zip_mut_with(&cache.pre1, |g, &p| {
            if p <= 0.0 {
                *g = 0.0
            }
        });
        let w1 = d_pre1.dot(&cache.input.t());
        EncoderGrads { w1, w2 }
    }
}

/// Mean over frames and joints per channel.
pub fn gap_pool(u: &FeatureMap) -> Vec<f64> {
    let (d, t, v) = u.0.dim();
    let n = (t * v) as f64;
    (0..d)
        .map(|c| u.0.index_axis(Axis(0), c).iter().fold(0.0, |acc, &x| acc + x) / n)
        .collect()
}

/// Mask-weighted mean over frames and joints per channel; `mask` is frames x joints.
pub fn jafp_pool(u: &FeatureMap, mask: &Array2<f64>) -> Result<Vec<f64>> {
    let (d, t, v) = u.0.dim();
    if mask.dim() != (t, v) {
        return Err(Error::ShapeMismatch(format!(
            "mask {:?} vs feature map frames x joints {:?}",
            mask.dim(),
            (t, v)
        )));
    }
    let total = mask.sum();
    if total == 0.0 {
        return Err(Error::EmptyMask);
    }
    Ok((0..d)
        .map(|c| {
            // same accumulation order as `gap_pool`, so an all-ones mask reproduces it exactly
            let plane = u.0.index_axis(Axis(0), c);
            let acc = plane.iter().zip(mask.iter()).fold(0.0, |acc, (&x, &m)| acc + m * x);
            acc / total
        })
        .collect())
}
