//! First-order split of a single-channel density change into a joint
//! interaction term and a joint motion term.
//!
//! The change at evaluation joint `r` is written relative to an expansion
//! joint `k`:
//!
//! ```text
//! dD(r) = [D_{t+dt}(v_k) - D_t(v_k)]                       interaction
//!       + first-order change of D(r) - D(v_k)              motion
//!       + remainder                                        residual
//! ```
//!
//! The interaction term is `1/V sum_i (G_{t+dt,k} - G_{t,k})`, the change of
//! every joint's kernel seen from `v_k`; it only depends on pairwise offsets, so
//! a rigid translation leaves it at zero. With `M(v) = v_t - v_{t+dt}` the motion
//! term is
//!
//! ```text
//! 1/V sum_i [ (M(v_k) - M(v_i)) G_i'(v_k - v_i) - (M(r) - M(v_i)) G_i'(r - v_i) ]
//! ```
//!
//! with derivatives taken at frame `t`. The residual is second order in the
//! joint displacements.

use ndarray::Array3;

use super::{check_inputs, BandwidthVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorDecomposition {
    pub interaction: f64,
    pub motion: f64,
    pub residual: f64,
    /// Signed change `D_{t+dt}(r) - D_t(r)`.
    pub exact: f64,
}

fn gauss(d: f64, h: f64) -> f64 {
    (-0.5 * (d / h).powi(2)).exp() / (h * (2.0 * std::f64::consts::PI).sqrt())
}

fn gauss_prime(d: f64, h: f64) -> f64 {
    -d / (h * h) * gauss(d, h)
}

/// Decomposes the change at joint `r` between frames `t` and `t + delta_t`,
/// expanding around joint `k`.
pub fn taylor_decompose(
    x: &Array3<f64>,
    h: &BandwidthVector,
    t: usize,
    delta_t: usize,
    k: usize,
    r: usize,
) -> Result<TaylorDecomposition> {
    check_inputs(x, h)?;
    let (c, v, frames) = x.dim();
    if c != 1 {
        return Err(Error::MultiChannelUnsupported(c));
    }
    if delta_t == 0 || t + delta_t >= frames {
        return Err(Error::SequenceTooShort { frames, delta_t });
    }
    for idx in [k, r] {
        if idx >= v {
            return Err(Error::IndexOutOfBounds { index: idx, len: v });
        }
    }
    let hs = h.as_slice();
    let now = |j: usize| x[[0, j, t]];
    let next = |j: usize| x[[0, j, t + delta_t]];
    let motion_of = |j: usize| now(j) - next(j);

    let mut d_now = 0.0;
    let mut d_next = 0.0;
    let mut interaction = 0.0;
    let mut motion = 0.0;
    for i in 0..v {
        d_now += gauss(now(r) - now(i), hs[i]);
        d_next += gauss(next(r) - next(i), hs[i]);
        interaction += gauss(next(k) - next(i), hs[i]) - gauss(now(k) - now(i), hs[i]);
        motion += (motion_of(k) - motion_of(i)) * gauss_prime(now(k) - now(i), hs[i])
            - (motion_of(r) - motion_of(i)) * gauss_prime(now(r) - now(i), hs[i]);
    }
    let scale = 1.0 / v as f64;
    let exact = (d_next - d_now) * scale;
    let interaction = interaction * scale;
    let motion = motion * scale;
    Ok(TaylorDecomposition {
        interaction,
        motion,
        residual: exact - interaction - motion,
        exact,
    })
}
