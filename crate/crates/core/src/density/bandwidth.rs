//! Bandwidth gradients and per-sequence bandwidth fitting.
//!
//! Fitting maximizes the leave-one-out log density of every joint in every
//! frame, with the joint's own kernel removed from its density. Including the
//! self-term would always favour `h -> 0`.

use ndarray::{Array3, Axis};

use super::{check_inputs, kernel_norm, pairwise_sq_dists, BandwidthVector, DEFAULT_H_MIN};
use crate::error::{Error, Result};

/// `dD_t(r)/dh_i`, indexed `[t, r, i]`.
pub fn density_gradient_bandwidth(x: &Array3<f64>, h: &BandwidthVector) -> Result<Array3<f64>> {
    check_inputs(x, h)?;
    let (c, v, t) = x.dim();
    let d2 = pairwise_sq_dists(x);
    let hs = h.as_slice();
    let cf = c as f64;
    let mut grad = Array3::<f64>::zeros((t, v, v));
    for ti in 0..t {
        for r in 0..v {
            for i in 0..v {
                let hi = hs[i];
                let dist2 = d2[[ti, r, i]];
                let k = kernel_norm(hi, c) * (-0.5 * dist2 / (hi * hi)).exp();
                grad[[ti, r, i]] = k * (dist2 / (hi * hi * hi) - cf / hi) / v as f64;
            }
        }
    }
    Ok(grad)
}

/// Rule-of-thumb starting bandwidth `1.06 * sigma * V^(-1/5)`, where sigma is
/// the spread of joint coordinates within a frame, averaged over channels and frames.
pub fn silverman_bandwidth(x: &Array3<f64>) -> f64 {
    let (c, v, t) = x.dim();
    let mut total = 0.0;
    for plane in x.axis_iter(Axis(0)) {
        for ti in 0..t {
            let col = plane.column(ti);
            let mean = col.sum() / v as f64;
            let var = col.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (v.max(2) - 1) as f64;
            total += var.sqrt();
        }
    }
    let sigma = total / (c * t) as f64;
    1.06 * sigma * (v as f64).powf(-0.2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub h_min: f64,
    pub max_iter: usize,
    /// Stop once the largest projected log-bandwidth gradient of the
    /// per-entry mean objective falls below this.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            h_min: DEFAULT_H_MIN,
            max_iter: 500,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthFit {
    pub bandwidths: BandwidthVector,
    /// Mean leave-one-out log density at the returned bandwidths.
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    /// False when `max_iter` ran out first; the best iterate is still returned.
    pub converged: bool,
}

struct LooProblem {
    d2: Array3<f64>,
    channels: usize,
}

impl LooProblem {
    /// Mean leave-one-out log density and its gradient in `log h`.
    fn eval(&self, log_h: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let (t, v, _) = self.d2.dim();
        let c = self.channels as f64;
        let log_norm: Vec<f64> = log_h
            .iter()
            .map(|&lh| -c * (lh + 0.5 * (2.0 * std::f64::consts::PI).ln()))
            .collect();
        let inv_h2: Vec<f64> = log_h.iter().map(|&lh| (-2.0 * lh).exp()).collect();
        let mut total = 0.0;
        let mut grad = vec![0.0; v];
        let mut logk = vec![0.0; v];
        let log_vm1 = ((v - 1) as f64).ln();
        for ti in 0..t {
            for r in 0..v {
                let mut m = f64::NEG_INFINITY;
                for i in 0..v {
                    if i == r {
                        continue;
                    }
                    logk[i] = log_norm[i] - 0.5 * self.d2[[ti, r, i]] * inv_h2[i];
                    m = m.max(logk[i]);
                }
                let mut s = 0.0;
                for i in 0..v {
                    if i != r {
                        s += (logk[i] - m).exp();
                    }
                }
                total += m + s.ln() - log_vm1;
                if want_grad {
                    for i in 0..v {
                        if i == r {
                            continue;
                        }
                        let w = (logk[i] - m).exp() / s;
                        grad[i] += w * (self.d2[[ti, r, i]] * inv_h2[i] - c);
                    }
                }
            }
        }
        let n = (t * v) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (total / n, grad)
    }
}

/// Mean leave-one-out log density of the joints under bandwidths `h`.
pub fn leave_one_out_objective(x: &Array3<f64>, h: &BandwidthVector) -> Result<f64> {
    check_inputs(x, h)?;
    let v = x.dim().1;
    if v < 2 {
        return Err(Error::TooFewJoints(v));
    }
    let problem = LooProblem {
        d2: pairwise_sq_dists(x),
        channels: x.dim().0,
    };
    let log_h: Vec<f64> = h.as_slice().iter().map(|a| a.ln()).collect();
    Ok(problem.eval(&log_h, false).0)
}

/// Fits per-joint bandwidths by projected gradient ascent in `log h` with
/// backtracking, starting from `h_init` or the rule-of-thumb value.
pub fn fit_bandwidths(
    x: &Array3<f64>,
    h_init: Option<&BandwidthVector>,
    opts: &FitOptions,
) -> Result<BandwidthFit> {
    let (c, v, _) = x.dim();
    if v < 2 {
        return Err(Error::TooFewJoints(v));
    }
    let init = match h_init {
        Some(h) => h.clone(),
        None => BandwidthVector::uniform(v, silverman_bandwidth(x).max(opts.h_min))?,
    };
    check_inputs(x, &init)?;
    let problem = LooProblem {
        d2: pairwise_sq_dists(x),
        channels: c,
    };
    let floor = opts.h_min.ln();
    let mut log_h: Vec<f64> = init.as_slice().iter().map(|a| a.ln().max(floor)).collect();
    let (mut value, mut grad) = problem.eval(&log_h, true);
    let initial_objective = value;
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    let projected = |log_h: &[f64], grad: &[f64]| -> f64 {
        log_h
            .iter()
            .zip(grad)
            .map(|(&lh, &g)| if lh <= floor && g < 0.0 { 0.0 } else { g.abs() })
            .fold(0.0, f64::max)
    };

    while iterations < opts.max_iter {
        if projected(&log_h, &grad) < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        while step > 1e-14 {
            let candidate: Vec<f64> = log_h
                .iter()
                .zip(&grad)
                .map(|(&lh, &g)| (lh + step * g).max(floor))
                .collect();
            let gain: f64 = candidate
                .iter()
                .zip(&log_h)
                .zip(&grad)
                .map(|((a, b), g)| (a - b) * g)
                .sum();
            let (cand_value, cand_grad) = problem.eval(&candidate, true);
            if cand_value >= value + 1e-4 * gain && cand_value.is_finite() {
                let improvement = cand_value - value;
                log_h = candidate;
                value = cand_value;
                grad = cand_grad;
                step *= 2.0;
                accepted = true;
                if improvement <= 1e-15 * value.abs().max(1.0) {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || converged {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("bandwidth fit stopped after {iterations} iterations without converging");
    }

    let h: Vec<f64> = log_h
        .iter()
        .map(|&lh| if lh <= floor { opts.h_min } else { lh.exp().max(opts.h_min) })
        .collect();
    Ok(BandwidthFit {
        bandwidths: BandwidthVector::with_min(h, opts.h_min)?,
        objective: value,
        initial_objective,
        iterations,
        converged,
    })
}
