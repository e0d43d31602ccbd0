//! Paired two-tailed t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_value: f64,
    pub degrees_freedom: usize,
    /// Two-tailed critical value of |t| at `alpha`.
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Tests whether the mean of `a - b` differs from zero.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument("need at least two pairs".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput("paired samples"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().all(|&d| d == diffs[0]) {
        return Err(Error::ZeroVariance);
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t_value = mean / (var.sqrt() / n.sqrt());
    let df = diffs.len() - 1;

    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let critical_value = dist.inverse_cdf(1.0 - alpha / 2.0);
    let p_value = 2.0 * dist.sf(t_value.abs());
    Ok(TTestResult {
        t_value,
        degrees_freedom: df,
        critical_value,
        p_value,
        reject: t_value.abs() > critical_value,
    })
}
