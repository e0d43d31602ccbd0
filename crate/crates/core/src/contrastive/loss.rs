//! InfoNCE against a memory bank, and the reversed loss that pushes the
//! prime-joint and non-prime-joint key embeddings apart.

use crate::error::{Error, Result};

use super::bank::MemoryBank;

pub const DEFAULT_TAU: f64 = 0.2;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let n = norm(a) * norm(b);
    if n == 0.0 {
        0.0
    } else {
        dot(a, b) / n
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("temperature {tau} must be positive")));
    }
    Ok(())
}

/// `-log(e^{s+/tau} / (e^{s+/tau} + sum_j e^{s_j/tau}))` with cosine
/// similarities; zero when the bank is empty.
pub fn info_nce(z_q: &[f64], z_k: &[f64], bank: &MemoryBank, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let pos = cosine(z_q, z_k) / tau;
    let mut logits = vec![pos];
    logits.extend(bank.iter().map(|m| cosine(z_q, m) / tau));
    Ok((log_sum_exp(&logits) - pos).max(0.0))
}

/// `-log(sum_j e^{s_j/tau} / (e^{s(z_p,z_k)/tau} + sum_j e^{s_j/tau}))` with
/// `s_j = sim(z_p, m_j)`. Minimizing it lowers `sim(z_p, z_k)`.
pub fn reversed_loss(z_k: &[f64], z_p: &[f64], bank: &MemoryBank, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if bank.is_empty() {
        return Err(Error::EmptyBank);
    }
    let negatives: Vec<f64> = bank.iter().map(|m| cosine(z_p, m) / tau).collect();
    let mut all = negatives.clone();
    all.push(cosine(z_p, z_k) / tau);
    Ok((log_sum_exp(&all) - log_sum_exp(&negatives)).max(0.0))
}

/// Which reversed objective the trainer reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReversedKind {
    /// Bank-normalized ratio, see [`reversed_loss`].
    #[default]
    Ratio,
    /// Plain `sim(z_p, z_k)` penalty.
    Penalty,
}

pub fn reversed(kind: ReversedKind, z_k: &[f64], z_p: &[f64], bank: &MemoryBank, tau: f64) -> Result<f64> {
    match kind {
        ReversedKind::Ratio => reversed_loss(z_k, z_p, bank, tau),
        ReversedKind::Penalty => Ok(cosine(z_p, z_k)),
    }
}

/// Gradient of [`info_nce`] with respect to a unit-norm `z_q`, treating the
/// key and bank as constants.
pub fn info_nce_grad_query(z_q: &[f64], z_k: &[f64], bank: &MemoryBank, tau: f64) -> Vec<f64> {
    let mut logits = vec![dot(z_q, z_k) / tau];
    logits.extend(bank.iter().map(|m| dot(z_q, m) / tau));
    let lse = log_sum_exp(&logits);
    let probs: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
    let mut g: Vec<f64> = z_k.iter().map(|k| (probs[0] - 1.0) * k / tau).collect();
    for (p, m) in probs[1..].iter().zip(bank.iter()) {
        for (gi, mi) in g.iter_mut().zip(m) {
            *gi += p * mi / tau;
        }
    }
    g
}
