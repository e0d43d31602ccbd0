//! Momentum-contrast pretraining steered by prime joints.
//!
//! One step, per sequence `S` in the batch:
//!
//! 1. fit bandwidths on `S`, compute and normalize the density change, threshold it into a prime mask;
//! 2. `X_q = T1(S, mask)`, `X_k = T2(S)` with the mask carried through `T2`;
//! 3. `z_q = g_q(GAP(f_q(X_q)))`, `z_k = g_k(JAFP(f_k(X_k), mask))`, `z_p = g_p(JAFP(f_k(X_k), 1 - mask))`;
//! 4. `L = L_CL(z_q, z_k) + L_RCL(z_k, z_p)` against the memory bank.
//!
//! The batch-mean gradient of `L` updates the online parameters; keys are
//! treated as constants. The offline branch then follows by momentum and the
//! new keys are enqueued.

use ndarray::{Array2, Array3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bank::{MemoryBank, DEFAULT_BANK_CAPACITY};
use super::encoder::{jafp_pool, EncoderGrads, EncoderParams, ForwardCache};
use super::loss::{self, info_nce, info_nce_grad_query, ReversedKind, DEFAULT_TAU};
use crate::augment::{transform_t1, transform_t2_with_mask, AugmentConfig};
use crate::density::{
    density_change_field, fit_bandwidths, silverman_bandwidth, BandwidthVector, FitOptions,
    NormalizeOptions,
};
use crate::error::{Error, Result};
use crate::prime::{detect_prime, PrimeMask, DEFAULT_BETA};
use crate::skeleton::SkeletonSequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub embed: usize,
    pub alpha: f64,
    pub tau: f64,
    pub bank_capacity: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta: f64,
    pub delta_t: usize,
    pub normalize: NormalizeOptions,
    /// Fit per-joint bandwidths on every sequence; otherwise use the rule-of-thumb value.
    pub fit_bandwidths: bool,
    pub reversed: ReversedKind,
    pub augment: AugmentConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            embed: 8,
            alpha: 0.999,
            tau: DEFAULT_TAU,
            bank_capacity: DEFAULT_BANK_CAPACITY,
            learning_rate: 0.05,
            weight_decay: 0.0,
            beta: DEFAULT_BETA,
            delta_t: 1,
            normalize: NormalizeOptions::default(),
            fit_bandwidths: true,
            reversed: ReversedKind::Ratio,
            augment: AugmentConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.hidden == 0 || self.embed == 0 {
            return bad("hidden and embed widths must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(self.tau > 0.0) {
            return bad(format!("tau {} must be positive", self.tau));
        }
        if !(self.learning_rate >= 0.0) || !(self.weight_decay >= 0.0) {
            return bad("learning rate and weight decay must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta {} outside [0, 1]", self.beta));
        }
        if self.delta_t == 0 {
            return bad("delta_t must be at least 1".into());
        }
        self.augment.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineBranch {
    pub encoder: EncoderParams,
    /// embed x hidden
    pub projector: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineBranch {
    pub encoder: EncoderParams,
    pub projector_k: Array2<f64>,
    pub projector_p: Array2<f64>,
}

/// Online (gradient-trained) and offline (momentum-averaged) parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderPair {
    pub online: OnlineBranch,
    pub offline: OfflineBranch,
    pub alpha: f64,
}

impl EncoderPair {
    /// Random online weights; the offline branch starts as an exact copy.
    pub fn new(in_channels: usize, adjacency: Array2<f64>, cfg: &TrainConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = EncoderParams::random(in_channels, cfg.hidden, adjacency, &mut rng);
        let scale = (1.0 / cfg.hidden as f64).sqrt();
        let projector = Array2::from_shape_simple_fn((cfg.embed, cfg.hidden), || {
            scale * Distribution::<f64>::sample(&StandardNormal, &mut rng)
        });
        Self {
            offline: OfflineBranch {
                encoder: encoder.clone(),
                projector_k: projector.clone(),
                projector_p: projector.clone(),
            },
            online: OnlineBranch { encoder, projector },
            alpha: cfg.alpha,
        }
    }

    fn check_mirror(&self) -> Result<()> {
        let (on, off) = (&self.online, &self.offline);
        let pairs = [
            (on.encoder.w1.dim(), off.encoder.w1.dim()),
            (on.encoder.w2.dim(), off.encoder.w2.dim()),
            (on.encoder.adjacency.dim(), off.encoder.adjacency.dim()),
            (on.projector.dim(), off.projector_k.dim()),
            (on.projector.dim(), off.projector_p.dim()),
        ];
        for (a, b) in pairs {
            if a != b {
                return Err(Error::ShapeMismatch(format!("online {a:?} vs offline {b:?}")));
            }
        }
        Ok(())
    }
}

fn ema(target: &mut Array2<f64>, source: &Array2<f64>, alpha: f64) {
    target.zip_mut_with(source, |k, &q| *k = alpha * *k + (1.0 - alpha) * q);
}

/// `theta_k <- alpha * theta_k + (1 - alpha) * theta_q` for every offline
/// tensor; both offline projectors track the online projector.
pub fn momentum_update(pair: &mut EncoderPair) -> Result<()> {
    pair.check_mirror()?;
    let a = pair.alpha;
    if a == 1.0 {
        return Ok(());
    }
    let (on, off) = (&pair.online, &mut pair.offline);
    ema(&mut off.encoder.w1, &on.encoder.w1, a);
    ema(&mut off.encoder.w2, &on.encoder.w2, a);
    ema(&mut off.projector_k, &on.projector, a);
    ema(&mut off.projector_p, &on.projector, a);
    Ok(())
}

/// Linear projection followed by L2 normalization; returns (z, |y|).
pub fn project(g: &Array2<f64>, pooled: &[f64]) -> (Vec<f64>, f64) {
    let y: Vec<f64> = g
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(pooled).map(|(a, b)| a * b).sum())
        .collect();
    let n = loss::norm(&y);
    if n == 0.0 {
        return (y, 0.0);
    }
    (y.iter().map(|v| v / n).collect(), n)
}

/// Everything about one sequence that does not depend on the parameters.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub x_q: Array3<f64>,
    pub x_k: Array3<f64>,
    /// Prime weights aligned with `x_k`.
    pub key_mask: Array2<f64>,
    pub prime: PrimeMask,
}

pub fn bandwidths_for(seq: &SkeletonSequence, fit: bool) -> Result<BandwidthVector> {
    let x = seq.values();
    let v = seq.joints();
    if fit && v >= 2 {
        Ok(fit_bandwidths(x, None, &FitOptions::default())?.bandwidths)
    } else {
        BandwidthVector::uniform(v, silverman_bandwidth(x).max(crate::density::DEFAULT_H_MIN))
    }
}

/// Prime mask of a sequence under the trainer's density settings.
pub fn prime_mask_for(seq: &SkeletonSequence, cfg: &TrainConfig) -> Result<PrimeMask> {
    let h = bandwidths_for(seq, cfg.fit_bandwidths)?;
    let field = density_change_field(seq.values(), &h, cfg.delta_t, cfg.normalize)?;
    detect_prime(&field.normalized, cfg.beta)
}

pub fn prepare_sample(seq: &SkeletonSequence, cfg: &TrainConfig, seed: u64) -> Result<PreparedSample> {
    augment_sample(seq, prime_mask_for(seq, cfg)?, cfg, seed)
}

/// Both augmented views of `seq` for an already computed prime mask.
pub fn augment_sample(
    seq: &SkeletonSequence,
    prime: PrimeMask,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<PreparedSample> {
    let x_q = transform_t1(seq, &prime, &cfg.augment, seed.wrapping_mul(2))?;
    let (x_k, carried) =
        transform_t2_with_mask(seq, &prime, &cfg.augment, seed.wrapping_mul(2).wrapping_add(1))?;
    let key_mask = carried.mapv(|m| if m { 1.0 } else { 0.0 });
    Ok(PreparedSample {
        x_q: x_q.values().clone(),
        x_k: x_k.values().clone(),
        key_mask,
        prime,
    })
}

/// JAFP with a GAP fallback when the weights vanish (a crop can drop every
/// prime frame).
fn pool_or_gap(u: &super::encoder::FeatureMap, mask: &Array2<f64>) -> Result<Vec<f64>> {
    match jafp_pool(u, mask) {
        Err(Error::EmptyMask) => Ok(super::encoder::gap_pool(u)),
        other => other,
    }
}

/// Prime and non-prime key embeddings from the offline branch.
pub fn keys(pair: &EncoderPair, sample: &PreparedSample) -> Result<(Vec<f64>, Vec<f64>)> {
    let u = pair.offline.encoder.encode(&sample.x_k)?;
    let prime = pool_or_gap(&u, &sample.key_mask)?;
    let rest = pool_or_gap(&u, &sample.key_mask.mapv(|m| 1.0 - m))?;
    Ok((
        project(&pair.offline.projector_k, &prime).0,
        project(&pair.offline.projector_p, &rest).0,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_cl: f64,
    pub l_rcl: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.l_cl + self.l_rcl
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineGrads {
    pub encoder: EncoderGrads,
    pub projector: Array2<f64>,
}

pub struct Objective {
    pub loss: LossBreakdown,
    pub grads: OnlineGrads,
    pub keys: Vec<Vec<f64>>,
}

struct QueryForward {
    cache: ForwardCache,
    pooled: Vec<f64>,
    z: Vec<f64>,
    y_norm: f64,
}

fn query_forward(online: &OnlineBranch, x: &Array3<f64>) -> Result<QueryForward> {
    let cache = online.encoder.forward(x)?;
    let n = cache.output.ncols() as f64;
    let pooled: Vec<f64> = cache.output.rows().into_iter().map(|r| r.sum() / n).collect();
    let (z, y_norm) = project(&online.projector, &pooled);
    Ok(QueryForward {
        cache,
        pooled,
        z,
        y_norm,
    })
}

/// Batch-mean loss and its gradient with respect to the online parameters.
pub fn contrastive_objective(
    pair: &EncoderPair,
    bank: &MemoryBank,
    samples: &[PreparedSample],
    cfg: &TrainConfig,
) -> Result<Objective> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let enc = &pair.online.encoder;
    let mut grads = OnlineGrads {
        encoder: EncoderGrads {
            w1: Array2::zeros(enc.w1.dim()),
            w2: Array2::zeros(enc.w2.dim()),
        },
        projector: Array2::zeros(pair.online.projector.dim()),
    };
    let mut total = LossBreakdown::default();
    let mut keys_out = Vec::with_capacity(samples.len());
    let scale = 1.0 / samples.len() as f64;

    for sample in samples {
        let (z_k, z_p) = keys(pair, sample)?;
        let q = query_forward(&pair.online, &sample.x_q)?;
        total.l_cl += scale * info_nce(&q.z, &z_k, bank, cfg.tau)?;
        if !bank.is_empty() || cfg.reversed == ReversedKind::Penalty {
            total.l_rcl += scale * loss::reversed(cfg.reversed, &z_k, &z_p, bank, cfg.tau)?;
        }

        if q.y_norm > 0.0 {
            let gz = info_nce_grad_query(&q.z, &z_k, bank, cfg.tau);
            let radial = loss::dot(&gz, &q.z);
            let gy: Vec<f64> = gz
                .iter()
                .zip(&q.z)
                .map(|(g, z)| (g - radial * z) / q.y_norm)
                .collect();
            let p = &pair.online.projector;
            for (i, gyi) in gy.iter().enumerate() {
                for (j, pj) in q.pooled.iter().enumerate() {
                    grads.projector[[i, j]] += scale * gyi * pj;
                }
            }
            let g_pooled: Vec<f64> = (0..p.ncols())
                .map(|j| (0..p.nrows()).map(|i| p[[i, j]] * gy[i]).sum())
                .collect();
            let cols = q.cache.output.ncols();
            let d_out = Array2::from_shape_fn((p.ncols(), cols), |(c, _)| g_pooled[c] / cols as f64);
            let g = enc.backward(&q.cache, &d_out);
            grads.encoder.w1.scaled_add(scale, &g.w1);
            grads.encoder.w2.scaled_add(scale, &g.w2);
        }
        keys_out.push(z_k);
    }
    Ok(Objective {
        loss: total,
        grads,
        keys: keys_out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub l_cl: f64,
    pub l_rcl: f64,
    pub bank_size: usize,
    pub prime_fraction: f64,
}

/// Per-item seed derived from the step seed.
pub fn item_seed(seed: u64, index: usize) -> u64 {
    let mut x = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// One optimization step over a batch of sequences.
pub fn pretrain_step(
    pair: &mut EncoderPair,
    bank: &mut MemoryBank,
    batch: &[SkeletonSequence],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<StepReport> {
    cfg.validate()?;
    let samples = batch
        .iter()
        .enumerate()
        .map(|(i, s)| prepare_sample(s, cfg, item_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    step_prepared(pair, bank, &samples, cfg)
}

/// Applies the optimizer update, momentum and enqueue for a prepared batch.
fn step_prepared(
    pair: &mut EncoderPair,
    bank: &mut MemoryBank,
    samples: &[PreparedSample],
    cfg: &TrainConfig,
) -> Result<StepReport> {
    let prime_fraction = samples
        .iter()
        .map(|s| s.prime.count() as f64 / s.prime.mask.len() as f64)
        .sum::<f64>()
        / samples.len() as f64;
    let objective = contrastive_objective(pair, bank, samples, cfg)?;

    if cfg.learning_rate > 0.0 {
        let lr = cfg.learning_rate;
        let wd = cfg.weight_decay;
        let on = &mut pair.online;
        let step = |w: &mut Array2<f64>, g: &Array2<f64>| {
            w.zip_mut_with(g, |wi, &gi| *wi -= lr * (gi + wd * *wi));
        };
        step(&mut on.encoder.w1, &objective.grads.encoder.w1);
        step(&mut on.encoder.w2, &objective.grads.encoder.w2);
        step(&mut on.projector, &objective.grads.projector);
    }
    momentum_update(pair)?;
    for z in objective.keys {
        bank.enqueue(z);
    }
    Ok(StepReport {
        l_cl: objective.loss.l_cl,
        l_rcl: objective.loss.l_rcl,
        bank_size: bank.len(),
        prime_fraction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub epochs: usize,
    pub batch_size: usize,
}

/// Full pretraining run over `data`.
///
/// Prime masks depend only on the sequences, so they are computed once up
/// front; augmentations and batch order are redrawn every epoch. `on_step`
/// receives the 1-based step index and its report.
pub fn pretrain(
    data: &[SkeletonSequence],
    cfg: &TrainConfig,
    schedule: Schedule,
    seed: u64,
    mut on_step: impl FnMut(u64, &StepReport),
) -> Result<(EncoderPair, MemoryBank, u64)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if schedule.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be at least 1".into()));
    }
    let first = &data[0];
    if data
        .iter()
        .any(|s| s.channels() != first.channels() || s.layout() != first.layout())
    {
        return Err(Error::ShapeMismatch("training sequences differ in channels or layout".into()));
    }
    let primes = data
        .iter()
        .map(|s| prime_mask_for(s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut pair = EncoderPair::new(
        first.channels(),
        first.layout().normalized_adjacency(),
        cfg,
        seed,
    );
    let mut bank = MemoryBank::new(cfg.bank_capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(item_seed(seed, usize::MAX));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut step = 0u64;
    for _ in 0..schedule.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(schedule.batch_size) {
            step += 1;
            let samples = chunk
                .iter()
                .map(|&i| {
                    augment_sample(&data[i], primes[i].clone(), cfg, item_seed(seed.wrapping_add(step), i))
                })
                .collect::<Result<Vec<_>>>()?;
            let report = step_prepared(&mut pair, &mut bank, &samples, cfg)?;
            on_step(step, &report);
        }
    }
    Ok((pair, bank, step))
}

/// Frozen-encoder feature: global average of the online encoder output.
pub fn extract_features(encoder: &EncoderParams, seq: &SkeletonSequence) -> Result<Vec<f64>> {
    Ok(super::encoder::gap_pool(&encoder.encode(seq.values())?))
}
