//! Run configuration: `key = value` lines, `#` comments, later keys win.
//!
//! ```text
//! # density / prime joints
//! beta = 0.65
//! delta_t = 1
//! softmax_axis = global      # or per_frame
//! # trainer
//! epochs = 8
//! learning_rate = 0.05
//! ```

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::augment::AugmentConfig;
use crate::contrastive::{ProbeOptions, ReversedKind, TrainConfig};
use crate::density::{SoftmaxAxis, SoftmaxScale};
use crate::error::{Error, Result};
use crate::prime::{DEFAULT_MASK_RATIO, DEFAULT_MASK_TEMPERATURE};
use crate::synth::SynthOptions;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub mask_ratio: f64,
    pub mask_temperature: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub train: TrainConfig,
    pub probe: ProbeOptions,
    pub synth: SynthOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mask_ratio: DEFAULT_MASK_RATIO,
            mask_temperature: DEFAULT_MASK_TEMPERATURE,
            epochs: 8,
            batch_size: 16,
            train: TrainConfig::default(),
            probe: ProbeOptions::default(),
            synth: SynthOptions::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

impl RunConfig {
    /// Every recognised key.
    pub const KEYS: &'static [&'static str] = &[
        "seed",
        "beta",
        "delta_t",
        "mask_ratio",
        "mask_temperature",
        "softmax_axis",
        "softmax_scale",
        "fit_bandwidths",
        "shear_amplitude",
        "crop_min",
        "crop_max",
        "noise_sigma",
        "flip_probability",
        "prime_strength",
        "nonprime_strength",
        "hidden",
        "embed",
        "alpha",
        "tau",
        "bank_capacity",
        "learning_rate",
        "weight_decay",
        "reversed",
        "epochs",
        "batch_size",
        "train_fraction",
        "probe_iterations",
        "probe_learning_rate",
        "probe_l2",
        "frames",
        "sensor_noise",
        "interaction_radius",
        "yaw_range",
        "tilt_range",
    ];

    /// Sets one key without validating the whole configuration.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let t = &mut self.train;
        let a: &mut AugmentConfig = &mut t.augment;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "beta" => t.beta = parse(key, value)?,
            "delta_t" => t.delta_t = parse(key, value)?,
            "mask_ratio" => self.mask_ratio = parse(key, value)?,
            "mask_temperature" => self.mask_temperature = parse(key, value)?,
            "softmax_axis" => {
                t.normalize.axis = match value {
                    "global" => SoftmaxAxis::Global,
                    "per_frame" => SoftmaxAxis::PerFrame,
                    _ => return Err(Error::Config(format!("softmax_axis: unknown {value:?}"))),
                }
            }
            "softmax_scale" => {
                t.normalize.scale = match value {
                    "max_raw" => SoftmaxScale::MaxRaw,
                    "unit" => SoftmaxScale::Unit,
                    _ => return Err(Error::Config(format!("softmax_scale: unknown {value:?}"))),
                }
            }
            "fit_bandwidths" => t.fit_bandwidths = parse_bool(key, value)?,
            "shear_amplitude" => a.shear_amplitude = parse(key, value)?,
            "crop_min" => a.crop_ratio_range.0 = parse(key, value)?,
            "crop_max" => a.crop_ratio_range.1 = parse(key, value)?,
            "noise_sigma" => a.noise_sigma = parse(key, value)?,
            "flip_probability" => a.flip_probability = parse(key, value)?,
            "prime_strength" => a.prime_strength = parse(key, value)?,
            "nonprime_strength" => a.nonprime_strength = parse(key, value)?,
            "hidden" => t.hidden = parse(key, value)?,
            "embed" => t.embed = parse(key, value)?,
            "alpha" => t.alpha = parse(key, value)?,
            "tau" => t.tau = parse(key, value)?,
            "bank_capacity" => t.bank_capacity = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "weight_decay" => t.weight_decay = parse(key, value)?,
            "reversed" => {
                t.reversed = match value {
                    "ratio" => ReversedKind::Ratio,
                    "penalty" => ReversedKind::Penalty,
                    _ => return Err(Error::Config(format!("reversed: unknown {value:?}"))),
                }
            }
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "train_fraction" => self.probe.train_fraction = parse(key, value)?,
            "probe_iterations" => self.probe.iterations = parse(key, value)?,
            "probe_learning_rate" => self.probe.learning_rate = parse(key, value)?,
            "probe_l2" => self.probe.l2 = parse(key, value)?,
            "frames" => self.synth.frames = parse(key, value)?,
            "sensor_noise" => self.synth.noise_sigma = parse(key, value)?,
            "interaction_radius" => self.synth.interaction_radius = parse(key, value)?,
            "yaw_range" => self.synth.yaw_range = parse(key, value)?,
            "tilt_range" => self.synth.tilt_range = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.mask_ratio >= 0.0 && self.mask_ratio <= 1.0) {
            return bad("mask_ratio must lie in [0, 1]");
        }
        if !(self.mask_temperature > 0.0 && self.mask_temperature.is_finite()) {
            return bad("mask_temperature must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.probe.train_fraction > 0.0 && self.probe.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        if !(self.probe.learning_rate > 0.0) || !(self.probe.l2 >= 0.0) {
            return bad("probe learning rate must be positive and l2 non-negative");
        }
        self.train.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.synth.validate().map_err(|e| Error::Config(e.to_string()))
    }
}
