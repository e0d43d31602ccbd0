//! Procedural NTU-25 actions with known prime joints.
//!
//! Every class drives one kinematic chain of a standing body. The joints that
//! chain moves are the "moving" set; static joints that come within
//! `interaction_radius` of a moving joint at some frame are the "interacting"
//! set. Together they form the ground-truth prime joints. View, body size,
//! timing and sensor noise are randomized per sequence.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{JointLayout, SkeletonSequence, NTU_JOINTS};

pub const DEFAULT_FRAMES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionClass {
    WaveRightHand,
    KickLeftLeg,
    Bow,
    Clap,
}

impl ActionClass {
    pub const ALL: [ActionClass; 4] = [
        ActionClass::WaveRightHand,
        ActionClass::KickLeftLeg,
        ActionClass::Bow,
        ActionClass::Clap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionClass::WaveRightHand => "wave-right-hand",
            ActionClass::KickLeftLeg => "kick-left-leg",
            ActionClass::Bow => "bow",
            ActionClass::Clap => "clap",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::UnknownClass(name.to_string()))
    }

    pub fn label(self) -> i64 {
        Self::ALL.iter().position(|&c| c == self).expect("listed") as i64
    }

    /// Joints driven by the class's motion.
    pub fn moving_joints(self) -> Vec<usize> {
        let mut j = match self {
            ActionClass::WaveRightHand => vec![10, 11, 23, 24],
            ActionClass::KickLeftLeg => vec![13, 14, 15],
            ActionClass::Bow => vec![1, 2, 3, 20, 4, 5, 6, 7, 21, 22, 8, 9, 10, 11, 23, 24],
            ActionClass::Clap => vec![6, 7, 21, 22, 10, 11, 23, 24],
        };
        j.sort_unstable();
        j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub frames: usize,
    /// Std-dev of per-coordinate sensor noise (metres).
    pub noise_sigma: f64,
    /// Static joints closer than this to a moving joint count as interacting.
    pub interaction_radius: f64,
    /// ...and whose distance to it varies by at least this much.
    pub interaction_variation: f64,
    /// Max camera yaw about the vertical axis (radians, symmetric).
    pub yaw_range: f64,
    /// Max camera tilt about the two horizontal axes (radians, symmetric).
    pub tilt_range: f64,
    pub scale_range: (f64, f64),
    /// Motion cycles per sequence.
    pub cycles_range: (f64, f64),
    /// Per-joint rest-pose jitter (metres).
    pub pose_jitter: f64,
    /// Max root offset in the ground plane (metres).
    pub root_offset: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            frames: DEFAULT_FRAMES,
            noise_sigma: 0.0003,
            interaction_radius: 0.15,
            interaction_variation: 0.02,
            yaw_range: PI / 4.0,
            tilt_range: 0.0,
            scale_range: (0.85, 1.15),
            cycles_range: (1.0, 2.0),
            pose_jitter: 0.01,
            root_offset: 0.1,
        }
    }
}

impl SynthOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.frames >= 2
            && self.noise_sigma >= 0.0
            && self.interaction_radius >= 0.0
            && self.interaction_variation >= 0.0
            && self.yaw_range >= 0.0
            && self.tilt_range >= 0.0
            && self.scale_range.0 > 0.0
            && self.scale_range.0 <= self.scale_range.1
            && self.cycles_range.0 > 0.0
            && self.cycles_range.0 <= self.cycles_range.1
            && self.pose_jitter >= 0.0
            && self.root_offset >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid generator options {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthSample {
    pub sequence: SkeletonSequence,
    pub class: ActionClass,
    pub moving_joints: Vec<usize>,
    /// Moving joints plus the static joints they come close to.
    pub prime_joints: Vec<usize>,
}

type Pose = [[f64; 3]; NTU_JOINTS];

/// Standing rest pose; x to the subject's left, y up, z forward.
fn rest_pose() -> Pose {
    let mut p = [[0.0; 3]; NTU_JOINTS];
    p[0] = [0.0, 0.0, 0.0];
    p[1] = [0.0, 0.25, 0.0];
    p[20] = [0.0, 0.5, 0.0];
    p[2] = [0.0, 0.58, 0.0];
    p[3] = [0.0, 0.72, 0.02];
    let left = [
        (4, [0.18, 0.48, 0.0]),
        (5, [0.22, 0.22, 0.0]),
        (6, [0.24, -0.02, 0.02]),
        (7, [0.25, -0.08, 0.03]),
        (21, [0.26, -0.15, 0.03]),
        (22, [0.22, -0.08, 0.07]),
        (12, [0.1, -0.02, 0.0]),
        (13, [0.11, -0.45, 0.02]),
        (14, [0.11, -0.85, 0.0]),
        (15, [0.11, -0.9, 0.1]),
    ];
    for (j, q) in left {
        p[j] = q;
    }
    let layout = JointLayout::ntu25();
    for &(l, r) in &layout.mirror {
        p[r] = [-p[l][0], p[l][1], p[l][2]];
    }
    p
}

fn rotate_about(p: [f64; 3], pivot: [f64; 3], axis: usize, angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let d = [p[0] - pivot[0], p[1] - pivot[1], p[2] - pivot[2]];
    let r = match axis {
        // pitch: y toward z
        0 => [d[0], c * d[1] - s * d[2], s * d[1] + c * d[2]],
        // yaw
        1 => [c * d[0] + s * d[2], d[1], -s * d[0] + c * d[2]],
        // roll: y toward x
        _ => [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]],
    };
    [r[0] + pivot[0], r[1] + pivot[1], r[2] + pivot[2]]
}

fn rotate_joints(pose: &mut Pose, joints: &[usize], pivot: usize, axis: usize, angle: f64) {
    let origin = pose[pivot];
    for &j in joints {
        pose[j] = rotate_about(pose[j], origin, axis, angle);
    }
}

/// Amplitude of the hand's flexing during a wave (metres).
const WAVE_WOBBLE: f64 = 0.02;

const LEFT_ARM: [usize; 6] = [5, 6, 7, 21, 22, 4];
const RIGHT_ARM: [usize; 6] = [9, 10, 11, 23, 24, 8];

/// Per-sequence motion parameters.
#[derive(Debug, Clone, Copy)]
struct Motion {
    amplitude: f64,
    omega: f64,
    phase: f64,
}

impl Motion {
    fn osc(&self, t: f64) -> f64 {
        (self.omega * t + self.phase).sin()
    }

    /// Smooth 0..1 excursion.
    fn lift(&self, t: f64) -> f64 {
        0.5 * (1.0 - (self.omega * t + self.phase).cos())
    }
}

fn pose_at(class: ActionClass, rest: &Pose, m: &Motion, t: f64) -> Pose {
    let mut p = *rest;
    match class {
        ActionClass::WaveRightHand => {
            // raise the upper arm sideways, elbow up, forearm swinging in the frontal plane
            rotate_joints(&mut p, &RIGHT_ARM[..5], 8, 2, 1.3);
            let elbow_chain = [10, 11, 23, 24];
            rotate_joints(&mut p, &elbow_chain, 9, 2, 1.2 + 0.6 * m.amplitude * m.osc(t));
            // the hand flexes while it swings: each joint wobbles on its own phase
            for (k, &j) in elbow_chain.iter().enumerate() {
                let lag = Motion { phase: m.phase - FRAC_PI_2 * (k + 1) as f64, omega: 2.0 * m.omega, ..*m };
                let w = WAVE_WOBBLE * m.amplitude * lag.osc(t);
                p[j][k % 3] += w;
            }
        }
        ActionClass::KickLeftLeg => {
            let k = m.lift(t) * m.amplitude;
            rotate_joints(&mut p, &[13, 14, 15], 12, 0, -1.1 * k);
            rotate_joints(&mut p, &[14, 15], 13, 0, 0.6 * k * (1.0 - k));
        }
        ActionClass::Bow => {
            let upper = [1, 2, 3, 20, 4, 5, 6, 7, 21, 22, 8, 9, 10, 11, 23, 24];
            rotate_joints(&mut p, &upper, 0, 0, 0.8 * m.lift(t) * m.amplitude);
        }
        ActionClass::Clap => {
            // arms forward, hands meeting in front of the chest
            let open = m.lift(t) * m.amplitude;
            rotate_joints(&mut p, &LEFT_ARM[..5], 4, 0, -1.3);
            rotate_joints(&mut p, &RIGHT_ARM[..5], 8, 0, -1.3);
            rotate_joints(&mut p, &LEFT_ARM[1..5], 5, 1, -1.0 + 0.7 * open);
            rotate_joints(&mut p, &RIGHT_ARM[1..5], 9, 1, 1.0 - 0.7 * open);
        }
    }
    p
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// One sequence of `class`, deterministic in `seed`.
pub fn generate(class: ActionClass, opts: &SynthOptions, seed: u64) -> Result<SynthSample> {
    opts.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_len = opts.frames;

    let mut rest = rest_pose();
    if opts.pose_jitter > 0.0 {
        let jitter = Normal::new(0.0, opts.pose_jitter).expect("positive sigma");
        for joint in rest.iter_mut().skip(1) {
            for c in joint.iter_mut() {
                *c += jitter.sample(&mut rng);
            }
        }
    }
    let cycles = uniform(&mut rng, opts.cycles_range);
    let motion = Motion {
        amplitude: uniform(&mut rng, (0.8, 1.2)),
        omega: 2.0 * PI * cycles / (t_len - 1) as f64,
        phase: uniform(&mut rng, (0.0, 2.0 * PI)),
    };
    let yaw = uniform(&mut rng, (-opts.yaw_range, opts.yaw_range));
    let pitch = uniform(&mut rng, (-opts.tilt_range, opts.tilt_range));
    let roll = uniform(&mut rng, (-opts.tilt_range, opts.tilt_range));
    let scale = uniform(&mut rng, opts.scale_range);
    let root = [
        uniform(&mut rng, (-opts.root_offset, opts.root_offset)),
        0.0,
        uniform(&mut rng, (-opts.root_offset, opts.root_offset)),
    ];

    let clean: Vec<Pose> = (0..t_len)
        .map(|t| pose_at(class, &rest, &motion, t as f64))
        .collect();

    let moving = class.moving_joints();
    let mut prime = moving.clone();
    for j in 0..NTU_JOINTS {
        if moving.contains(&j) {
            continue;
        }
        // close at some frame, and the gap actually changes
        let near = moving.iter().any(|&m| {
            let d: Vec<f64> = clean.iter().map(|p| dist(p[j], p[m])).collect();
            let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = d.iter().cloned().fold(0.0, f64::max);
            lo <= opts.interaction_radius && hi - lo >= opts.interaction_variation
        });
        if near {
            prime.push(j);
        }
    }
    prime.sort_unstable();

    let noise = (opts.noise_sigma > 0.0).then(|| Normal::new(0.0, opts.noise_sigma).expect("sigma"));
    let mut values = Array3::<f64>::zeros((3, NTU_JOINTS, t_len));
    for (t, pose) in clean.iter().enumerate() {
        for (v, &q) in pose.iter().enumerate() {
            let q = rotate_about(q, [0.0; 3], 1, yaw);
            let q = rotate_about(q, [0.0; 3], 0, pitch);
            let q = rotate_about(q, [0.0; 3], 2, roll);
            for c in 0..3 {
                let n = noise.map_or(0.0, |d| d.sample(&mut rng));
                values[[c, v, t]] = scale * q[c] + root[c] + n;
            }
        }
    }
    let mut sequence = SkeletonSequence::new(values, JointLayout::ntu25())?;
    sequence.action_label = Some(class.label());
    Ok(SynthSample {
        sequence,
        class,
        moving_joints: moving,
        prime_joints: prime,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub class: ActionClass,
    pub label: i64,
    pub seed: u64,
    pub moving_joints: Vec<usize>,
    pub prime_joints: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub layout: String,
    pub frames: usize,
    pub seed: u64,
    pub classes: Vec<ActionClass>,
    pub options: SynthOptions,
    pub entries: Vec<ManifestEntry>,
}

/// Per-sequence seed; class-major, so adding classes keeps earlier sequences.
fn sequence_seed(seed: u64, class: ActionClass, index: usize) -> u64 {
    crate::contrastive::item_seed(seed ^ (class.label() as u64 + 1).wrapping_mul(0xA24B_AED4_963E_E407), index)
}

/// `count` sequences per class.
pub fn generate_dataset(
    classes: &[ActionClass],
    count: usize,
    opts: &SynthOptions,
    seed: u64,
) -> Result<(Vec<SynthSample>, DatasetManifest)> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if classes.is_empty() {
        return Err(Error::InvalidArgument("no classes requested".into()));
    }
    let mut samples = Vec::with_capacity(classes.len() * count);
    let mut entries = Vec::with_capacity(classes.len() * count);
    for &class in classes {
        for i in 0..count {
            let s = sequence_seed(seed, class, i);
            let mut sample = generate(class, opts, s)?;
            sample.sequence.subject_id = Some(i as i64);
            entries.push(ManifestEntry {
                file: format!("{}_{:04}.json", class.name(), i),
                class,
                label: class.label(),
                seed: s,
                moving_joints: sample.moving_joints.clone(),
                prime_joints: sample.prime_joints.clone(),
            });
            samples.push(sample);
        }
    }
    let manifest = DatasetManifest {
        layout: "ntu25".into(),
        frames: opts.frames,
        seed,
        classes: classes.to_vec(),
        options: *opts,
        entries,
    };
    Ok((samples, manifest))
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn write_dataset(dir: &Path, samples: &[SynthSample], manifest: &DatasetManifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (sample, entry) in samples.iter().zip(&manifest.entries) {
        sample.sequence.write_json(&dir.join(&entry.file))?;
    }
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

/// Sequences with their labels, in manifest order.
pub fn read_dataset(dir: &Path) -> Result<(Vec<(SkeletonSequence, i64)>, DatasetManifest)> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)?;
    let data = manifest
        .entries
        .iter()
        .map(|e| Ok((SkeletonSequence::read_json(&dir.join(&e.file))?, e.label)))
        .collect::<Result<Vec<_>>>()?;
    Ok((data, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> SynthOptions {
        SynthOptions {
            noise_sigma: 0.0,
            pose_jitter: 0.0,
            ..SynthOptions::default()
        }
    }

    fn moved(seq: &SkeletonSequence) -> Vec<usize> {
        let x = seq.values();
        (0..seq.joints())
            .filter(|&v| {
                (1..seq.frames()).any(|t| (0..3).any(|c| (x[[c, v, t]] - x[[c, v, 0]]).abs() > 1e-9))
            })
            .collect()
    }

    #[test]
    fn bow_moves_only_the_upper_body() {
        let s = generate(ActionClass::Bow, &quiet(), 3).unwrap();
        assert_eq!(moved(&s.sequence), ActionClass::Bow.moving_joints());
        for leg in [12, 13, 14, 15, 16, 17, 18, 19, 0] {
            assert!(!s.moving_joints.contains(&leg));
        }
    }

    #[test]
    fn moving_sets_match_the_motion() {
        for class in ActionClass::ALL {
            let s = generate(class, &quiet(), 11).unwrap();
            assert_eq!(moved(&s.sequence), class.moving_joints(), "{}", class.name());
            assert_eq!(s.sequence.frames(), DEFAULT_FRAMES);
            assert_eq!(s.sequence.joints(), 25);
        }
    }

    #[test]
    fn prime_set_contains_moving_set() {
        for class in ActionClass::ALL {
            let s = generate(class, &SynthOptions::default(), 5).unwrap();
            assert!(s.moving_joints.iter().all(|j| s.prime_joints.contains(j)));
        }
        // the elbow pivots the swing but never comes within reach of the hand
        let s = generate(ActionClass::WaveRightHand, &SynthOptions::default(), 5).unwrap();
        assert_eq!(s.prime_joints, vec![10, 11, 23, 24]);
        // with a wider reach the kicking leg picks up the standing knee and foot
        let wide = SynthOptions {
            interaction_radius: 0.3,
            ..SynthOptions::default()
        };
        let s = generate(ActionClass::KickLeftLeg, &wide, 5).unwrap();
        assert!(s.prime_joints.contains(&17) && s.prime_joints.contains(&19));
        assert!(!s.moving_joints.contains(&17));
    }

    #[test]
    fn deterministic() {
        let a = generate(ActionClass::Clap, &SynthOptions::default(), 9).unwrap();
        let b = generate(ActionClass::Clap, &SynthOptions::default(), 9).unwrap();
        assert_eq!(a.sequence, b.sequence);
        let c = generate(ActionClass::Clap, &SynthOptions::default(), 10).unwrap();
        assert_ne!(a.sequence, c.sequence);
    }

    #[test]
    fn class_names_round_trip() {
        for class in ActionClass::ALL {
            assert_eq!(ActionClass::from_name(class.name()).unwrap(), class);
        }
        assert!(matches!(ActionClass::from_name("jump"), Err(Error::UnknownClass(_))));
    }

    #[test]
    fn zero_count_rejected() {
        assert!(generate_dataset(&[ActionClass::Bow], 0, &SynthOptions::default(), 1).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (samples, manifest) =
            generate_dataset(&[ActionClass::Bow, ActionClass::Clap], 2, &SynthOptions::default(), 4).unwrap();
        write_dataset(dir.path(), &samples, &manifest).unwrap();
        let (back, m2) = read_dataset(dir.path()).unwrap();
        assert_eq!(m2, manifest);
        assert_eq!(back.len(), 4);
        assert_eq!(back[2].1, ActionClass::Clap.label());
        assert_eq!(back[0].0, samples[0].sequence);
    }
}
