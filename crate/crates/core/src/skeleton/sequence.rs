use std::path::Path;

use ndarray::{s, Array3};
use serde::{Deserialize, Serialize};

use super::layout::JointLayout;
use crate::error::{Error, Result};

/// A single-person skeleton sequence stored channels x joints x frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    values: Array3<f64>,
    layout: JointLayout,
    pub subject_id: Option<i64>,
    pub action_label: Option<i64>,
    pub person_index: usize,
}

impl SkeletonSequence {
    pub fn new(values: Array3<f64>, layout: JointLayout) -> Result<Self> {
        let (c, v, t) = values.dim();
        if c == 0 || v == 0 {
            return Err(Error::InvalidSequence(format!("shape {c}x{v}x{t}")));
        }
        if t == 0 {
            return Err(Error::EmptySequence);
        }
        if layout.joint_count() != v {
            return Err(Error::InvalidSequence(format!(
                "layout {} has {} joints, values have {v}",
                layout.name,
                layout.joint_count()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput("skeleton values"));
        }
        Ok(Self {
            values,
            layout,
            subject_id: None,
            action_label: None,
            person_index: 0,
        })
    }

    /// Builds a sequence with a layout-free joint set.
    pub fn from_values(values: Array3<f64>) -> Result<Self> {
        let v = values.dim().1;
        Self::new(values, JointLayout::generic(v))
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn layout(&self) -> &JointLayout {
        &self.layout
    }

    pub fn channels(&self) -> usize {
        self.values.dim().0
    }

    pub fn joints(&self) -> usize {
        self.values.dim().1
    }

    pub fn frames(&self) -> usize {
        self.values.dim().2
    }

    /// Replaces the values, keeping layout and metadata.
    pub fn with_values(&self, values: Array3<f64>) -> Result<Self> {
        let mut out = Self::new(values, self.layout.clone())?;
        out.subject_id = self.subject_id;
        out.action_label = self.action_label;
        out.person_index = self.person_index;
        Ok(out)
    }

    /// Linear interpolation along time onto `target_frames` uniformly spaced
    /// points spanning the original `[0, T-1]`.
    pub fn resample(&self, target_frames: usize) -> Result<Self> {
        self.with_values(resample_values(&self.values, target_frames)?)
    }

    /// Subtracts the frame-0 position of `reference_joint` from every joint in every frame.
    pub fn center(&self, reference_joint: usize) -> Result<Self> {
        let v = self.joints();
        if reference_joint >= v {
            return Err(Error::IndexOutOfBounds {
                index: reference_joint,
                len: v,
            });
        }
        let origin = self.values.slice(s![.., reference_joint, 0]).to_owned();
        let mut values = self.values.clone();
        for (c, mut plane) in values.outer_iter_mut().enumerate() {
            plane.mapv_inplace(|x| x - origin[c]);
        }
        self.with_values(values)
    }

    pub fn to_json(&self) -> SequenceJson {
        let (c, v, t) = self.values.dim();
        SequenceJson {
            shape: [c, v, t],
            layout: self.layout.name.clone(),
            values: self.values.iter().copied().collect(),
            subject_id: self.subject_id,
            action_label: self.action_label,
            person_index: Some(self.person_index),
        }
    }

    pub fn from_json(doc: SequenceJson) -> Result<Self> {
        let [c, v, t] = doc.shape;
        if doc.values.len() != c * v * t {
            return Err(Error::InvalidSequence(format!(
                "shape {c}x{v}x{t} needs {} values, got {}",
                c * v * t,
                doc.values.len()
            )));
        }
        let layout = JointLayout::by_name(&doc.layout, v)?;
        let values = Array3::from_shape_vec((c, v, t), doc.values)
            .map_err(|e| Error::InvalidSequence(e.to_string()))?;
        let mut seq = Self::new(values, layout)?;
        seq.subject_id = doc.subject_id;
        seq.action_label = doc.action_label;
        seq.person_index = doc.person_index.unwrap_or(0);
        Ok(seq)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("sequence serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(serde_json::from_str(text)?)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// Wire form of a sequence: `values` are row-major over `[C, V, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceJson {
    pub shape: [usize; 3],
    pub layout: String,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_id: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_label: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub person_index: Option<usize>,
}

pub(crate) fn resample_values(values: &Array3<f64>, target_frames: usize) -> Result<Array3<f64>> {
    let (c, v, t) = values.dim();
    if t == 0 {
        return Err(Error::EmptySequence);
    }
    if target_frames == 0 {
        return Err(Error::InvalidArgument("target_frames must be at least 1".into()));
    }
    let mut out = Array3::<f64>::zeros((c, v, target_frames));
    for k in 0..target_frames {
        // k * (t-1) is an exact integer, so identity resampling hits source frames exactly.
        let pos = if target_frames == 1 {
            0.0
        } else {
            (k * (t - 1)) as f64 / (target_frames - 1) as f64
        };
        let lo = (pos.floor() as usize).min(t - 1);
        let hi = (lo + 1).min(t - 1);
        let frac = pos - lo as f64;
        for ci in 0..c {
            for vi in 0..v {
                let a = values[[ci, vi, lo]];
                out[[ci, vi, k]] = if frac == 0.0 {
                    a
                } else {
                    a + (values[[ci, vi, hi]] - a) * frac
                };
            }
        }
    }
    Ok(out)
}
