//! Checkpoint directory: `manifest.json` plus one little-endian f64 file per tensor.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::encoder::EncoderParams;
use super::trainer::{EncoderPair, OfflineBranch, OnlineBranch, TrainConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "stjd-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 2],
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub step: u64,
    pub layout: String,
    pub in_channels: usize,
    pub config: TrainConfig,
    pub tensors: Vec<TensorEntry>,
}

const NAMES: [&str; 8] = [
    "online.w1",
    "online.w2",
    "online.projector",
    "offline.w1",
    "offline.w2",
    "offline.projector_k",
    "offline.projector_p",
    "adjacency",
];

fn tensors(pair: &EncoderPair) -> [&Array2<f64>; 8] {
    [
        &pair.online.encoder.w1,
        &pair.online.encoder.w2,
        &pair.online.projector,
        &pair.offline.encoder.w1,
        &pair.offline.encoder.w2,
        &pair.offline.projector_k,
        &pair.offline.projector_p,
        &pair.online.encoder.adjacency,
    ]
}

pub fn encode_tensor(a: &Array2<f64>) -> Vec<u8> {
    a.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub fn decode_tensor(bytes: &[u8], shape: [usize; 2]) -> Result<Array2<f64>> {
    let n = shape[0] * shape[1];
    if bytes.len() != n * 8 {
        return Err(Error::ShapeMismatch(format!(
            "tensor {shape:?} needs {} bytes, file has {}",
            n * 8,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Array2::from_shape_vec((shape[0], shape[1]), values).map_err(|e| Error::ShapeMismatch(e.to_string()))
}

pub fn save_checkpoint(
    dir: &Path,
    pair: &EncoderPair,
    cfg: &TrainConfig,
    step: u64,
    layout: &str,
) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (name, t) in NAMES.iter().zip(tensors(pair)) {
        let file = format!("{name}.bin");
        fs::write(dir.join(&file), encode_tensor(t))?;
        entries.push(TensorEntry {
            name: name.to_string(),
            shape: [t.nrows(), t.ncols()],
            file,
        });
    }
    let manifest = Manifest {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        step,
        layout: layout.into(),
        in_channels: pair.online.encoder.in_channels(),
        config: *cfg,
        tensors: entries,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn load_checkpoint(dir: &Path) -> Result<(EncoderPair, Manifest)> {
    let text = fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| Error::Io(format!("{}: {e}", dir.join("manifest.json").display())))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != CHECKPOINT_FORMAT || manifest.version != CHECKPOINT_VERSION {
        return Err(Error::ShapeMismatch(format!(
            "unsupported checkpoint {} v{}",
            manifest.format, manifest.version
        )));
    }
    let mut loaded: Vec<Array2<f64>> = Vec::with_capacity(NAMES.len());
    for name in NAMES {
        let entry = manifest
            .tensors
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::ShapeMismatch(format!("manifest lacks tensor {name}")))?;
        let bytes = fs::read(dir.join(&entry.file))?;
        loaded.push(decode_tensor(&bytes, entry.shape)?);
    }
    let mut it = loaded.into_iter();
    let mut next = || it.next().expect("eight tensors");
    let (w1, w2, proj, kw1, kw2, pk, pp, adjacency) =
        (next(), next(), next(), next(), next(), next(), next(), next());

    let d = w1.nrows();
    let cfg = &manifest.config;
    if w1.ncols() != manifest.in_channels
        || d != cfg.hidden
        || proj.dim() != (cfg.embed, d)
        || adjacency.nrows() != adjacency.ncols()
    {
        return Err(Error::ShapeMismatch(
            "checkpoint tensors disagree with the manifest".into(),
        ));
    }
    let pair = EncoderPair {
        online: OnlineBranch {
            encoder: EncoderParams {
                w1,
                w2,
                adjacency: adjacency.clone(),
            },
            projector: proj,
        },
        offline: OfflineBranch {
            encoder: EncoderParams {
                w1: kw1,
                w2: kw2,
                adjacency,
            },
            projector_k: pk,
            projector_p: pp,
        },
        alpha: cfg.alpha,
    };
    // reuses the momentum-shape check
    let mut probe = pair.clone();
    probe.alpha = 1.0;
    super::trainer::momentum_update(&mut probe)?;
    if pair.online.encoder.w2.dim() != (d, d) {
        return Err(Error::ShapeMismatch("w2 is not hidden x hidden".into()));
    }
    Ok((pair, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::JointLayout;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = TrainConfig::default();
        let pair = EncoderPair::new(3, JointLayout::ntu25().normalized_adjacency(), &cfg, 4);
        save_checkpoint(dir.path(), &pair, &cfg, 17, "ntu25").unwrap();
        let (back, manifest) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(back, pair);
        assert_eq!(manifest.step, 17);
    }

    #[test]
    fn truncated_tensor_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = TrainConfig::default();
        let pair = EncoderPair::new(3, JointLayout::ntu25().normalized_adjacency(), &cfg, 4);
        save_checkpoint(dir.path(), &pair, &cfg, 0, "ntu25").unwrap();
        let path = dir.path().join("online.w2.bin");
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(load_checkpoint(dir.path()), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn little_endian_layout() {
        let a = Array2::from_shape_vec((1, 2), vec![1.0, -2.5]).unwrap();
        let bytes = encode_tensor(&a);
        assert_eq!(&bytes[..8], &1.0f64.to_le_bytes());
        assert_eq!(decode_tensor(&bytes, [1, 2]).unwrap(), a);
        assert!(decode_tensor(&bytes, [2, 2]).is_err());
    }
}
