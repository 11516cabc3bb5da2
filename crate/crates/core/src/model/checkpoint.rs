//! Checkpoint serialization: a fixed-layout JSON header (config, array
//! manifest with shapes and offsets) followed by a single little-endian
//! 32-bit float blob. Round trips reproduce predictions bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArchitectureConfig, Model};
use crate::error::{Error, Result};
use crate::labels::N_CLASSES;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ECGDNN01";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub best_epoch: usize,
    pub val_loss: f64,
    pub rng_seed: u64,
}

impl Default for TrainMeta {
    fn default() -> Self {
        TrainMeta {
            best_epoch: 0,
            val_loss: f64::INFINITY,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
    /// Offset into the blob in f32 units.
    offset: usize,
    len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: ArchitectureConfig,
    bn_momentum: f64,
    bn_epsilon: f64,
    thresholds: Vec<f32>,
    metadata: TrainMeta,
    arrays: Vec<ArrayEntry>,
}

/// A trained model plus per-class decision thresholds and training metadata.
#[derive(Debug, Clone)]
pub struct ModelCheckpoint {
    pub model: Model<f32>,
    pub thresholds: [f32; N_CLASSES],
    pub metadata: TrainMeta,
}

impl ModelCheckpoint {
    pub fn new(model: Model<f32>, thresholds: [f32; N_CLASSES], metadata: TrainMeta) -> Self {
        ModelCheckpoint {
            model,
            thresholds,
            metadata,
        }
    }
}

/// Arrays in serialization order: learnable parameters then BN running stats.
fn collect_arrays(model: &Model<f32>) -> Vec<(String, Vec<usize>, Vec<f32>)> {
    let mut arrays = Vec::new();
    model.visit_params(&mut |name, data| {
        arrays.push((
            name.to_string(),
            shape_for(model, name, data.len()),
            data.to_vec(),
        ));
    });
    model.visit_running_stats(&mut |name, data| {
        arrays.push((name.to_string(), vec![data.len()], data.to_vec()));
    });
    arrays
}

fn shape_for(model: &Model<f32>, name: &str, len: usize) -> Vec<usize> {
    // Convolution weights are [out, in, k]; dense weights [in, out]; all else flat.
    if name == "stem.weight" {
        let c = &model.stem;
        return vec![c.out_channels, c.in_channels, c.kernel_len];
    }
    if name == "head.weight" {
        return vec![model.head.in_features, model.head.out_features];
    }
    for (i, b) in model.blocks.iter().enumerate() {
        if name == format!("block{i}.conv1.weight") {
            return vec![
                b.conv1.out_channels,
                b.conv1.in_channels,
                b.conv1.kernel_len,
            ];
        }
        if name == format!("block{i}.conv2.weight") {
            return vec![
                b.conv2.out_channels,
                b.conv2.in_channels,
                b.conv2.kernel_len,
            ];
        }
        if let Some(sc) = &b.skip_conv {
            if name == format!("block{i}.skip.weight") {
                return vec![sc.out_channels, sc.in_channels, sc.kernel_len];
            }
        }
    }
    vec![len]
}

pub fn save(checkpoint: &ModelCheckpoint, path: &Path) -> Result<()> {
    let arrays = collect_arrays(&checkpoint.model);
    let mut entries = Vec::with_capacity(arrays.len());
    let mut offset = 0usize;
    for (name, shape, data) in &arrays {
        entries.push(ArrayEntry {
            name: name.clone(),
            shape: shape.clone(),
            offset,
            len: data.len(),
        });
        offset += data.len();
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        config: checkpoint.model.config.clone(),
        bn_momentum: checkpoint
            .model
            .blocks
            .first()
            .map_or(crate::nn::BN_MOMENTUM, |b| b.bn1.momentum),
        bn_epsilon: checkpoint
            .model
            .blocks
            .first()
            .map_or(crate::nn::BN_EPSILON, |b| b.bn1.epsilon),
        thresholds: checkpoint.thresholds.to_vec(),
        metadata: checkpoint.metadata.clone(),
        arrays: entries,
    };
    let header_bytes = serde_json::to_vec(&header)?;

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for (_, _, data) in &arrays {
        for v in data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ModelCheckpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::CorruptCheckpoint("file shorter than magic".into()))?;
    if &magic[..6] != b"ECGDNN" {
        return Err(Error::CorruptCheckpoint("bad magic".into()));
    }
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::UnsupportedVersion(
            String::from_utf8_lossy(&magic).into_owned(),
        ));
    }
    let mut len_bytes = [0u8; 8];
    r.read_exact(&mut len_bytes)
        .map_err(|_| Error::CorruptCheckpoint("missing header length".into()))?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)
        .map_err(|_| Error::CorruptCheckpoint("truncated header".into()))?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::CorruptCheckpoint(format!("header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(format!(
            "format_version {}",
            header.format_version
        )));
    }
    if header.thresholds.len() != header.config.n_classes {
        return Err(Error::CorruptCheckpoint("threshold count mismatch".into()));
    }

    let total: usize = header.arrays.iter().map(|a| a.len).sum();
    let mut blob_bytes = vec![0u8; total * 4];
    r.read_exact(&mut blob_bytes)
        .map_err(|_| Error::CorruptCheckpoint("truncated blob".into()))?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::CorruptCheckpoint("trailing bytes after blob".into()));
    }
    let blob: Vec<f32> = blob_bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();

    let mut model: Model<f32> = Model::build(&header.config, 0);
    for b in &mut model.blocks {
        b.bn1.momentum = header.bn_momentum;
        b.bn1.epsilon = header.bn_epsilon;
        b.bn2.momentum = header.bn_momentum;
        b.bn2.epsilon = header.bn_epsilon;
    }

    let lookup: std::collections::HashMap<&str, &ArrayEntry> =
        header.arrays.iter().map(|a| (a.name.as_str(), a)).collect();
    let mut fill_error: Option<Error> = None;
    let mut fill = |name: &str, dest: &mut Vec<f32>| {
        if fill_error.is_some() {
            return;
        }
        match lookup.get(name) {
            Some(entry) if entry.len == dest.len() => {
                dest.copy_from_slice(&blob[entry.offset..entry.offset + entry.len]);
            }
            Some(entry) => {
                fill_error = Some(Error::CorruptCheckpoint(format!(
                    "array {name}: expected {} values, manifest has {}",
                    dest.len(),
                    entry.len
                )));
            }
            None => {
                fill_error = Some(Error::CorruptCheckpoint(format!("missing array {name}")));
            }
        }
    };
    model.visit_params_mut(&mut fill);
    model.visit_running_stats_mut(&mut fill);
    if let Some(e) = fill_error {
        return Err(e);
    }

    let mut thresholds = [0.5f32; N_CLASSES];
    for (t, v) in thresholds.iter_mut().zip(&header.thresholds) {
        *t = *v;
    }
    Ok(ModelCheckpoint {
        model,
        thresholds,
        metadata: header.metadata,
    })
}
