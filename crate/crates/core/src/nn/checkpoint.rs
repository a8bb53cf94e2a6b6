//! Checkpoint layout (little-endian):
//!
//! ```text
//! magic "MLPK" | version u32 = 1 | meta_len u32 | meta JSON
//! per tensor: len u64 | len × f64
//! SHA-256 of everything above (32 bytes)
//! ```
//!
//! The JSON carries the config, seed, dimensions and class names. Tensors
//! appear in layer order as w, b, then (if present) γ, β, running mean,
//! running variance.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BatchNorm, Layer, MlpConfig, MlpModel, NnError};

const MAGIC: &[u8; 4] = b"MLPK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: MlpModel,
    pub class_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    config: MlpConfig,
    seed: u64,
    input_dim: usize,
    num_classes: usize,
    class_names: Vec<String>,
}

fn put(out: &mut Vec<u8>, values: &[f64]) {
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let meta = serde_json::to_vec(&Meta {
            config: m.config.clone(),
            seed: m.seed,
            input_dim: m.input_dim,
            num_classes: m.num_classes,
            class_names: self.class_names.clone(),
        })
        .expect("checkpoint metadata serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        for layer in &m.layers {
            put(&mut out, layer.w.as_slice().unwrap());
            put(&mut out, layer.b.as_slice().unwrap());
            if let Some(bn) = &layer.bn {
                for t in [&bn.gamma, &bn.beta, &bn.running_mean, &bn.running_var] {
                    put(&mut out, t.as_slice().unwrap());
                }
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        let corrupt = |m: &str| NnError::CorruptCheckpoint(m.to_string());
        if bytes.len() < 12 + 32 || &bytes[..4] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(corrupt("checksum mismatch"));
        }
        let u32_at = |pos: usize| u32::from_le_bytes(body[pos..pos + 4].try_into().unwrap());
        if u32_at(4) != VERSION {
            return Err(corrupt("unsupported version"));
        }
        let meta_len = u32_at(8) as usize;
        let meta: Meta = body
            .get(12..12 + meta_len)
            .and_then(|b| serde_json::from_slice(b).ok())
            .ok_or_else(|| corrupt("bad metadata"))?;
        let mut pos = 12 + meta_len;
        let mut take = |expected: usize| -> Result<Vec<f64>, NnError> {
            let len_bytes = body.get(pos..pos + 8).ok_or_else(|| corrupt("truncated"))?;
            let len = u64::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
            if len != expected {
                return Err(corrupt("tensor shape mismatch"));
            }
            let raw = body
                .get(pos + 8..pos + 8 + len * 8)
                .ok_or_else(|| corrupt("truncated"))?;
            pos += 8 + len * 8;
            Ok(raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        meta.config.validate()?;
        let mut dims = vec![meta.input_dim];
        dims.extend(meta.config.layer_sizes());
        dims.push(meta.num_classes);
        let mut layers = Vec::new();
        for (i, pair) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let w = Array2::from_shape_vec((fan_in, fan_out), take(fan_in * fan_out)?)
                .map_err(|_| corrupt("tensor shape mismatch"))?;
            let b = Array1::from(take(fan_out)?);
            let hidden = i + 2 < dims.len();
            let bn = if hidden && meta.config.with_batch_norm {
                Some(BatchNorm {
                    gamma: Array1::from(take(fan_out)?),
                    beta: Array1::from(take(fan_out)?),
                    running_mean: Array1::from(take(fan_out)?),
                    running_var: Array1::from(take(fan_out)?),
                })
            } else {
                None
            };
            layers.push(Layer { w, b, bn });
        }
        if pos != body.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Checkpoint {
            model: MlpModel {
                input_dim: meta.input_dim,
                num_classes: meta.num_classes,
                layers,
                config: meta.config,
                seed: meta.seed,
            },
            class_names: meta.class_names,
        })
    }

    pub fn checksum(&self) -> String {
        crate::util::sha256_hex(&self.to_bytes())
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<(), NnError> {
    crate::util::write_atomic(path, &checkpoint.to_bytes())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NnError> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::build_mlp;

    #[test]
    fn round_trip_and_tamper() {
        for bn in [true, false] {
            let config = MlpConfig {
                hidden_layers: 2,
                first_layer_size: 8,
                layer_ratio: 0.5,
                with_batch_norm: bn,
                ..MlpConfig::default()
            };
            let model = build_mlp(&config, 5, 3, 11).unwrap();
            let ck = Checkpoint {
                model,
                class_names: vec!["a".into(), "b".into(), "c".into()],
            };
            let mut bytes = ck.to_bytes();
            assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
            bytes[40] ^= 1;
            assert!(Checkpoint::from_bytes(&bytes).is_err());
        }
    }
}
