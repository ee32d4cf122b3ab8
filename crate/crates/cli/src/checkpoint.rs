//! Checkpoint files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"NOGECKPT"              magic, 8 bytes
//! u32                      format version
//! u64                      header length in bytes
//! header                   UTF-8 JSON (CheckpointHeader)
//! f64 * n                  parameter tensors, header order, row-major
//! f64 * n, f64 * n         Adam first and second moments, when adam_step is set
//! ```

use std::path::Path;

use ndarray::Array2;
use noge_core::encoders::{EncoderConfig, EncoderKind, EncoderParams};
use noge_core::training::{AdamState, Model, ModelConfig};
use noge_core::{AdjacencyKind, DecoderKind, SelfLoopMode};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"NOGECKPT";
pub const FORMAT_VERSION: u32 = 1;

/// Shuffle streams are a pure function of `(seed, epoch)`, so this pins the
/// generator position exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngState {
    pub algorithm: String,
    pub seed: u64,
    pub next_stream: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub config_digest: String,
    pub encoder: EncoderConfig,
    pub decoder: DecoderKind,
    pub adjacency: AdjacencyKind,
    pub self_loop_mode: SelfLoopMode,
    pub inverse_relations: bool,
    pub num_entities: usize,
    pub num_relations: usize,
    /// Completed training epochs.
    pub epoch: u64,
    pub best_epoch: u64,
    pub best_valid_mrr: Option<f64>,
    pub rng: RngState,
    pub tensors: Vec<TensorInfo>,
    pub adam_step: Option<u64>,
}

impl CheckpointHeader {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            encoder: self.encoder,
            decoder: self.decoder,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: EncoderParams<f64>,
    pub adam: Option<AdamState<f64>>,
}

/// Names of the parameter tensors in declaration order.
pub fn tensor_names(encoder: &EncoderConfig) -> Vec<String> {
    let parts: &[&str] = match encoder.kind {
        EncoderKind::Gcn => &[""],
        EncoderKind::Qgnn => &[".a", ".b", ".c", ".d"],
        EncoderKind::DualQgnn => &[".q.a", ".q.b", ".q.c", ".q.d", ".p.a", ".p.b", ".p.c", ".p.d"],
    };
    let mut names: Vec<String> = parts.iter().map(|p| format!("embeddings{p}")).collect();
    for k in 0..encoder.num_layers {
        names.extend(parts.iter().map(|p| format!("layer{k}{p}")));
    }
    names
}

/// What the training loop knows when it writes a checkpoint.
pub struct CheckpointMeta {
    pub epoch: u64,
    pub best_epoch: u64,
    pub best_valid_mrr: Option<f64>,
}

impl Checkpoint {
    pub fn new(
        config: &RunConfig,
        model: &Model<f64>,
        adam: Option<&AdamState<f64>>,
        meta: CheckpointMeta,
    ) -> Self {
        let tensors = tensor_names(&model.config.encoder)
            .into_iter()
            .zip(model.params.tensors())
            .map(|(name, t)| TensorInfo {
                name,
                rows: t.nrows(),
                cols: t.ncols(),
            })
            .collect();
        Checkpoint {
            header: CheckpointHeader {
                config_digest: config.digest(),
                encoder: model.config.encoder,
                decoder: model.config.decoder,
                adjacency: config.adjacency,
                self_loop_mode: config.self_loop_mode,
                inverse_relations: config.inverse_relations,
                num_entities: model.num_entities,
                num_relations: model.num_relations,
                epoch: meta.epoch,
                best_epoch: meta.best_epoch,
                best_valid_mrr: meta.best_valid_mrr,
                rng: RngState {
                    algorithm: "chacha8".into(),
                    seed: config.train.seed,
                    next_stream: noge_core::rng::EPOCH_STREAM_BASE + meta.epoch + 1,
                },
                tensors,
                adam_step: adam.map(|a| a.step),
            },
            params: model.params.clone(),
            adam: adam.cloned(),
        }
    }

    pub fn model(&self) -> CliResult<Model<f64>> {
        Ok(Model::from_params(
            self.header.model_config(),
            self.header.num_entities,
            self.header.num_relations,
            self.params.clone(),
        )?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let floats = self.params.num_scalars() * if self.adam.is_some() { 3 } else { 1 };
        let mut out = Vec::with_capacity(20 + header.len() + 8 * floats);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        let mut put = |t: &Array2<f64>| {
            for v in t.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        };
        self.params.tensors().into_iter().for_each(&mut put);
        if let Some(a) = &self.adam {
            a.m.iter().chain(&a.v).for_each(&mut put);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> CliResult<Self> {
        let bad = |m: String| CliError::format(path, m);
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let body_start = 20usize
            .checked_add(usize::try_from(header_len).map_err(|_| bad("header length overflow".into()))?)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("truncated header".into()))?;
        let header: CheckpointHeader =
            serde_json::from_slice(&bytes[20..body_start]).map_err(|e| bad(format!("bad header: {e}")))?;

        let node_count = header.num_entities + header.num_relations;
        let mut params = EncoderParams::<f64>::zeros(&header.encoder, node_count);
        let expect: Vec<TensorInfo> = tensor_names(&header.encoder)
            .into_iter()
            .zip(params.tensors())
            .map(|(name, t)| TensorInfo {
                name,
                rows: t.nrows(),
                cols: t.ncols(),
            })
            .collect();
        if expect != header.tensors {
            return Err(bad("tensor table does not match the stored encoder settings".into()));
        }
        let n = params.num_scalars();
        let copies = if header.adam_step.is_some() { 3 } else { 1 };
        let body = &bytes[body_start..];
        if body.len() != 8 * n * copies {
            return Err(bad(format!("expected {} bytes of tensor data, found {}", 8 * n * copies, body.len())));
        }
        let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut fill = |t: &mut Array2<f64>| {
            for v in t.iter_mut() {
                *v = values.next().unwrap();
            }
        };
        params.tensors_mut().into_iter().for_each(&mut fill);
        let adam = match header.adam_step {
            Some(step) => {
                let mut state = AdamState::new(&params);
                state.m.iter_mut().for_each(&mut fill);
                state.v.iter_mut().for_each(&mut fill);
                state.step = step;
                Some(state)
            }
            None => None,
        };
        Ok(Checkpoint { header, params, adam })
    }

    /// Writes via a temporary file and rename, so readers never see a partial checkpoint.
    pub fn save(&self, path: &Path) -> CliResult<()> {
        crate::artifacts::write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    /// Refuses a checkpoint written under different model settings.
    pub fn check_digest(&self, config: &RunConfig, path: &Path) -> CliResult<()> {
        let want = config.digest();
        if self.header.config_digest != want {
            return Err(CliError::Usage(format!(
                "{}: checkpoint was written with different model settings (digest {} vs config {})",
                path.display(),
                &self.header.config_digest[..12.min(self.header.config_digest.len())],
                &want[..12]
            )));
        }
        Ok(())
    }
}
