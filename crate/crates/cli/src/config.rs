//! Run configuration: a TOML file with defaults for every field, overridden by flags.

use std::path::{Path, PathBuf};

use noge_core::decoders::DecoderKind;
use noge_core::encoders::{EncoderConfig, EncoderKind};
use noge_core::training::{ModelConfig, TrainConfig};
use noge_core::{AdjacencyKind, SelfLoopMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_dir: PathBuf,
    pub output_dir: PathBuf,
    pub encoder: EncoderConfig,
    pub decoder: DecoderKind,
    pub adjacency: AdjacencyKind,
    pub self_loop_mode: SelfLoopMode,
    /// Add `(t, r⁻¹, h)` for every triple; head queries then run as tail queries.
    pub inverse_relations: bool,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("output"),
            encoder: EncoderConfig::default(),
            decoder: DecoderKind::Quate,
            adjacency: AdjacencyKind::Weighted,
            self_loop_mode: SelfLoopMode::PaperLiteral,
            inverse_relations: true,
            train: TrainConfig::default(),
        }
    }
}

/// Settings that change what a checkpoint's parameters mean.
#[derive(Serialize)]
struct DigestInput<'a> {
    encoder: &'a EncoderConfig,
    decoder: DecoderKind,
    adjacency: AdjacencyKind,
    self_loop_mode: SelfLoopMode,
    inverse_relations: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::format(path, format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            encoder: self.encoder,
            decoder: self.decoder,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.model().validate()?;
        self.train.validate()?;
        Ok(())
    }

    /// SHA-256 (hex) over the encoder, decoder, adjacency, self-loop and inverse settings.
    pub fn digest(&self) -> String {
        let input = DigestInput {
            encoder: &self.encoder,
            decoder: self.decoder,
            adjacency: self.adjacency,
            self_loop_mode: self.self_loop_mode,
            inverse_relations: self.inverse_relations,
        };
        let bytes = serde_json::to_vec(&input).expect("digest input serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Flag values that replace config-file values when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dataset_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub encoder: Option<EncoderKind>,
    pub decoder: Option<DecoderKind>,
    pub adjacency: Option<AdjacencyKind>,
    pub self_loop_mode: Option<SelfLoopMode>,
    pub dim: Option<usize>,
    pub layers: Option<usize>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub eval_every: Option<usize>,
    pub label_smoothing: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        fn set<T: Clone>(dst: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *dst = v.clone();
            }
        }
        set(&mut cfg.dataset_dir, &self.dataset_dir);
        set(&mut cfg.output_dir, &self.output_dir);
        set(&mut cfg.encoder.kind, &self.encoder);
        set(&mut cfg.decoder, &self.decoder);
        set(&mut cfg.adjacency, &self.adjacency);
        set(&mut cfg.self_loop_mode, &self.self_loop_mode);
        set(&mut cfg.encoder.dim, &self.dim);
        set(&mut cfg.encoder.num_layers, &self.layers);
        set(&mut cfg.train.learning_rate, &self.lr);
        set(&mut cfg.train.epochs, &self.epochs);
        set(&mut cfg.train.batch_size, &self.batch_size);
        set(&mut cfg.train.eval_every, &self.eval_every);
        set(&mut cfg.train.label_smoothing, &self.label_smoothing);
        set(&mut cfg.train.seed, &self.seed);
    }
}

/// Config file (or defaults) with flag overrides applied, validated.
pub fn resolve(config_path: Option<&Path>, overrides: &Overrides) -> CliResult<RunConfig> {
    let mut cfg = match config_path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}
