//! Training configuration: defaults, the key-value config file format, and
//! `--set key=value` overrides.
//!
//! Config files are plain text: one `key = value` per line, `#` comments,
//! optional `[section]` headers (cosmetic — keys are globally unique).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffusion::ScheduleKind;
use crate::error::ConfigError;

/// Which mechanism an experiment arm disables or substitutes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ablation {
    /// Diffusion-augmented contrastive learning with mixed hard negatives.
    Full,
    /// Contrastive term removed entirely.
    NoDiff,
    /// Plain uniform negatives instead of mixed hard negatives.
    NoNeg,
    /// Contrastive views from uniform random perturbation instead of the
    /// reverse chain.
    UniformNoise,
    /// Contrastive views from the VAE augmenter.
    Vae,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Full,
        Ablation::NoDiff,
        Ablation::NoNeg,
        Ablation::UniformNoise,
        Ablation::Vae,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoDiff => "no-diff",
            Ablation::NoNeg => "no-neg",
            Ablation::UniformNoise => "uniform-noise",
            Ablation::Vae => "vae",
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Ablation::Full),
            "no-diff" => Ok(Ablation::NoDiff),
            "no-neg" => Ok(Ablation::NoNeg),
            "uniform-noise" => Ok(Ablation::UniformNoise),
            "vae" => Ok(Ablation::Vae),
            other => Err(format!(
                "unknown ablation '{other}' (expected full, no-diff, no-neg, uniform-noise, vae)"
            )),
        }
    }
}

/// Everything the trainer needs; mirrors the config-file keys one to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    // data
    pub data_path: Option<String>,
    pub split_ratio: f64,
    pub synth_users: usize,
    pub synth_items: usize,
    pub synth_blocks: usize,
    pub synth_prob: f64,
    // graph encoder
    pub layers: usize,
    pub embed_dim: usize,
    pub neg_candidates: usize,
    pub include_layer_zero: bool,
    // diffusion
    pub diff_steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_schedule: ScheduleKind,
    pub heads: usize,
    /// Reverse-chain start for view inference; `None` means the full chain.
    pub t_start: Option<usize>,
    pub row_independent: bool,
    // contrastive
    pub tau: f64,
    pub raw_dot: bool,
    // trainer
    pub lambda: f64,
    pub lr: f64,
    pub diff_lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub diff_batch_size: usize,
    pub diff_pretrain_epochs: usize,
    pub weight_decay: f64,
    pub eval_every: usize,
    pub patience: usize,
    pub ablation: Ablation,
    pub noise_eps: f64,
    pub vae_latent: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            data_path: None,
            split_ratio: 0.8,
            synth_users: 32,
            synth_items: 32,
            synth_blocks: 2,
            synth_prob: 0.5,
            layers: 2,
            embed_dim: 32,
            neg_candidates: 8,
            include_layer_zero: false,
            diff_steps: 30,
            beta_min: 1e-5,
            beta_max: 2e-2,
            beta_schedule: ScheduleKind::Linear,
            heads: 4,
            t_start: None,
            row_independent: false,
            tau: 0.2,
            raw_dot: false,
            lambda: 0.2,
            lr: 1e-2,
            diff_lr: 1e-3,
            epochs: 200,
            batch_size: 256,
            diff_batch_size: 64,
            diff_pretrain_epochs: 0,
            weight_decay: 1e-4,
            eval_every: 10,
            patience: 10,
            ablation: Ablation::Full,
            noise_eps: 0.1,
            vae_latent: None,
            seed: 42,
        }
    }
}

impl TrainConfig {
    /// Effective reverse-chain start (defaults to the full chain).
    pub fn effective_t_start(&self) -> usize {
        self.t_start.unwrap_or(self.diff_steps).min(self.diff_steps)
    }

    /// Effective VAE latent dimension (defaults to half the embedding).
    pub fn effective_vae_latent(&self) -> usize {
        self.vae_latent.unwrap_or((self.embed_dim / 2).max(1))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = TrainConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if trimmed.starts_with('[') && trimmed.ends_with(']') {
                continue; // section headers are cosmetic
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::MalformedLine { line: lineno + 1 });
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Applies a single `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e: T::Err| ConfigError::BadValue {
                key: key.into(),
                value: value.into(),
                detail: e.to_string(),
            })
        }
        match key {
            "data" => self.data_path = Some(value.to_string()),
            "split-ratio" => self.split_ratio = parse(key, value)?,
            "synth-users" => self.synth_users = parse(key, value)?,
            "synth-items" => self.synth_items = parse(key, value)?,
            "synth-blocks" => self.synth_blocks = parse(key, value)?,
            "synth-prob" => self.synth_prob = parse(key, value)?,
            "layers" => self.layers = parse(key, value)?,
            "embed-dim" => self.embed_dim = parse(key, value)?,
            "neg-candidates" => self.neg_candidates = parse(key, value)?,
            "include-layer-zero" => self.include_layer_zero = parse(key, value)?,
            "diff-steps" => self.diff_steps = parse(key, value)?,
            "beta-min" => self.beta_min = parse(key, value)?,
            "beta-max" => self.beta_max = parse(key, value)?,
            "beta-schedule" => self.beta_schedule = parse(key, value)?,
            "heads" => self.heads = parse(key, value)?,
            "t-start" => self.t_start = Some(parse(key, value)?),
            "row-independent" => self.row_independent = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "raw-dot" => self.raw_dot = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "diff-lr" => self.diff_lr = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch-size" => self.batch_size = parse(key, value)?,
            "diff-batch-size" => self.diff_batch_size = parse(key, value)?,
            "diff-pretrain-epochs" => self.diff_pretrain_epochs = parse(key, value)?,
            "weight-decay" => self.weight_decay = parse(key, value)?,
            "eval-every" => self.eval_every = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "ablation" => self.ablation = parse(key, value)?,
            "noise-eps" => self.noise_eps = parse(key, value)?,
            "vae-latent" => self.vae_latent = Some(parse(key, value)?),
            "seed" => self.seed = parse(key, value)?,
            other => {
                return Err(ConfigError::UnknownKey { key: other.into() });
            }
        }
        Ok(())
    }

    /// Applies a list of `key=value` strings (the CLI `--set` flags).
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        for entry in overrides {
            let Some((key, value)) = entry.split_once('=') else {
                return Err(ConfigError::BadValue {
                    key: entry.clone(),
                    value: String::new(),
                    detail: "expected key=value".into(),
                });
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }
}
