//! Flat `key = value` pipeline configuration with dotted section keys.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use eegdd_core::classic::ridge::default_lambda_grid;
use eegdd_core::dsp::features::{BandDefinition, BandTable, BAND_NAMES};
use eegdd_core::dsp::fft::{WindowFunction, FRAME_LEN};
use eegdd_core::synth::GeneratorProfile;
use eegdd_core::{ChannelLayout, FeatureConfig, State, WindowParams};
use eegdd_neural::{ModelKind, TrainConfig};

use crate::error::{PipelineError, Result};

/// The five compared classifiers, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelName {
    Euclidean1nn,
    Rocket,
    Resnet,
    Fcn,
    FcnLstm,
}

impl ModelName {
    pub const ALL: [ModelName; 5] = [
        ModelName::Euclidean1nn,
        ModelName::Rocket,
        ModelName::Resnet,
        ModelName::Fcn,
        ModelName::FcnLstm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Euclidean1nn => "euclidean1nn",
            ModelName::Rocket => "rocket",
            ModelName::Resnet => "resnet",
            ModelName::Fcn => "fcn",
            ModelName::FcnLstm => "fcn_lstm",
        }
    }

    pub fn neural_kind(self) -> Option<ModelKind> {
        match self {
            ModelName::Resnet => Some(ModelKind::Resnet),
            ModelName::Fcn => Some(ModelKind::Fcn),
            ModelName::FcnLstm => Some(ModelKind::FcnLstm),
            _ => None,
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        match norm.as_str() {
            "euclidean1nn" | "1nn" | "euclidean_1nn" => Ok(ModelName::Euclidean1nn),
            "rocket" => Ok(ModelName::Rocket),
            "resnet" => Ok(ModelName::Resnet),
            "fcn" => Ok(ModelName::Fcn),
            "fcn_lstm" | "lrcn" => Ok(ModelName::FcnLstm),
            _ => Err(format!("unknown model `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Base seed: corpus generation, the participant split, and repetition
    /// `r` of every model uses `seed + r`.
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Task → state map; the synthetic default when unset.
    pub label_map: Option<PathBuf>,
    pub generator: GeneratorProfile,
    pub split: (usize, usize, usize),
    pub features: FeatureConfig,
    pub window: WindowParams,
    pub sequence_len: usize,
    pub models: Vec<ModelName>,
    pub repetitions: usize,
    pub rocket_kernels: usize,
    pub ridge_lambdas: Vec<f64>,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: PathBuf::from("out"),
            label_map: None,
            generator: GeneratorProfile::default(),
            split: (4, 1, 1),
            features: FeatureConfig::default(),
            window: WindowParams::default(),
            sequence_len: 4,
            models: ModelName::ALL.to_vec(),
            repetitions: 5,
            rocket_kernels: 10_000,
            ridge_lambdas: default_lambda_grid(),
            train: TrainConfig::default(),
        }
    }
}

/// Every accepted key, for diagnostics and documentation.
pub fn known_keys() -> Vec<String> {
    let mut keys: Vec<String> = [
        "seed",
        "paths.out_dir",
        "paths.label_map",
        "synth.participants",
        "synth.duration_s",
        "synth.distracted_fraction",
        "synth.noise_sigma",
        "synth.block_min_s",
        "synth.block_max_s",
        "synth.base_amplitudes",
        "split.train",
        "split.val",
        "split.test",
        "filter.low_hz",
        "filter.high_hz",
        "stft.window_len",
        "stft.stride",
        "stft.window",
        "window.len",
        "window.hop",
        "window.sequence",
        "experiment.models",
        "experiment.repetitions",
        "rocket.kernels",
        "ridge.lambdas",
        "train.batch_size",
        "train.max_epochs",
        "train.learning_rate",
        "train.beta1",
        "train.beta2",
        "train.epsilon",
        "train.patience",
        "train.restore_best",
        "train.class_weights",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for b in BAND_NAMES {
        keys.push(format!("bands.{b}"));
    }
    for state in ["distracted", "focused"] {
        for r in ChannelLayout::emotiv_epoc().regions() {
            for b in BAND_NAMES {
                keys.push(format!("synth.{state}.{}.{b}", r.name));
            }
        }
    }
    keys
}

fn parse_num<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("`{value}` is not a valid number"))
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value.split(',').map(|v| parse_num(v.trim())).collect()
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("`{value}` is not a boolean")),
    }
}

impl PipelineConfig {
    /// Parse a config file's text over the defaults.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut config = Self::default();
        config.apply_text(text, origin)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_sources(Some(path), &[])
    }

    /// Defaults, then the file, then `key=value` overrides; validated once
    /// at the end so overrides can repair an incomplete file.
    pub fn from_sources(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut config = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| PipelineError::config("config", format!("{}: {e}", path.display())))?;
            config.apply_text(&text, &path.display().to_string())?;
        }
        config.apply_overrides(overrides)?;
        config.validate()?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("{origin}:{}", i + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::config("config", format!("{at}: expected `key = value`")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(PipelineError::config("config", format!("{at}: duplicate key `{key}`")));
            }
            self.set(key, value.trim())
                .map_err(|m| PipelineError::config("config", format!("{at}: {m}")))?;
        }
        Ok(())
    }

    /// Apply `key=value` overrides (command-line flags) after the file.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| PipelineError::config("config", format!("--set {o}: expected key=value")))?;
            self.set(key.trim(), value.trim())
                .map_err(|m| PipelineError::config("config", format!("--set {o}: {m}")))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let g = &mut self.generator;
        match key {
            "seed" => self.seed = parse_num(value)?,
            "paths.out_dir" => self.out_dir = PathBuf::from(value),
            "paths.label_map" => {
                self.label_map = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            "synth.participants" => g.participants = parse_num(value)?,
            "synth.duration_s" => g.duration_s = parse_num(value)?,
            "synth.distracted_fraction" => g.distracted_fraction = parse_num(value)?,
            "synth.noise_sigma" => g.noise_sigma = parse_num(value)?,
            "synth.block_min_s" => g.block_duration_s.0 = parse_num(value)?,
            "synth.block_max_s" => g.block_duration_s.1 = parse_num(value)?,
            "synth.base_amplitudes" => {
                let v: Vec<f64> = parse_list(value)?;
                g.base_amplitudes = v
                    .try_into()
                    .map_err(|_| "expected five comma-separated amplitudes".to_string())?;
            }
            "split.train" => self.split.0 = parse_num(value)?,
            "split.val" => self.split.1 = parse_num(value)?,
            "split.test" => self.split.2 = parse_num(value)?,
            "filter.low_hz" => self.features.filter_lo = parse_num(value)?,
            "filter.high_hz" => self.features.filter_hi = parse_num(value)?,
            "stft.window_len" => {
                let n: usize = parse_num(value)?;
                if n != FRAME_LEN {
                    return Err(format!("only {FRAME_LEN}-sample frames are supported"));
                }
            }
            "stft.stride" => self.features.stride = parse_num(value)?,
            "stft.window" => {
                self.features.window = WindowFunction::parse(value)
                    .ok_or_else(|| format!("unknown window function `{value}`"))?;
            }
            "window.len" => self.window.len = parse_num(value)?,
            "window.hop" => self.window.hop = parse_num(value)?,
            "window.sequence" => self.sequence_len = parse_num(value)?,
            "experiment.models" => {
                self.models = value
                    .split(',')
                    .map(|m| m.parse::<ModelName>())
                    .collect::<std::result::Result<_, _>>()?;
            }
            "experiment.repetitions" => self.repetitions = parse_num(value)?,
            "rocket.kernels" => self.rocket_kernels = parse_num(value)?,
            "ridge.lambdas" => self.ridge_lambdas = parse_list(value)?,
            "train.batch_size" => self.train.batch_size = parse_num(value)?,
            "train.max_epochs" => self.train.max_epochs = parse_num(value)?,
            "train.learning_rate" => self.train.learning_rate = parse_num(value)?,
            "train.beta1" => self.train.beta1 = parse_num(value)?,
            "train.beta2" => self.train.beta2 = parse_num(value)?,
            "train.epsilon" => self.train.epsilon = parse_num(value)?,
            "train.patience" => self.train.patience = parse_num(value)?,
            "train.restore_best" => self.train.restore_best = parse_bool(value)?,
            "train.class_weights" => {
                self.train.class_weights = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    let v: Vec<f64> = parse_list(value)?;
                    Some(v.try_into().map_err(|_| {
                        "expected `none` or two weights (distracted,focused)".to_string()
                    })?)
                };
            }
            _ => return self.set_table_key(key, value),
        }
        Ok(())
    }

    fn set_table_key(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let unknown = || format!("unknown key `{key}`");
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["bands", name] => {
                let b = BAND_NAMES.iter().position(|n| n == name).ok_or_else(unknown)?;
                let v: Vec<f64> = parse_list(value)?;
                let [lo, hi]: [f64; 2] = v
                    .try_into()
                    .map_err(|_| "expected `low,high` in Hz".to_string())?;
                let mut bands = self.features.bands.bands().to_vec();
                bands[b] = BandDefinition::new(name, lo, hi);
                self.features.bands = BandTable::new(bands).map_err(|e| e.to_string())?;
                Ok(())
            }
            ["synth", state, region, band] => {
                let s: State = state.parse().map_err(|_| unknown())?;
                let layout = ChannelLayout::emotiv_epoc();
                let r = layout
                    .regions()
                    .iter()
                    .position(|r| r.name == *region)
                    .ok_or_else(unknown)?;
                let b = BAND_NAMES.iter().position(|n| n == band).ok_or_else(unknown)?;
                self.generator.multipliers[s.index()][r][b] = parse_num(value)?;
                Ok(())
            }
            _ => Err(unknown()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::config("config", m));
        self.generator
            .validate()
            .map_err(|e| PipelineError::config("config", e.to_string()))?;
        if self.generator.participants < 3 {
            return bad("at least three participants are required".into());
        }
        let (tr, va, te) = self.split;
        if tr + va + te != self.generator.participants {
            return bad(format!(
                "split {tr}/{va}/{te} does not cover {} participants",
                self.generator.participants
            ));
        }
        if tr == 0 || te == 0 {
            return bad("train and test splits must be non-empty".into());
        }
        if self.features.stride == 0 {
            return bad("stft.stride must be positive".into());
        }
        if self.window.len == 0 || self.window.hop == 0 || self.sequence_len == 0 {
            return bad("window length, hop and sequence length must be positive".into());
        }
        if self.repetitions == 0 {
            return bad("experiment.repetitions must be at least 1".into());
        }
        if self.models.is_empty() {
            return bad("experiment.models is empty".into());
        }
        if self.models.iter().enumerate().any(|(i, m)| self.models[..i].contains(m)) {
            return bad("experiment.models lists a model twice".into());
        }
        if self.rocket_kernels == 0 {
            return bad("rocket.kernels must be positive".into());
        }
        if self.ridge_lambdas.is_empty() || self.ridge_lambdas.iter().any(|l| l.is_nan() || *l <= 0.0) {
            return bad("ridge.lambdas must be positive".into());
        }
        self.train
            .validate()
            .map_err(|e| PipelineError::config("config", e.to_string()))?;
        Ok(())
    }

    /// Seed of repetition `rep`.
    pub fn rep_seed(&self, rep: usize) -> u64 {
        self.seed.wrapping_add(rep as u64)
    }
}
