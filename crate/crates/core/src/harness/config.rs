use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aircomp::Normalization;
use crate::channel::FadingMode;
use crate::error::{Error, Result};
use crate::learner::{Activation, PowerScheme};
use crate::mselect::{CandidateSet, CostModel, DEFAULT_M_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MseSweep,
    BaselineCompare,
    Train,
    SelectM,
    SigmaSweep,
    BoundValidate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MseSweep => "mse-sweep",
            ExperimentKind::BaselineCompare => "baseline-compare",
            ExperimentKind::Train => "train",
            ExperimentKind::SelectM => "select-m",
            ExperimentKind::SigmaSweep => "sigma-sweep",
            ExperimentKind::BoundValidate => "bound-validate",
        }
    }

    fn default_trials(self) -> usize {
        match self {
            ExperimentKind::MseSweep | ExperimentKind::BaselineCompare => 20_000,
            ExperimentKind::Train => 20,
            ExperimentKind::SelectM | ExperimentKind::SigmaSweep => 1,
            ExperimentKind::BoundValidate => 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Mnist,
    Regression,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub num_devices: usize,
    pub p_max: f64,
    /// Noise levels as standard deviations. Give either this or
    /// `noise_variance`, not both.
    pub noise_std: Vec<f64>,
    pub noise_variance: Vec<f64>,
    pub fading: FadingMode,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            num_devices: 10,
            p_max: 1.0,
            noise_std: Vec::new(),
            noise_variance: Vec::new(),
            fading: FadingMode::PerRound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AirCompConfig {
    pub num_retx: Vec<u32>,
    pub normalization: Normalization,
    pub power: PowerScheme,
}

impl Default for AirCompConfig {
    fn default() -> Self {
        Self {
            num_retx: vec![1],
            normalization: Normalization::PerDevice,
            power: PowerScheme::Optimal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub task: Task,
    pub epochs: usize,
    pub step_size: f64,
    pub hidden: usize,
    pub activation: Activation,
    pub samples_per_device: usize,
    pub full_scale_samples_per_device: usize,
    pub full_scale_trials: usize,
    /// Directory with the four IDX files; relative paths are resolved
    /// against the config file's directory.
    pub data_dir: PathBuf,
    /// Use only the first this many test images.
    pub test_samples: Option<usize>,
    pub regression_samples: usize,
    pub regression_test: usize,
    pub regression_noise: f64,
    pub max_rounds: Option<usize>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            task: Task::Mnist,
            epochs: 2,
            step_size: 0.05,
            hidden: 100,
            activation: Activation::Relu,
            samples_per_device: 600,
            full_scale_samples_per_device: 6000,
            full_scale_trials: 50,
            data_dir: PathBuf::from("data/mnist"),
            test_samples: None,
            regression_samples: 30_000,
            regression_test: 5_000,
            regression_noise: 0.1,
            max_rounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    pub train_cost: f64,
    pub uplink_cost: f64,
    pub budget: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            train_cost: 4.0,
            uplink_cost: 1.0,
            budget: 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    /// Explicit candidate list; otherwise `1..=m_max`.
    pub candidates: Option<Vec<u32>>,
    pub m_max: u32,
    /// Channel draws the objective is averaged over.
    pub draws: usize,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            candidates: None,
            m_max: DEFAULT_M_MAX,
            draws: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub dim: usize,
    pub spread: f64,
    pub rounds: usize,
    /// Fixed step size; otherwise `beta_fraction` times the smallest
    /// admissible supremum over the configured `M`.
    pub beta: Option<f64>,
    pub beta_fraction: f64,
    /// Seed of the single channel realisation shared by all trials.
    pub channel_seed: u64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            dim: 8,
            spread: 1.0,
            rounds: 50,
            beta: None,
            beta_fraction: 0.5,
            channel_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub full_scale: bool,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub aircomp: AirCompConfig,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default)]
    pub cost: CostConfig,
    #[serde(default)]
    pub select: SelectConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub output: Option<PathBuf>,
    pub full_scale: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// A config for `kind` with every section at its default.
    pub fn for_kind(kind: ExperimentKind, seed: u64) -> Self {
        let mut cfg = Self::from_toml("").expect("empty config parses");
        cfg.kind = Some(kind);
        cfg.seed = Some(seed);
        cfg
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = Some(seed);
        }
        if let Some(trials) = o.trials {
            self.trials = Some(trials);
        }
        if let Some(out) = &o.output {
            self.output = Some(out.clone());
        }
        self.full_scale |= o.full_scale;
    }

    /// Pin the experiment kind; a conflicting value in the file is an error.
    pub fn set_kind(&mut self, kind: ExperimentKind) -> Result<()> {
        match self.kind {
            Some(k) if k != kind => Err(Error::Config(format!(
                "config is for `{}`, not `{}`",
                k.name(),
                kind.name()
            ))),
            _ => {
                self.kind = Some(kind);
                Ok(())
            }
        }
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind
            .ok_or_else(|| Error::Config("experiment kind is not set".into()))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (config `seed` or --seed)".into()))
    }

    pub fn trials(&self) -> Result<usize> {
        let kind = self.kind()?;
        let trials = match (self.trials, kind) {
            (Some(t), _) => t,
            (None, ExperimentKind::Train) if self.full_scale => self.learner.full_scale_trials,
            (None, k) => k.default_trials(),
        };
        if trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        Ok(trials)
    }

    pub fn samples_per_device(&self) -> usize {
        if self.full_scale {
            self.learner.full_scale_samples_per_device
        } else {
            self.learner.samples_per_device
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        if self.learner.data_dir.is_absolute() {
            self.learner.data_dir.clone()
        } else {
            self.base_dir.join(&self.learner.data_dir)
        }
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        CostModel::new(
            self.cost.train_cost,
            self.cost.uplink_cost,
            self.cost.budget,
        )
    }

    pub fn candidates(&self) -> CandidateSet {
        match &self.select.candidates {
            Some(list) => CandidateSet::List(list.clone()),
            None => CandidateSet::UpTo(self.select.m_max),
        }
    }

    /// Configured noise levels as `(sigma_z, sigma_z^2)` pairs.
    pub fn noise_levels(&self) -> Result<Vec<(f64, f64)>> {
        let ch = &self.channel;
        let levels: Vec<(f64, f64)> = match (ch.noise_std.is_empty(), ch.noise_variance.is_empty())
        {
            (false, true) => ch.noise_std.iter().map(|&s| (s, s * s)).collect(),
            (true, false) => ch.noise_variance.iter().map(|&v| (v.sqrt(), v)).collect(),
            (true, true) => {
                return Err(Error::Config(
                    "no noise level given (channel.noise_std or channel.noise_variance)".into(),
                ))
            }
            (false, false) => {
                return Err(Error::Config(
                    "give channel.noise_std or channel.noise_variance, not both".into(),
                ))
            }
        };
        if let Some(&(s, _)) = levels.iter().find(|(s, _)| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Config(format!(
                "noise level must be finite and >= 0, got {s}"
            )));
        }
        Ok(levels)
    }

    fn single_noise_level(&self) -> Result<(f64, f64)> {
        let levels = self.noise_levels()?;
        match levels.as_slice() {
            [one] => Ok(*one),
            _ => Err(Error::Config(format!(
                "`{}` takes a single noise level, got {}",
                self.kind()?.name(),
                levels.len()
            ))),
        }
    }

    pub fn noise_variance(&self) -> Result<f64> {
        Ok(self.single_noise_level()?.1)
    }

    pub fn num_retx(&self) -> &[u32] {
        &self.aircomp.num_retx
    }

    /// Check everything the configured experiment will read.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        self.seed()?;
        self.trials()?;
        let ch = &self.channel;
        if ch.num_devices == 0 {
            return Err(Error::Config("channel.num_devices must be >= 1".into()));
        }
        if !(ch.p_max > 0.0) {
            return Err(Error::Config(format!(
                "channel.p_max must be positive, got {}",
                ch.p_max
            )));
        }
        self.noise_levels()?;
        let ms = self.num_retx();
        let needs_m = !matches!(kind, ExperimentKind::SelectM | ExperimentKind::SigmaSweep);
        if needs_m && (ms.is_empty() || ms.contains(&0)) {
            return Err(Error::Config(
                "aircomp.num_retx must be a nonempty list of M >= 1".into(),
            ));
        }
        let l = &self.learner;
        if !(l.step_size > 0.0) {
            return Err(Error::Config(format!(
                "learner.step_size must be positive, got {}",
                l.step_size
            )));
        }
        match kind {
            ExperimentKind::MseSweep
            | ExperimentKind::BaselineCompare
            | ExperimentKind::SigmaSweep => {}
            ExperimentKind::Train => {
                self.noise_variance()?;
                self.cost_model()?;
                if l.epochs == 0 || l.hidden == 0 {
                    return Err(Error::Config(
                        "learner.epochs and learner.hidden must be >= 1".into(),
                    ));
                }
                if l.task == Task::Mnist && self.samples_per_device() == 0 {
                    return Err(Error::Config(
                        "learner.samples_per_device must be >= 1".into(),
                    ));
                }
                if l.task == Task::Regression && l.regression_test >= l.regression_samples {
                    return Err(Error::Config(
                        "regression test split leaves no training data".into(),
                    ));
                }
            }
            ExperimentKind::SelectM => {
                self.noise_variance()?;
            }
            ExperimentKind::BoundValidate => {
                self.noise_variance()?;
                let b = &self.bounds;
                if b.dim < 1 || b.rounds < 1 {
                    return Err(Error::Config(
                        "bounds.dim and bounds.rounds must be >= 1".into(),
                    ));
                }
                if !(b.beta_fraction > 0.0 && b.beta_fraction < 1.0) {
                    return Err(Error::Config(
                        "bounds.beta_fraction must lie in (0, 1)".into(),
                    ));
                }
            }
        }
        if matches!(kind, ExperimentKind::SelectM | ExperimentKind::SigmaSweep) {
            self.cost_model()?;
            if self.select.draws == 0 {
                return Err(Error::Config("select.draws must be >= 1".into()));
            }
            self.candidates().feasible(&self.cost_model()?)?;
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}
