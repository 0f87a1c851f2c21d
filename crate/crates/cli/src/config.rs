//! Experiment files: one TOML document naming the model and the parameters
//! of each subcommand.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use spdelab_core::config::{parse_model, preset};
use spdelab_core::simulator::Scheme;
use spdelab_core::{GalerkinState, ReactionDiffusionModel};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Model file, relative to the experiment file.
    pub model: Option<PathBuf>,
    /// Built-in model (`ou` or `rd`), alternative to `model`.
    pub preset: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub scheme: Scheme,
    pub dt: Option<f64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub check: CheckSection,
    pub converge: Option<ConvergeSection>,
    pub invariant: Option<InvariantSection>,
    pub trajectories: Option<TrajectorySection>,
}

fn default_paths() -> usize {
    1000
}

fn default_slack() -> f64 {
    4.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    /// Times at which kernels are sampled.
    #[serde(default = "default_sample_times")]
    pub t: Vec<f64>,
    /// Exponent of the ε-moment `∫₀¹ s^{−ε} K_σ(s) ds`.
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            t: default_sample_times(),
            eps: default_eps(),
        }
    }
}

fn default_sample_times() -> Vec<f64> {
    vec![1e-3, 1e-2, 0.1, 1.0]
}

fn default_eps() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    #[serde(default = "default_constant_times")]
    pub t: Vec<f64>,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self {
            t: default_constant_times(),
        }
    }
}

fn default_constant_times() -> Vec<f64> {
    vec![0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0]
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    /// Checks this experiment intends to run; `validate` reports the
    /// assumptions they need.
    #[serde(default)]
    pub which: Vec<CheckKind>,
    /// Test functional id, e.g. `sin:1` or `shifted_sin:2:1`.
    pub functional: Option<String>,
    pub x: Option<StateSpec>,
    pub y: Option<StateSpec>,
    /// Subset of `e1`, `en`, `random`, `e<k>`.
    pub directions: Option<Vec<String>>,
    pub t: Option<Vec<f64>>,
    pub paths: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Gradient,
    Logharnack,
    Variance,
    Poincare,
    Flowbound,
}

impl CheckKind {
    pub fn needs_ellipticity(self) -> bool {
        matches!(self, CheckKind::Logharnack | CheckKind::Variance)
    }

    pub fn needs_upper_bound(self) -> bool {
        matches!(self, CheckKind::Poincare)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    pub n_list: Vec<usize>,
    pub n_max: usize,
    pub t: f64,
    pub x0: Option<StateSpec>,
    pub paths: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantSection {
    pub t_end: f64,
    /// Defaults to ten equispaced times ending at `t_end`.
    pub checkpoints: Option<Vec<f64>>,
    pub eps0: f64,
    pub c0: f64,
    pub x0: Option<StateSpec>,
    pub paths: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub paths: usize,
    pub t_end: f64,
    #[serde(default = "default_every")]
    pub every: usize,
    pub x0: Option<StateSpec>,
    /// Grid size per dimension of the optional final-field dump.
    pub field_points: Option<usize>,
    /// Destination of the final field of path 0 as CSV `xi,u(xi)`.
    pub field_out: Option<PathBuf>,
}

fn default_every() -> usize {
    1
}

/// Initial data: explicit coefficients (zero-padded) or `zero` / `e<k>`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Coefficients(Vec<f64>),
    Named(String),
}

impl StateSpec {
    pub fn resolve(&self, n: usize) -> CliResult<GalerkinState> {
        match self {
            StateSpec::Coefficients(c) => {
                if c.len() > n {
                    return Err(CliError::Config(format!(
                        "state has {} coefficients but the model has {n} modes",
                        c.len()
                    )));
                }
                let mut v = c.clone();
                v.resize(n, 0.0);
                Ok(GalerkinState::new(v))
            }
            StateSpec::Named(name) => match name.as_str() {
                "zero" => Ok(GalerkinState::zeros(n)),
                "en" => Ok(GalerkinState::unit(n, n - 1)),
                other => {
                    let k = other
                        .strip_prefix('e')
                        .and_then(|k| k.parse::<usize>().ok())
                        .filter(|k| (1..=n).contains(k))
                        .ok_or_else(|| CliError::Config(format!("unknown state `{other}`")))?;
                    Ok(GalerkinState::unit(n, k - 1))
                }
            },
        }
    }
}

pub fn resolve_state(spec: Option<&StateSpec>, n: usize) -> CliResult<GalerkinState> {
    spec.map_or(Ok(GalerkinState::zeros(n)), |s| s.resolve(n))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| CliError::Config(format!("experiment file: {}", e.message())))?;
        cfg.check_numbers()?;
        Ok(cfg)
    }

    fn check_numbers(&self) -> CliResult<()> {
        if self.paths < 2 {
            return Err(CliError::Config("paths must be at least 2".into()));
        }
        if self.dt.is_some_and(|dt| !(dt > 0.0)) {
            return Err(CliError::Config("dt must be positive".into()));
        }
        if !(self.slack >= 0.0) {
            return Err(CliError::Config("slack must be non-negative".into()));
        }
        Ok(())
    }

    /// Reads an experiment file and the model it names.
    pub fn load(path: &Path) -> CliResult<(Self, ReactionDiffusionModel)> {
        let text = read(path)?;
        let cfg = Self::parse(&text)?;
        let model = cfg.model(path.parent().unwrap_or(Path::new(".")))?;
        Ok((cfg, model))
    }

    pub fn model(&self, base: &Path) -> CliResult<ReactionDiffusionModel> {
        match (&self.model, &self.preset) {
            (Some(file), None) => {
                let path = base.join(file);
                Ok(parse_model(&read(&path)?)?)
            }
            (None, Some(name)) => Ok(preset(name)?),
            _ => Err(CliError::Config(
                "exactly one of `model` and `preset` must be given".into(),
            )),
        }
    }
}

pub fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
