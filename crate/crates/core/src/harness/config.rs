//! JSON experiment configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::LinUcbConfig;
use crate::error::{Error, Result};
use crate::instances::{ContextualSpec, RandomSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub policies: Vec<PolicyConfig>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_horizons() -> Vec<usize> {
    vec![1000]
}

fn default_replications() -> usize {
    20
}

/// The environment. Hard instances leave `epsilon` unset to use the data-poor
/// tuning `κ^{−2/3}s^{−2/3}n^{−1/3}` separately for every horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    Hard {
        #[serde(default = "default_hard_d")]
        d: usize,
        #[serde(default = "default_hard_s")]
        s: usize,
        #[serde(default = "default_one")]
        kappa: f64,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default = "default_one")]
        noise_std: f64,
    },
    HardSubsample {
        #[serde(default = "default_case2_d")]
        d: usize,
        #[serde(default = "default_case2_s")]
        s: usize,
        #[serde(default = "default_one")]
        kappa: f64,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default = "default_n_informative")]
        n_informative: usize,
        #[serde(default = "default_n_low_regret")]
        n_low_regret: usize,
        #[serde(default = "default_one")]
        noise_std: f64,
    },
    Contextual(ContextualSpec),
    Random(RandomSpec),
    Basis {
        #[serde(default = "default_basis_d")]
        d: usize,
        #[serde(default = "default_gap")]
        gap: f64,
        #[serde(default = "default_one")]
        noise_std: f64,
    },
    /// An instance document (actions, `theta`, optional labels) on disk.
    File {
        path: PathBuf,
    },
}

fn default_one() -> f64 {
    1.0
}
fn default_hard_d() -> usize {
    10
}
fn default_hard_s() -> usize {
    3
}
fn default_case2_d() -> usize {
    100
}
fn default_case2_s() -> usize {
    5
}
fn default_n_informative() -> usize {
    500
}
fn default_n_low_regret() -> usize {
    200
}
fn default_basis_d() -> usize {
    5
}
fn default_gap() -> f64 {
    0.5
}

impl InstanceConfig {
    pub fn is_contextual(&self) -> bool {
        matches!(self, InstanceConfig::Contextual(_))
    }

    /// Resolves a relative `file` path against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let InstanceConfig::File { path } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Estc {
        #[serde(default)]
        label: Option<String>,
        /// Defaults to the instance's sparsity bound.
        #[serde(default)]
        sparsity: Option<usize>,
        /// With `false` the exploration length is `⌈n^{2/3}⌉`.
        #[serde(default = "default_true")]
        known_sparsity: bool,
        /// Defaults to `max_x |⟨x, θ⟩|` on fixed sets and `‖θ‖₁` for contexts.
        #[serde(default)]
        r_max: Option<f64>,
        #[serde(default)]
        n1: Option<usize>,
        /// Replaces the design's `σ_min` in the length formula (e.g. a known `C_min`).
        #[serde(default)]
        c_min: Option<f64>,
    },
    Rpe {
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        sparsity: Option<usize>,
        /// Defaults to the smallest nonzero `|θⱼ|`.
        #[serde(default)]
        min_signal: Option<f64>,
        #[serde(default = "default_one")]
        c1_constant: f64,
        #[serde(default = "default_delta")]
        elimination_delta: f64,
        /// Replaces the design's `σ_min` in the length formula (e.g. a known `C_min`).
        #[serde(default)]
        c_min: Option<f64>,
    },
    PhasedElimination {
        #[serde(default)]
        label: Option<String>,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    Linucb {
        #[serde(default)]
        label: Option<String>,
        #[serde(default = "default_one")]
        regularization: f64,
        #[serde(default = "default_one")]
        confidence_scale: f64,
        #[serde(default = "default_linucb_delta")]
        delta: f64,
        /// Bound on `‖θ‖₂`; defaults to the true norm.
        #[serde(default)]
        param_bound: Option<f64>,
    },
}

fn default_true() -> bool {
    true
}

fn default_delta() -> f64 {
    0.1
}

fn default_linucb_delta() -> f64 {
    LinUcbConfig::default().delta
}

impl PolicyConfig {
    pub fn label(&self) -> &str {
        match self {
            PolicyConfig::Estc { label, .. } => label.as_deref().unwrap_or("estc"),
            PolicyConfig::Rpe { label, .. } => label.as_deref().unwrap_or("rpe"),
            PolicyConfig::PhasedElimination { label, .. } => {
                label.as_deref().unwrap_or("phased_elimination")
            }
            PolicyConfig::Linucb { label, .. } => label.as_deref().unwrap_or("linucb"),
        }
    }

    pub fn linucb_config(&self) -> Option<LinUcbConfig> {
        match *self {
            PolicyConfig::Linucb {
                regularization,
                confidence_scale,
                delta,
                param_bound,
                ..
            } => Some(LinUcbConfig {
                regularization,
                confidence_scale,
                delta,
                param_bound,
            }),
            _ => None,
        }
    }

    /// Whether the policy samples from the E-optimal design.
    pub fn needs_design(&self) -> bool {
        matches!(self, PolicyConfig::Estc { .. } | PolicyConfig::Rpe { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default = "default_design_tol")]
    pub tol: f64,
    #[serde(default = "default_design_iter")]
    pub max_iter: usize,
}

fn default_design_tol() -> f64 {
    crate::design::DEFAULT_TOL
}

fn default_design_iter() -> usize {
    crate::design::DEFAULT_MAX_ITER
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            tol: default_design_tol(),
            max_iter: default_design_iter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Long-form file; the summary and diagnostics files are written next to it.
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_svg")]
    pub svg: Option<String>,
    /// Overlay the ESTC upper bound and the minimax lower bound on the plot.
    #[serde(default)]
    pub bounds: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_csv() -> String {
    "regret.csv".into()
}

fn default_svg() -> Option<String> {
    Some("regret.svg".into())
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            csv: default_csv(),
            svg: default_svg(),
            bounds: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config file; relative paths inside it are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.instance.resolve_paths(base);
        if config.output.dir.is_relative() {
            config.output.dir = base.join(&config.output.dir);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.replications == 0 {
            return fail("replications must be ≥ 1".into());
        }
        if self.horizons.is_empty() || self.horizons[0] == 0 {
            return fail("horizons must be a non-empty list of positive integers".into());
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return fail(format!(
                "horizons must be strictly increasing, got {:?}",
                self.horizons
            ));
        }
        if self.policies.is_empty() {
            return fail("policy list is empty".into());
        }
        let mut seen = HashSet::new();
        for p in &self.policies {
            if !seen.insert(p.label()) {
                return fail(format!(
                    "duplicate policy label {:?}; set distinct `label`s",
                    p.label()
                ));
            }
            let fixed_only = matches!(
                p,
                PolicyConfig::Rpe { .. } | PolicyConfig::PhasedElimination { .. }
            );
            if fixed_only && self.instance.is_contextual() {
                return fail(format!("policy {:?} needs a fixed action set", p.label()));
            }
            match p {
                PolicyConfig::Estc { c_min: Some(c), .. }
                | PolicyConfig::Rpe { c_min: Some(c), .. }
                    if !(*c > 0.0) =>
                {
                    return fail(format!("c_min must be > 0, got {c}"));
                }
                PolicyConfig::Rpe {
                    c1_constant,
                    elimination_delta,
                    min_signal,
                    ..
                } => {
                    if !(*c1_constant > 0.0)
                        || !(*elimination_delta > 0.0 && *elimination_delta < 1.0)
                    {
                        return fail(
                            "rpe needs c1_constant > 0 and elimination_delta in (0, 1)".into(),
                        );
                    }
                    if min_signal.is_some_and(|m| !(m > 0.0)) {
                        return fail("rpe min_signal must be > 0".into());
                    }
                }
                PolicyConfig::PhasedElimination { delta, .. }
                    if !(*delta > 0.0 && *delta < 1.0) =>
                {
                    return fail(format!(
                        "phased_elimination delta must lie in (0, 1), got {delta}"
                    ));
                }
                PolicyConfig::Estc { r_max: Some(r), .. } if !(*r > 0.0) => {
                    return fail(format!("estc r_max must be > 0, got {r}"));
                }
                _ => {}
            }
        }
        if !(self.design.tol > 0.0) || self.design.max_iter == 0 {
            return fail("design needs tol > 0 and max_iter ≥ 1".into());
        }
        match &self.instance {
            InstanceConfig::Hard { epsilon, kappa, .. }
            | InstanceConfig::HardSubsample { epsilon, kappa, .. } => {
                if epsilon.is_some_and(|e| !(e > 0.0 && e <= 1.0)) {
                    return fail("hard instance epsilon must lie in (0, 1]".into());
                }
                if !(*kappa > 0.0 && *kappa <= 1.0) {
                    return fail(format!(
                        "hard instance kappa must lie in (0, 1], got {kappa}"
                    ));
                }
            }
            InstanceConfig::Contextual(spec) => {
                spec.validate().map_err(|e| Error::Config(e.to_string()))?
            }
            _ => {}
        }
        Ok(())
    }
}
