//! Seeded regret experiments: configuration, parallel replication, CSV and SVG
//! output, and the log–log rate fit.
//!
//! Replication `r` uses seed `base_seed + r` for every policy and horizon, so all
//! policies face the same noise and context draws. The environment (action set,
//! parameter, labels) is generated once per experiment from `base_seed`; hard
//! instances without an explicit `epsilon` only rescale `θ` per horizon.

mod config;
mod output;
mod stats;
mod svg;

use rayon::prelude::*;
use serde::Serialize;

use crate::algorithms::{
    estc_on, linucb_on, phased_elimination_on, restricted_pe_on, Diagnostics, EstcConfig,
    Exploration, RpeConfig,
};
use crate::design::{
    covariance, min_eigen, solve_e_optimal, DesignCertificate, DesignDistribution,
};
use crate::error::{Error, Result};
use crate::instances::{
    basis_instance, contextual_instance, data_poor_epsilon, hard_instance, random_instance,
    subsample_hard_instance, uniform_arm_c_min, ContextualArms, ContextualSpec, GeneratedInstance,
    HardInstanceSpec,
};
use crate::model::{ActionSet, Bandit, InstanceDocument, RegretTrajectory, SparseInstance};
use crate::rng::{streams, RngStream};

pub use config::{DesignConfig, ExperimentConfig, InstanceConfig, OutputConfig, PolicyConfig};
pub use output::{
    emit_csv, read_long_csv, read_summary_csv, slopes_from_summary, summarize, write_outputs,
    LongRow, OutputFiles, SummaryRow,
};
pub use stats::{iqr, loglog_slope, median, quantile};
pub use svg::{emit_svg, plot_rows};

/// Most trajectory points kept per run.
pub const MAX_TRAJECTORY_POINTS: usize = 1000;
/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "SPARSE_BANDIT_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub policy: String,
    pub horizon: usize,
    pub seed: u64,
    pub final_regret: f64,
    /// `(round, cumulative regret)` at up to [`MAX_TRAJECTORY_POINTS`] rounds, always
    /// including the last one.
    pub trajectory: Vec<(usize, f64)>,
    pub diagnostics: Diagnostics,
}

/// Constants for overlaying the theoretical bounds on a plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub d: usize,
    pub s: usize,
    pub r_max: f64,
    pub c_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub policies: Vec<String>,
    pub horizons: Vec<usize>,
    /// Ordered by policy (config order), horizon, then seed.
    pub records: Vec<RunRecord>,
    pub design: Option<DesignCertificate>,
    pub bounds: Option<BoundParams>,
}

impl ExperimentResult {
    pub fn final_regrets(&self, policy: &str, horizon: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.policy == policy && r.horizon == horizon)
            .map(|r| r.final_regret)
            .collect()
    }

    pub fn median_final_regret(&self, policy: &str, horizon: usize) -> f64 {
        median(&self.final_regrets(policy, horizon))
    }

    /// Log–log slope of the median final regret of `policy` across the horizons.
    pub fn slope(&self, policy: &str) -> Result<f64> {
        let n: Vec<f64> = self.horizons.iter().map(|&h| h as f64).collect();
        let m: Vec<f64> = self
            .horizons
            .iter()
            .map(|&h| self.median_final_regret(policy, h))
            .collect();
        loglog_slope(&n, &m)
    }

    /// Long-form rows `policy,horizon,seed,round,cum_regret`.
    pub fn long_rows(&self) -> impl Iterator<Item = LongRow> + '_ {
        self.records.iter().flat_map(|rec| {
            rec.trajectory
                .iter()
                .map(move |&(round, cum_regret)| LongRow {
                    policy: rec.policy.clone(),
                    horizon: rec.horizon,
                    seed: rec.seed,
                    round,
                    cum_regret,
                })
        })
    }
}

/// `(round, cumulative regret)` at evenly spaced rounds, ending at the last one.
pub fn downsample(cumulative: &[f64], max_points: usize) -> Vec<(usize, f64)> {
    let n = cumulative.len();
    if n <= max_points {
        return cumulative
            .iter()
            .enumerate()
            .map(|(t, &c)| (t + 1, c))
            .collect();
    }
    (1..=max_points)
        .map(|k| {
            let t = (k * n).div_ceil(max_points);
            (t, cumulative[t - 1])
        })
        .collect()
}

enum Environment {
    Fixed {
        actions: ActionSet,
        informative: Option<Vec<bool>>,
        /// One parameter per horizon.
        instances: Vec<SparseInstance>,
    },
    Contextual {
        spec: ContextualSpec,
        instance: SparseInstance,
    },
}

impl Environment {
    fn build(config: &ExperimentConfig) -> Result<Self> {
        let mut rng = RngStream::new(config.base_seed, streams::INSTANCE);
        let fixed = |g: GeneratedInstance, instances: Vec<SparseInstance>| Environment::Fixed {
            informative: g.informative.iter().any(|&f| f).then_some(g.informative),
            actions: g.actions,
            instances,
        };
        Ok(match &config.instance {
            InstanceConfig::Hard {
                d,
                s,
                kappa,
                epsilon,
                noise_std,
            } => {
                let specs = hard_specs(config, *d, *s, *kappa, *epsilon, *noise_std, None)?;
                let g = hard_instance(&specs[0])?;
                fixed(g, instances_of(&specs)?)
            }
            InstanceConfig::HardSubsample {
                d,
                s,
                kappa,
                epsilon,
                n_informative,
                n_low_regret,
                noise_std,
            } => {
                let sample = Some((*n_informative, *n_low_regret));
                let specs = hard_specs(config, *d, *s, *kappa, *epsilon, *noise_std, sample)?;
                // the action set does not depend on ε; only θ changes across horizons
                let g = subsample_hard_instance(&specs[0], &mut rng)?;
                fixed(g, instances_of(&specs)?)
            }
            InstanceConfig::Random(spec) => {
                let g = random_instance(spec, &mut rng)?;
                let inst = vec![g.instance.clone(); config.horizons.len()];
                fixed(g, inst)
            }
            InstanceConfig::Basis { d, gap, noise_std } => {
                let g = basis_instance(*d, *gap, *noise_std)?;
                let inst = vec![g.instance.clone(); config.horizons.len()];
                fixed(g, inst)
            }
            InstanceConfig::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let doc: InstanceDocument = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let instance = doc.instance()?.ok_or_else(|| {
                    Error::Config(format!("{}: instance file has no `theta`", path.display()))
                })?;
                Environment::Fixed {
                    actions: doc.action_set()?,
                    informative: doc.informative_mask()?,
                    instances: vec![instance; config.horizons.len()],
                }
            }
            InstanceConfig::Contextual(spec) => {
                let (_, instance) = contextual_instance(
                    spec,
                    &mut rng,
                    RngStream::new(config.base_seed, streams::CONTEXT),
                )?;
                Environment::Contextual {
                    spec: spec.clone(),
                    instance,
                }
            }
        })
    }
}

fn hard_specs(
    config: &ExperimentConfig,
    d: usize,
    s: usize,
    kappa: f64,
    epsilon: Option<f64>,
    noise_std: f64,
    sample: Option<(usize, usize)>,
) -> Result<Vec<HardInstanceSpec>> {
    config
        .horizons
        .iter()
        .map(|&n| {
            let eps = epsilon.unwrap_or_else(|| data_poor_epsilon(kappa, s, n));
            let mut spec = HardInstanceSpec::new(d, s, kappa, eps)?;
            spec.noise_std = noise_std;
            if let Some((n_h, n_s)) = sample {
                spec = spec.with_subsample(n_h, n_s);
            }
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

fn instances_of(specs: &[HardInstanceSpec]) -> Result<Vec<SparseInstance>> {
    specs.iter().map(HardInstanceSpec::instance).collect()
}

/// The E-optimal design shared by every design-based run on a fixed set.
struct SolvedDesign {
    design: DesignDistribution,
    certificate: DesignCertificate,
    sigma_min: f64,
}

impl SolvedDesign {
    fn solve(actions: &ActionSet, config: &DesignConfig) -> Result<Self> {
        let (design, certificate) = solve_e_optimal(actions, config.tol, config.max_iter)?;
        let sigma_min = min_eigen(&covariance(&design, actions)?)?.0;
        if !(sigma_min > 0.0) {
            return Err(Error::NotSpanning {
                dim: actions.dim(),
                rank: 0,
            });
        }
        Ok(Self {
            design,
            certificate,
            sigma_min,
        })
    }

    fn annotate(&self, diag: &mut Diagnostics) {
        diag.insert("design_sigma_min", self.sigma_min);
        diag.insert("design_fw_gap", self.certificate.fw_gap);
        diag.insert("design_converged", self.certificate.converged);
    }
}

/// `max_x |⟨x, θ⟩|` over a fixed set, falling back to 1 for `θ = 0`.
fn fixed_r_max(actions: &ActionSet, instance: &SparseInstance) -> Result<f64> {
    let r = actions
        .values(instance.theta())?
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(if r > 0.0 { r } else { 1.0 })
}

fn min_signal(instance: &SparseInstance) -> Result<f64> {
    instance
        .theta()
        .iter()
        .filter(|t| **t != 0.0)
        .map(|t| t.abs())
        .reduce(f64::min)
        .ok_or_else(|| Error::Config("rpe needs `min_signal` when θ = 0".into()))
}

/// Reads [`THREADS_ENV`]; unset or empty means rayon's default.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        _ => Ok(None),
    }
}

/// Runs every (policy, horizon, replication) of `config` with the thread cap from
/// [`THREADS_ENV`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with_threads(config, threads_from_env()?)
}

/// As [`run_experiment`] with an explicit thread cap; the result does not depend on it.
pub fn run_experiment_with_threads(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ExperimentResult> {
    config.validate()?;
    let env = Environment::build(config)?;
    let design = match &env {
        Environment::Fixed { actions, .. }
            if config.policies.iter().any(PolicyConfig::needs_design) =>
        {
            Some(SolvedDesign::solve(actions, &config.design)?)
        }
        _ => None,
    };

    let jobs: Vec<(usize, usize, usize)> = (0..config.policies.len())
        .flat_map(|p| {
            (0..config.horizons.len())
                .flat_map(move |h| (0..config.replications).map(move |r| (p, h, r)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, h, r)| run_job(config, &env, design.as_ref(), p, h, r))
            .collect::<Result<Vec<_>>>()
    })?;

    let bounds = bound_params(config, &env, design.as_ref())?;
    Ok(ExperimentResult {
        policies: config
            .policies
            .iter()
            .map(|p| p.label().to_string())
            .collect(),
        horizons: config.horizons.clone(),
        records,
        design: design.map(|d| d.certificate),
        bounds,
    })
}

fn bound_params(
    config: &ExperimentConfig,
    env: &Environment,
    design: Option<&SolvedDesign>,
) -> Result<Option<BoundParams>> {
    if !config.output.bounds {
        return Ok(None);
    }
    Ok(match env {
        Environment::Fixed {
            actions, instances, ..
        } => {
            let inst = instances.last().expect("at least one horizon");
            let c_min = match design {
                Some(d) => d.sigma_min,
                None => SolvedDesign::solve(actions, &config.design)?.sigma_min,
            };
            Some(BoundParams {
                d: actions.dim(),
                s: inst.sparsity_bound(),
                r_max: fixed_r_max(actions, inst)?,
                c_min,
            })
        }
        Environment::Contextual { instance, .. } => Some(BoundParams {
            d: instance.dim(),
            s: instance.sparsity_bound(),
            r_max: instance.theta().lp_norm(1).max(1.0),
            c_min: uniform_arm_c_min(),
        }),
    })
}

fn run_job(
    config: &ExperimentConfig,
    env: &Environment,
    design: Option<&SolvedDesign>,
    p: usize,
    h: usize,
    r: usize,
) -> Result<RunRecord> {
    let policy = &config.policies[p];
    let horizon = config.horizons[h];
    let seed = config.base_seed.wrapping_add(r as u64);
    let mut rng = RngStream::new(seed, streams::POLICY);

    let (trajectory, diagnostics) = match env {
        Environment::Fixed {
            actions,
            informative,
            instances,
        } => {
            let instance = &instances[h];
            let mut bandit = Bandit::fixed(instance, actions, horizon)?;
            if let Some(mask) = informative {
                bandit = bandit.with_informative(mask);
            }
            let diag = play_fixed(policy, &mut bandit, actions, instance, design, &mut rng)?;
            (bandit.into_trajectory(), diag)
        }
        Environment::Contextual { spec, instance } => {
            let arms = ContextualArms::new(spec.clone(), RngStream::new(seed, streams::CONTEXT))?;
            let mut bandit = Bandit::contextual(instance, Box::new(arms), horizon)?;
            let diag = play_contextual(policy, &mut bandit, instance, &mut rng)?;
            (bandit.into_trajectory(), diag)
        }
    };
    Ok(record(
        policy.label(),
        horizon,
        seed,
        &trajectory,
        diagnostics,
    ))
}

fn record(
    policy: &str,
    horizon: usize,
    seed: u64,
    trajectory: &RegretTrajectory,
    mut diagnostics: Diagnostics,
) -> RunRecord {
    diagnostics.insert("informative_pulls", trajectory.informative_pulls());
    RunRecord {
        policy: policy.to_string(),
        horizon,
        seed,
        final_regret: trajectory.final_regret(),
        trajectory: downsample(trajectory.cumulative(), MAX_TRAJECTORY_POINTS),
        diagnostics,
    }
}

fn play_fixed(
    policy: &PolicyConfig,
    bandit: &mut Bandit<'_>,
    actions: &ActionSet,
    instance: &SparseInstance,
    design: Option<&SolvedDesign>,
    rng: &mut RngStream,
) -> Result<Diagnostics> {
    let horizon = bandit.horizon();
    match policy {
        PolicyConfig::Estc {
            sparsity,
            known_sparsity,
            r_max,
            n1,
            c_min,
            ..
        } => {
            let design = design.expect("design solved for estc");
            let r_max = match r_max {
                Some(r) => *r,
                None => fixed_r_max(actions, instance)?,
            };
            let estc = EstcConfig {
                horizon,
                sparsity: known_sparsity.then(|| sparsity.unwrap_or(instance.sparsity_bound())),
                r_max,
                explicit_n1: *n1,
            };
            let n1 = estc.resolve_n1(actions.dim(), c_min.unwrap_or(design.sigma_min))?;
            let mut diag = estc_on(bandit, n1, Exploration::Design(&design.design), rng)?;
            diag.insert("r_max", r_max);
            design.annotate(&mut diag);
            Ok(diag)
        }
        PolicyConfig::Rpe {
            sparsity,
            min_signal: m,
            c1_constant,
            elimination_delta,
            c_min,
            ..
        } => {
            let design = design.expect("design solved for rpe");
            let rpe = RpeConfig {
                horizon,
                sparsity: sparsity.unwrap_or(instance.sparsity_bound()),
                min_signal: match m {
                    Some(m) => *m,
                    None => min_signal(instance)?,
                },
                c1_constant: *c1_constant,
                elimination_delta: *elimination_delta,
            };
            let mut diag = restricted_pe_on(
                bandit,
                &rpe,
                &design.design,
                c_min.unwrap_or(design.sigma_min),
                rng,
            )?;
            design.annotate(&mut diag);
            Ok(diag)
        }
        PolicyConfig::PhasedElimination { delta, .. } => {
            let report = phased_elimination_on(bandit, *delta, rng)?;
            Ok(crate::algorithms::phase_diagnostics(&report))
        }
        PolicyConfig::Linucb { .. } => {
            let cfg = policy.linucb_config().expect("linucb variant");
            linucb_on(bandit, &cfg, rng)
        }
    }
}

fn play_contextual(
    policy: &PolicyConfig,
    bandit: &mut Bandit<'_>,
    instance: &SparseInstance,
    rng: &mut RngStream,
) -> Result<Diagnostics> {
    match policy {
        PolicyConfig::Estc {
            sparsity,
            known_sparsity,
            r_max,
            n1,
            c_min,
            ..
        } => {
            let r_max = r_max.unwrap_or_else(|| instance.theta().lp_norm(1).max(1.0));
            let c_min = c_min.unwrap_or_else(uniform_arm_c_min);
            let estc = EstcConfig {
                horizon: bandit.horizon(),
                sparsity: known_sparsity.then(|| sparsity.unwrap_or(instance.sparsity_bound())),
                r_max,
                explicit_n1: *n1,
            };
            let n1 = estc.resolve_n1(instance.dim(), c_min)?;
            let mut diag = estc_on(bandit, n1, Exploration::UniformArm, rng)?;
            diag.insert("r_max", r_max);
            diag.insert("design_sigma_min", c_min);
            Ok(diag)
        }
        PolicyConfig::Linucb { .. } => {
            let cfg = policy.linucb_config().expect("linucb variant");
            linucb_on(bandit, &cfg, rng)
        }
        other => Err(Error::Config(format!(
            "policy {:?} needs a fixed action set",
            other.label()
        ))),
    }
}
