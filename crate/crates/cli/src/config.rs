//! TOML parameter and plan files.

use serde::{Deserialize, Serialize};

use spinglass::bench::{AttemptBudget, BenchSolver, ScalingPlan};
use spinglass::heuristics::{geometric_ladder, AnnealSchedule, HeuristicSolver, PtIcmParams};
use spinglass::topology::TopologyFamily;

use crate::error::CliError;

/// Heuristic parameters. Fields not used by the chosen algorithm must be
/// absent; missing fields take the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicParams {
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    /// Annealing steps.
    pub steps: Option<usize>,
    pub sweeps_per_step: Option<usize>,
    /// Parallel-tempering temperature count.
    pub temperatures: Option<usize>,
    pub sweeps: Option<usize>,
    pub icm_period: Option<usize>,
    pub swap_period: Option<usize>,
}

impl HeuristicParams {
    pub fn build(&self, algo: &str) -> Result<HeuristicSolver, CliError> {
        let reject = |fields: &[(&str, bool)]| -> Result<(), CliError> {
            match fields.iter().find(|f| f.1) {
                Some((name, _)) => Err(CliError::Input(format!("parameter {name} does not apply to {algo}"))),
                None => Ok(()),
            }
        };
        let solver = match algo {
            "sa" => {
                reject(&[
                    ("temperatures", self.temperatures.is_some()),
                    ("sweeps", self.sweeps.is_some()),
                    ("icm_period", self.icm_period.is_some()),
                    ("swap_period", self.swap_period.is_some()),
                ])?;
                let AnnealSchedule::Geometric {
                    beta_min,
                    beta_max,
                    steps,
                    sweeps_per_step,
                } = AnnealSchedule::default()
                else {
                    unreachable!("default schedule is geometric")
                };
                let schedule = AnnealSchedule::Geometric {
                    beta_min: self.beta_min.unwrap_or(beta_min),
                    beta_max: self.beta_max.unwrap_or(beta_max),
                    steps: self.steps.unwrap_or(steps),
                    sweeps_per_step: self.sweeps_per_step.unwrap_or(sweeps_per_step),
                };
                schedule.validate().map_err(|e| CliError::Input(e.to_string()))?;
                HeuristicSolver::Sa(schedule)
            }
            "pticm" => {
                reject(&[
                    ("steps", self.steps.is_some()),
                    ("sweeps_per_step", self.sweeps_per_step.is_some()),
                ])?;
                let d = PtIcmParams::default();
                let temperatures = self.temperatures.unwrap_or(d.betas.len());
                let beta_min = self.beta_min.unwrap_or(d.betas[0]);
                let beta_max = self.beta_max.unwrap_or(*d.betas.last().unwrap());
                let p = PtIcmParams {
                    betas: geometric_ladder(beta_min, beta_max, temperatures),
                    sweeps: self.sweeps.unwrap_or(d.sweeps),
                    icm_period: self.icm_period.unwrap_or(d.icm_period),
                    swap_period: self.swap_period.unwrap_or(d.swap_period),
                    ..d
                };
                p.validate().map_err(|e| CliError::Input(e.to_string()))?;
                HeuristicSolver::PtIcm(p)
            }
            other => return Err(CliError::Usage(format!("unknown algorithm {other:?}"))),
        };
        Ok(solver)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    /// `mwpm`, `sa` or `pticm`.
    pub algo: String,
    /// Exact solver: solves per instance, median taken.
    pub timing_reps: Option<usize>,
    /// Heuristics: attempts per instance.
    pub repetitions: Option<usize>,
    /// Heuristics: `fixed` (default) or `optimal` (pticm only).
    pub budget: Option<String>,
    #[serde(default)]
    pub params: HeuristicParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub topology: String,
    /// Lattice side lengths.
    pub sizes: Vec<usize>,
    pub alpha: f64,
    pub rho: u32,
    pub instances: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    #[serde(default)]
    pub solvers: Vec<SolverEntry>,
}

impl PlanFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("plan: {e}")))
    }

    pub fn to_plan(&self, default_workers: usize) -> Result<ScalingPlan, CliError> {
        let topology: TopologyFamily = self.topology.parse().map_err(CliError::Input)?;
        let mut solvers = Vec::new();
        for s in &self.solvers {
            let solver = match s.algo.as_str() {
                "mwpm" | "exact" => {
                    if s.repetitions.is_some() || s.budget.is_some() || s.params != HeuristicParams::default() {
                        return Err(CliError::Input("mwpm takes only timing_reps".into()));
                    }
                    BenchSolver::Exact {
                        timing_reps: s.timing_reps.unwrap_or(1),
                    }
                }
                algo => {
                    if s.timing_reps.is_some() {
                        return Err(CliError::Input(format!("timing_reps does not apply to {algo}")));
                    }
                    BenchSolver::Heuristic {
                        solver: s.params.build(algo).map_err(|e| match e {
                            CliError::Usage(m) => CliError::Input(m),
                            e => e,
                        })?,
                        repetitions: s.repetitions.unwrap_or(100),
                        budget: match s.budget.as_deref() {
                            None | Some("fixed") => AttemptBudget::Fixed,
                            Some("optimal") => AttemptBudget::Optimal,
                            Some(other) => return Err(CliError::Input(format!("unknown budget {other:?}"))),
                        },
                    }
                }
            };
            solvers.push(solver);
        }
        Ok(ScalingPlan {
            topology,
            sizes: self.sizes.clone(),
            alpha: self.alpha,
            rho: self.rho,
            instances: self.instances,
            solvers,
            seed: self.seed,
            workers: self.workers.unwrap_or(default_workers),
        })
    }
}
