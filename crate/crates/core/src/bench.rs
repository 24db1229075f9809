//! Scaling experiments: generate FCL instances per lattice size, time each
//! solver on them and aggregate per-size TTS quantiles.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use thiserror::Error;

use crate::fcl::{generate_fcl_indexed, FclError, FclParams};
use crate::ground_state::{solve_timed, GroundStateError};
use crate::heuristics::{estimate_success_probability, pt_icm, HeuristicError, HeuristicSolver, PtIcmParams};
use crate::ising::{planted_energy, IsingInstance};
use crate::topology::{TopologyError, TopologyFamily};
use crate::tts::{
    optimal_budget, tts_distribution, InstanceClass, OptimalBudget, ScalingRow, ScalingTable, TtsError, TtsRecord,
    DEFAULT_CONFIDENCE,
};

pub const EXACT_SOLVER_ID: &str = "mwpm";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("generation of instance {index} at size {size}: {source}")]
    Generation { size: usize, index: usize, source: FclError },
    #[error("exact solver: {0}")]
    Exact(#[from] GroundStateError),
    #[error("heuristic: {0}")]
    Heuristic(#[from] HeuristicError),
    #[error("tts: {0}")]
    Tts(#[from] TtsError),
    #[error("exact energy {exact} differs from planted energy {planted} (size {size}, instance {index})")]
    PlantedMismatch { size: usize, index: usize, exact: i64, planted: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchSolver {
    /// Matching solver; `p = 1` and TTS equals the median solve time.
    Exact { timing_reps: usize },
    /// Repeated independent attempts of a heuristic.
    Heuristic {
        solver: HeuristicSolver,
        repetitions: usize,
        budget: AttemptBudget,
    },
}

/// What one heuristic attempt is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttemptBudget {
    /// A full run with the configured parameters.
    #[default]
    Fixed,
    /// PT-ICM only: runs stop at the target, and the attempt length is the
    /// sweep count minimizing TTS₂ over the observed first-hit counts.
    Optimal,
}

impl BenchSolver {
    pub fn id(&self) -> &'static str {
        match self {
            BenchSolver::Exact { .. } => EXACT_SOLVER_ID,
            BenchSolver::Heuristic { solver, .. } => solver.id(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPlan {
    pub topology: TopologyFamily,
    /// Lattice side lengths `c`.
    pub sizes: Vec<usize>,
    pub alpha: f64,
    pub rho: u32,
    pub instances: usize,
    pub solvers: Vec<BenchSolver>,
    pub seed: u64,
    /// Concurrent instances. Timings are only comparable at 1.
    pub workers: usize,
}

impl ScalingPlan {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidPlan(m.into()));
        if self.sizes.is_empty() {
            return bad("no sizes");
        }
        if self.sizes.contains(&0) {
            return bad("sizes must be positive");
        }
        if self.solvers.is_empty() {
            return bad("no solvers");
        }
        if self.instances == 0 {
            return bad("instance count must be positive");
        }
        if self.workers == 0 {
            return bad("worker count must be positive");
        }
        let mut ids: Vec<&str> = self.solvers.iter().map(BenchSolver::id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("solver listed twice");
        }
        for s in &self.solvers {
            match s {
                BenchSolver::Exact { timing_reps: 0 } => return bad("timing_reps must be positive"),
                BenchSolver::Heuristic { repetitions: 0, .. } => return bad("repetitions must be positive"),
                BenchSolver::Heuristic {
                    solver: HeuristicSolver::Sa(_),
                    budget: AttemptBudget::Optimal,
                    ..
                } => return bad("optimal budget needs pticm"),
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingOutcome {
    /// One table per solver, in plan order.
    pub tables: Vec<ScalingTable>,
    /// Per-instance records, ordered by size, instance and solver.
    pub records: Vec<TtsRecord>,
}

/// SplitMix64 finalizer, used to derive independent seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator seed for all instances of lattice size `c`.
pub fn size_seed(seed: u64, c: usize) -> u64 {
    mix(seed ^ mix(c as u64))
}

fn run_instance(
    plan: &ScalingPlan,
    c: usize,
    index: usize,
    instance: &IsingInstance,
) -> Result<Vec<TtsRecord>, BenchError> {
    let planted = planted_energy(instance).ok();
    let class = InstanceClass {
        topology: plan.topology.name().into(),
        n: instance.n,
        alpha: Some(plan.alpha),
        rho: Some(plan.rho),
    };
    let mut target = planted;
    let mut records = Vec::new();
    let mut exact_first: Vec<&BenchSolver> = plan.solvers.iter().collect();
    exact_first.sort_by_key(|s| !matches!(s, BenchSolver::Exact { .. }));
    for solver in exact_first {
        let record = match solver {
            BenchSolver::Exact { timing_reps } => {
                let (gs, t_us) = solve_timed(instance, *timing_reps)?;
                if let Some(p) = planted {
                    if p != gs.energy {
                        return Err(BenchError::PlantedMismatch {
                            size: c,
                            index,
                            exact: gs.energy,
                            planted: p,
                        });
                    }
                }
                target = Some(gs.energy);
                TtsRecord::measured(solver.id(), class.clone(), t_us.max(f64::MIN_POSITIVE), 1.0)?
            }
            BenchSolver::Heuristic {
                solver: h,
                repetitions,
                budget,
            } => {
                let target = target.ok_or_else(|| {
                    BenchError::InvalidPlan("heuristic needs the exact solver or planted instances".into())
                })?;
                let seed = mix(size_seed(plan.seed, c) ^ mix(index as u64 + 1));
                match (h, budget) {
                    (HeuristicSolver::PtIcm(params), AttemptBudget::Optimal) => {
                        let o = optimal_pt_icm(instance, params, target, *repetitions, seed)?;
                        let mut r = TtsRecord::measured(solver.id(), class.clone(), o.t_us, o.p)?;
                        r.tags.push(format!("budget_sweeps={}", o.sweeps));
                        r
                    }
                    _ => {
                        let est = estimate_success_probability(h, instance, target, *repetitions, seed)?;
                        TtsRecord::measured(solver.id(), class.clone(), est.mean_time_us.max(f64::MIN_POSITIVE), est.p)?
                    }
                }
            }
        };
        records.push(record);
    }
    let order = |id: &str| plan.solvers.iter().position(|s| s.id() == id);
    records.sort_by_key(|r| order(&r.solver));
    Ok(records)
}

/// Runs PT-ICM `repetitions` times up to its sweep limit, stopping each run
/// at `target`, and picks the TTS₂-optimal attempt length.
pub fn optimal_pt_icm(
    instance: &IsingInstance,
    params: &PtIcmParams,
    target: i64,
    repetitions: usize,
    seed: u64,
) -> Result<OptimalBudget, BenchError> {
    if repetitions == 0 {
        return Err(HeuristicError::NoRepetitions.into());
    }
    let mut hits = Vec::with_capacity(repetitions);
    let mut sweeps = 0usize;
    let start = Instant::now();
    for rep in 0..repetitions {
        let p = PtIcmParams {
            seed: seed.wrapping_add(rep as u64),
            target: Some(target),
            ..params.clone()
        };
        let r = pt_icm(instance, &p)?;
        sweeps += r.trace.len();
        hits.push((r.energy <= target).then_some(r.trace.len()));
    }
    let us_per_sweep = (start.elapsed().as_secs_f64() * 1e6 / sweeps as f64).max(f64::MIN_POSITIVE);
    Ok(optimal_budget(&hits, params.sweeps, us_per_sweep, DEFAULT_CONFIDENCE)?)
}

type JobResult = Result<Vec<TtsRecord>, BenchError>;

/// Runs the plan and returns per-solver tables of TTS₂ quantiles.
pub fn scaling_run(plan: &ScalingPlan) -> Result<ScalingOutcome, BenchError> {
    plan.validate()?;
    let jobs: Vec<(usize, usize)> = plan
        .sizes
        .iter()
        .flat_map(|&c| (0..plan.instances).map(move |i| (c, i)))
        .collect();
    let graphs = plan
        .sizes
        .iter()
        .map(|&c| plan.topology.build(c).map(|g| (c, g)))
        .collect::<Result<Vec<_>, _>>()?;
    let job = |k: usize| -> Result<Vec<TtsRecord>, BenchError> {
        let (c, index) = jobs[k];
        let graph = &graphs.iter().find(|(s, _)| *s == c).unwrap().1;
        let params = FclParams::new(plan.alpha, plan.rho, size_seed(plan.seed, c));
        let instance = generate_fcl_indexed(graph, &params, index as u64)
            .map_err(|source| BenchError::Generation { size: c, index, source })?;
        run_instance(plan, c, index, &instance)
    };

    let results: Mutex<Vec<Option<JobResult>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..plan.workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= jobs.len() {
                    break;
                }
                let r = job(k);
                let failed = r.is_err();
                results.lock().unwrap()[k] = Some(r);
                if failed {
                    next.store(jobs.len(), Ordering::Relaxed);
                }
            });
        }
    });

    let mut tagged: Vec<(usize, TtsRecord)> = Vec::new();
    for (k, r) in results.into_inner().unwrap().into_iter().enumerate() {
        if let Some(r) = r {
            tagged.extend(r?.into_iter().map(|rec| (jobs[k].0, rec)));
        }
    }

    let mut tables = Vec::new();
    for solver in &plan.solvers {
        let mut rows = Vec::new();
        for &c in &plan.sizes {
            let cell: Vec<&TtsRecord> = tagged
                .iter()
                .filter(|(size, r)| *size == c && r.solver == solver.id())
                .map(|(_, r)| r)
                .collect();
            let values: Vec<f64> = cell
                .iter()
                .map(|r| r.tts2.expect("measured records carry tts2").as_f64())
                .collect();
            let q = tts_distribution(&values)?;
            rows.push(ScalingRow {
                n: cell[0].class.n,
                q05: q.q05,
                median: q.median,
                q95: q.q95,
            });
        }
        tables.push(ScalingTable::new(solver.id(), rows).with_default_fits());
    }
    let records = tagged.into_iter().map(|(_, r)| r).collect();
    Ok(ScalingOutcome { tables, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::AnnealSchedule;
    use crate::tts::FitModel;

    fn plan(solvers: Vec<BenchSolver>) -> ScalingPlan {
        ScalingPlan {
            topology: TopologyFamily::LogicalSquare,
            sizes: vec![4, 6, 8],
            alpha: 1.0,
            rho: 3,
            instances: 3,
            solvers,
            seed: 5,
            workers: 1,
        }
    }

    #[test]
    fn exact_only_plan() {
        let out = scaling_run(&plan(vec![BenchSolver::Exact { timing_reps: 3 }])).unwrap();
        assert_eq!(out.tables.len(), 1);
        let t = &out.tables[0];
        assert_eq!(t.solver, "mwpm");
        assert_eq!(t.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![16, 36, 64]);
        for r in &t.rows {
            assert!(r.q05 <= r.median && r.median <= r.q95);
        }
        assert_eq!(out.records.len(), 9);
        assert!(out.records.iter().all(|r| r.p == Some(1.0) && r.tts2.unwrap().value() == r.t_us));
        assert!(t.fits.iter().any(|f| f.model == FitModel::Power));
    }

    #[test]
    fn heuristics_use_exact_target() {
        let sa = HeuristicSolver::Sa(AnnealSchedule::default());
        let pt = HeuristicSolver::PtIcm(PtIcmParams {
            sweeps: 50,
            ..Default::default()
        });
        let mut p = plan(vec![
            BenchSolver::Heuristic {
                solver: sa,
                repetitions: 4,
                budget: AttemptBudget::Fixed,
            },
            BenchSolver::Exact { timing_reps: 1 },
            BenchSolver::Heuristic {
                solver: pt,
                repetitions: 4,
                budget: AttemptBudget::Optimal,
            },
        ]);
        p.sizes = vec![4, 5];
        p.workers = 2;
        let out = scaling_run(&p).unwrap();
        let ids: Vec<_> = out.tables.iter().map(|t| t.solver.as_str()).collect();
        assert_eq!(ids, ["sa", "mwpm", "pticm"]);
        assert_eq!(out.records.len(), 2 * 3 * 3);
        // Small instances are easy for both heuristics.
        assert!(out.records.iter().all(|r| r.p.unwrap() > 0.0));
        for r in out.records.iter().filter(|r| r.solver == "pticm") {
            assert!(r.tags[0].starts_with("budget_sweeps="));
        }
    }

    #[test]
    fn invalid_plans() {
        let mut p = plan(vec![BenchSolver::Exact { timing_reps: 1 }]);
        p.sizes.clear();
        assert!(matches!(scaling_run(&p), Err(BenchError::InvalidPlan(_))));
        let p = plan(vec![]);
        assert!(matches!(scaling_run(&p), Err(BenchError::InvalidPlan(_))));
        let p = plan(vec![BenchSolver::Exact { timing_reps: 1 }, BenchSolver::Exact { timing_reps: 2 }]);
        assert!(matches!(scaling_run(&p), Err(BenchError::InvalidPlan(_))));
    }

    #[test]
    fn optimal_budget_needs_pticm() {
        let p = plan(vec![BenchSolver::Heuristic {
            solver: HeuristicSolver::Sa(AnnealSchedule::default()),
            repetitions: 2,
            budget: AttemptBudget::Optimal,
        }]);
        assert!(matches!(scaling_run(&p), Err(BenchError::InvalidPlan(_))));
    }

    #[test]
    fn nonplanar_topology_fails_exact() {
        let mut p = plan(vec![BenchSolver::Exact { timing_reps: 1 }]);
        p.topology = TopologyFamily::Chimera;
        p.sizes = vec![2];
        p.alpha = 0.5;
        assert!(matches!(scaling_run(&p), Err(BenchError::Exact(_))));
    }
}
