//! Stochastic baselines: simulated annealing and parallel tempering with
//! isoenergetic cluster moves (PT-ICM).
//!
//! Energies stay in integer instance units throughout; only the Metropolis
//! and exchange acceptance tests convert to `f64`, dividing by the
//! instance denominator.

use std::collections::VecDeque;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ising::{energy_of_spins, IsingError, IsingInstance, SpinConfiguration};

/// Two-sided 95% normal quantile used by the Wilson interval.
pub const WILSON_Z: f64 = 1.959964;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeuristicError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error(transparent)]
    Ising(#[from] IsingError),
}

/// Inverse-temperature schedule for annealing.
#[derive(Debug, Clone, PartialEq)]
pub enum AnnealSchedule {
    /// Explicit `(beta, sweeps)` steps.
    Steps(Vec<(f64, usize)>),
    Geometric {
        beta_min: f64,
        beta_max: f64,
        steps: usize,
        sweeps_per_step: usize,
    },
}

impl AnnealSchedule {
    pub fn steps(&self) -> Vec<(f64, usize)> {
        match *self {
            AnnealSchedule::Steps(ref s) => s.clone(),
            AnnealSchedule::Geometric {
                beta_min,
                beta_max,
                steps,
                sweeps_per_step,
            } => geometric_ladder(beta_min, beta_max, steps)
                .into_iter()
                .map(|b| (b, sweeps_per_step))
                .collect(),
        }
    }

    pub fn total_sweeps(&self) -> usize {
        self.steps().iter().map(|s| s.1).sum()
    }

    pub fn validate(&self) -> Result<(), HeuristicError> {
        let steps = self.steps();
        if steps.is_empty() {
            return Err(HeuristicError::InvalidSchedule("no steps".into()));
        }
        if steps.iter().any(|&(b, s)| !(b.is_finite() && b >= 0.0) || s == 0) {
            return Err(HeuristicError::InvalidSchedule(
                "betas must be finite and nonnegative, sweeps at least 1".into(),
            ));
        }
        if steps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(HeuristicError::InvalidSchedule("betas must strictly increase".into()));
        }
        Ok(())
    }
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule::Geometric {
            beta_min: 0.1,
            beta_max: 5.0,
            steps: 100,
            sweeps_per_step: 10,
        }
    }
}

/// `steps` betas spaced geometrically over `[beta_min, beta_max]`.
pub fn geometric_ladder(beta_min: f64, beta_max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![beta_min],
        _ => {
            let ratio = (beta_max / beta_min).powf(1.0 / (steps - 1) as f64);
            let mut out: Vec<f64> = (0..steps).map(|k| beta_min * ratio.powi(k as i32)).collect();
            out[steps - 1] = beta_max;
            out
        }
    }
}

/// Instance in compressed adjacency form for fast local-field updates.
#[derive(Debug, Clone)]
pub struct CompiledInstance {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<i64>,
    bias: Vec<i64>,
    denominator: f64,
}

impl CompiledInstance {
    pub fn new(instance: &IsingInstance) -> Self {
        let adj = instance.adjacency();
        let mut offsets = Vec::with_capacity(instance.n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for list in &adj {
            for &(j, w) in list {
                neighbors.push(j);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        CompiledInstance {
            n: instance.n,
            offsets,
            neighbors,
            weights,
            bias: instance.bias_vector(),
            denominator: instance.denominator() as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn field(&self, spins: &[i8], i: usize) -> i64 {
        let mut f = self.bias[i];
        for k in self.offsets[i]..self.offsets[i + 1] {
            f += self.weights[k] * spins[self.neighbors[k]] as i64;
        }
        f
    }

    pub fn energy(&self, spins: &[i8]) -> i64 {
        let mut e = 0;
        for i in 0..self.n {
            let s = spins[i] as i64;
            e += self.bias[i] * s;
            for k in self.offsets[i]..self.offsets[i + 1] {
                let j = self.neighbors[k];
                if j > i {
                    e += self.weights[k] * s * spins[j] as i64;
                }
            }
        }
        e
    }

    /// One Metropolis sweep in index order. Returns the new energy.
    pub fn sweep<R: Rng>(&self, spins: &mut [i8], mut energy: i64, beta: f64, rng: &mut R) -> i64 {
        let scale = beta / self.denominator;
        for i in 0..self.n {
            let delta = -2 * spins[i] as i64 * self.field(spins, i);
            if delta <= 0 || rng.gen::<f64>() < (-scale * delta as f64).exp() {
                spins[i] = -spins[i];
                energy += delta;
            }
        }
        energy
    }
}

fn random_spins<R: Rng>(n: usize, rng: &mut R) -> Vec<i8> {
    (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaResult {
    pub config: SpinConfiguration,
    pub energy: i64,
    pub sweeps: usize,
}

/// Simulated annealing from a uniformly random start.
pub fn simulated_annealing<R: Rng>(
    instance: &IsingInstance,
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> Result<SaResult, HeuristicError> {
    let start = random_spins(instance.n, rng);
    simulated_annealing_from(instance, schedule, SpinConfiguration::new(start)?, rng)
}

/// Simulated annealing from a given configuration. The best configuration
/// is sampled at sweep boundaries, including the start.
pub fn simulated_annealing_from<R: Rng>(
    instance: &IsingInstance,
    schedule: &AnnealSchedule,
    start: SpinConfiguration,
    rng: &mut R,
) -> Result<SaResult, HeuristicError> {
    schedule.validate()?;
    let compiled = CompiledInstance::new(instance);
    let mut spins = start.into_inner();
    if spins.len() != instance.n {
        return Err(IsingError::LengthMismatch {
            expected: instance.n,
            got: spins.len(),
        }
        .into());
    }
    let mut e = compiled.energy(&spins);
    let mut best = e;
    let mut best_spins = spins.clone();
    let mut sweeps = 0;
    for (beta, count) in schedule.steps() {
        for _ in 0..count {
            e = compiled.sweep(&mut spins, e, beta, rng);
            sweeps += 1;
            if e < best {
                best = e;
                best_spins.copy_from_slice(&spins);
            }
        }
    }
    Ok(SaResult {
        config: SpinConfiguration::new(best_spins)?,
        energy: best,
        sweeps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtIcmParams {
    /// Strictly increasing inverse temperatures; two replicas each.
    pub betas: Vec<f64>,
    pub sweeps: usize,
    pub icm_period: usize,
    pub swap_period: usize,
    pub seed: u64,
    /// Stop once the best energy reaches this value.
    pub target: Option<i64>,
}

impl Default for PtIcmParams {
    fn default() -> Self {
        PtIcmParams {
            betas: geometric_ladder(0.1, 5.0, 30),
            sweeps: 1000,
            icm_period: 10,
            swap_period: 1,
            seed: 0,
            target: None,
        }
    }
}

impl PtIcmParams {
    pub fn validate(&self) -> Result<(), HeuristicError> {
        if self.betas.is_empty() || self.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(HeuristicError::InvalidParams("ladder needs finite betas".into()));
        }
        if self.betas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HeuristicError::InvalidParams("ladder must strictly increase".into()));
        }
        if self.icm_period == 0 || self.swap_period == 0 {
            return Err(HeuristicError::InvalidParams("periods must be at least 1".into()));
        }
        if self.sweeps == 0 {
            return Err(HeuristicError::InvalidParams("sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PtIcmStats {
    pub swaps_attempted: u64,
    pub swaps_accepted: u64,
    pub icm_moves: u64,
    pub icm_flipped_sites: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtIcmResult {
    pub config: SpinConfiguration,
    pub energy: i64,
    /// Best energy after each sweep.
    pub trace: Vec<i64>,
    pub stats: PtIcmStats,
}

/// Random stream owned by replica `id` of a run seeded with `seed`.
pub fn replica_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Houdayer-style cluster move between two replicas at the same
/// temperature: picks a random site where they disagree, grows the
/// connected cluster of disagreeing sites over nonzero couplings and flips
/// it in both. Returns the cluster size, or `None` when the replicas agree
/// everywhere. Energies are updated in place; their sum never changes.
pub fn icm_move<R: Rng>(
    compiled: &CompiledInstance,
    a: &mut [i8],
    energy_a: &mut i64,
    b: &mut [i8],
    energy_b: &mut i64,
    rng: &mut R,
) -> Option<usize> {
    let disagree: Vec<usize> = (0..compiled.n).filter(|&i| a[i] != b[i]).collect();
    if disagree.is_empty() {
        return None;
    }
    let seed = disagree[rng.gen_range(0..disagree.len())];
    let mut in_cluster = vec![false; compiled.n];
    let mut cluster = vec![seed];
    in_cluster[seed] = true;
    let mut queue = VecDeque::from([seed]);
    while let Some(i) = queue.pop_front() {
        for k in compiled.offsets[i]..compiled.offsets[i + 1] {
            let j = compiled.neighbors[k];
            if !in_cluster[j] && a[j] != b[j] {
                in_cluster[j] = true;
                cluster.push(j);
                queue.push_back(j);
            }
        }
    }
    // Only bonds leaving the cluster and the biases inside it change.
    let delta = |s: &[i8]| -> i64 {
        let mut d = 0;
        for &i in &cluster {
            let si = s[i] as i64;
            d -= 2 * compiled.bias[i] * si;
            for k in compiled.offsets[i]..compiled.offsets[i + 1] {
                let j = compiled.neighbors[k];
                if !in_cluster[j] {
                    d -= 2 * compiled.weights[k] * si * s[j] as i64;
                }
            }
        }
        d
    };
    let (da, db) = (delta(a), delta(b));
    assert_eq!(da + db, 0, "cluster move changed the replica energy sum");
    for &i in &cluster {
        a[i] = -a[i];
        b[i] = -b[i];
    }
    *energy_a += da;
    *energy_b += db;
    Some(cluster.len())
}

/// Parallel tempering with two replicas per temperature and periodic
/// isoenergetic cluster moves.
pub fn pt_icm(instance: &IsingInstance, params: &PtIcmParams) -> Result<PtIcmResult, HeuristicError> {
    params.validate()?;
    let compiled = CompiledInstance::new(instance);
    let k = params.betas.len();
    let slots = 2 * k;
    // Slot 2t + r holds replica r at temperature t.
    let mut rngs: Vec<ChaCha8Rng> = (0..slots).map(|id| replica_rng(params.seed, id as u64)).collect();
    let mut control = replica_rng(params.seed, slots as u64);
    let mut spins: Vec<Vec<i8>> = rngs.iter_mut().map(|r| random_spins(instance.n, r)).collect();
    let mut energies: Vec<i64> = spins.iter().map(|s| compiled.energy(s)).collect();
    let mut stats = PtIcmStats::default();

    let mut best_slot = (0..slots).min_by_key(|&s| energies[s]).unwrap();
    let mut best = energies[best_slot];
    let mut best_spins = spins[best_slot].clone();
    let mut trace = Vec::with_capacity(params.sweeps);

    for sweep in 1..=params.sweeps {
        for slot in 0..slots {
            let beta = params.betas[slot / 2];
            energies[slot] = compiled.sweep(&mut spins[slot], energies[slot], beta, &mut rngs[slot]);
        }
        if sweep % params.icm_period == 0 {
            for t in 0..k {
                let (lo, hi) = spins.split_at_mut(2 * t + 1);
                let (elo, ehi) = energies.split_at_mut(2 * t + 1);
                if let Some(size) = icm_move(
                    &compiled,
                    &mut lo[2 * t],
                    &mut elo[2 * t],
                    &mut hi[0],
                    &mut ehi[0],
                    &mut control,
                ) {
                    stats.icm_moves += 1;
                    stats.icm_flipped_sites += size as u64;
                }
            }
        }
        if sweep % params.swap_period == 0 {
            for r in 0..2 {
                for t in 0..k.saturating_sub(1) {
                    let (i, j) = (2 * t + r, 2 * (t + 1) + r);
                    let d_beta = params.betas[t + 1] - params.betas[t];
                    let d_e = (energies[j] - energies[i]) as f64 / compiled.denominator;
                    stats.swaps_attempted += 1;
                    let x = d_beta * d_e;
                    if x >= 0.0 || control.gen::<f64>() < x.exp() {
                        spins.swap(i, j);
                        energies.swap(i, j);
                        stats.swaps_accepted += 1;
                    }
                }
            }
        }
        best_slot = (0..slots).min_by_key(|&s| energies[s]).unwrap();
        if energies[best_slot] < best {
            best = energies[best_slot];
            best_spins.copy_from_slice(&spins[best_slot]);
        }
        trace.push(best);
        if params.target.is_some_and(|t| best <= t) {
            break;
        }
    }
    debug_assert_eq!(energy_of_spins(instance, &best_spins).ok(), Some(best));
    Ok(PtIcmResult {
        config: SpinConfiguration::new(best_spins)?,
        energy: best,
        trace,
        stats,
    })
}

/// A heuristic solver with its parameters; the seed is supplied per run.
#[derive(Debug, Clone, PartialEq)]
pub enum HeuristicSolver {
    Sa(AnnealSchedule),
    PtIcm(PtIcmParams),
}

impl HeuristicSolver {
    pub fn id(&self) -> &'static str {
        match self {
            HeuristicSolver::Sa(_) => "sa",
            HeuristicSolver::PtIcm(_) => "pticm",
        }
    }

    /// One attempt. Returns the best configuration and energy found.
    pub fn run(&self, instance: &IsingInstance, seed: u64) -> Result<(SpinConfiguration, i64), HeuristicError> {
        match self {
            HeuristicSolver::Sa(schedule) => {
                let mut rng = replica_rng(seed, 0);
                let r = simulated_annealing(instance, schedule, &mut rng)?;
                Ok((r.config, r.energy))
            }
            HeuristicSolver::PtIcm(params) => {
                let p = PtIcmParams {
                    seed,
                    ..params.clone()
                };
                let r = pt_icm(instance, &p)?;
                Ok((r.config, r.energy))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessEstimate {
    pub successes: usize,
    pub repetitions: usize,
    pub p: f64,
    /// Wilson score interval at 95%.
    pub interval: (f64, f64),
    /// Mean wall time per attempt in microseconds.
    pub mean_time_us: f64,
    /// Lowest energy seen over all attempts.
    pub best_energy: i64,
}

pub fn wilson_interval(successes: usize, repetitions: usize) -> (f64, f64) {
    let r = repetitions as f64;
    let p = successes as f64 / r;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / r;
    let center = (p + z2 / (2.0 * r)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / r + z2 / (4.0 * r * r)).sqrt();
    // The bounds touch 0 and 1 exactly at the extremes; pin them there.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == repetitions { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Runs `repetitions` attempts with seeds `seed, seed + 1, …` and counts
/// those whose best energy equals `target`.
pub fn estimate_success_probability(
    solver: &HeuristicSolver,
    instance: &IsingInstance,
    target: i64,
    repetitions: usize,
    seed: u64,
) -> Result<SuccessEstimate, HeuristicError> {
    if repetitions == 0 {
        return Err(HeuristicError::NoRepetitions);
    }
    let mut successes = 0;
    let mut total_us = 0.0;
    let mut best_energy = i64::MAX;
    for rep in 0..repetitions {
        let start = Instant::now();
        let (_, e) = solver.run(instance, seed.wrapping_add(rep as u64))?;
        total_us += start.elapsed().as_secs_f64() * 1e6;
        best_energy = best_energy.min(e);
        if e == target {
            successes += 1;
        }
    }
    Ok(SuccessEstimate {
        successes,
        repetitions,
        p: successes as f64 / repetitions as f64,
        interval: wilson_interval(successes, repetitions),
        mean_time_us: total_us / repetitions as f64,
        best_energy,
    })
}
