mod config;
mod error;
mod output;
mod solution;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use spinglass::bench::scaling_run;
use spinglass::fcl::{generate_fcl_indexed, FclParams};
use spinglass::ground_state::solve_timed;
use spinglass::heuristics::wilson_interval;
use spinglass::ising::{brute_force_ground_state, parse_instance, planted_energy, serialize_instance, IsingError};
use spinglass::matching::{min_weight_perfect_matching, WeightedGraph};
use spinglass::topology::TopologyFamily;
use spinglass::tts::{
    fit_scaling, fit_summary, import_external_timings, read_records_csv, tts_distribution, write_records_csv,
    write_scaling_csv, FitModel, ScalingRow, ScalingTable, TtsRecord, DEFAULT_GAMMA,
};
use spinglass::{IsingInstance, SpinConfiguration};

use config::{HeuristicParams, PlanFile};
use error::CliError;
use output::{ensure_dir, manifest_path_for, read_input, read_text, Manifest};
use solution::SolutionText;

/// Environment variable holding the worker count for batch commands.
const WORKERS_ENV: &str = "SPINGLASS_WORKERS";

#[derive(Parser)]
#[command(name = "spinglass", version, about = "Planar Ising ground states, FCL benchmarks and TTS scaling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate FCL instances (or export a bare topology).
    Generate(GenerateArgs),
    /// Exact ground state by minimum-weight perfect matching.
    SolveExact {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Solve this many times and record the median wall time.
        #[arg(long, default_value_t = 1)]
        timing_reps: usize,
    },
    /// Simulated annealing or PT-ICM with repeated attempts.
    SolveHeuristic {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long = "in")]
        input: PathBuf,
        /// TOML parameter file.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Energy counted as success; defaults to the planted energy.
        #[arg(long, allow_hyphen_values = true)]
        target: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive ground state (at most 24 spins).
    Bruteforce {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimum-weight perfect matching of an edge list (debugging).
    #[command(hide = true)]
    Mwpm {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scaling plan.
    Benchmark {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a benchmark directory, optionally with external timings.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        external: Option<PathBuf>,
        /// Comparison table path; defaults to `<in>/comparison.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Sa,
    Pticm,
}

impl Algo {
    fn id(self) -> &'static str {
        match self {
            Algo::Sa => "sa",
            Algo::Pticm => "pticm",
        }
    }
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// chimera, logical-square or anticluster.
    #[arg(long)]
    topology: TopologyFamily,
    /// Unit cells per side.
    #[arg(long)]
    size: usize,
    #[arg(long, required_unless_present = "topology_only")]
    alpha: Option<f64>,
    #[arg(long, required_unless_present = "topology_only")]
    rho: Option<u32>,
    /// Ruggedness cap R ≥ rho; defaults to rho.
    #[arg(long)]
    ruggedness: Option<u32>,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write only the topology edge list.
    #[arg(long)]
    topology_only: bool,
    /// Rejected loops allowed per instance before giving up.
    #[arg(long)]
    max_loop_rejections: Option<usize>,
    /// Disconnected instances discarded before giving up.
    #[arg(long)]
    max_instance_rejections: Option<usize>,
}

fn workers(default: usize) -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(default),
    }
}

fn load_instance(path: &Path, manifest: &mut Manifest) -> Result<IsingInstance, CliError> {
    let bytes = read_input(path)?;
    manifest.input(path, &bytes);
    let text = String::from_utf8(bytes).map_err(|e| CliError::input(path.display(), e))?;
    let mut inst = parse_instance(&text).map_err(|e| CliError::input(path.display(), e))?;
    let sidecar = path.with_extension("json");
    if sidecar != path && sidecar.exists() {
        let bytes = read_input(&sidecar)?;
        manifest.input(&sidecar, &bytes);
        let doc: serde_json::Value =
            serde_json::from_slice(&bytes).map_err(|e| CliError::input(sidecar.display(), e))?;
        if let Some(spins) = doc.get("planted").and_then(|p| p.as_array()) {
            let spins: Option<Vec<i8>> = spins.iter().map(|s| s.as_i64().map(|v| v as i8)).collect();
            let spins = spins.ok_or_else(|| CliError::Input(format!("{}: bad planted array", sidecar.display())))?;
            let cfg = SpinConfiguration::new(spins).map_err(|e| CliError::input(sidecar.display(), e))?;
            if cfg.len() != inst.n {
                return Err(CliError::Input(format!(
                    "{}: planted length {} differs from n = {}",
                    sidecar.display(),
                    cfg.len(),
                    inst.n
                )));
            }
            inst.planted = Some(cfg);
        }
    }
    Ok(inst)
}

fn cmd_generate(a: GenerateArgs) -> Result<(), CliError> {
    ensure_dir(&a.out)?;
    let graph = a.topology.build(a.size)?;
    let mut manifest = Manifest::new("generate");
    manifest.param("topology", a.topology.name());
    manifest.param("size", a.size);
    if a.topology_only {
        manifest.param("topology_only", true);
        let name = format!("topology_{}_{}.txt", a.topology.name(), a.size);
        manifest.write_output(&a.out.join(&name), &name, graph.to_edge_list_text().as_bytes())?;
        return manifest.finish(&a.out.join("manifest.json"));
    }
    let (alpha, rho) = (a.alpha.unwrap(), a.rho.unwrap());
    let mut params = FclParams::new(alpha, rho, a.seed);
    params.ruggedness = a.ruggedness.unwrap_or(rho);
    if let Some(m) = a.max_loop_rejections {
        params.max_loop_rejections = m;
    }
    if let Some(m) = a.max_instance_rejections {
        params.max_instance_rejections = m;
    }
    params.validate()?;
    manifest.param("alpha", alpha);
    manifest.param("rho", rho);
    manifest.param("ruggedness", params.ruggedness);
    manifest.param("count", a.count);
    manifest.param("max_loop_rejections", params.max_loop_rejections);
    manifest.param("max_instance_rejections", params.max_instance_rejections);
    manifest.seed(a.seed);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers(std::thread::available_parallelism().map_or(1, |n| n.get()))?)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let start = Instant::now();
    let instances: Vec<_> = pool.install(|| {
        (0..a.count)
            .into_par_iter()
            .map(|i| generate_fcl_indexed(&graph, &params, i as u64))
            .collect()
    });
    manifest.timing("generation_us", start.elapsed().as_secs_f64() * 1e6);
    for (i, inst) in instances.into_iter().enumerate() {
        let inst = inst?;
        let stem = format!("instance_{i:04}");
        let planted = planted_energy(&inst)?;
        let meta: BTreeMap<&str, &str> = inst.metadata.params.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let sidecar = json!({
            "generator": inst.metadata.generator,
            "topology": a.topology.name(),
            "size": a.size,
            "n": inst.n,
            "params": meta,
            "rng_algorithm": inst.metadata.rng_algorithm,
            "planted_energy": inst.format_value(planted),
            "planted": inst.planted.as_ref().map(|p| p.spins().to_vec()),
        });
        let mut side = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        side.push('\n');
        let txt = format!("{stem}.txt");
        manifest.write_output(&a.out.join(&txt), &txt, serialize_instance(&inst).as_bytes())?;
        let js = format!("{stem}.json");
        manifest.write_output(&a.out.join(&js), &js, side.as_bytes())?;
    }
    manifest.finish(&a.out.join("manifest.json"))
}

fn cmd_solve_exact(input: &Path, out: &Path, timing_reps: usize) -> Result<(), CliError> {
    if timing_reps == 0 {
        return Err(CliError::Usage("--timing-reps must be at least 1".into()));
    }
    let mut manifest = Manifest::new("solve-exact");
    manifest.param("timing_reps", timing_reps);
    let inst = load_instance(input, &mut manifest)?;
    let (gs, median_us) = solve_timed(&inst, timing_reps)?;
    manifest.timing("median_solve_us", median_us);
    let mut sol = SolutionText::new("mwpm", &inst, &gs.config, gs.energy);
    sol.line("frustrated_faces", gs.frustrated_faces);
    sol.line("matching_weight", inst.format_value(gs.matching_weight));
    if let Ok(p) = planted_energy(&inst) {
        sol.line("planted_energy", inst.format_value(p));
        sol.line("matches_planted", p == gs.energy);
    }
    manifest.write_output(out, &out.display().to_string(), &sol.into_bytes())?;
    manifest.finish(&manifest_path_for(out))
}

fn parse_energy(inst: &IsingInstance, text: &str) -> Result<i64, CliError> {
    let probe = format!("2\n0 1 {text}\n");
    let one = parse_instance(&probe).map_err(|e: IsingError| CliError::Usage(format!("--target: {e}")))?;
    let v = &one.couplings[0];
    if one.scale > inst.scale {
        return Err(CliError::Usage(format!("--target {text} is finer than the instance precision")));
    }
    Ok(v.value * 10_i64.pow(inst.scale - one.scale))
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve_heuristic(
    algo: Algo,
    input: &Path,
    params: Option<&Path>,
    reps: usize,
    seed: u64,
    target: Option<&str>,
    out: &Path,
) -> Result<(), CliError> {
    if reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let mut manifest = Manifest::new("solve-heuristic");
    let hp = match params {
        Some(p) => {
            let bytes = read_input(p)?;
            manifest.input(p, &bytes);
            let text = String::from_utf8(bytes).map_err(|e| CliError::input(p.display(), e))?;
            toml::from_str::<HeuristicParams>(&text).map_err(|e| CliError::input(p.display(), e))?
        }
        None => HeuristicParams::default(),
    };
    let solver = hp.build(algo.id())?;
    manifest.param("algo", algo.id());
    manifest.param("params", &hp);
    manifest.param("reps", reps);
    manifest.seed(seed);
    let inst = load_instance(input, &mut manifest)?;
    let target = match target {
        Some(t) => Some(parse_energy(&inst, t)?),
        None => planted_energy(&inst).ok(),
    };
    // Attempt `k` uses seed `seed + k`.
    let mut best: Option<(SpinConfiguration, i64)> = None;
    let mut successes = 0;
    let start = Instant::now();
    for rep in 0..reps {
        let (cfg, e) = solver.run(&inst, seed.wrapping_add(rep as u64))?;
        if Some(e) == target {
            successes += 1;
        }
        if best.as_ref().is_none_or(|b| e < b.1) {
            best = Some((cfg, e));
        }
    }
    manifest.timing("mean_attempt_us", start.elapsed().as_secs_f64() * 1e6 / reps as f64);
    let (cfg, energy) = best.unwrap();
    let mut sol = SolutionText::new(algo.id(), &inst, &cfg, energy);
    sol.line("repetitions", reps);
    if let Some(t) = target {
        let p = successes as f64 / reps as f64;
        let (lo, hi) = wilson_interval(successes, reps);
        sol.line("target", inst.format_value(t));
        sol.line("successes", successes);
        sol.line("p", p);
        sol.line("wilson_low", lo);
        sol.line("wilson_high", hi);
        println!(
            "{}: best {} target {} successes {successes}/{reps} p = {p} (95% {lo:.4}..{hi:.4})",
            algo.id(),
            inst.format_value(energy),
            inst.format_value(t),
        );
    }
    manifest.write_output(out, &out.display().to_string(), &sol.into_bytes())?;
    manifest.finish(&manifest_path_for(out))
}

fn cmd_bruteforce(input: &Path, out: &Path) -> Result<(), CliError> {
    let mut manifest = Manifest::new("bruteforce");
    let inst = load_instance(input, &mut manifest)?;
    let start = Instant::now();
    let (cfg, e) = brute_force_ground_state(&inst)?;
    manifest.timing("solve_us", start.elapsed().as_secs_f64() * 1e6);
    let sol = SolutionText::new("bruteforce", &inst, &cfg, e);
    manifest.write_output(out, &out.display().to_string(), &sol.into_bytes())?;
    manifest.finish(&manifest_path_for(out))
}

/// Edge list with weights: node count, then `u v w` lines; `#` comments.
fn parse_weighted_graph(text: &str) -> Result<WeightedGraph, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, first) = lines.next().ok_or("missing node count")?;
    let n: usize = first.parse().map_err(|_| format!("line 1: bad node count {first:?}"))?;
    let mut g = WeightedGraph::new(n);
    for (no, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        let parsed = match f[..] {
            [u, v, w] => u.parse().ok().zip(v.parse().ok()).zip(w.parse().ok()),
            _ => None,
        };
        let ((u, v), w) = parsed.ok_or_else(|| format!("line {no}: expected `u v w`, found {line:?}"))?;
        g.add_edge(u, v, w);
    }
    Ok(g)
}

fn cmd_mwpm(graph: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let mut manifest = Manifest::new("mwpm");
    let bytes = read_input(graph)?;
    manifest.input(graph, &bytes);
    let text = String::from_utf8(bytes).map_err(|e| CliError::input(graph.display(), e))?;
    let g = parse_weighted_graph(&text).map_err(|e| CliError::input(graph.display(), e))?;
    let m = min_weight_perfect_matching(&g)?;
    let mut s = format!("weight {}\n", m.total_weight);
    for (u, v) in &m.pairs {
        s.push_str(&format!("{u} {v}\n"));
    }
    match out {
        Some(out) => {
            manifest.write_output(out, &out.display().to_string(), s.as_bytes())?;
            manifest.finish(&manifest_path_for(out))
        }
        None => {
            print!("{s}");
            Ok(())
        }
    }
}

fn write_table(manifest: &mut Manifest, dir: &Path, table: &ScalingTable) -> Result<(), CliError> {
    let mut csv = Vec::new();
    write_scaling_csv(table, &mut csv)?;
    let name = format!("scaling_{}.csv", table.solver);
    manifest.write_output(&dir.join(&name), &name, &csv)?;
    let name = format!("fits_{}.txt", table.solver);
    manifest.write_output(&dir.join(&name), &name, fit_summary(table).as_bytes())?;
    Ok(())
}

fn cmd_benchmark(plan_path: &Path, out: &Path) -> Result<(), CliError> {
    let mut manifest = Manifest::new("benchmark");
    let bytes = read_input(plan_path)?;
    manifest.input(plan_path, &bytes);
    let text = String::from_utf8(bytes).map_err(|e| CliError::input(plan_path.display(), e))?;
    let file = PlanFile::parse(&text)?;
    let plan = file.to_plan(workers(1)?)?;
    manifest.param("plan", &file);
    manifest.param("workers", plan.workers);
    manifest.seed(plan.seed);
    ensure_dir(out)?;
    let outcome = scaling_run(&plan)?;
    for t in &outcome.tables {
        write_table(&mut manifest, out, t)?;
        for row in &t.rows {
            println!(
                "{} n={} median={:.3}us q05={:.3}us q95={:.3}us",
                t.solver, row.n, row.median, row.q05, row.q95
            );
        }
        for f in &t.fits {
            println!("{} {} slope={:.4} r2={:.5}", t.solver, f.model, f.slope, f.r2);
        }
    }
    let mut csv = Vec::new();
    write_records_csv(&outcome.records, &mut csv)?;
    manifest.write_output(&out.join("records.csv"), "records.csv", &csv)?;
    manifest.finish(&out.join("manifest.json"))
}

fn rows_by_solver(records: &[TtsRecord]) -> Result<BTreeMap<String, Vec<ScalingRow>>, CliError> {
    let mut cells: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        let tts = r
            .tts2
            .ok_or_else(|| CliError::Input(format!("record for {} n={} lacks tts2", r.solver, r.class.n)))?;
        cells.entry((r.solver.clone(), r.class.n)).or_default().push(tts.as_f64());
    }
    let mut out: BTreeMap<String, Vec<ScalingRow>> = BTreeMap::new();
    for ((solver, n), values) in cells {
        let q = tts_distribution(&values)?;
        out.entry(solver).or_default().push(ScalingRow {
            n,
            q05: q.q05,
            median: q.median,
            q95: q.q95,
        });
    }
    Ok(out)
}

fn cmd_report(input: &Path, external: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let mut manifest = Manifest::new("report");
    let records_path = input.join("records.csv");
    let bytes = read_input(&records_path)?;
    manifest.input(&records_path, &bytes);
    let records = read_records_csv(bytes.as_slice()).map_err(|e| CliError::input(records_path.display(), e))?;
    let mut sources = vec![("measured", rows_by_solver(&records)?)];
    if let Some(ext) = external {
        let text = read_text(ext)?;
        manifest.input(ext, text.as_bytes());
        let report = import_external_timings(text.as_bytes()).map_err(|e| CliError::input(ext.display(), e))?;
        for r in &report.rejected {
            eprintln!("{}:{}: rejected: {}", ext.display(), r.line, r.reason);
        }
        manifest.param("external_rows", report.records.len());
        manifest.param("external_rejected", report.rejected.len());
        sources.push(("external", rows_by_solver(&report.records)?));
    }

    let mut table = String::from("source,solver,n,q05_us,median_us,q95_us\n");
    let mut summary = String::new();
    for (source, solvers) in &sources {
        for (solver, rows) in solvers {
            for r in rows {
                table.push_str(&format!("{source},{solver},{},{},{},{}\n", r.n, r.q05, r.median, r.q95));
            }
            summary.push_str(&format!("[{source}.{solver}]\n"));
            for model in [FitModel::Power, FitModel::Exponential { gamma: DEFAULT_GAMMA }] {
                match fit_scaling(rows, model) {
                    Ok(f) => summary.push_str(&format!(
                        "{model}: intercept = {} slope = {} r2 = {}\n",
                        f.intercept, f.slope, f.r2
                    )),
                    Err(e) => summary.push_str(&format!("{model}: not fitted ({e})\n")),
                }
            }
        }
    }
    print!("{summary}");
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| input.join("comparison.csv"));
    manifest.write_output(&out, &out.display().to_string(), table.as_bytes())?;
    let summary_path = out.with_extension("fits.txt");
    manifest.write_output(&summary_path, &summary_path.display().to_string(), summary.as_bytes())?;
    manifest.finish(&manifest_path_for(&out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::SolveExact {
            input,
            out,
            timing_reps,
        } => cmd_solve_exact(&input, &out, timing_reps),
        Command::SolveHeuristic {
            algo,
            input,
            params,
            reps,
            seed,
            target,
            out,
        } => cmd_solve_heuristic(algo, &input, params.as_deref(), reps, seed, target.as_deref(), &out),
        Command::Bruteforce { input, out } => cmd_bruteforce(&input, &out),
        Command::Mwpm { graph, out } => cmd_mwpm(&graph, out.as_deref()),
        Command::Benchmark { plan, out } => cmd_benchmark(&plan, &out),
        Command::Report { input, external, out } => cmd_report(&input, external.as_deref(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinglass: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
