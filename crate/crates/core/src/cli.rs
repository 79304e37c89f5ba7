//! Command-line front end.
//!
//! Every command writes into a fresh run directory under `runs/` (or
//! `$LMAPF_OUT`) and echoes its resolved configuration there. Exit codes:
//! 0 success, 1 runtime failure, 2 bad flags, 3 validation failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gpibt::LnsParams;
use crate::maps::load_map;
use crate::optimize::{arch_for, optimize_policy, Budget, OptimizeConfig};
use crate::policy::{Arch, GuidancePolicy};
use crate::seeding;
use crate::sim::{batch_evaluate, deadlock_monitor, run_simulation, Algorithm, ExperimentConfig};
use crate::tasks::TaskDistribution;

pub const OUT_ENV: &str = "LMAPF_OUT";

#[derive(Debug, Parser)]
#[command(name = "lmapf", version, about = "Lifelong MAPF with guidance policies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output root (overrides $LMAPF_OUT).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation.
    Simulate(SimArgs),
    /// Optimize a guidance policy with CMA-ES.
    Optimize(OptimizeArgs),
    /// Run a configuration over many seeds and report mean and 95% CI.
    Evaluate(EvaluateArgs),
    /// Parse a map and report its cell counts.
    ValidateMap {
        #[arg(long)]
        map: String,
    },
    /// Write the guidance graph (and guide paths) after a simulation.
    DumpGuidance(SimArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskKind {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Resolved config JSON from an earlier run; other simulation flags are ignored.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "empty-32-32")]
    pub map: String,
    /// on+pibt | off+pibt | on+gpibt | [p-on]+gpibt | off+gpibt | hm+gpibt, optionally with +lns
    #[arg(long = "algo")]
    pub algo: Option<String>,
    #[arg(long, default_value_t = 50)]
    pub agents: usize,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Guidance update interval m.
    #[arg(long, default_value_t = 20)]
    pub interval: usize,
    #[arg(long, value_enum, default_value = "static")]
    pub tasks: TaskKind,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub modes: Option<usize>,
    /// Steps between Gaussian center changes.
    #[arg(long)]
    pub nd: Option<usize>,
    /// Policy JSON file.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long)]
    pub lns: bool,
    #[arg(long)]
    pub no_swap: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// cnn | wq | reduced | static
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    #[arg(long, default_value_t = 20)]
    pub batch: usize,
    #[arg(long, default_value_t = 2)]
    pub ne: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    #[arg(long)]
    pub common_seeds: bool,
    /// Checkpoint file to resume from and update.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Number of seeds (derived from --seed).
    #[arg(long, default_value_t = 50)]
    pub seeds: usize,
    /// Run seeds one after another.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::MapHeader(_)
        | Error::RowLength { .. }
        | Error::UnknownCell { .. }
        | Error::RowCount { .. }
        | Error::Disconnected { .. }
        | Error::EmptyMap
        | Error::Config(_)
        | Error::WrongArch { .. }
        | Error::ParamCount { .. }
        | Error::EvenWindow(_)
        | Error::Validation(_) => 3,
        _ => 1,
    }
}

fn kind(e: &Error) -> &'static str {
    match exit_code(e) {
        3 => "validation",
        _ => "runtime",
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let rec = ErrorRecord { error: kind(&e), message: e.to_string(), exit_code: code };
            eprintln!("{}", serde_json::to_string(&rec).unwrap_or_else(|_| e.to_string()));
            code
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a, false),
        Command::DumpGuidance(a) => simulate(cli, a, true),
        Command::Optimize(a) => optimize(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
        Command::ValidateMap { map } => {
            let m = load_map(map)?;
            let summary = serde_json::json!({
                "map": map,
                "height": m.height(),
                "width": m.width(),
                "free_count": m.free_count(),
                "endpoints": m.cells_of_kind(crate::grid::CellKind::Endpoint).len(),
                "workstations": m.cells_of_kind(crate::grid::CellKind::Workstation).len(),
                "connected": true,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

fn task_distribution(a: &SimArgs) -> Result<TaskDistribution> {
    match a.tasks {
        TaskKind::Static => Ok(TaskDistribution::StaticUniform),
        TaskKind::Dynamic => {
            let map = load_map(&a.map)?;
            let TaskDistribution::DynamicGaussian { sigma, modes, interval, center_domain } = TaskDistribution::dynamic_for(&map) else {
                unreachable!()
            };
            Ok(TaskDistribution::DynamicGaussian {
                sigma: a.sigma.unwrap_or(sigma),
                modes: a.modes.unwrap_or(modes),
                interval: a.nd.unwrap_or(interval),
                center_domain,
            })
        }
    }
}

/// Builds the experiment config from flags, or loads it from `--config`.
pub fn resolve_config(a: &SimArgs) -> Result<ExperimentConfig> {
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return Ok(serde_json::from_str(&text)?);
    }
    let algo = a.algo.as_deref().unwrap_or("off+gpibt");
    let algorithm: Algorithm = algo.parse()?;
    let lns = a.lns || algo.to_ascii_lowercase().ends_with("+lns");
    let policy = match &a.policy {
        Some(p) => Some(GuidancePolicy::load(p)?),
        None if algorithm.is_periodic() => Some(GuidancePolicy::zeros(Arch::cnn())),
        None if algorithm == Algorithm::OnGpibt => Some(GuidancePolicy::zeros(Arch::windowed_quadratic())),
        None => None,
    };
    Ok(ExperimentConfig {
        map: a.map.clone(),
        algorithm,
        num_agents: a.agents,
        steps: a.steps,
        update_interval: a.interval,
        tasks: task_distribution(a)?,
        policy,
        lns: lns.then(LnsParams::default),
        swap: !a.no_swap,
        seed: a.seed,
    })
}

fn sanitize(s: &str) -> String {
    let base = Path::new(s).file_stem().and_then(|x| x.to_str()).unwrap_or(s);
    base.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// `<root>/<command>_<map>_<algo>_s<seed>_<timestamp>`, created fresh.
pub fn run_dir(cli: &Cli, command: &str, map: &str, algo: &str, seed: u64) -> Result<PathBuf> {
    let root = cli.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("runs"));
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let base = format!("{command}_{}_{}_s{seed}_{stamp}", sanitize(map), sanitize(&algo.replace('+', "-")));
    let mut dir = root.join(&base);
    let mut k = 1;
    while dir.exists() {
        dir = root.join(format!("{base}-{k}"));
        k += 1;
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn simulate(cli: &Cli, a: &SimArgs, dump: bool) -> Result<()> {
    let cfg = resolve_config(a)?;
    let report = run_simulation(&cfg)?;
    let dir = run_dir(cli, if dump { "dump-guidance" } else { "simulate" }, &cfg.map, cfg.algorithm.name(), cfg.seed)?;
    write(&dir, "config.json", &serde_json::to_string_pretty(&cfg)?)?;
    if dump {
        let g = report.final_guidance.as_ref().expect("simulation keeps its guidance graph");
        write(&dir, "guidance.csv", &g.to_csv())?;
        write(&dir, "guidance.json", &g.to_json()?)?;
        if let Some(paths) = &report.guide_paths_jsonl {
            write(&dir, "guide_paths.jsonl", paths)?;
        }
    } else {
        write(&dir, "report.json", &report.to_json()?)?;
        write(&dir, "wait_heatmap.csv", &report.heatmap_csv())?;
        write(&dir, "finished_per_step.csv", &report.finished_csv(20))?;
        let timing = serde_json::json!({ "mean_step_wallclock_s": report.mean_step_wallclock });
        write(&dir, "timing.json", &serde_json::to_string_pretty(&timing)?)?;
    }
    let stall = deadlock_monitor(&report.finished_per_step, 20);
    println!(
        "{} {} agents={} steps={} throughput={:.4} conflicts={} stalled={} -> {}",
        cfg.algorithm,
        cfg.map,
        cfg.num_agents,
        cfg.steps,
        report.throughput,
        report.conflicts_detected,
        stall.stalled,
        dir.display()
    );
    if report.conflicts_detected > 0 {
        return Err(Error::Validation(format!("{} conflicts in executed trajectory", report.conflicts_detected)));
    }
    Ok(())
}

/// Requested architecture (None for static weights) and the algorithm it
/// implies when `--algo` is absent.
fn parse_arch(s: &str) -> Result<(Option<Arch>, Algorithm)> {
    match s.to_ascii_lowercase().as_str() {
        "cnn" => Ok((Some(Arch::cnn()), Algorithm::OnPibt)),
        "wq" | "windowed-quadratic" => Ok((Some(Arch::windowed_quadratic()), Algorithm::OnGpibt)),
        "reduced" | "reduced-quadratic" => Ok((Some(Arch::ReducedQuadratic), Algorithm::OnGpibt)),
        "static" | "static-weights" => Ok((None, Algorithm::OffGpibt)),
        other => Err(Error::Config(format!("unknown architecture {other:?}"))),
    }
}

fn optimize(cli: &Cli, a: &OptimizeArgs) -> Result<()> {
    let parsed = a.arch.as_deref().map(parse_arch).transpose()?;
    let mut args = a.sim.clone();
    if args.algo.is_none() {
        args.algo = Some(parsed.as_ref().map_or(Algorithm::OnGpibt, |p| p.1).name().to_string());
    }
    let mut sim = resolve_config(&args)?;
    let map = load_map(&sim.map)?;
    let arch = arch_for(sim.algorithm, &map, parsed.and_then(|p| p.0))?;
    sim.policy = None;
    let cfg = OptimizeConfig {
        arch,
        sim,
        budget: Budget { evaluations: a.budget, batch: a.batch, replicates: a.ne },
        seed: a.sim.seed,
        sigma0: a.sigma0,
        common_seeds: a.common_seeds,
        serial: cli.jobs == Some(1),
    };
    let dir = run_dir(cli, "optimize", &cfg.sim.map, cfg.sim.algorithm.name(), cfg.seed)?;
    write(&dir, "config.json", &serde_json::to_string_pretty(&cfg)?)?;
    let checkpoint = a.checkpoint.clone().unwrap_or_else(|| dir.join("checkpoint.json"));
    let result = optimize_policy(&cfg, Some(&checkpoint))?;
    result.best.save(dir.join("best_theta.json"))?;
    write(&dir, "history.csv", &result.history_csv())?;
    println!(
        "{} dim={} evals={} best fitness={:.4} -> {}",
        cfg.arch.name(),
        cfg.arch.num_params(),
        result.history.last().map_or(0, |h| h.evals_used),
        result.best_fitness,
        dir.display()
    );
    Ok(())
}

fn evaluate(cli: &Cli, a: &EvaluateArgs) -> Result<()> {
    let cfg = resolve_config(&a.sim)?;
    let seeds: Vec<u64> = (0..a.seeds as u64).map(|i| seeding::derive(cfg.seed, &[seeding::EVAL, u64::MAX, i])).collect();
    let stats = batch_evaluate(&cfg, &seeds, a.serial || cli.jobs == Some(1))?;
    let dir = run_dir(cli, "evaluate", &cfg.map, cfg.algorithm.name(), cfg.seed)?;
    write(&dir, "config.json", &serde_json::to_string_pretty(&cfg)?)?;
    write(&dir, "evaluation.json", &serde_json::to_string_pretty(&stats)?)?;
    println!("algorithm        runs   mean      std       ci95");
    println!(
        "{:<16} {:<6} {:<9.4} {:<9.4} [{:.4}, {:.4}]",
        cfg.algorithm.name(),
        stats.runs,
        stats.mean,
        stats.std,
        stats.ci_low,
        stats.ci_high
    );
    println!("-> {}", dir.display());
    Ok(())
}
