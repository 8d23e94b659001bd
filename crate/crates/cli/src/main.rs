use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cheshire::control::{calibrate_budget, simulate_controlled, CalibrationOptions, ControlConfig, FeedbackPolicy};
use cheshire::estimation::{fit_mle, FitConfig};
use cheshire::harness::{export_report, read_metrics_csv, run_experiment, ExperimentConfig};
use cheshire::hawkes::{branching_check, EventLog, NetworkModel};
use cheshire::networks::{kronecker_graph, sample_parameters, Graph, KroneckerSeed, ParameterRanges};
use cheshire::rng::run_seed;
use cheshire::simulation::{simulate_uncontrolled, DEFAULT_EVENT_CAP};
use cheshire::{Error, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "cheshire",
    version,
    about = "Steer activity in Hawkes-driven networks with optimal feedback incentives"
)]
struct Cli {
    /// Master seed (overrides the config file's `master_seed` for `run`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a stochastic Kronecker graph, optionally with model parameters.
    GenNet(GenNet),
    /// Simulate uncontrolled or policy-controlled runs and write event logs.
    Sim(Sim),
    /// Solve for the feedback policy, optionally matched to a budget.
    Policy(PolicyCmd),
    /// Run a multi-method experiment from a TOML config.
    Run(RunCmd),
    /// Fit a model to event logs by maximum likelihood.
    Fit(Fit),
    /// Re-render the SVG chart from a metrics CSV.
    Report(Report),
}

#[derive(Args)]
struct GenNet {
    /// Initiator entries `a,b,c,d` (row major).
    #[arg(long, value_delimiter = ',', num_args = 4, conflicts_with = "preset")]
    seed_matrix: Option<Vec<f64>>,
    /// Named initiator instead of `--seed-matrix`.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Edge-list output path.
    #[arg(long)]
    out: PathBuf,
    /// Also sample parameters (`demonstration` or `comparison`) and write a model JSON here.
    #[arg(long, requires = "params")]
    model_out: Option<PathBuf>,
    #[arg(long)]
    params: Option<String>,
}

#[derive(Args)]
struct Sim {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long)]
    tf: f64,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value_t = DEFAULT_EVENT_CAP)]
    cap: usize,
    /// Policy JSON; without it the runs are uncontrolled.
    #[arg(long)]
    policy: Option<PathBuf>,
}

#[derive(Args)]
struct PolicyCmd {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long)]
    tf: f64,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    f: f64,
    #[arg(long, default_value_t = ControlConfig::DEFAULT_GRID_STEPS)]
    grid_steps: usize,
    /// Scale `S` so that the expected number of incentivized actions matches.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 20)]
    calibration_runs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunCmd {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct Fit {
    /// Glob matching event-log CSV files.
    #[arg(long)]
    logs: String,
    /// Edge-list file giving the allowed influence entries.
    #[arg(long)]
    support: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    omega_grid: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// End of the observation window of every log.
    #[arg(long)]
    tf: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Report {
    #[arg(long)]
    metrics: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::error!("cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_solver_failure() { 3 } else { 2 })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::GenNet(a) => gen_net(a),
        Command::Sim(a) => sim(a, seed, &out_dir),
        Command::Policy(a) => policy(a, seed),
        Command::Run(a) => run(a, cli),
        Command::Fit(a) => fit(a),
        Command::Report(a) => {
            let files = export_report(&read_metrics_csv(&a.metrics)?, &out_dir)?;
            println!("{}", files.svg.display());
            Ok(())
        }
    }
}

fn gen_net(a: &GenNet) -> Result<()> {
    let seed = match (&a.seed_matrix, &a.preset) {
        (Some(m), None) => KroneckerSeed::new([[m[0], m[1]], [m[2], m[3]]], a.k)?,
        (None, Some(p)) => KroneckerSeed::preset(p, a.k)?,
        _ => return Err(Error::Config("give exactly one of --seed-matrix or --preset".into())),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.rng_seed);
    let graph = kronecker_graph(&seed, &mut rng);
    graph.save(&a.out)?;
    log::info!("{} nodes, {} edges -> {}", graph.n(), graph.edge_count(), a.out.display());
    if let (Some(path), Some(params)) = (&a.model_out, &a.params) {
        let ranges = match params.as_str() {
            "demonstration" => ParameterRanges::demonstration(),
            "comparison" => ParameterRanges::comparison(),
            other => return Err(Error::Config(format!("unknown parameter protocol '{other}'"))),
        };
        let model = sample_parameters(&graph, &ranges, &mut rng)?;
        let report = branching_check(&model);
        log::info!(
            "branching ratio {:.4}{}",
            report.spectral_radius,
            if report.supercritical { " (supercritical)" } else { "" }
        );
        model.save(path)?;
    }
    Ok(())
}

fn sim(a: &Sim, seed: u64, out_dir: &Path) -> Result<()> {
    let model = NetworkModel::load(&a.model)?;
    let policy = a.policy.as_ref().map(|p| FeedbackPolicy::load(p, &model)).transpose()?;
    std::fs::create_dir_all(out_dir)?;
    for r in 0..a.runs {
        let s = run_seed(seed, r as u64);
        let res = match &policy {
            Some(p) => simulate_controlled(&model, p, a.t0, a.tf, s, a.cap)?,
            None => simulate_uncontrolled(&model, a.t0, a.tf, s, a.cap)?,
        };
        res.log.save_csv(out_dir.join(format!("run_{r:04}.csv")))?;
        println!("{}", res.summary_json());
    }
    Ok(())
}

fn policy(a: &PolicyCmd, seed: u64) -> Result<()> {
    let model = NetworkModel::load(&a.model)?;
    let template = ControlConfig::uniform(model.n(), a.t0, a.tf, a.q, a.s, a.f).with_grid_steps(a.grid_steps);
    let config = match a.budget {
        Some(budget) => {
            let options = CalibrationOptions { runs: a.calibration_runs, seed, ..Default::default() };
            let cal = calibrate_budget(&model, &template, budget, &options)?;
            log::info!(
                "S multiplier {:.6e}, estimated budget {:.2} after {} probes",
                cal.multiplier,
                cal.estimate,
                cal.probes.len()
            );
            cal.config
        }
        None => template,
    };
    FeedbackPolicy::build(&model, &config)?.save(&a.out)
}

fn run(a: &RunCmd, cli: &Cli) -> Result<()> {
    let mut config = ExperimentConfig::load(&a.config)?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        config.output_dir = Some(dir.clone());
    }
    if config.output_dir.is_none() {
        config.output_dir = Some(PathBuf::from("."));
    }
    let outcome = run_experiment(&config)?;
    for s in &outcome.table.summaries {
        println!(
            "{:<13} organic {:>12.1} ± {:<9.1} incentivized {:>10.1} ± {:<8.1} capped {}{}",
            s.method.as_str(),
            s.organic_mean,
            s.organic_stderr,
            s.incentivized_mean,
            s.incentivized_stderr,
            s.capped_runs,
            s.milestone_mean.map(|m| format!(" milestone {m:.4}")).unwrap_or_default()
        );
    }
    match outcome.failures.iter().find(|f| f.solver) {
        Some(f) => Err(Error::SolverDivergence { t: config.t0, reason: format!("{} arm: {}", f.method, f.message) }),
        None => match outcome.failures.first() {
            Some(f) => Err(Error::Config(format!("{} arm: {}", f.method, f.message))),
            None => Ok(()),
        },
    }
}

fn fit(a: &Fit) -> Result<()> {
    let support = Graph::load(&a.support)?;
    let paths: Vec<PathBuf> = glob::glob(&a.logs)
        .map_err(|e| Error::Config(format!("bad glob: {e}")))?
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(e.to_string()))?;
    if paths.is_empty() {
        return Err(Error::Config(format!("no logs match '{}'", a.logs)));
    }
    let logs = paths.iter().map(|p| EventLog::load_csv(p, support.n(), a.t0, a.tf)).collect::<Result<Vec<_>>>()?;
    let config = FitConfig { omega_grid: a.omega_grid.clone(), l2_penalty: a.l2, ..Default::default() };
    let result = fit_mle(&logs, &support, &config)?;
    log::info!(
        "omega {} after {} iterations (converged: {}), log-likelihood {:.4}",
        result.omega,
        result.iterations,
        result.converged,
        result.objective
    );
    for (omega, score) in &result.omega_scores {
        log::info!("  held-out log-likelihood at omega {omega}: {score:.4}");
    }
    result.model.save(&a.out)
}
