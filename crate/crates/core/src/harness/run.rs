use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{mean_stderr, metric_grid};
use super::{export_report, milestone_time, ExperimentConfig, Method, MethodCurve, MethodSummary, MetricsTable};
use crate::control::{calibrate_budget, simulate_controlled, Calibration, CalibrationOptions, FeedbackPolicy};
use crate::error::{Error, Result};
use crate::hawkes::{EventKind, NetworkModel};
use crate::networks::{baseline_policy, degree_scores, pagerank, Graph, DEFAULT_DAMPING};
use crate::rng::{derive_seed, run_seed};
use crate::simulation::{counting_path, simulate_uncontrolled, simulate_with_constant_control, SimulationResult};

/// Coordinate reserved for the calibration ensemble, away from run indices.
const CALIBRATION_COORD: u64 = u64::MAX;

/// What is kept of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    /// Organic count at every metric grid point.
    pub organic_path: Vec<u64>,
    pub organic: usize,
    pub incentivized: usize,
    pub capped: bool,
    pub milestone: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmFailure {
    pub method: Method,
    pub message: String,
    /// Solver divergence or calibration failure (as opposed to bad input).
    pub solver: bool,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub table: MetricsTable,
    pub model: NetworkModel,
    pub graph: Graph,
    pub calibration: Option<Calibration>,
    /// Arms that could not be run; the rest of the experiment still is.
    pub failures: Vec<ArmFailure>,
    pub runs: Vec<(Method, Vec<RunSummary>)>,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    budget: f64,
    runs: usize,
    master_seed: u64,
    calibration_multiplier: Option<f64>,
    calibration_estimate: Option<f64>,
    summaries: &'a [MethodSummary],
    failures: &'a [ArmFailure],
}

/// Runs every configured method, aggregates the metrics and, if an output
/// directory is configured, writes `metrics.csv`, `organic.svg` and
/// `summary.json` there.
///
/// Run `r` of every method uses the seed `run_seed(master_seed, r)`, so the
/// organic streams of different methods coincide wherever their dynamics
/// do. Runs are simulated in parallel and folded in `(method, run)` order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let (model, graph) = config.model.resolve()?;
    let grid = metric_grid(config.t0, config.tf);
    let mut calibration = None;
    let mut failures = Vec::new();
    let mut runs = Vec::new();

    for &method in &config.methods {
        let arm = match method {
            Method::Uncontrolled => simulate_arm(config, &grid, |seed| {
                simulate_uncontrolled(&model, config.t0, config.tf, seed, config.event_cap)
            }),
            Method::Prk | Method::Deg => {
                let scores = if method == Method::Prk {
                    pagerank(&graph, DEFAULT_DAMPING, 1e-12, 10_000)?.scores
                } else {
                    degree_scores(&graph)
                };
                baseline_policy(&scores, config.budget, (config.t0, config.tf)).and_then(|rates| {
                    simulate_arm(config, &grid, |seed| {
                        simulate_with_constant_control(&model, &rates, config.t0, config.tf, seed, config.event_cap)
                    })
                })
            }
            Method::Cheshire => cheshire_policy(config, &model).and_then(|(policy, cal)| {
                calibration = cal;
                simulate_arm(config, &grid, |seed| {
                    simulate_controlled(&model, &policy, config.t0, config.tf, seed, config.event_cap)
                })
            }),
        };
        match arm {
            Ok(summaries) => runs.push((method, summaries)),
            Err(e) if e.is_solver_failure() || matches!(e, Error::DegenerateScores) => {
                log::error!("{method} arm aborted: {e}");
                failures.push(ArmFailure { method, message: e.to_string(), solver: e.is_solver_failure() });
            }
            Err(e) => return Err(e),
        }
    }

    let table = aggregate(config, grid, &runs);
    if let Some(dir) = &config.output_dir {
        if !table.curves.is_empty() {
            export_report(&table, dir)?;
        }
        let summary = SummaryFile {
            budget: config.budget,
            runs: config.runs,
            master_seed: config.master_seed,
            calibration_multiplier: calibration.as_ref().map(|c| c.multiplier),
            calibration_estimate: calibration.as_ref().map(|c| c.estimate),
            summaries: &table.summaries,
            failures: &failures,
        };
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(ExperimentOutcome { table, model, graph, calibration, failures, runs })
}

/// Budget-matched CHESHIRE policy. A zero budget needs no calibration: the
/// zero-reward policy spends nothing.
fn cheshire_policy(config: &ExperimentConfig, model: &NetworkModel) -> Result<(FeedbackPolicy, Option<Calibration>)> {
    let template = config.control_config(model.n());
    if config.budget == 0.0 {
        let mut silent = template;
        silent.q.iter_mut().for_each(|q| *q = 0.0);
        silent.f.iter_mut().for_each(|f| *f = 0.0);
        return Ok((FeedbackPolicy::build(model, &silent)?, None));
    }
    let options = CalibrationOptions {
        runs: config.calibration.runs,
        tol: config.calibration.tol,
        seed: derive_seed(config.master_seed, &[CALIBRATION_COORD]),
        event_cap: config.event_cap,
        max_probes: config.calibration.max_probes,
        ..Default::default()
    };
    let cal = calibrate_budget(model, &template, config.budget, &options)?;
    log::info!("calibrated S multiplier {:.6e}, estimated budget {:.1}", cal.multiplier, cal.estimate);
    Ok((FeedbackPolicy::build(model, &cal.config)?, Some(cal)))
}

fn simulate_arm<F>(config: &ExperimentConfig, grid: &[f64], simulate: F) -> Result<Vec<RunSummary>>
where
    F: Fn(u64) -> Result<SimulationResult> + Sync,
{
    (0..config.runs as u64)
        .into_par_iter()
        .map(|r| {
            let seed = run_seed(config.master_seed, r);
            let res = simulate(seed)?;
            if res.capped {
                log::warn!("run {r} hit the event cap of {}", config.event_cap);
            }
            Ok(RunSummary {
                seed,
                organic_path: counting_path(&res.log, grid, Some(EventKind::Organic)).total,
                organic: res.organic_count,
                incentivized: res.incentivized_count,
                capped: res.capped,
                milestone: config.milestone.and_then(|m| milestone_time(&res.log, m)),
            })
        })
        .collect()
}

fn aggregate(config: &ExperimentConfig, grid: Vec<f64>, runs: &[(Method, Vec<RunSummary>)]) -> MetricsTable {
    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    for (method, rs) in runs {
        let (mean, stderr) = (0..grid.len())
            .map(|k| mean_stderr(&rs.iter().map(|r| r.organic_path[k] as f64).collect::<Vec<_>>()))
            .unzip();
        curves.push(MethodCurve { method: method.to_string(), mean, stderr });
        let final_organic: Vec<f64> = rs.iter().map(|r| r.organic as f64).collect();
        let (organic_mean, organic_stderr) = mean_stderr(&final_organic);
        let (incentivized_mean, incentivized_stderr) =
            mean_stderr(&rs.iter().map(|r| r.incentivized as f64).collect::<Vec<_>>());
        let reached: Vec<f64> = rs.iter().filter_map(|r| r.milestone).collect();
        let (milestone_mean, milestone_stderr) = if reached.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_stderr(&reached);
            (Some(m), Some(s))
        };
        summaries.push(MethodSummary {
            method: *method,
            runs: rs.len(),
            organic_mean,
            organic_stderr,
            incentivized_mean,
            incentivized_stderr,
            capped_runs: rs.iter().filter(|r| r.capped).count(),
            milestone_target: config.milestone,
            milestone_mean,
            milestone_stderr,
            milestone_reached: reached.len(),
            final_organic,
        });
    }
    MetricsTable { grid, curves, summaries }
}
