use std::path::Path;

use serde::Serialize;
use serde_json::json;

use hybridzo::optimizer::{
    format_float, write_trace_csv, Checkpoint, HybridSgd, OptimizerConfig, RunOutcome, TraceRecord,
};

use crate::config::{check_writable, sibling, Experiment, ExperimentConfig};
use crate::error::{CliError, CliResult, Status};
use crate::output::{write_file, write_json, write_meta, CheckpointFile};

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub final_f: f64,
    pub min_grad_norm_sq: f64,
    pub epochs_completed: usize,
    pub diverged: bool,
    pub divergence_step: Option<usize>,
    pub target_f: Option<f64>,
    pub steps_to_target: Option<usize>,
    pub cancellation_warnings: usize,
}

impl RunSummary {
    pub fn new(outcome: &RunOutcome, target_f: Option<f64>) -> Self {
        Self {
            final_f: outcome.final_f(),
            min_grad_norm_sq: outcome.min_grad_norm_sq(),
            epochs_completed: outcome.epochs_completed,
            diverged: outcome.diverged(),
            divergence_step: outcome.divergence.map(|d| d.step),
            target_f,
            steps_to_target: target_f.and_then(|t| steps_to_target(outcome, t)),
            cancellation_warnings: outcome.cancellation_warnings,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "final_f={} min_grad_norm_sq={} epochs_completed={} diverged={} steps_to_target={}",
            format_float(self.final_f),
            format_float(self.min_grad_norm_sq),
            self.epochs_completed,
            self.diverged,
            self.steps_to_target.map_or("-".to_string(), |s| s.to_string())
        )
    }
}

/// First step (0 = start) whose objective value is strictly below `target`.
pub fn steps_to_target(outcome: &RunOutcome, target: f64) -> Option<usize> {
    std::iter::once(&outcome.initial)
        .chain(&outcome.trace)
        .find(|r| r.f_value < target)
        .map(|r| r.step)
}

/// Runs the optimizer, keeping checkpoints every `every` steps when given.
pub fn execute(
    exp: &Experiment,
    opt: OptimizerConfig,
    every: Option<usize>,
) -> CliResult<(RunOutcome, Vec<Checkpoint>)> {
    let sgd = HybridSgd::new(exp.objective.as_ref(), opt, &exp.w0)?;
    let mut rng = opt.rng();
    Ok(match every {
        Some(k) => sgd.run_with_checkpoints(&exp.w0, &mut rng, k)?,
        None => (sgd.run(&exp.w0, &mut rng)?, Vec::new()),
    })
}

pub fn trace_rows(outcome: &RunOutcome) -> Vec<TraceRecord> {
    std::iter::once(outcome.initial)
        .chain(outcome.trace.iter().copied())
        .collect()
}

pub fn cmd_run(config: &Path, seed: Option<u64>, out: Option<&Path>) -> CliResult<Status> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.seed_override(seed);
    let exp = Experiment::build(cfg)?;
    let opt = exp.optimizer_config()?;
    let out = exp.out_path(out)?;
    check_writable(&out)?;
    let target = exp.target_f()?;
    let every = exp
        .config
        .probe
        .as_ref()
        .map(|p| p.every.unwrap_or(exp.objective.n_samples()));

    let (outcome, checkpoints) = execute(&exp, opt, every)?;
    let summary = RunSummary::new(&outcome, target);

    write_file(&out, |w| write_trace_csv(w, &trace_rows(&outcome)))?;
    if every.is_some() {
        let file = CheckpointFile::from_checkpoints(exp.w0.layout(), &checkpoints);
        write_json(
            &sibling(&out, ".checkpoints.json"),
            &serde_json::to_value(file).expect("checkpoints serialize"),
        )?;
    }
    let mut meta = json!(summary);
    if let Some((constants, plan)) = &exp.plan {
        meta["planned_constants"] = json!(constants);
        meta["plan"] = json!(plan);
    }
    write_meta(&out, "run", exp.resolved_config(Some(&opt)), meta)?;
    println!("{}", summary.line());

    match outcome.divergence {
        Some(report) => Err(CliError::diverged(&report)),
        None => Ok(Status::Success),
    }
}
