use std::path::Path;

use serde_json::json;

use hybridzo::numeric::norm;
use hybridzo::probe::{estimate_block_lipschitz, write_probe_csv, ScanEntry, PROBE_STREAM};
use hybridzo::{HybridPoint, RngStream};

use crate::config::{check_writable, Experiment, ExperimentConfig, TrajectorySource};
use crate::error::{CliError, CliResult, Status};
use crate::output::{write_file, write_meta, CheckpointFile};
use crate::run::execute;

fn trajectory(
    exp: &Experiment,
    every: Option<usize>,
    source: Option<&TrajectorySource>,
) -> CliResult<Vec<HybridPoint>> {
    let layout = exp.objective.layout();
    let points = match source {
        Some(TrajectorySource::File(path)) => CheckpointFile::load(path)?.points()?,
        Some(TrajectorySource::Points(rows)) => rows
            .iter()
            .map(|r| HybridPoint::new(layout, r.clone()))
            .collect::<Result<_, _>>()?,
        None => {
            let every = every.unwrap_or(exp.objective.n_samples());
            let (_, checkpoints) = execute(exp, exp.optimizer_config()?, Some(every))?;
            checkpoints.into_iter().map(|c| c.point).collect()
        }
    };
    if points.is_empty() {
        return Err(CliError::config("trajectory is empty"));
    }
    if let Some(p) = points.iter().find(|p| p.layout() != layout) {
        return Err(CliError::config(format!(
            "trajectory point has layout {:?}, objective has {:?}",
            p.layout(),
            layout
        )));
    }
    Ok(points)
}

pub fn cmd_probe(config: &Path, seed: Option<u64>, out: Option<&Path>) -> CliResult<Status> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.seed_override(seed);
    let exp = Experiment::build(cfg)?;
    let out = exp.out_path(out)?;
    check_writable(&out)?;
    let schedule = exp.config.probe.clone().unwrap_or_default();
    if schedule.targets.is_empty() {
        return Err(CliError::config("probe needs at least one target"));
    }
    let points = trajectory(&exp, schedule.every, schedule.trajectory.as_ref())?;

    let mut rng = RngStream::new(exp.config.seed, PROBE_STREAM);
    let obj = exp.objective.as_ref();
    let mut rows = Vec::with_capacity(points.len() * schedule.targets.len());
    for (index, w) in points.iter().enumerate() {
        let grad_norm = norm(&obj.grad_full(w)?);
        for &target in &schedule.targets {
            let report = estimate_block_lipschitz(obj, w, &schedule.probe_config(target)?, &mut rng)?;
            rows.push((index, ScanEntry { grad_norm, report }));
        }
    }

    write_file(&out, |w| write_probe_csv(w, &rows))?;
    write_meta(
        &out,
        "probe",
        exp.resolved_config(None),
        json!({ "points": points.len(), "rows": rows.len() }),
    )?;
    println!("points={} rows={}", points.len(), rows.len());
    Ok(Status::Success)
}
