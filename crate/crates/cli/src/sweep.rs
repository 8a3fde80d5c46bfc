use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use hybridzo::optimizer::{format_float, LearningRates};
use hybridzo::Error;

use crate::config::{check_writable, Experiment, ExperimentConfig};
use crate::error::{CliError, CliResult, Status};
use crate::output::{write_file, write_meta};
use crate::run::{execute, steps_to_target};

pub const SWEEP_HEADER: &str = "eta_x,eta_y,final_f,diverged,steps_to_threshold";

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub eta_x: f64,
    pub eta_y: f64,
    pub final_f: f64,
    pub diverged: bool,
    pub steps_to_threshold: Option<usize>,
    /// Set when the run stopped on a numeric failure rather than the threshold.
    pub error: Option<String>,
}

impl Cell {
    fn row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            format_float(self.eta_x),
            format_float(self.eta_y),
            format_float(self.final_f),
            self.diverged,
            self.steps_to_threshold.map_or(String::new(), |s| s.to_string())
        )
    }
}

fn run_cell(exp: &Experiment, rates: LearningRates, target: Option<f64>) -> CliResult<Cell> {
    let opt = exp.optimizer_config_with(rates)?;
    let mut cell = Cell {
        eta_x: rates.eta_x,
        eta_y: rates.eta_y,
        final_f: f64::NAN,
        diverged: true,
        steps_to_threshold: None,
        error: None,
    };
    match execute(exp, opt, None) {
        Ok((outcome, _)) => {
            cell.final_f = outcome.final_f();
            cell.diverged = outcome.diverged();
            cell.steps_to_threshold = target.and_then(|t| steps_to_target(&outcome, t));
        }
        Err(e) if e.status == Status::Numeric => cell.error = Some(e.message),
        Err(e) => return Err(e),
    }
    Ok(cell)
}

/// Grid cells in row-major order (`eta_x` outer).
pub fn sweep(exp: &Experiment, eta_x: &[f64], eta_y: &[f64]) -> CliResult<Vec<Cell>> {
    let target = exp.target_f()?;
    let grid = eta_x
        .iter()
        .flat_map(|&ex| eta_y.iter().map(move |&ey| LearningRates::new(ex, ey)))
        .collect::<Result<Vec<_>, Error>>()?;
    grid.par_iter().map(|&r| run_cell(exp, r, target)).collect()
}

pub fn cmd_sweep(config: &Path, seed: Option<u64>, out: Option<&Path>) -> CliResult<Status> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.seed_override(seed);
    let grid = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::config("sweep needs a `sweep` grid"))?;
    if grid.eta_x.is_empty() || grid.eta_y.is_empty() {
        return Err(CliError::config("sweep grids must be nonempty"));
    }
    let exp = Experiment::build(cfg)?;
    let out = exp.out_path(out)?;
    check_writable(&out)?;
    let cells = sweep(&exp, &grid.eta_x, &grid.eta_y)?;

    write_file(&out, |w| {
        writeln!(w, "{SWEEP_HEADER}")?;
        cells.iter().try_for_each(|c| writeln!(w, "{}", c.row()))
    })?;
    let diverged = cells.iter().filter(|c| c.diverged).count();
    write_meta(
        &out,
        "sweep",
        exp.resolved_config(None),
        json!({ "cells": cells, "target_f": exp.target_f()? }),
    )?;
    println!("cells={} diverged={}", cells.len(), diverged);
    Ok(Status::Success)
}
