use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use serde::Deserialize;
use serde_json::json;

use hybridzo::optimizer::format_float;
use hybridzo::planner::{
    epoch_budget_terms, plan_rates, Bound, EpochBudget, PlanInputs, RatePlan, SmoothnessConstants,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, CliResult, Status};
use crate::output::write_json;

/// Constants file for `plan`. `epochs` may be omitted when `epsilon` and
/// `delta` are given; the epoch budget is then used as `T`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub constants: SmoothnessConstants,
    pub n: usize,
    pub d_x: usize,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

pub struct PlanArgs<'a> {
    pub config: &'a Path,
    pub estimate: bool,
    pub seed: Option<u64>,
    pub out: Option<&'a Path>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
}

fn bound_lines(out: &mut String, name: &str, b: &Bound) {
    let _ = writeln!(out, "{name} = {}  (binding: {})", format_float(b.value), b.binding);
    for t in &b.terms {
        let _ = writeln!(out, "  {:<30} {}", t.name, format_float(t.value));
    }
}

pub fn render(
    constants: &SmoothnessConstants,
    inputs: &PlanInputs,
    plan: &RatePlan,
    budget: Option<(f64, f64, &EpochBudget)>,
) -> String {
    let mut s = String::new();
    let c = constants;
    let _ = writeln!(s, "constants");
    for (name, v) in [
        ("l_x", c.l_x),
        ("l_y", c.l_y),
        ("l_x_max", c.l_x_max),
        ("l_y_max", c.l_y_max),
        ("g", c.g),
        ("sigma", c.sigma),
        ("f_gap", c.f_gap),
    ] {
        let _ = writeln!(s, "  {name:<8} {}", format_float(v));
    }
    let _ = writeln!(s, "inputs n={} d_x={} epochs={}", inputs.n, inputs.d_x, inputs.epochs);
    bound_lines(&mut s, "eta_x", &plan.eta_x);
    bound_lines(&mut s, "eta_y", &plan.eta_y);
    bound_lines(&mut s, "mu", &plan.mu);
    if let Some((eps, delta, b)) = budget {
        let _ = writeln!(
            s,
            "epoch budget T = {} for epsilon={} delta={}  (confidence term {}, descent term {})",
            b.epochs,
            format_float(eps),
            format_float(delta),
            format_float(b.confidence_term),
            format_float(b.descent_term)
        );
    }
    s
}

pub fn cmd_plan(args: PlanArgs<'_>) -> CliResult<Status> {
    let (constants, n, d_x, epochs, eps, delta) = if args.estimate {
        let mut cfg = ExperimentConfig::load(args.config)?;
        cfg.seed_override(args.seed);
        let exp = Experiment::build(cfg)?;
        let (constants, _) = exp.planned_rates()?;
        (
            constants,
            exp.objective.n_samples(),
            exp.w0.layout().d_x(),
            Some(exp.config.epochs),
            args.epsilon,
            args.delta,
        )
    } else {
        let text = std::fs::read_to_string(args.config)
            .with_context(|| format!("reading constants {}", args.config.display()))?;
        let file: PlanFile =
            serde_json::from_str(&text).with_context(|| format!("parsing constants {}", args.config.display()))?;
        (
            file.constants,
            file.n,
            file.d_x,
            file.epochs,
            args.epsilon.or(file.epsilon),
            args.delta.or(file.delta),
        )
    };

    let budget = match (eps, delta) {
        (Some(e), Some(d)) => Some((e, d, epoch_budget_terms(e, d, constants.g, constants.f_gap, n)?)),
        (None, None) => None,
        _ => return Err(CliError::config("epsilon and delta must be given together")),
    };
    let epochs = match (epochs, &budget) {
        (Some(t), _) => t,
        (None, Some((_, _, b))) => {
            usize::try_from(b.epochs).map_err(|_| CliError::config("epoch budget does not fit in usize"))?
        }
        (None, None) => return Err(CliError::config("need `epochs`, or `epsilon` and `delta`")),
    };
    let inputs = PlanInputs {
        constants,
        n,
        epochs,
        d_x,
    };
    let plan = plan_rates(&inputs)?;
    print!(
        "{}",
        render(&constants, &inputs, &plan, budget.as_ref().map(|(e, d, b)| (*e, *d, b)))
    );
    if let Some(out) = args.out {
        write_json(
            out,
            &json!({
                "constants": constants,
                "inputs": inputs,
                "plan": plan,
                "budget": budget.map(|(e, d, b)| json!({"epsilon": e, "delta": d, "terms": b})),
            }),
        )?;
    }
    Ok(Status::Success)
}
