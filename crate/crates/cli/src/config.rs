//! Experiment configuration files.
//!
//! A config is one JSON object. Only `epochs` and an objective are required:
//!
//! ```json
//! {
//!   "objective": {"kind": "block_quadratic", "d_x": 10, "d_y": 10, "n": 20,
//!                 "a_x": 100.0, "a_y": 1.0, "center": [0, ...]},
//!   "init": {"kind": "constant", "x": 1.0, "y": 10.0},
//!   "rates": {"eta_x": 0.015, "eta_y": 0.5},
//!   "modes": {"x": "fo", "y": "fo"},
//!   "zo": {"mu": 0.001, "directions": 1},
//!   "epochs": 200,
//!   "seed": 0,
//!   "target": {"fraction": 0.01},
//!   "out": "trace.csv",
//!   "probe": {"every": 20, "h": 1e-5, "directions": 100, "targets": ["x", "y"]},
//!   "sweep": {"eta_x": [0.001, 0.01, 0.1], "eta_y": [0.001, 0.01, 0.1]}
//! }
//! ```
//!
//! Defaults: `init` zeros, `modes` x zo / y fo, `zo` μ = 1e-3 with one
//! direction, `seed` 0, divergence threshold `max(1e6 |f₀|, 1e6)`.
//! `objective_file` may replace `objective`. Input paths (`objective_file`,
//! trajectory files) resolve against the config file's directory; `out`
//! resolves against the working directory. `rates` may be `"planned"`, in which case
//! constants are probed at the initial point and the planner's maximal
//! η_x, η_y (and μ, unless `zo` is given) are used.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use hybridzo::estimator::ZoConfig;
use hybridzo::objectives::{FiniteSumObjective, ObjectiveSpec};
use hybridzo::optimizer::{BlockModes, LearningRates, OptimizerConfig};
use hybridzo::planner::{estimate_constants, plan_rates, PlanInputs, RatePlan, SmoothnessConstants};
use hybridzo::probe::{ProbeConfig, ProbeTarget, PROBE_STREAM};
use hybridzo::{HybridPoint, RngStream};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_file: Option<PathBuf>,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zo: Option<ZoConfig>,
    #[serde(default)]
    pub modes: BlockModes,
    pub epochs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_threshold: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Known optimal value; defaults to the objective's own bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    #[default]
    Zeros,
    Explicit {
        values: Vec<f64>,
    },
    /// Every x coordinate set to `x`, every y coordinate to `y`.
    Constant {
        x: f64,
        y: f64,
    },
    /// `scale · N(0, I)` from its own seed.
    Random {
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Stream id for random initial points.
const INIT_STREAM: u64 = 0x5eed_0003;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatesSpec {
    Keyword(RateKeyword),
    Uniform(UniformRate),
    Explicit(LearningRates),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateKeyword {
    Planned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformRate {
    pub eta: f64,
}

/// Objective level whose first crossing is reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Absolute value.
    F(f64),
    /// `f* + fraction · (f₀ − f*)`.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSchedule {
    /// Checkpoint interval in steps; defaults to one epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub every: Option<usize>,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_probe_directions")]
    pub directions: usize,
    #[serde(default = "default_targets")]
    pub targets: Vec<ProbeTarget>,
    /// Points to probe; a fresh run is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySource>,
}

fn default_h() -> f64 {
    ProbeConfig::default().h
}

fn default_probe_directions() -> usize {
    ProbeConfig::default().directions
}

fn default_targets() -> Vec<ProbeTarget> {
    vec![ProbeTarget::X, ProbeTarget::Y]
}

impl Default for ProbeSchedule {
    fn default() -> Self {
        Self {
            every: None,
            h: default_h(),
            directions: default_probe_directions(),
            targets: default_targets(),
            trajectory: None,
        }
    }
}

impl ProbeSchedule {
    pub fn probe_config(&self, target: ProbeTarget) -> CliResult<ProbeConfig> {
        Ok(ProbeConfig::new(self.h, self.directions, target)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySource {
    /// Checkpoint file written by `run`.
    File(PathBuf),
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub eta_x: Vec<f64>,
    pub eta_y: Vec<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.objective_file.as_mut() {
            fix(p);
        }
        if let Some(ProbeSchedule {
            trajectory: Some(TrajectorySource::File(p)),
            ..
        }) = self.probe.as_mut()
        {
            fix(p);
        }
    }

    /// Inlines `objective_file`, so the result is self-contained.
    pub fn objective_spec(&self) -> CliResult<ObjectiveSpec> {
        match (&self.objective, &self.objective_file) {
            (Some(spec), None) => Ok(spec.clone()),
            (None, Some(path)) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading objective {}", path.display()))?;
                Ok(ObjectiveSpec::from_json(&text)?)
            }
            (Some(_), Some(_)) => Err(CliError::config(
                "give either `objective` or `objective_file`, not both",
            )),
            (None, None) => Err(CliError::config("config needs `objective` or `objective_file`")),
        }
    }

    pub fn seed_override(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            self.seed = s;
        }
    }
}

/// Objective, start point and optimizer settings ready to run.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub spec: ObjectiveSpec,
    pub objective: Box<dyn FiniteSumObjective>,
    pub w0: HybridPoint,
    pub f_star: f64,
    /// Present when the rates came from the planner.
    pub plan: Option<(SmoothnessConstants, RatePlan)>,
}

impl Experiment {
    pub fn build(config: ExperimentConfig) -> CliResult<Self> {
        let spec = config.objective_spec()?;
        let objective = spec.build()?;
        let layout = objective.layout();
        let w0 = match &config.init {
            InitSpec::Zeros => HybridPoint::zeros(layout),
            InitSpec::Explicit { values } => HybridPoint::new(layout, values.clone())?,
            InitSpec::Constant { x, y } => HybridPoint::from_blocks(&vec![*x; layout.d_x()], &vec![*y; layout.d_y()])?,
            InitSpec::Random { seed, scale } => {
                let v = RngStream::new(*seed, INIT_STREAM).sample_gaussian(layout.dim())?;
                HybridPoint::new(layout, v.into_iter().map(|g| scale * g).collect())?
            }
        };
        let f_star = config.f_star.unwrap_or_else(|| objective.optimal_value_bound());
        let mut exp = Self {
            config,
            spec,
            objective,
            w0,
            f_star,
            plan: None,
        };
        if exp.config.epochs == 0 {
            return Err(CliError::config("epochs must be >= 1"));
        }
        if let Some(RatesSpec::Keyword(RateKeyword::Planned)) = exp.config.rates {
            exp.plan = Some(exp.planned_rates()?);
        }
        Ok(exp)
    }

    /// Constants probed at the start point and the resulting plan.
    pub fn planned_rates(&self) -> CliResult<(SmoothnessConstants, RatePlan)> {
        let schedule = self.config.probe.clone().unwrap_or_default();
        let cfg = schedule.probe_config(ProbeTarget::Full)?;
        let mut rng = RngStream::new(self.config.seed, PROBE_STREAM);
        let f_star = self.f_star.is_finite().then_some(self.f_star);
        let constants = estimate_constants(
            self.objective.as_ref(),
            &cfg,
            std::slice::from_ref(&self.w0),
            f_star,
            &mut rng,
        )?;
        let inputs = PlanInputs {
            constants,
            n: self.objective.n_samples(),
            epochs: self.config.epochs,
            d_x: self.w0.layout().d_x(),
        };
        let plan = plan_rates(&inputs)
            .map_err(|e| CliError::config(format!("cannot plan rates from constants {constants:?}: {e}")))?;
        Ok((constants, plan))
    }

    pub fn optimizer_config(&self) -> CliResult<OptimizerConfig> {
        let rates = match (&self.config.rates, &self.plan) {
            (_, Some((_, plan))) => LearningRates::new(plan.eta_x.value, plan.eta_y.value)?,
            (Some(RatesSpec::Explicit(r)), None) => *r,
            (Some(RatesSpec::Uniform(u)), None) => LearningRates::uniform(u.eta)?,
            (Some(RatesSpec::Keyword(_)), None) => unreachable!("planned rates resolved in build"),
            (None, None) => return Err(CliError::config("config needs `rates`")),
        };
        self.optimizer_config_with(rates)
    }

    pub fn optimizer_config_with(&self, rates: LearningRates) -> CliResult<OptimizerConfig> {
        let zo = match (self.config.zo, &self.plan) {
            (Some(zo), _) => zo,
            (None, Some((_, plan))) => ZoConfig::new(plan.mu.value, 1)?,
            (None, None) => ZoConfig::default(),
        };
        let cfg = OptimizerConfig {
            rates,
            zo,
            modes: self.config.modes,
            epochs: self.config.epochs,
            divergence_threshold: self.config.divergence_threshold,
            seed: self.config.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Absolute target level, if configured.
    pub fn target_f(&self) -> CliResult<Option<f64>> {
        match self.config.target {
            None => Ok(None),
            Some(TargetSpec::F(f)) => Ok(Some(f)),
            Some(TargetSpec::Fraction(frac)) => {
                if !self.f_star.is_finite() {
                    return Err(CliError::config(
                        "target fraction needs a finite optimal value; set `f_star`",
                    ));
                }
                let f0 = self.objective.eval_full(&self.w0)?;
                Ok(Some(self.f_star + frac * (f0 - self.f_star)))
            }
        }
    }

    /// Config as actually used: objective inlined, rates and defaults explicit.
    pub fn resolved_config(&self, opt: Option<&OptimizerConfig>) -> serde_json::Value {
        let mut cfg = self.config.clone();
        cfg.objective = Some(self.spec.clone());
        cfg.objective_file = None;
        if let Some(opt) = opt {
            cfg.rates = Some(RatesSpec::Explicit(opt.rates));
            cfg.zo = Some(opt.zo);
        }
        let mut value = serde_json::to_value(&cfg).expect("config serializes");
        if let Some(opt) = opt {
            let f0 = self.objective.full_value(self.w0.as_slice());
            value["divergence_threshold"] = serde_json::json!(opt.threshold_for(f0));
        }
        value
    }

    pub fn out_path(&self, flag: Option<&Path>) -> CliResult<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.config.out.clone())
            .ok_or_else(|| CliError::config("no output path; pass --out or set `out`"))
    }
}

/// Fails with a config error unless `path`'s parent directory exists.
pub fn check_writable(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::config(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        serde_json::from_str(text).unwrap()
    }

    const OBJ: &str = r#""objective": {"kind": "block_quadratic", "d_x": 2, "d_y": 1, "n": 3,
                                        "a_x": 4.0, "a_y": 1.0, "center": [0, 0, 0]}"#;

    #[test]
    fn rate_forms() {
        let c = parse(&format!(r#"{{{OBJ}, "epochs": 1, "rates": "planned"}}"#));
        assert_eq!(c.rates, Some(RatesSpec::Keyword(RateKeyword::Planned)));
        let c = parse(&format!(r#"{{{OBJ}, "epochs": 1, "rates": {{"eta": 0.1}}}}"#));
        assert_eq!(c.rates, Some(RatesSpec::Uniform(UniformRate { eta: 0.1 })));
        let c = parse(&format!(
            r#"{{{OBJ}, "epochs": 1, "rates": {{"eta_x": 0.1, "eta_y": 0.2}}}}"#
        ));
        let exp = Experiment::build(c).unwrap();
        assert_eq!(
            exp.optimizer_config().unwrap().rates,
            LearningRates::new(0.1, 0.2).unwrap()
        );
    }

    #[test]
    fn init_forms() {
        let c = parse(&format!(
            r#"{{{OBJ}, "epochs": 1, "init": {{"kind": "constant", "x": 1, "y": 2}}}}"#
        ));
        assert_eq!(Experiment::build(c).unwrap().w0.as_slice(), &[1.0, 1.0, 2.0]);
        let c = parse(&format!(
            r#"{{{OBJ}, "epochs": 1, "init": {{"kind": "explicit", "values": [1, 2]}}}}"#
        ));
        assert!(Experiment::build(c).is_err());
        let c = parse(&format!(
            r#"{{{OBJ}, "epochs": 1, "init": {{"kind": "random", "seed": 4}}}}"#
        ));
        let a = Experiment::build(c.clone()).unwrap().w0;
        assert_eq!(a, Experiment::build(c).unwrap().w0);
    }

    #[test]
    fn zero_epochs_and_unknown_fields_are_rejected() {
        let c = parse(&format!(r#"{{{OBJ}, "epochs": 0, "rates": {{"eta": 0.1}}}}"#));
        assert!(Experiment::build(c).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(&format!(r#"{{{OBJ}, "epochs": 1, "bogus": 1}}"#)).is_err());
    }

    #[test]
    fn planned_rates_use_analytic_constants() {
        let c = parse(&format!(
            r#"{{{OBJ}, "epochs": 10, "rates": "planned", "init": {{"kind": "constant", "x": 1, "y": 1}}}}"#
        ));
        let exp = Experiment::build(c).unwrap();
        let (constants, plan) = exp.plan.clone().unwrap();
        assert!((constants.l_x - 4.0).abs() < 1e-9);
        let opt = exp.optimizer_config().unwrap();
        assert_eq!(opt.rates.eta_x, plan.eta_x.value);
        assert_eq!(opt.zo.mu, plan.mu.value);
    }

    #[test]
    fn target_fraction() {
        let c = parse(&format!(
            r#"{{{OBJ}, "epochs": 1, "init": {{"kind": "constant", "x": 1, "y": 2}}, "target": {{"fraction": 0.5}}}}"#
        ));
        // f0 = ½ (4 + 4 + 4) = 6, f* = 0
        assert_eq!(Experiment::build(c).unwrap().target_f().unwrap(), Some(3.0));
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(
            sibling(Path::new("a/b.csv"), ".meta.json"),
            PathBuf::from("a/b.csv.meta.json")
        );
    }
}
