//! SGD with random reshuffling and block-diagonal learning rates.
//!
//! Each epoch draws a fresh uniform permutation of the samples and performs
//! one update per sample in that order:
//!
//! ```text
//! [x; y] ← [x; y] − diag(η_x, η_y) · [d_x(w; i); d_y(w; i)]
//! ```
//!
//! where each block direction is chosen by its [`UpdateMode`]: a two-point
//! zeroth-order estimate, the exact per-sample gradient, or nothing. Both
//! directions are evaluated at the incoming iterate and applied together.
//! The hybrid scheme is `x: Zo, y: Fo`; the other combinations give the
//! first-order, zeroth-order and adapter-only baselines.
//!
//! After every step the full objective value and gradient are logged to a
//! [`TraceSink`]; a value above the divergence threshold (or a non-finite
//! value) aborts the run with a [`DivergenceReport`].

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_block_gradient, ZoConfig};
use crate::numeric::{all_finite, norm_sq};
use crate::objectives::FiniteSumObjective;
use crate::point::{Block, HybridPoint};
use crate::rng::RngStream;

/// Stream id of the optimizer's permutation / direction stream.
pub const OPTIMIZER_STREAM: u64 = 0x5eed_0001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRates {
    pub eta_x: f64,
    pub eta_y: f64,
}

impl LearningRates {
    pub fn new(eta_x: f64, eta_y: f64) -> Result<Self> {
        let rates = Self { eta_x, eta_y };
        rates.validate()?;
        Ok(rates)
    }

    pub fn uniform(eta: f64) -> Result<Self> {
        Self::new(eta, eta)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, eta) in [("eta_x", self.eta_x), ("eta_y", self.eta_y)] {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {eta}")));
            }
        }
        Ok(())
    }

    pub fn for_block(&self, block: Block) -> f64 {
        match block {
            Block::X => self.eta_x,
            Block::Y => self.eta_y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    /// Two-point Gaussian estimate.
    Zo,
    /// Exact per-sample gradient.
    Fo,
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockModes {
    pub x: UpdateMode,
    pub y: UpdateMode,
}

impl BlockModes {
    pub const HYBRID: Self = Self {
        x: UpdateMode::Zo,
        y: UpdateMode::Fo,
    };
    pub const FIRST_ORDER: Self = Self {
        x: UpdateMode::Fo,
        y: UpdateMode::Fo,
    };
    pub const ZEROTH_ORDER: Self = Self {
        x: UpdateMode::Zo,
        y: UpdateMode::Zo,
    };
    pub const ADAPTER_ONLY: Self = Self {
        x: UpdateMode::Frozen,
        y: UpdateMode::Fo,
    };

    pub fn for_block(&self, block: Block) -> UpdateMode {
        match block {
            Block::X => self.x,
            Block::Y => self.y,
        }
    }
}

impl Default for BlockModes {
    fn default() -> Self {
        Self::HYBRID
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub rates: LearningRates,
    #[serde(default)]
    pub zo: ZoConfig,
    #[serde(default)]
    pub modes: BlockModes,
    pub epochs: usize,
    /// Abort once `f` exceeds this value. `None` selects
    /// `max(1e6 · |f(w0)|, 1e6)`.
    #[serde(default)]
    pub divergence_threshold: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(rates: LearningRates, modes: BlockModes, epochs: usize) -> Self {
        Self {
            rates,
            zo: ZoConfig::default(),
            modes,
            epochs,
            divergence_threshold: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        self.zo.validate()?;
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if let Some(f) = self.divergence_threshold {
            if f.is_nan() || f <= 0.0 {
                return Err(Error::invalid(format!("divergence threshold must be > 0, got {f}")));
            }
        }
        Ok(())
    }

    /// The stream a run with this config draws from.
    pub fn rng(&self) -> RngStream {
        RngStream::new(self.seed, OPTIMIZER_STREAM)
    }

    pub fn threshold_for(&self, f0: f64) -> f64 {
        self.divergence_threshold
            .unwrap_or_else(|| default_divergence_threshold(f0))
    }
}

pub fn default_divergence_threshold(f0: f64) -> f64 {
    (1e6 * f0.abs()).max(1e6)
}

/// One logged optimizer step. `grad_*` are norms of the exact full gradient
/// at the iterate produced by the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Zero-based epoch.
    pub epoch: usize,
    /// One-based global step counter; zero denotes the initial point.
    pub step: usize,
    /// Sample index used by this step.
    pub sample: usize,
    pub f_value: f64,
    pub grad_norm: f64,
    pub grad_norm_x: f64,
    pub grad_norm_y: f64,
}

impl TraceRecord {
    fn at(obj: &dyn FiniteSumObjective, w: &HybridPoint, epoch: usize, step: usize, sample: usize) -> Self {
        let f_value = obj.full_value(w.as_slice());
        let mut g = vec![0.0; w.layout().dim()];
        obj.full_gradient(w.as_slice(), &mut g);
        let d_x = w.layout().d_x();
        let gx = norm_sq(&g[..d_x]);
        let gy = norm_sq(&g[d_x..]);
        Self {
            epoch,
            step,
            sample,
            f_value,
            grad_norm: (gx + gy).sqrt(),
            grad_norm_x: gx.sqrt(),
            grad_norm_y: gy.sqrt(),
        }
    }

    pub fn grad_norm_sq(&self) -> f64 {
        self.grad_norm_x * self.grad_norm_x + self.grad_norm_y * self.grad_norm_y
    }
}

pub trait TraceSink {
    fn record(&mut self, record: TraceRecord);
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, record: TraceRecord) {
        self.push(record);
    }
}

impl<F: FnMut(TraceRecord)> TraceSink for F {
    fn record(&mut self, record: TraceRecord) {
        self(record)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    pub epoch: usize,
    pub step: usize,
    pub f_value: f64,
    pub threshold: f64,
}

impl fmt::Display for DivergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "diverged at epoch {}, step {}: f = {:e} exceeds threshold {:e}",
            self.epoch, self.step, self.f_value, self.threshold
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_point: HybridPoint,
    /// Record for the starting point (`step == 0`).
    pub initial: TraceRecord,
    pub trace: Vec<TraceRecord>,
    pub epochs_completed: usize,
    /// `‖∇f(x_t, y_t)‖²` at the start and after each completed epoch.
    pub epoch_grad_norms_sq: Vec<f64>,
    pub divergence: Option<DivergenceReport>,
    /// Steps whose zeroth-order perturbation tripped the cancellation guard.
    pub cancellation_warnings: usize,
}

impl RunOutcome {
    /// Minimum over epochs of `‖∇f(x_t, y_t)‖²`.
    pub fn min_grad_norm_sq(&self) -> f64 {
        self.epoch_grad_norms_sq.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn final_f(&self) -> f64 {
        self.trace.last().map_or(self.initial.f_value, |r| r.f_value)
    }

    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }
}

/// Optimizer bound to an objective and a validated config.
pub struct HybridSgd<'a> {
    obj: &'a dyn FiniteSumObjective,
    cfg: OptimizerConfig,
    threshold: f64,
}

impl<'a> HybridSgd<'a> {
    /// Validates `cfg` and fixes the divergence threshold from `f(w0)`.
    pub fn new(obj: &'a dyn FiniteSumObjective, cfg: OptimizerConfig, w0: &HybridPoint) -> Result<Self> {
        cfg.validate()?;
        let f0 = obj.eval_full(w0)?;
        Ok(Self {
            obj,
            threshold: cfg.threshold_for(f0),
            cfg,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// One update on sample `i`; returns the new point and whether the
    /// zeroth-order cancellation guard fired.
    fn step_inner(&self, w: &HybridPoint, i: usize, rng: &mut RngStream) -> Result<(HybridPoint, bool)> {
        self.obj.check_point(w)?;
        self.obj.check_index(i)?;
        let modes = self.cfg.modes;
        let exact = if modes.x == UpdateMode::Fo || modes.y == UpdateMode::Fo {
            Some(self.obj.grad_sample(w, i)?)
        } else {
            None
        };
        let layout = w.layout();
        let mut values = w.as_slice().to_vec();
        let mut risk = false;
        for block in [Block::X, Block::Y] {
            let eta = self.cfg.rates.for_block(block);
            let range = layout.range(block);
            let direction = match modes.for_block(block) {
                UpdateMode::Frozen => continue,
                UpdateMode::Fo => exact.as_ref().expect("exact gradient")[range.clone()].to_vec(),
                UpdateMode::Zo => {
                    let est = estimate_block_gradient(self.obj, w, i, block, &self.cfg.zo, rng)?;
                    risk |= est.cancellation_risk;
                    est.gradient
                }
            };
            for (v, d) in values[range].iter_mut().zip(&direction) {
                *v -= eta * d;
            }
        }
        if !all_finite(&values) {
            return Err(Error::NonFinite("update produced non-finite parameters".into()));
        }
        Ok((HybridPoint::new(layout, values)?, risk))
    }

    pub fn step(&self, w: &HybridPoint, i: usize, rng: &mut RngStream) -> Result<HybridPoint> {
        self.step_inner(w, i, rng).map(|(p, _)| p)
    }

    /// One reshuffled pass; steps are numbered `epoch · n + k` for `k = 1..=n`.
    /// Divergence is returned as [`Error::Diverged`].
    pub fn run_epoch(
        &self,
        w: HybridPoint,
        epoch: usize,
        rng: &mut RngStream,
        sink: &mut dyn TraceSink,
    ) -> Result<HybridPoint> {
        let end = self.epoch_inner(w, epoch, rng, sink, None)?;
        match end.divergence {
            Some(report) => Err(Error::Diverged(report)),
            None => Ok(end.point),
        }
    }

    fn epoch_inner(
        &self,
        mut w: HybridPoint,
        epoch: usize,
        rng: &mut RngStream,
        sink: &mut dyn TraceSink,
        mut checkpoints: Option<(usize, &mut Vec<Checkpoint>)>,
    ) -> Result<EpochEnd> {
        let n = self.obj.n_samples();
        let order = rng.shuffle_permutation(n)?;
        let mut warnings = 0;
        for (k, &i) in order.iter().enumerate() {
            let step = epoch * n + k + 1;
            let (next, risk) = match self.step_inner(&w, i, rng) {
                Ok(r) => r,
                Err(Error::NonFinite(_)) => return Err(Error::NonFiniteUpdate { epoch, step }),
                Err(e) => return Err(e),
            };
            warnings += usize::from(risk);
            w = next;
            let record = TraceRecord::at(self.obj, &w, epoch, step, i);
            sink.record(record);
            if let Some((every, ref mut points)) = checkpoints {
                if step.is_multiple_of(every) {
                    points.push(Checkpoint { step, point: w.clone() });
                }
            }
            if !record.f_value.is_finite() || record.f_value > self.threshold {
                return Ok(EpochEnd {
                    point: w,
                    warnings,
                    divergence: Some(DivergenceReport {
                        epoch,
                        step,
                        f_value: record.f_value,
                        threshold: self.threshold,
                    }),
                });
            }
        }
        Ok(EpochEnd {
            point: w,
            warnings,
            divergence: None,
        })
    }

    /// `cfg.epochs` epochs from `w0`, stopping early on divergence.
    pub fn run(&self, w0: &HybridPoint, rng: &mut RngStream) -> Result<RunOutcome> {
        self.run_inner(w0, rng, None)
    }

    /// As [`run`](Self::run), also keeping `w0` and every `every`-th iterate.
    pub fn run_with_checkpoints(
        &self,
        w0: &HybridPoint,
        rng: &mut RngStream,
        every: usize,
    ) -> Result<(RunOutcome, Vec<Checkpoint>)> {
        if every == 0 {
            return Err(Error::invalid("checkpoint interval must be >= 1"));
        }
        let mut points = vec![Checkpoint {
            step: 0,
            point: w0.clone(),
        }];
        let outcome = self.run_inner(w0, rng, Some((every, &mut points)))?;
        Ok((outcome, points))
    }

    fn run_inner(
        &self,
        w0: &HybridPoint,
        rng: &mut RngStream,
        mut checkpoints: Option<(usize, &mut Vec<Checkpoint>)>,
    ) -> Result<RunOutcome> {
        let initial = TraceRecord::at(self.obj, w0, 0, 0, 0);
        let mut trace = Vec::with_capacity(self.cfg.epochs * self.obj.n_samples());
        let mut epoch_grad_norms_sq = vec![initial.grad_norm_sq()];
        let mut w = w0.clone();
        let mut cancellation_warnings = 0;
        let mut epochs_completed = 0;
        let mut divergence = None;
        for epoch in 0..self.cfg.epochs {
            let cp = checkpoints.as_mut().map(|(every, points)| (*every, &mut **points));
            let end = self.epoch_inner(w, epoch, rng, &mut trace, cp)?;
            cancellation_warnings += end.warnings;
            w = end.point;
            if end.divergence.is_some() {
                divergence = end.divergence;
                break;
            }
            epochs_completed += 1;
            epoch_grad_norms_sq.push(trace.last().expect("epoch logs steps").grad_norm_sq());
        }
        Ok(RunOutcome {
            final_point: w,
            initial,
            trace,
            epochs_completed,
            epoch_grad_norms_sq,
            divergence,
            cancellation_warnings,
        })
    }
}

/// Iterate saved during a run; `step` follows the trace numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub point: HybridPoint,
}

struct EpochEnd {
    point: HybridPoint,
    warnings: usize,
    divergence: Option<DivergenceReport>,
}

/// Single update of `w` on sample `i`.
pub fn step(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    i: usize,
    cfg: &OptimizerConfig,
    rng: &mut RngStream,
) -> Result<HybridPoint> {
    HybridSgd::new(obj, *cfg, w)?.step(w, i, rng)
}

/// One epoch from `w` (logged as epoch 0); the divergence threshold is
/// resolved from `f(w)`.
pub fn run_epoch(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    cfg: &OptimizerConfig,
    rng: &mut RngStream,
    sink: &mut dyn TraceSink,
) -> Result<HybridPoint> {
    HybridSgd::new(obj, *cfg, w)?.run_epoch(w.clone(), 0, rng, sink)
}

/// Full run from `w0`. Divergence is reported in [`RunOutcome::divergence`].
pub fn run(
    obj: &dyn FiniteSumObjective,
    w0: &HybridPoint,
    cfg: &OptimizerConfig,
    rng: &mut RngStream,
) -> Result<RunOutcome> {
    HybridSgd::new(obj, *cfg, w0)?.run(w0, rng)
}

pub const TRACE_HEADER: &str = "epoch,step,f,grad_norm,grad_norm_x,grad_norm_y";

/// Floats with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the CSV trace: header plus one row per record.
pub fn write_trace_csv<W: Write>(mut out: W, records: &[TraceRecord]) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch,
            r.step,
            format_float(r.f_value),
            format_float(r.grad_norm),
            format_float(r.grad_norm_x),
            format_float(r.grad_norm_y)
        )?;
    }
    Ok(())
}
