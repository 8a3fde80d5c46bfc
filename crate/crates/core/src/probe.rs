//! Local smoothness probes from finite-difference Hessian-vector products.
//!
//! `Hv ≈ (∇f(w + hv) − ∇f(w)) / h` with unit directions `v` restricted to a
//! block. Over `K` probes the report holds
//!
//! - `frobenius_raw = √(mean ‖H_b v‖²)`, the literal `√(E vᵀH²v)` estimator;
//!   for uniform unit `v` this is `‖H_b‖_F / √dim`, the RMS eigenvalue
//! - `frobenius_scaled = √(dim · mean ‖H_b v‖²)`, an unbiased-in-square
//!   estimate of `‖H_b‖_F`
//! - `operator_lb = max ‖H_b v‖`, a lower bound on the operator norm
//!
//! where `H_b` is the diagonal block of the Hessian for the probed block
//! (the output `Hv` is restricted to the same block). Reductions run in
//! probe order.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{all_finite, norm, norm_sq, MeanVar};
use crate::objectives::FiniteSumObjective;
use crate::optimizer::format_float;
use crate::point::{Block, HybridPoint};
use crate::rng::RngStream;

/// Stream id for probe directions.
pub const PROBE_STREAM: u64 = 0x5eed_0002;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeTarget {
    X,
    Y,
    Full,
}

impl ProbeTarget {
    pub fn range(&self, w: &HybridPoint) -> std::ops::Range<usize> {
        match self {
            ProbeTarget::X => w.layout().range(Block::X),
            ProbeTarget::Y => w.layout().range(Block::Y),
            ProbeTarget::Full => 0..w.layout().dim(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProbeTarget::X => "x",
            ProbeTarget::Y => "y",
            ProbeTarget::Full => "full",
        }
    }
}

impl From<Block> for ProbeTarget {
    fn from(b: Block) -> Self {
        match b {
            Block::X => ProbeTarget::X,
            Block::Y => ProbeTarget::Y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default = "default_target")]
    pub target: ProbeTarget,
}

fn default_h() -> f64 {
    1e-5
}

fn default_directions() -> usize {
    100
}

fn default_target() -> ProbeTarget {
    ProbeTarget::Full
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            h: default_h(),
            directions: default_directions(),
            target: default_target(),
        }
    }
}

impl ProbeConfig {
    pub fn new(h: f64, directions: usize, target: ProbeTarget) -> Result<Self> {
        let cfg = Self { h, directions, target };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_target(self, target: ProbeTarget) -> Self {
        Self { target, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        check_h(self.h)?;
        if self.directions == 0 {
            return Err(Error::invalid("probe needs at least one direction"));
        }
        Ok(())
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("finite-difference step must be > 0, got {h}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeReport {
    pub target: ProbeTarget,
    pub dim: usize,
    pub frobenius_raw: f64,
    pub frobenius_scaled: f64,
    pub operator_lb: f64,
    /// Standard error of `frobenius_scaled` (delta method).
    pub stderr: f64,
    pub directions: usize,
    pub h: f64,
}

/// Where the gradients come from: the full sum or one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientSource {
    Full,
    Sample(usize),
}

fn gradient_at(obj: &dyn FiniteSumObjective, w: &[f64], source: GradientSource, out: &mut [f64]) {
    match source {
        GradientSource::Full => obj.full_gradient(w, out),
        GradientSource::Sample(i) => obj.sample_gradient(w, i, out),
    }
}

fn hvp_with(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    source: GradientSource,
    v: &[f64],
    h: f64,
    base: &[f64],
) -> Result<Vec<f64>> {
    let shifted: Vec<f64> = w.as_slice().iter().zip(v).map(|(a, b)| a + h * b).collect();
    let mut g = vec![0.0; v.len()];
    gradient_at(obj, &shifted, source, &mut g);
    if !all_finite(&g) {
        return Err(Error::NonFinite("gradient at perturbed probe point".into()));
    }
    Ok(g.iter().zip(base).map(|(a, b)| (a - b) / h).collect())
}

fn base_gradient(obj: &dyn FiniteSumObjective, w: &HybridPoint, source: GradientSource) -> Result<Vec<f64>> {
    obj.check_point(w)?;
    if let GradientSource::Sample(i) = source {
        obj.check_index(i)?;
    }
    let mut g = vec![0.0; w.layout().dim()];
    gradient_at(obj, w.as_slice(), source, &mut g);
    if !all_finite(&g) {
        return Err(Error::NonFinite("gradient at probe point".into()));
    }
    Ok(g)
}

/// `(∇f(w + hv) − ∇f(w)) / h` for a full-dimension `v`.
pub fn hvp(obj: &dyn FiniteSumObjective, w: &HybridPoint, v: &[f64], h: f64) -> Result<Vec<f64>> {
    hvp_from(obj, w, GradientSource::Full, v, h)
}

/// As [`hvp`] with the per-sample gradient of sample `i`.
pub fn hvp_sample(obj: &dyn FiniteSumObjective, w: &HybridPoint, i: usize, v: &[f64], h: f64) -> Result<Vec<f64>> {
    hvp_from(obj, w, GradientSource::Sample(i), v, h)
}

fn hvp_from(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    source: GradientSource,
    v: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    check_h(h)?;
    w.layout().check_len("hvp direction", v.len())?;
    let base = base_gradient(obj, w, source)?;
    hvp_with(obj, w, source, v, h, &base)
}

/// Block-restricted product `H_b v` for a direction `v` living in `target`;
/// `v` is zero-padded outside the block.
pub fn block_hvp(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    target: ProbeTarget,
    v: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    check_h(h)?;
    let range = target.range(w);
    if v.len() != range.len() {
        return Err(Error::DimensionMismatch {
            context: "block hvp direction",
            expected: range.len(),
            got: v.len(),
        });
    }
    let base = base_gradient(obj, w, GradientSource::Full)?;
    let mut padded = vec![0.0; w.layout().dim()];
    padded[range.clone()].copy_from_slice(v);
    Ok(hvp_with(obj, w, GradientSource::Full, &padded, h, &base)?[range].to_vec())
}

/// Smoothness report of the full objective for `cfg.target`.
pub fn estimate_block_lipschitz(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    cfg: &ProbeConfig,
    rng: &mut RngStream,
) -> Result<ProbeReport> {
    probe_report(obj, w, GradientSource::Full, cfg, rng)
}

/// Smoothness report of the single loss `f(·; i)`.
pub fn estimate_sample_block_lipschitz(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    i: usize,
    cfg: &ProbeConfig,
    rng: &mut RngStream,
) -> Result<ProbeReport> {
    probe_report(obj, w, GradientSource::Sample(i), cfg, rng)
}

fn probe_report(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    source: GradientSource,
    cfg: &ProbeConfig,
    rng: &mut RngStream,
) -> Result<ProbeReport> {
    cfg.validate()?;
    let base = base_gradient(obj, w, source)?;
    let range = cfg.target.range(w);
    let dim = range.len();
    let mut padded = vec![0.0; w.layout().dim()];
    let mut squares = MeanVar::new();
    let mut operator_lb = 0.0f64;
    for _ in 0..cfg.directions {
        let v = rng.sample_unit_sphere(dim)?;
        padded[range.clone()].copy_from_slice(&v);
        let hv = hvp_with(obj, w, source, &padded, cfg.h, &base)?;
        let sq = norm_sq(&hv[range.clone()]);
        squares.push(sq);
        operator_lb = operator_lb.max(sq.sqrt());
    }
    let mean = squares.mean().max(0.0);
    let frobenius_scaled = (dim as f64 * mean).sqrt();
    let stderr = if frobenius_scaled > 0.0 {
        dim as f64 * squares.std_error() / (2.0 * frobenius_scaled)
    } else {
        0.0
    };
    Ok(ProbeReport {
        target: cfg.target,
        dim,
        frobenius_raw: mean.sqrt(),
        frobenius_scaled,
        operator_lb,
        stderr,
        directions: cfg.directions,
        h: cfg.h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanEntry {
    pub grad_norm: f64,
    pub report: ProbeReport,
}

/// Gradient norm and smoothness report at every point of a trajectory.
pub fn trajectory_scan(
    obj: &dyn FiniteSumObjective,
    points: &[HybridPoint],
    cfg: &ProbeConfig,
    rng: &mut RngStream,
) -> Result<Vec<ScanEntry>> {
    if points.is_empty() {
        return Err(Error::invalid("trajectory scan needs at least one point"));
    }
    points
        .iter()
        .map(|w| {
            let grad_norm = norm(&obj.grad_full(w)?);
            let report = estimate_block_lipschitz(obj, w, cfg, rng)?;
            Ok(ScanEntry { grad_norm, report })
        })
        .collect()
}

pub const PROBE_HEADER: &str = "point_index,grad_norm,block,frob_raw,frob_scaled,op_lb,stderr,K,h";

/// One CSV row per `(point_index, entry)`.
pub fn write_probe_csv<W: Write>(mut out: W, rows: &[(usize, ScanEntry)]) -> io::Result<()> {
    writeln!(out, "{PROBE_HEADER}")?;
    for (index, e) in rows {
        let r = &e.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            index,
            format_float(e.grad_norm),
            r.target.name(),
            format_float(r.frobenius_raw),
            format_float(r.frobenius_scaled),
            format_float(r.operator_lb),
            format_float(r.stderr),
            r.directions,
            format_float(r.h)
        )?;
    }
    Ok(())
}
