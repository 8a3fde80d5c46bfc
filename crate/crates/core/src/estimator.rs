//! Two-point Gaussian zeroth-order gradient estimates for the `x` block.
//!
//! For a direction `v ~ N(0, I_{d_x})` the estimate is
//!
//! ```text
//! ĝ = [f(x + μv, y; i) − f(x, y; i)] / μ · v
//! ```
//!
//! Only the `x` block is perturbed; `y` is read as-is. The estimate is an
//! unbiased estimate of the gradient of the Gaussian smoothing
//! `f_μ(x) = E_v f(x + μv, y; i)`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{axpy, norm, MeanVar};
use crate::objectives::FiniteSumObjective;
use crate::point::{Block, HybridPoint};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoConfig {
    /// Perturbation stepsize `μ`.
    pub mu: f64,
    /// Gaussian directions averaged per estimate.
    #[serde(default = "default_directions")]
    pub directions: usize,
}

fn default_directions() -> usize {
    1
}

impl Default for ZoConfig {
    fn default() -> Self {
        Self {
            mu: 1e-3,
            directions: 1,
        }
    }
}

impl ZoConfig {
    pub fn new(mu: f64, directions: usize) -> Result<Self> {
        let cfg = Self { mu, directions };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_mu(self.mu)?;
        if self.directions == 0 {
            return Err(Error::invalid("directions per step must be >= 1"));
        }
        Ok(())
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("perturbation stepsize must be > 0, got {mu}")));
    }
    Ok(())
}

/// Estimate plus a flag raised when `μ‖v‖` is so small relative to `‖x‖`
/// that the perturbed point is dominated by rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct XGradientEstimate {
    pub gradient: Vec<f64>,
    pub cancellation_risk: bool,
}

/// `μ‖v‖ < 1e3 · ε · ‖x‖`
pub fn cancellation_risk(mu: f64, v: &[f64], x: &[f64]) -> bool {
    mu * norm(v) < 1e3 * f64::EPSILON * norm(x)
}

/// `[f(x + μv) − f_base] / μ`, reusing `scratch` for the perturbed point.
fn difference_quotient(
    obj: &dyn FiniteSumObjective,
    w: &[f64],
    base: f64,
    i: usize,
    mu: f64,
    v: &[f64],
    scratch: &mut Vec<f64>,
) -> Result<f64> {
    scratch.clear();
    scratch.extend_from_slice(w);
    axpy(mu, v, &mut scratch[..v.len()]);
    let perturbed = obj.sample_value(scratch, i);
    if !perturbed.is_finite() {
        return Err(Error::NonFinite(format!(
            "objective value {perturbed} at perturbed point (sample {i}, mu {mu})"
        )));
    }
    Ok((perturbed - base) / mu)
}

fn base_value(obj: &dyn FiniteSumObjective, w: &HybridPoint, i: usize) -> Result<f64> {
    obj.eval_sample(w, i)
}

fn check_direction(w: &HybridPoint, v: &[f64]) -> Result<()> {
    if v.len() != w.layout().d_x() {
        return Err(Error::DimensionMismatch {
            context: "zeroth-order direction",
            expected: w.layout().d_x(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Single-direction two-point estimate of `∇_x f(x, y; i)` along `v`.
pub fn two_point_estimate(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    i: usize,
    mu: f64,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_mu(mu)?;
    check_direction(w, v)?;
    let base = base_value(obj, w, i)?;
    let mut scratch = Vec::with_capacity(w.layout().dim());
    let q = difference_quotient(obj, w.as_slice(), base, i, mu, v, &mut scratch)?;
    Ok(v.iter().map(|vj| q * vj).collect())
}

/// Average of `cfg.directions` two-point estimates along fresh Gaussian directions.
pub fn estimate_x_gradient(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    i: usize,
    cfg: &ZoConfig,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    estimate_x_gradient_detailed(obj, w, i, cfg, rng).map(|e| e.gradient)
}

/// As [`estimate_x_gradient`], also reporting the cancellation guard.
pub fn estimate_x_gradient_detailed(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    i: usize,
    cfg: &ZoConfig,
    rng: &mut RngStream,
) -> Result<XGradientEstimate> {
    estimate_block_gradient(obj, w, i, Block::X, cfg, rng)
}

/// Two-point estimate of the gradient restricted to `block`, perturbing only
/// that block. The `y` variant backs the all-zeroth-order baseline.
pub fn estimate_block_gradient(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    i: usize,
    block: Block,
    cfg: &ZoConfig,
    rng: &mut RngStream,
) -> Result<XGradientEstimate> {
    cfg.validate()?;
    let range = w.layout().range(block);
    let dim = range.len();
    let base = base_value(obj, w, i)?;
    let mut point = w.as_slice().to_vec();
    let mut gradient = vec![0.0; dim];
    let mut risk = false;
    for _ in 0..cfg.directions {
        let v = rng.sample_gaussian(dim)?;
        risk |= cancellation_risk(cfg.mu, &v, w.block(block));
        point[range.clone()].copy_from_slice(w.block(block));
        axpy(cfg.mu, &v, &mut point[range.clone()]);
        let perturbed = obj.sample_value(&point, i);
        if !perturbed.is_finite() {
            return Err(Error::NonFinite(format!(
                "objective value {perturbed} at perturbed point (sample {i}, mu {})",
                cfg.mu
            )));
        }
        axpy((perturbed - base) / cfg.mu, &v, &mut gradient);
    }
    let inv = 1.0 / cfg.directions as f64;
    gradient.iter_mut().for_each(|g| *g *= inv);
    if risk {
        warn!(
            "zeroth-order perturbation mu = {:e} is near rounding level for block norm {:e}",
            cfg.mu,
            norm(w.block(block))
        );
    }
    Ok(XGradientEstimate {
        gradient,
        cancellation_risk: risk,
    })
}

/// Monte Carlo estimate of `∇_x f_μ` with per-coordinate standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedGradient {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub samples: usize,
}

/// Reference value for `∇_x f_μ(x)` built from the antithetic form
/// `[f(x + μv) − f(x − μv)] / (2μ) · v`, which has the same expectation as
/// the forward estimator but shares no evaluation path with it. Test oracle.
pub fn smoothed_gradient_reference(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    i: usize,
    mu: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<SmoothedGradient> {
    check_mu(mu)?;
    obj.check_point(w)?;
    obj.check_index(i)?;
    if samples == 0 {
        return Err(Error::invalid("smoothed gradient needs at least one sample"));
    }
    let d_x = w.layout().d_x();
    let mut acc = vec![MeanVar::new(); d_x];
    let mut plus = w.as_slice().to_vec();
    let mut minus = w.as_slice().to_vec();
    for _ in 0..samples {
        let v = rng.sample_gaussian(d_x)?;
        for j in 0..d_x {
            plus[j] = w.as_slice()[j] + mu * v[j];
            minus[j] = w.as_slice()[j] - mu * v[j];
        }
        let up = obj.sample_value(&plus, i);
        let down = obj.sample_value(&minus, i);
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::NonFinite(format!(
                "objective value at perturbed point (sample {i}, mu {mu})"
            )));
        }
        let q = (up - down) / (2.0 * mu);
        for (a, vj) in acc.iter_mut().zip(&v) {
            a.push(q * vj);
        }
    }
    Ok(SmoothedGradient {
        mean: acc.iter().map(MeanVar::mean).collect(),
        std_error: acc.iter().map(MeanVar::std_error).collect(),
        samples,
    })
}
