//! Slow, independent validators: central-difference gradients and Hessians,
//! Monte Carlo checks of the estimator's bias and variance bounds, and the
//! block-wise curvature envelope check.
//!
//! Nothing in the optimizer depends on this module.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::two_point_estimate;
use crate::numeric::{all_finite, dot, norm, norm_sq, MeanVar};
use crate::objectives::FiniteSumObjective;
use crate::point::{Block, HybridPoint};
use crate::rng::RngStream;

/// Outcome of comparing an empirical quantity with a theoretical bound.
///
/// `pass` holds when `empirical_lhs ≤ theoretical_rhs + 3 · stderr + tolerance`.
/// `stderr` is the Monte Carlo standard error of the lhs (zero for
/// deterministic checks) and `tolerance` a fixed allowance for rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub name: String,
    pub empirical_lhs: f64,
    pub theoretical_rhs: f64,
    pub stderr: f64,
    pub trials: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl BoundCheckReport {
    pub fn new(
        name: impl Into<String>,
        empirical_lhs: f64,
        theoretical_rhs: f64,
        stderr: f64,
        trials: usize,
        tolerance: f64,
    ) -> Self {
        let pass = empirical_lhs <= theoretical_rhs + 3.0 * stderr + tolerance;
        Self {
            name: name.into(),
            empirical_lhs,
            theoretical_rhs,
            stderr,
            trials,
            tolerance,
            pass,
        }
    }

    /// `rhs − lhs`; negative when the bound is exceeded.
    pub fn margin(&self) -> f64 {
        self.theoretical_rhs - self.empirical_lhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Sample(usize),
    Full,
}

fn value_at(obj: &dyn FiniteSumObjective, w: &[f64], target: Target) -> f64 {
    match target {
        Target::Sample(i) => obj.sample_value(w, i),
        Target::Full => (0..obj.n_samples()).map(|i| obj.sample_value(w, i)).sum::<f64>() / obj.n_samples() as f64,
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("finite-difference step must be > 0, got {h}")));
    }
    Ok(())
}

/// Central-difference gradient of `f(·; i)` or of `f`, one coordinate at a time.
pub fn fd_gradient(obj: &dyn FiniteSumObjective, w: &HybridPoint, target: Target, h: f64) -> Result<Vec<f64>> {
    check_h(h)?;
    obj.check_point(w)?;
    if let Target::Sample(i) = target {
        obj.check_index(i)?;
    }
    let mut p = w.as_slice().to_vec();
    let mut g = Vec::with_capacity(p.len());
    for j in 0..p.len() {
        let orig = p[j];
        p[j] = orig + h;
        let up = value_at(obj, &p, target);
        p[j] = orig - h;
        let down = value_at(obj, &p, target);
        p[j] = orig;
        g.push((up - down) / (2.0 * h));
    }
    if !all_finite(&g) {
        return Err(Error::NonFinite("finite-difference gradient".into()));
    }
    Ok(g)
}

/// Finite-difference Hessian of the full objective, symmetrized.
#[derive(Debug, Clone)]
pub struct DenseHessian {
    pub matrix: DMatrix<f64>,
    /// `‖H − Hᵀ‖_F / ‖H‖_F` before symmetrization (0 for a zero matrix).
    pub asymmetry: f64,
    d_x: usize,
}

impl DenseHessian {
    pub fn block(&self, block: Block) -> DMatrix<f64> {
        let d = self.matrix.nrows();
        match block {
            Block::X => self.matrix.view((0, 0), (self.d_x, self.d_x)).into_owned(),
            Block::Y => self
                .matrix
                .view((self.d_x, self.d_x), (d - self.d_x, d - self.d_x))
                .into_owned(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.symmetric_eigenvalues().iter().copied().collect()
    }

    pub fn operator_norm(&self) -> f64 {
        spectral_radius(&self.matrix)
    }

    pub fn block_lambda_max(&self, block: Block) -> f64 {
        lambda_max(&self.block(block))
    }

    pub fn block_operator_norm(&self, block: Block) -> f64 {
        spectral_radius(&self.block(block))
    }
}

fn lambda_max(m: &DMatrix<f64>) -> f64 {
    m.symmetric_eigenvalues().max()
}

fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, e| a.max(e.abs()))
}

/// Column `j` is `(∇f(w + h e_j) − ∇f(w − h e_j)) / 2h` from the analytic gradient.
pub fn dense_hessian(obj: &dyn FiniteSumObjective, w: &HybridPoint, h: f64) -> Result<DenseHessian> {
    check_h(h)?;
    obj.check_point(w)?;
    let d = w.layout().dim();
    let mut p = w.as_slice().to_vec();
    let mut up = vec![0.0; d];
    let mut down = vec![0.0; d];
    let mut raw = DMatrix::zeros(d, d);
    for j in 0..d {
        let orig = p[j];
        p[j] = orig + h;
        obj.full_gradient(&p, &mut up);
        p[j] = orig - h;
        obj.full_gradient(&p, &mut down);
        p[j] = orig;
        for r in 0..d {
            raw[(r, j)] = (up[r] - down[r]) / (2.0 * h);
        }
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("finite-difference Hessian".into()));
    }
    let skew = (&raw - raw.transpose()).norm();
    let scale = raw.norm();
    let asymmetry = if scale > 0.0 { skew / scale } else { 0.0 };
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(DenseHessian {
        matrix,
        asymmetry,
        d_x: w.layout().d_x(),
    })
}

/// Monte Carlo check of the single-direction estimator against
///
/// - bias: `E⟨g, ĝ − ∇f⟩ ≤ (μ/2) L (d+3)^{3/2} ‖g‖` with `g = ∇_x f(w; i)`
/// - variance: `E‖ĝ − ∇f‖² ≤ 32 d ‖∇f‖² + 108 μ² L² d⁴`
///
/// where `ĝ` is the two-point estimate of `∇_x f(w; i)`, `d = d_x` and `L`
/// is the x-block smoothness constant supplied by the caller.
pub fn check_estimator_bounds(
    obj: &dyn FiniteSumObjective,
    w: &HybridPoint,
    i: usize,
    mu: f64,
    lipschitz: f64,
    trials: usize,
    rng: &mut RngStream,
) -> Result<[BoundCheckReport; 2]> {
    if trials < 2 {
        return Err(Error::invalid("bound checks need at least two trials"));
    }
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(Error::invalid(format!(
            "Lipschitz constant must be >= 0, got {lipschitz}"
        )));
    }
    let d_x = w.layout().d_x();
    let grad = obj.grad_sample(w, i)?[..d_x].to_vec();
    let mut bias = MeanVar::new();
    let mut sq = MeanVar::new();
    for _ in 0..trials {
        let v = rng.sample_gaussian(d_x)?;
        let est = two_point_estimate(obj, w, i, mu, &v)?;
        let err: Vec<f64> = est.iter().zip(&grad).map(|(a, b)| a - b).collect();
        bias.push(dot(&grad, &err));
        sq.push(norm_sq(&err));
    }
    let d = d_x as f64;
    let g = norm(&grad);
    let bias_rhs = 0.5 * mu * lipschitz * (d + 3.0).powf(1.5) * g;
    let var_rhs = 32.0 * d * g * g + 108.0 * mu * mu * lipschitz * lipschitz * d.powi(4);
    Ok([
        BoundCheckReport::new(
            format!("estimator_bias(mu={mu:e},d_x={d_x})"),
            bias.mean(),
            bias_rhs,
            bias.std_error(),
            trials,
            0.0,
        ),
        BoundCheckReport::new(
            format!("estimator_variance(mu={mu:e},d_x={d_x})"),
            sq.mean(),
            var_rhs,
            sq.std_error(),
            trials,
            0.0,
        ),
    ])
}

/// Curvature measurements at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub grad_norm: f64,
    pub lambda_x: f64,
    pub lambda_y: f64,
    pub ell_x: f64,
    pub ell_y: f64,
    /// `λ_max(∇²f − diag(ℓ_x I, ℓ_y I))`.
    pub joint_excess: f64,
}

impl EnvelopePoint {
    /// Largest violation among the x-block, y-block and joint conditions.
    pub fn worst_excess(&self) -> f64 {
        (self.lambda_x - self.ell_x)
            .max(self.lambda_y - self.ell_y)
            .max(self.joint_excess)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    pub report: BoundCheckReport,
    pub points: Vec<EnvelopePoint>,
}

/// Checks `diag(ℓ_x(‖∇f‖) I, ℓ_y(‖∇f‖) I) ⪰ ∇²f` at every point using the
/// dense finite-difference Hessian. The report's lhs is the worst excess over
/// points (per-block `λ_max − ℓ` and the joint matrix condition), its rhs 0.
pub fn check_hybrid_smoothness(
    obj: &dyn FiniteSumObjective,
    points: &[HybridPoint],
    ell_x: &dyn Fn(f64) -> f64,
    ell_y: &dyn Fn(f64) -> f64,
    h: f64,
    tolerance: f64,
) -> Result<EnvelopeCheck> {
    if points.is_empty() {
        return Err(Error::invalid("envelope check needs at least one point"));
    }
    let mut out = Vec::with_capacity(points.len());
    for w in points {
        let grad_norm = norm(&obj.grad_full(w)?);
        let hess = dense_hessian(obj, w, h)?;
        let (lx, ly) = (ell_x(grad_norm), ell_y(grad_norm));
        let d_x = w.layout().d_x();
        let mut shifted = hess.matrix.clone();
        for j in 0..shifted.nrows() {
            shifted[(j, j)] -= if j < d_x { lx } else { ly };
        }
        out.push(EnvelopePoint {
            grad_norm,
            lambda_x: hess.block_lambda_max(Block::X),
            lambda_y: hess.block_lambda_max(Block::Y),
            ell_x: lx,
            ell_y: ly,
            joint_excess: lambda_max(&shifted),
        });
    }
    let worst = out
        .iter()
        .map(EnvelopePoint::worst_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(EnvelopeCheck {
        report: BoundCheckReport::new("hybrid_smoothness", worst, 0.0, 0.0, points.len(), tolerance),
        points: out,
    })
}
