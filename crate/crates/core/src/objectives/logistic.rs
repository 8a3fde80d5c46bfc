use super::quadratic::gaussian_rows;
use super::{check_rows, FiniteSumObjective};
use crate::error::{Error, Result};
use crate::numeric::{dot, norm_sq};
use crate::point::BlockLayout;
use crate::rng::RngStream;

/// `f(w; i) = log(1 + exp(−b_i z_iᵀ w)) + (λ/2)‖w‖²`.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    layout: BlockLayout,
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    lambda: f64,
}

impl LogisticObjective {
    pub fn new(layout: BlockLayout, features: Vec<Vec<f64>>, labels: Vec<f64>, lambda: f64) -> Result<Self> {
        check_rows(&features, layout.dim(), "logistic features")?;
        if labels.len() != features.len() {
            return Err(Error::DimensionMismatch {
                context: "logistic labels",
                expected: features.len(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::invalid("logistic labels must be +1 or -1"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("L2 coefficient must be >= 0, got {lambda}")));
        }
        Ok(Self {
            layout,
            features,
            labels,
            lambda,
        })
    }

    /// Gaussian features; labels from a planted Gaussian direction with
    /// unit-variance label noise, so the classes are not separable.
    pub fn random(layout: BlockLayout, n: usize, lambda: f64, rng: &mut RngStream) -> Result<Self> {
        let features = gaussian_rows(n, layout.dim(), 1.0, rng)?;
        let planted = rng.sample_gaussian(layout.dim())?;
        let labels = features
            .iter()
            .map(|z| {
                if dot(z, &planted) + rng.gaussian() >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        Self::new(layout, features, labels, lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `maxᵢ ‖z_i‖² / 4 + λ`, an upper bound on every per-sample gradient
    /// Lipschitz constant.
    pub fn lipschitz_bound(&self) -> f64 {
        self.features.iter().map(|z| norm_sq(z)).fold(0.0, f64::max) / 4.0 + self.lambda
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl FiniteSumObjective for LogisticObjective {
    fn layout(&self) -> BlockLayout {
        self.layout
    }

    fn n_samples(&self) -> usize {
        self.features.len()
    }

    fn sample_value(&self, w: &[f64], i: usize) -> f64 {
        let margin = -self.labels[i] * dot(&self.features[i], w);
        softplus(margin) + 0.5 * self.lambda * norm_sq(w)
    }

    fn sample_gradient(&self, w: &[f64], i: usize, out: &mut [f64]) {
        let b = self.labels[i];
        let coef = -b * sigmoid(-b * dot(&self.features[i], w));
        for ((o, z), wj) in out.iter_mut().zip(&self.features[i]).zip(w) {
            *o = coef * z + self.lambda * wj;
        }
    }

    fn optimal_value_bound(&self) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::HybridPoint;

    #[test]
    fn value_at_origin_is_log_two() {
        let mut rng = RngStream::new(4, 0);
        let layout = BlockLayout::new(3, 2).unwrap();
        let obj = LogisticObjective::random(layout, 5, 0.0, &mut rng).unwrap();
        let w = HybridPoint::zeros(layout);
        for i in 0..5 {
            assert!((obj.eval_sample(&w, i).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn large_margins_stay_finite() {
        let layout = BlockLayout::new(1, 1).unwrap();
        let obj = LogisticObjective::new(layout, vec![vec![1.0, 1.0]], vec![1.0], 0.0).unwrap();
        let w = HybridPoint::from_blocks(&[-400.0], &[-400.0]).unwrap();
        assert!((obj.eval_sample(&w, 0).unwrap() - 800.0).abs() < 1e-9);
        let g = obj.grad_sample(&w, 0).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_labels() {
        let layout = BlockLayout::new(1, 1).unwrap();
        assert!(LogisticObjective::new(layout, vec![vec![1.0, 1.0]], vec![0.0], 0.0).is_err());
        assert!(LogisticObjective::new(layout, vec![vec![1.0, 1.0]], vec![1.0], -1.0).is_err());
    }
}
