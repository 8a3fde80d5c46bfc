use super::quadratic::gaussian_rows;
use super::{check_rows, FiniteSumObjective};
use crate::error::{Error, Result};
use crate::numeric::dot;
use crate::point::BlockLayout;
use crate::rng::RngStream;

/// `f(w; i) = s_iᵀ w + b_i`. Zero Hessian; unbounded below unless every slope is zero.
#[derive(Debug, Clone)]
pub struct LinearObjective {
    layout: BlockLayout,
    slopes: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl LinearObjective {
    pub fn new(layout: BlockLayout, slopes: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        check_rows(&slopes, layout.dim(), "linear slopes")?;
        if offsets.len() != slopes.len() {
            return Err(Error::DimensionMismatch {
                context: "linear offsets",
                expected: slopes.len(),
                got: offsets.len(),
            });
        }
        if offsets.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("linear offsets".into()));
        }
        Ok(Self {
            layout,
            slopes,
            offsets,
        })
    }

    /// A single sample with slope `slope` and zero offset.
    pub fn with_slope(layout: BlockLayout, slope: Vec<f64>) -> Result<Self> {
        Self::new(layout, vec![slope], vec![0.0])
    }

    /// Slopes drawn as `spread · N(0, I)`, zero offsets.
    pub fn random(layout: BlockLayout, n: usize, spread: f64, rng: &mut RngStream) -> Result<Self> {
        let slopes = gaussian_rows(n, layout.dim(), spread, rng)?;
        Self::new(layout, slopes, vec![0.0; n])
    }

    pub fn slopes(&self) -> &[Vec<f64>] {
        &self.slopes
    }
}

impl FiniteSumObjective for LinearObjective {
    fn layout(&self) -> BlockLayout {
        self.layout
    }

    fn n_samples(&self) -> usize {
        self.slopes.len()
    }

    fn sample_value(&self, w: &[f64], i: usize) -> f64 {
        dot(&self.slopes[i], w) + self.offsets[i]
    }

    fn sample_gradient(&self, _w: &[f64], i: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.slopes[i]);
    }

    fn optimal_value_bound(&self) -> f64 {
        let n = self.slopes.len() as f64;
        let total_slope = (0..self.layout.dim())
            .map(|j| self.slopes.iter().map(|s| s[j]).sum::<f64>())
            .any(|s| s != 0.0);
        if total_slope {
            f64::NEG_INFINITY
        } else {
            self.offsets.iter().sum::<f64>() / n
        }
    }
}
