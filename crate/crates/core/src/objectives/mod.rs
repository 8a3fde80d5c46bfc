//! Finite-sum test objectives `f(w) = (1/n) Σ f(w; i)` with exact
//! per-sample values and gradients.
//!
//! The families cover the smoothness regimes the optimizer is studied in:
//!
//! | type                | Hessian                         | regime                           |
//! |---------------------|---------------------------------|----------------------------------|
//! | [`BlockQuadratic`]  | `diag(a_x I, a_y I)`            | L-smooth, block-heterogeneous    |
//! | [`DenseQuadratic`]  | arbitrary symmetric `H`         | L-smooth, coupled blocks         |
//! | [`LinearObjective`] | zero                            | estimator sanity checks          |
//! | [`CoshObjective`]   | `diag(cosh(w - s))`             | generalized smooth, not L-smooth |
//! | [`LogisticObjective`] | `Σ σ'(.) z zᵀ + λI`          | coercive for `λ > 0`             |

mod cosh;
mod linear;
mod logistic;
mod quadratic;
mod spec;

pub use cosh::CoshObjective;
pub use linear::LinearObjective;
pub use logistic::LogisticObjective;
pub use quadratic::{BlockQuadratic, DenseQuadratic};
pub use spec::ObjectiveSpec;

use crate::error::{Error, Result};
use crate::numeric::{axpy, norm_sq};
use crate::point::{BlockLayout, HybridPoint};

/// Stream id used when an objective generates its data from a seed.
pub const DATA_STREAM: u64 = 0x0b1e_c71e;

/// A finite sum of `n` smooth per-sample losses over a block layout.
///
/// Implementors supply the raw per-sample value and gradient on flat slices;
/// the provided `eval_*` / `grad_*` methods add layout and index checks.
pub trait FiniteSumObjective: Send + Sync {
    fn layout(&self) -> BlockLayout;

    fn n_samples(&self) -> usize;

    /// `f(w; i)` without argument checks.
    fn sample_value(&self, w: &[f64], i: usize) -> f64;

    /// Writes `∇f(w; i)` into `out` without argument checks.
    fn sample_gradient(&self, w: &[f64], i: usize, out: &mut [f64]);

    /// A lower bound on `inf f`; exact where the minimum is known in closed form.
    fn optimal_value_bound(&self) -> f64;

    fn full_value(&self, w: &[f64]) -> f64 {
        let n = self.n_samples();
        (0..n).map(|i| self.sample_value(w, i)).sum::<f64>() / n as f64
    }

    fn full_gradient(&self, w: &[f64], out: &mut [f64]) {
        let n = self.n_samples();
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut g = vec![0.0; w.len()];
        for i in 0..n {
            self.sample_gradient(w, i, &mut g);
            axpy(1.0, &g, out);
        }
        out.iter_mut().for_each(|o| *o /= n as f64);
    }

    fn eval_sample(&self, w: &HybridPoint, i: usize) -> Result<f64> {
        self.check_point(w)?;
        self.check_index(i)?;
        finite_value(self.sample_value(w.as_slice(), i), "eval_sample")
    }

    fn grad_sample(&self, w: &HybridPoint, i: usize) -> Result<Vec<f64>> {
        self.check_point(w)?;
        self.check_index(i)?;
        let mut g = vec![0.0; w.layout().dim()];
        self.sample_gradient(w.as_slice(), i, &mut g);
        finite_vector(g, "grad_sample")
    }

    fn eval_full(&self, w: &HybridPoint) -> Result<f64> {
        self.check_point(w)?;
        finite_value(self.full_value(w.as_slice()), "eval_full")
    }

    fn grad_full(&self, w: &HybridPoint) -> Result<Vec<f64>> {
        self.check_point(w)?;
        let mut g = vec![0.0; w.layout().dim()];
        self.full_gradient(w.as_slice(), &mut g);
        finite_vector(g, "grad_full")
    }

    /// `(1/n) Σ ‖∇f(w; i) − ∇f(w)‖²` from the analytic gradients.
    ///
    /// Computed as a two-pass variance of the shifts `∇f(w; i) − ∇f(w; 0)`,
    /// which is exactly zero when all samples agree.
    fn sample_variance(&self, w: &HybridPoint) -> Result<f64> {
        self.check_point(w)?;
        let n = self.n_samples();
        let dim = w.layout().dim();
        let mut anchor = vec![0.0; dim];
        self.sample_gradient(w.as_slice(), 0, &mut anchor);
        let mut shifts = Vec::with_capacity(n);
        let mut mean = vec![0.0; dim];
        for i in 0..n {
            let mut g = vec![0.0; dim];
            self.sample_gradient(w.as_slice(), i, &mut g);
            axpy(-1.0, &anchor, &mut g);
            axpy(1.0 / n as f64, &g, &mut mean);
            shifts.push(g);
        }
        let total: f64 = shifts
            .iter_mut()
            .map(|g| {
                axpy(-1.0, &mean, g);
                norm_sq(g)
            })
            .sum();
        finite_value(total / n as f64, "sample_variance")
    }

    fn check_point(&self, w: &HybridPoint) -> Result<()> {
        let layout = self.layout();
        layout.check_len("objective point", w.layout().dim())?;
        if w.layout() != layout {
            return Err(Error::DimensionMismatch {
                context: "objective x-block",
                expected: layout.d_x(),
                got: w.layout().d_x(),
            });
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        let n = self.n_samples();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        Ok(())
    }
}

fn finite_value(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} returned {v}")))
    }
}

fn finite_vector(v: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} has non-finite entries")))
    }
}

/// Validates per-sample data rows: non-empty, all of length `dim`, finite.
pub(crate) fn check_rows(rows: &[Vec<f64>], dim: usize, what: &'static str) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid(format!("{what}: need at least one sample")));
    }
    for row in rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                context: what,
                expected: dim,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{what} contains non-finite data")));
        }
    }
    Ok(())
}

pub(crate) fn mean_row(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut mean = vec![0.0; rows[0].len()];
    for row in rows {
        axpy(1.0, row, &mut mean);
    }
    mean.iter_mut().for_each(|m| *m /= rows.len() as f64);
    mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::relative_error;
    use crate::rng::RngStream;

    /// Central differences of `sample_value`, kept local so the check does
    /// not route through the oracle module.
    fn central_difference(obj: &dyn FiniteSumObjective, w: &[f64], i: usize, h: f64) -> Vec<f64> {
        let mut p = w.to_vec();
        (0..w.len())
            .map(|j| {
                p[j] = w[j] + h;
                let up = obj.sample_value(&p, i);
                p[j] = w[j] - h;
                let down = obj.sample_value(&p, i);
                p[j] = w[j];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn all_objectives(rng: &mut RngStream) -> Vec<Box<dyn FiniteSumObjective>> {
        let layout = BlockLayout::new(3, 2).unwrap();
        vec![
            Box::new(BlockQuadratic::random(layout, 4, 5.0, 0.5, 1.0, rng).unwrap()),
            Box::new(DenseQuadratic::random(layout, 3, 1.0, rng).unwrap()),
            Box::new(LinearObjective::random(layout, 3, 1.0, rng).unwrap()),
            Box::new(CoshObjective::random(layout, 3, 0.5, rng).unwrap()),
            Box::new(LogisticObjective::random(layout, 6, 0.1, rng).unwrap()),
        ]
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = RngStream::new(17, 0);
        for obj in all_objectives(&mut rng) {
            for _ in 0..10 {
                let w = rng.sample_gaussian(5).unwrap();
                let i = rng.below(obj.n_samples() as u64) as usize;
                let mut g = vec![0.0; 5];
                obj.sample_gradient(&w, i, &mut g);
                let fd = central_difference(obj.as_ref(), &w, i, 1e-5);
                let err = relative_error(&fd, &g);
                assert!(err <= 1e-6, "relative error {err}");
            }
        }
    }

    #[test]
    fn full_value_and_gradient_are_sample_averages() {
        let mut rng = RngStream::new(18, 0);
        for obj in all_objectives(&mut rng) {
            let w = HybridPoint::new(obj.layout(), rng.sample_gaussian(5).unwrap()).unwrap();
            let n = obj.n_samples();
            let direct: f64 = (0..n).map(|i| obj.eval_sample(&w, i).unwrap()).sum::<f64>() / n as f64;
            let full = obj.eval_full(&w).unwrap();
            assert!((full - direct).abs() <= 1e-12 * direct.abs().max(1.0));

            let mut avg = vec![0.0; 5];
            for i in 0..n {
                axpy(1.0 / n as f64, &obj.grad_sample(&w, i).unwrap(), &mut avg);
            }
            assert!(relative_error(&obj.grad_full(&w).unwrap(), &avg) <= 1e-12);
        }
    }

    #[test]
    fn singleton_sum_equals_its_sample() {
        let mut rng = RngStream::new(19, 0);
        let layout = BlockLayout::new(2, 2).unwrap();
        let obj = CoshObjective::random(layout, 1, 1.0, &mut rng).unwrap();
        let w = HybridPoint::new(layout, vec![0.3, -0.2, 0.1, 0.9]).unwrap();
        assert_eq!(obj.eval_full(&w).unwrap(), obj.eval_sample(&w, 0).unwrap());
        assert_eq!(obj.grad_full(&w).unwrap(), obj.grad_sample(&w, 0).unwrap());
    }

    #[test]
    fn checked_accessors_reject_bad_arguments() {
        let layout = BlockLayout::new(2, 1).unwrap();
        let obj = BlockQuadratic::identical(layout, 2, 1.0, 1.0, vec![0.0; 3]).unwrap();
        let w = HybridPoint::zeros(layout);
        assert!(matches!(
            obj.eval_sample(&w, 2),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
        let other = HybridPoint::zeros(BlockLayout::new(1, 2).unwrap());
        assert!(matches!(obj.grad_full(&other), Err(Error::DimensionMismatch { .. })));
        let short = HybridPoint::zeros(BlockLayout::new(1, 1).unwrap());
        assert!(matches!(obj.eval_full(&short), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sample_variance_special_cases() {
        let layout = BlockLayout::new(1, 1).unwrap();
        let same = BlockQuadratic::identical(layout, 5, 3.0, 2.0, vec![1.0, -1.0]).unwrap();
        let w = HybridPoint::from_blocks(&[0.4], &[2.0]).unwrap();
        assert_eq!(same.sample_variance(&w).unwrap(), 0.0);

        // gradients g + Δ and g − Δ
        let delta = [0.5, -2.0];
        let pair = BlockQuadratic::new(
            layout,
            1.0,
            1.0,
            vec![vec![-delta[0], -delta[1]], vec![delta[0], delta[1]]],
        )
        .unwrap();
        let v = pair.sample_variance(&w).unwrap();
        assert!((v - norm_sq(&delta)).abs() < 1e-14);
    }

    #[test]
    fn block_quadratic_variance_matches_weighted_center_variance() {
        let mut rng = RngStream::new(20, 0);
        let layout = BlockLayout::new(3, 2).unwrap();
        let obj = BlockQuadratic::random(layout, 7, 4.0, 0.5, 1.5, &mut rng).unwrap();
        let w = HybridPoint::new(layout, rng.sample_gaussian(5).unwrap()).unwrap();
        // brute force from the definition with explicit gradients A(w - c_i)
        let centers = obj.centers();
        let mean = mean_row(centers);
        let mut expected = 0.0;
        for c in centers {
            for j in 0..5 {
                let a = obj.curvature(j);
                expected += (a * (mean[j] - c[j])).powi(2);
            }
        }
        expected /= centers.len() as f64;
        let got = obj.sample_variance(&w).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected);
    }
}
