use super::quadratic::gaussian_rows;
use super::{check_rows, FiniteSumObjective};
use crate::error::Result;
use crate::point::BlockLayout;
use crate::rng::RngStream;

/// `f(w; i) = Σ_j cosh(w_j − s_{i,j})`.
///
/// Per coordinate `f'' = cosh ≤ 1 + |sinh| = 1 + |f'|`, so every single
/// sample has curvature bounded by `1 + ‖∇f‖` while the curvature itself is
/// unbounded: generalized smooth but not globally L-smooth. For `n > 1`
/// with distinct shifts the averaged objective only satisfies the envelope
/// up to the factor `cosh` of the shift spread.
#[derive(Debug, Clone)]
pub struct CoshObjective {
    layout: BlockLayout,
    shifts: Vec<Vec<f64>>,
}

impl CoshObjective {
    pub fn new(layout: BlockLayout, shifts: Vec<Vec<f64>>) -> Result<Self> {
        check_rows(&shifts, layout.dim(), "cosh shifts")?;
        Ok(Self { layout, shifts })
    }

    /// Shifts drawn as `spread · N(0, I)`.
    pub fn random(layout: BlockLayout, n: usize, spread: f64, rng: &mut RngStream) -> Result<Self> {
        Self::new(layout, gaussian_rows(n, layout.dim(), spread, rng)?)
    }

    pub fn shifts(&self) -> &[Vec<f64>] {
        &self.shifts
    }
}

impl FiniteSumObjective for CoshObjective {
    fn layout(&self) -> BlockLayout {
        self.layout
    }

    fn n_samples(&self) -> usize {
        self.shifts.len()
    }

    fn sample_value(&self, w: &[f64], i: usize) -> f64 {
        w.iter().zip(&self.shifts[i]).map(|(a, s)| (a - s).cosh()).sum()
    }

    fn sample_gradient(&self, w: &[f64], i: usize, out: &mut [f64]) {
        for ((o, a), s) in out.iter_mut().zip(w).zip(&self.shifts[i]) {
            *o = (a - s).sinh();
        }
    }

    fn optimal_value_bound(&self) -> f64 {
        if self.shifts.len() == 1 {
            return self.layout.dim() as f64;
        }
        // Per coordinate the average of cosh(w - s_i) is minimized where the
        // average of sinh(w - s_i) vanishes; solve that monotone equation.
        (0..self.layout.dim())
            .map(|j| {
                let column: Vec<f64> = self.shifts.iter().map(|s| s[j]).collect();
                let mean_sinh = |t: f64| column.iter().map(|s| (t - s).sinh()).sum::<f64>() / column.len() as f64;
                let (mut lo, mut hi) = column
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| (l.min(s), h.max(s)));
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mean_sinh(mid) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let t = 0.5 * (lo + hi);
                column.iter().map(|s| (t - s).cosh()).sum::<f64>() / column.len() as f64
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::HybridPoint;

    #[test]
    fn value_at_shift_is_dimension() {
        let layout = BlockLayout::new(2, 3).unwrap();
        let s = vec![0.5, -1.0, 2.0, 0.0, 0.25];
        let obj = CoshObjective::new(layout, vec![s.clone()]).unwrap();
        let w = HybridPoint::new(layout, s).unwrap();
        assert_eq!(obj.eval_sample(&w, 0).unwrap(), 5.0);
        assert!(obj.grad_sample(&w, 0).unwrap().iter().all(|&g| g == 0.0));
        assert_eq!(obj.optimal_value_bound(), 5.0);
    }

    #[test]
    fn multi_sample_minimum_matches_scan() {
        let layout = BlockLayout::new(1, 1).unwrap();
        let obj = CoshObjective::new(layout, vec![vec![-1.0, 0.0], vec![2.0, 0.5]]).unwrap();
        let best = obj.optimal_value_bound();
        let mut scan = f64::INFINITY;
        for a in -300..=300 {
            for b in -100..=100 {
                let w = [a as f64 * 0.01, b as f64 * 0.01];
                scan = scan.min(obj.full_value(&w));
            }
        }
        assert!(best <= scan + 1e-12);
        assert!(scan - best < 1e-3);
    }
}
