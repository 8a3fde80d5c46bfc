use super::{check_rows, mean_row, FiniteSumObjective};
use crate::error::{Error, Result};
use crate::point::BlockLayout;
use crate::rng::RngStream;

/// `f(w; i) = ½ (w − c_i)ᵀ A (w − c_i)` with `A = diag(a_x I, a_y I)`.
///
/// Every per-sample Hessian equals `A`; the minimizer of the sum is the mean
/// of the centers.
#[derive(Debug, Clone)]
pub struct BlockQuadratic {
    layout: BlockLayout,
    a_x: f64,
    a_y: f64,
    centers: Vec<Vec<f64>>,
}

impl BlockQuadratic {
    pub fn new(layout: BlockLayout, a_x: f64, a_y: f64, centers: Vec<Vec<f64>>) -> Result<Self> {
        if !(a_x > 0.0 && a_y > 0.0 && a_x.is_finite() && a_y.is_finite()) {
            return Err(Error::invalid(format!(
                "block curvatures must be positive and finite (a_x = {a_x}, a_y = {a_y})"
            )));
        }
        check_rows(&centers, layout.dim(), "quadratic centers")?;
        Ok(Self {
            layout,
            a_x,
            a_y,
            centers,
        })
    }

    /// `n` copies of the same center.
    pub fn identical(layout: BlockLayout, n: usize, a_x: f64, a_y: f64, center: Vec<f64>) -> Result<Self> {
        Self::new(layout, a_x, a_y, vec![center; n])
    }

    /// Centers drawn as `spread · N(0, I)`.
    pub fn random(layout: BlockLayout, n: usize, a_x: f64, a_y: f64, spread: f64, rng: &mut RngStream) -> Result<Self> {
        let centers = gaussian_rows(n, layout.dim(), spread, rng)?;
        Self::new(layout, a_x, a_y, centers)
    }

    pub fn a_x(&self) -> f64 {
        self.a_x
    }

    pub fn a_y(&self) -> f64 {
        self.a_y
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn mean_center(&self) -> Vec<f64> {
        mean_row(&self.centers)
    }

    /// Diagonal Hessian entry for coordinate `j`.
    pub fn curvature(&self, j: usize) -> f64 {
        if j < self.layout.d_x() {
            self.a_x
        } else {
            self.a_y
        }
    }
}

impl FiniteSumObjective for BlockQuadratic {
    fn layout(&self) -> BlockLayout {
        self.layout
    }

    fn n_samples(&self) -> usize {
        self.centers.len()
    }

    fn sample_value(&self, w: &[f64], i: usize) -> f64 {
        0.5 * w
            .iter()
            .zip(&self.centers[i])
            .enumerate()
            .map(|(j, (wj, cj))| self.curvature(j) * (wj - cj) * (wj - cj))
            .sum::<f64>()
    }

    fn sample_gradient(&self, w: &[f64], i: usize, out: &mut [f64]) {
        for (j, ((o, wj), cj)) in out.iter_mut().zip(w).zip(&self.centers[i]).enumerate() {
            *o = self.curvature(j) * (wj - cj);
        }
    }

    fn optimal_value_bound(&self) -> f64 {
        self.full_value(&self.mean_center())
    }
}

/// `f(w; i) = ½ (w − c_i)ᵀ H (w − c_i)` with a dense symmetric `H`.
#[derive(Debug, Clone)]
pub struct DenseQuadratic {
    layout: BlockLayout,
    /// Row-major `d × d`.
    hessian: Vec<f64>,
    centers: Vec<Vec<f64>>,
}

impl DenseQuadratic {
    pub fn new(layout: BlockLayout, hessian: Vec<Vec<f64>>, centers: Vec<Vec<f64>>) -> Result<Self> {
        let d = layout.dim();
        if hessian.len() != d {
            return Err(Error::DimensionMismatch {
                context: "dense Hessian rows",
                expected: d,
                got: hessian.len(),
            });
        }
        check_rows(&hessian, d, "dense Hessian")?;
        for (r, row) in hessian.iter().enumerate() {
            for (c, &a) in row.iter().enumerate().take(r) {
                let b = hessian[c][r];
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::invalid(format!("dense Hessian is not symmetric at ({r}, {c})")));
                }
            }
        }
        check_rows(&centers, d, "quadratic centers")?;
        Ok(Self {
            layout,
            hessian: hessian.into_iter().flatten().collect(),
            centers,
        })
    }

    /// `H = B Bᵀ / d` with Gaussian `B` (positive semidefinite), centers `spread · N(0, I)`.
    pub fn random(layout: BlockLayout, n: usize, spread: f64, rng: &mut RngStream) -> Result<Self> {
        let d = layout.dim();
        let b = gaussian_rows(d, d, 1.0, rng)?;
        let hessian = (0..d)
            .map(|r| {
                (0..d)
                    .map(|c| (0..d).map(|k| b[r][k] * b[c][k]).sum::<f64>() / d as f64)
                    .collect()
            })
            .collect();
        let centers = gaussian_rows(n, d, spread, rng)?;
        Self::new(layout, hessian, centers)
    }

    pub fn hessian_entry(&self, r: usize, c: usize) -> f64 {
        self.hessian[r * self.layout.dim() + c]
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let d = self.layout.dim();
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.hessian[r * d..(r + 1) * d].iter().zip(v).map(|(h, x)| h * x).sum();
        }
    }
}

impl FiniteSumObjective for DenseQuadratic {
    fn layout(&self) -> BlockLayout {
        self.layout
    }

    fn n_samples(&self) -> usize {
        self.centers.len()
    }

    fn sample_value(&self, w: &[f64], i: usize) -> f64 {
        let diff: Vec<f64> = w.iter().zip(&self.centers[i]).map(|(a, b)| a - b).collect();
        let mut hd = vec![0.0; diff.len()];
        self.apply(&diff, &mut hd);
        0.5 * diff.iter().zip(&hd).map(|(a, b)| a * b).sum::<f64>()
    }

    fn sample_gradient(&self, w: &[f64], i: usize, out: &mut [f64]) {
        let diff: Vec<f64> = w.iter().zip(&self.centers[i]).map(|(a, b)| a - b).collect();
        self.apply(&diff, out);
    }

    fn optimal_value_bound(&self) -> f64 {
        // For PSD H the minimum is attained at the mean center, otherwise
        // the sum is unbounded below.
        let d = self.layout.dim();
        let h = nalgebra::DMatrix::from_row_slice(d, d, &self.hessian);
        let min_eig = h.symmetric_eigenvalues().min();
        if min_eig < -1e-12 * h.norm().max(1.0) {
            f64::NEG_INFINITY
        } else {
            self.full_value(&mean_row(&self.centers))
        }
    }
}

pub(crate) fn gaussian_rows(rows: usize, dim: usize, scale: f64, rng: &mut RngStream) -> Result<Vec<Vec<f64>>> {
    if rows == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    (0..rows)
        .map(|_| {
            rng.sample_gaussian(dim)
                .map(|v| v.into_iter().map(|x| scale * x).collect())
        })
        .collect()
}
