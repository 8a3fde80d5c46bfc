//! Admissible learning rates, perturbation size and epoch budget for the
//! hybrid method, given smoothness constants.
//!
//! With `d = d_x`:
//!
//! ```text
//! η_x ≤ min{ 1/(2 L_x,max n), 1/(384 L_x n d), √(2/T) / (σ n L_x,max) }
//! η_y ≤ min{ 1/(2 L_y,max n), √(2/T) / (σ n L_y,max) }
//! μ   ≤ min{ (G/L_x) · 6/d^{3/2}, 1/(3 L_x T n d G) }
//! T   ≥ ε⁻² [2/δ + G²/8] + ε⁻⁴ [(f₀ − f* + 3)/n]
//! ```
//!
//! The planner returns the right-hand minima themselves. When `σ = 0` the
//! `√(2/T)` terms are unbounded and dropped from their minimum.
//!
//! Constants from [`estimate_constants`] are probe measurements at finitely
//! many points, not certified bounds, so rates planned from them are
//! heuristic. Analytically known constants (quadratics, the logistic
//! bound) give exact plans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::norm;
use crate::objectives::FiniteSumObjective;
use crate::point::HybridPoint;
use crate::probe::{estimate_block_lipschitz, estimate_sample_block_lipschitz, ProbeConfig, ProbeTarget};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothnessConstants {
    /// Block Lipschitz constants of the full objective.
    pub l_x: f64,
    pub l_y: f64,
    /// Block Lipschitz constants of the individual losses.
    pub l_x_max: f64,
    pub l_y_max: f64,
    /// Gradient-norm bound.
    pub g: f64,
    /// Per-sample gradient deviation bound.
    pub sigma: f64,
    /// `f₀ − f*`.
    pub f_gap: f64,
}

impl SmoothnessConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("l_x", self.l_x),
            ("l_y", self.l_y),
            ("l_x_max", self.l_x_max),
            ("l_y_max", self.l_y_max),
            ("g", self.g),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("sigma", self.sigma), ("f_gap", self.f_gap)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be >= 0 and finite, got {v}")));
            }
        }
        if self.l_x_max < self.l_x || self.l_y_max < self.l_y {
            return Err(Error::invalid(
                "per-sample constants must dominate the full-objective ones (l_x_max >= l_x, l_y_max >= l_y)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    pub constants: SmoothnessConstants,
    pub n: usize,
    /// Epoch count `T`.
    pub epochs: usize,
    pub d_x: usize,
}

impl PlanInputs {
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        for (name, v) in [("n", self.n), ("epochs", self.epochs), ("d_x", self.d_x)] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }
}

/// One candidate right-hand side of a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term {
    pub name: &'static str,
    pub value: f64,
}

/// A `≤ min{…}` constraint with its candidates and the attaining one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound {
    pub terms: Vec<Term>,
    pub value: f64,
    pub binding: &'static str,
}

impl Bound {
    fn min_of(terms: Vec<Term>) -> Self {
        // first minimum wins on ties
        let best = terms
            .iter()
            .copied()
            .reduce(|a, b| if b.value < a.value { b } else { a })
            .expect("at least one term");
        Self {
            value: best.value,
            binding: best.name,
            terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePlan {
    pub eta_x: Bound,
    pub eta_y: Bound,
    pub mu: Bound,
}

pub fn plan_rates(inputs: &PlanInputs) -> Result<RatePlan> {
    inputs.validate()?;
    let c = &inputs.constants;
    let n = inputs.n as f64;
    let t = inputs.epochs as f64;
    let d = inputs.d_x as f64;
    let root = (2.0 / t).sqrt();
    let noise = |l_max: f64, name: &'static str| {
        (c.sigma > 0.0).then(|| Term {
            name,
            value: root / (c.sigma * n * l_max),
        })
    };

    let mut x = vec![
        Term {
            name: "1/(2 L_x_max n)",
            value: 1.0 / (2.0 * c.l_x_max * n),
        },
        Term {
            name: "1/(384 L_x n d_x)",
            value: 1.0 / (384.0 * c.l_x * n * d),
        },
    ];
    x.extend(noise(c.l_x_max, "sqrt(2/T)/(sigma n L_x_max)"));

    let mut y = vec![Term {
        name: "1/(2 L_y_max n)",
        value: 1.0 / (2.0 * c.l_y_max * n),
    }];
    y.extend(noise(c.l_y_max, "sqrt(2/T)/(sigma n L_y_max)"));

    let mu = vec![
        Term {
            name: "(G/L_x) 6/d_x^1.5",
            value: c.g / c.l_x * 6.0 / d.powf(1.5),
        },
        Term {
            name: "1/(3 L_x T n d_x G)",
            value: 1.0 / (3.0 * c.l_x * t * n * d * c.g),
        },
    ];

    Ok(RatePlan {
        eta_x: Bound::min_of(x),
        eta_y: Bound::min_of(y),
        mu: Bound::min_of(mu),
    })
}

/// The two additive terms of the epoch requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochBudget {
    /// `ε⁻² [2/δ + G²/8]`.
    pub confidence_term: f64,
    /// `ε⁻⁴ [(f₀ − f* + 3)/n]`.
    pub descent_term: f64,
    /// Ceiling of the sum.
    pub epochs: u64,
}

pub fn epoch_budget_terms(epsilon: f64, delta: f64, g: f64, f_gap: f64, n: usize) -> Result<EpochBudget> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(g >= 0.0 && g.is_finite() && f_gap >= 0.0 && f_gap.is_finite()) {
        return Err(Error::invalid("G and f_gap must be >= 0 and finite"));
    }
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let e2 = epsilon * epsilon;
    let confidence_term = (2.0 / delta + g * g / 8.0) / e2;
    let descent_term = (f_gap + 3.0) / n as f64 / (e2 * e2);
    let total = (confidence_term + descent_term).ceil();
    if !(total.is_finite() && total < u64::MAX as f64) {
        return Err(Error::invalid("epoch budget overflows"));
    }
    Ok(EpochBudget {
        confidence_term,
        descent_term,
        epochs: total as u64,
    })
}

/// Smallest integer `T` satisfying the epoch requirement.
pub fn epoch_budget(epsilon: f64, delta: f64, g: f64, f_gap: f64, n: usize) -> Result<u64> {
    epoch_budget_terms(epsilon, delta, g, f_gap, n).map(|b| b.epochs)
}

/// Probe-based constants over `points`.
///
/// `L_x`, `L_y` are the largest block operator-norm probes of the full
/// objective; `L_x_max`, `L_y_max` the largest per-sample probes (never
/// below the full-objective values); `G` the largest `‖∇f‖`; `σ` the largest
/// `√sample_variance`. `f_gap = f(points[0]) − f*` with `f*` from `f_star`
/// or, if absent, the objective's own optimal-value bound. Points are
/// processed in order, each on its own split of `rng`.
pub fn estimate_constants(
    obj: &dyn FiniteSumObjective,
    cfg: &ProbeConfig,
    points: &[HybridPoint],
    f_star: Option<f64>,
    rng: &mut RngStream,
) -> Result<SmoothnessConstants> {
    cfg.validate()?;
    let first = points
        .first()
        .ok_or_else(|| Error::invalid("constant estimation needs at least one point"))?;
    let f_star = f_star.unwrap_or_else(|| obj.optimal_value_bound());
    if !f_star.is_finite() {
        return Err(Error::invalid(
            "objective has no finite optimal value; supply f* explicitly",
        ));
    }
    let f_gap = obj.eval_full(first)? - f_star;
    if f_gap < 0.0 {
        return Err(Error::invalid(format!(
            "f* = {f_star} exceeds the value at the first point"
        )));
    }

    let mut c = SmoothnessConstants {
        l_x: 0.0,
        l_y: 0.0,
        l_x_max: 0.0,
        l_y_max: 0.0,
        g: 0.0,
        sigma: 0.0,
        f_gap,
    };
    for w in points {
        let mut local = rng.split();
        let x = cfg.with_target(ProbeTarget::X);
        let y = cfg.with_target(ProbeTarget::Y);
        c.l_x = c.l_x.max(estimate_block_lipschitz(obj, w, &x, &mut local)?.operator_lb);
        c.l_y = c.l_y.max(estimate_block_lipschitz(obj, w, &y, &mut local)?.operator_lb);
        for i in 0..obj.n_samples() {
            let rx = estimate_sample_block_lipschitz(obj, w, i, &x, &mut local)?;
            let ry = estimate_sample_block_lipschitz(obj, w, i, &y, &mut local)?;
            c.l_x_max = c.l_x_max.max(rx.operator_lb);
            c.l_y_max = c.l_y_max.max(ry.operator_lb);
        }
        c.g = c.g.max(norm(&obj.grad_full(w)?));
        c.sigma = c.sigma.max(obj.sample_variance(w)?.sqrt());
    }
    c.l_x_max = c.l_x_max.max(c.l_x);
    c.l_y_max = c.l_y_max.max(c.l_y);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{BlockQuadratic, CoshObjective};
    use crate::point::BlockLayout;
    use proptest::prelude::*;

    fn unit(sigma: f64) -> SmoothnessConstants {
        SmoothnessConstants {
            l_x: 1.0,
            l_y: 1.0,
            l_x_max: 1.0,
            l_y_max: 1.0,
            g: 1.0,
            sigma,
            f_gap: 1.0,
        }
    }

    fn inputs(constants: SmoothnessConstants, n: usize, epochs: usize, d_x: usize) -> PlanInputs {
        PlanInputs {
            constants,
            n,
            epochs,
            d_x,
        }
    }

    #[test]
    fn worked_rate_example() {
        let plan = plan_rates(&inputs(unit(1.0), 10, 100, 4)).unwrap();
        assert_eq!(plan.eta_x.value, 1.0 / 15360.0);
        assert_eq!(plan.eta_x.binding, "1/(384 L_x n d_x)");
        assert!((plan.eta_x.value - 6.5104e-5).abs() < 5e-10);
        assert_eq!(plan.eta_x.terms[0].value, 0.05);
        // √0.02 / 10
        assert!((plan.eta_y.value - 0.014_142_135_623_730_95).abs() < 1e-17);
        assert_eq!(plan.eta_y.binding, "sqrt(2/T)/(sigma n L_y_max)");
        assert_eq!(plan.mu.terms.len(), 2);
        // 1/(3·1·100·10·4·1)
        assert_eq!(plan.mu.value, 1.0 / 12000.0);
    }

    #[test]
    fn zero_sigma_drops_noise_terms() {
        let plan = plan_rates(&inputs(unit(0.0), 10, 100, 4)).unwrap();
        assert_eq!(plan.eta_x.terms.len(), 2);
        assert_eq!(plan.eta_y.terms.len(), 1);
        assert_eq!(plan.eta_y.value, 0.05);
    }

    #[test]
    fn eta_x_vanishes_with_horizon() {
        let mut last = f64::INFINITY;
        for t in [1, 10, 100, 10_000, 1_000_000, 100_000_000] {
            let eta = plan_rates(&inputs(unit(1.0), 1, t, 1)).unwrap().eta_x.value;
            assert!(eta <= last);
            last = eta;
        }
        assert!(last < 2e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(plan_rates(&inputs(unit(1.0), 0, 1, 1)).is_err());
        assert!(plan_rates(&inputs(unit(1.0), 1, 0, 1)).is_err());
        assert!(plan_rates(&inputs(unit(-1.0), 1, 1, 1)).is_err());
        let mut c = unit(1.0);
        c.l_x_max = 0.5;
        assert!(plan_rates(&inputs(c, 1, 1, 1)).is_err());
        c = unit(1.0);
        c.g = 0.0;
        assert!(plan_rates(&inputs(c, 1, 1, 1)).is_err());
    }

    #[test]
    fn worked_budget_example() {
        let b = epoch_budget_terms(0.1, 0.5, 1.0, 1.0, 10).unwrap();
        assert_eq!(b.epochs, 4413);
        assert!((b.confidence_term - 412.5).abs() < 1e-9);
        assert!((b.descent_term - 4000.0).abs() < 1e-9);
        assert_eq!(epoch_budget(0.1, 0.5, 1.0, 1.0, 10).unwrap(), 4413);
    }

    #[test]
    fn budget_scaling_and_errors() {
        let a = epoch_budget_terms(0.1, 0.5, 1.0, 1.0, 10).unwrap();
        let b = epoch_budget_terms(0.05, 0.5, 1.0, 1.0, 10).unwrap();
        assert_eq!(b.descent_term, 16.0 * a.descent_term);
        assert_eq!(b.confidence_term, 4.0 * a.confidence_term);
        for delta in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(epoch_budget(0.1, delta, 1.0, 1.0, 10).is_err());
        }
        assert!(epoch_budget(0.0, 0.5, 1.0, 1.0, 10).is_err());
        assert!(epoch_budget(0.1, 0.5, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn identical_quadratic_constants_are_exact() {
        let layout = BlockLayout::new(4, 3).unwrap();
        let obj = BlockQuadratic::identical(layout, 5, 100.0, 1.0, vec![0.0; 7]).unwrap();
        let points = vec![
            HybridPoint::zeros(layout),
            HybridPoint::new(layout, vec![0.0; 7]).unwrap(),
        ];
        let c = estimate_constants(&obj, &ProbeConfig::default(), &points, None, &mut RngStream::new(1, 0)).unwrap();
        let close = |v: f64, a: f64| (v - a).abs() <= 1e-12 * a;
        assert!(close(c.l_x, 100.0) && close(c.l_x_max, 100.0), "{c:?}");
        assert!(close(c.l_y, 1.0) && close(c.l_y_max, 1.0), "{c:?}");
        assert_eq!(c.sigma, 0.0);
        assert_eq!(c.f_gap, 0.0);
        assert_eq!(c.g, 0.0);
    }

    #[test]
    fn spread_quadratic_sigma_matches_definition() {
        let layout = BlockLayout::new(2, 2).unwrap();
        let mut rng = RngStream::new(3, 0);
        let obj = BlockQuadratic::random(layout, 6, 5.0, 2.0, 1.0, &mut rng).unwrap();
        let points: Vec<_> = (0..3)
            .map(|_| HybridPoint::new(layout, rng.sample_gaussian(4).unwrap()).unwrap())
            .collect();
        let c = estimate_constants(&obj, &ProbeConfig::default(), &points, None, &mut rng).unwrap();
        // A(w − c_i) − A(w − c̄) = −A(c_i − c̄), independent of w
        let mean = obj.mean_center();
        let expected = (obj
            .centers()
            .iter()
            .map(|ci| {
                (0..4)
                    .map(|j| (obj.curvature(j) * (ci[j] - mean[j])).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / 6.0)
            .sqrt();
        assert!((c.sigma - expected).abs() <= 1e-12 * expected);
        assert!((c.l_x - 5.0).abs() < 1e-6 && (c.l_y - 2.0).abs() < 1e-6);
        assert!(c.l_x_max >= c.l_x && c.l_y_max >= c.l_y);
    }

    #[test]
    fn cosh_constants_respect_envelope() {
        let layout = BlockLayout::new(2, 2).unwrap();
        let mut rng = RngStream::new(8, 0);
        let obj = CoshObjective::random(layout, 1, 0.5, &mut rng).unwrap();
        let points: Vec<_> = (0..5)
            .map(|_| HybridPoint::new(layout, rng.sample_gaussian(4).unwrap()).unwrap())
            .collect();
        let c = estimate_constants(&obj, &ProbeConfig::default(), &points, None, &mut rng).unwrap();
        assert!(c.l_x <= 1.0 + c.g + 1e-6);
        assert!(c.l_y <= 1.0 + c.g + 1e-6);
        assert!(c.l_x_max <= 1.0 + c.g + 1e-6);
    }

    #[test]
    fn estimate_constants_errors() {
        let layout = BlockLayout::new(1, 1).unwrap();
        let obj = BlockQuadratic::identical(layout, 2, 1.0, 1.0, vec![0.0; 2]).unwrap();
        let cfg = ProbeConfig::default();
        assert!(estimate_constants(&obj, &cfg, &[], None, &mut RngStream::new(0, 0)).is_err());
        let w = HybridPoint::zeros(layout);
        assert!(estimate_constants(&obj, &cfg, &[w], Some(1.0), &mut RngStream::new(0, 0)).is_err());
    }

    fn positive() -> std::ops::Range<f64> {
        0.01..100.0
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn rates_are_monotone(
            l_x in positive(), l_y in positive(), extra_x in 1.0f64..3.0, extra_y in 1.0f64..3.0,
            g in positive(), sigma in 0.0f64..10.0,
            n in 1usize..50, t in 1usize..10_000, d in 1usize..64, which in 0usize..8,
        ) {
            let c = SmoothnessConstants {
                l_x, l_y, l_x_max: l_x * extra_x, l_y_max: l_y * extra_y, g, sigma, f_gap: 1.0,
            };
            let base = inputs(c, n, t, d);
            let mut bumped = base;
            match which {
                0 => bumped.n += 1,
                1 => bumped.epochs += 1,
                2 => bumped.d_x += 1,
                3 => { bumped.constants.l_x *= 1.5; bumped.constants.l_x_max *= 1.5 }
                4 => { bumped.constants.l_y *= 1.5; bumped.constants.l_y_max *= 1.5 }
                5 => bumped.constants.l_x_max *= 1.5,
                6 => bumped.constants.l_y_max *= 1.5,
                _ => bumped.constants.sigma += 0.5,
            }
            let a = plan_rates(&base).unwrap();
            let b = plan_rates(&bumped).unwrap();
            prop_assert!(b.eta_x.value <= a.eta_x.value);
            prop_assert!(b.eta_y.value <= a.eta_y.value);
            prop_assert!(b.mu.value <= a.mu.value);
        }

        #[test]
        fn x_rate_is_smaller_when_x_dominates(
            l_y in positive(), ratio in 1.0f64..10.0, sigma in 0.0f64..10.0,
            n in 1usize..50, t in 1usize..10_000, d in 1usize..64,
        ) {
            let c = SmoothnessConstants {
                l_x: l_y * ratio, l_y, l_x_max: l_y * ratio, l_y_max: l_y, g: 1.0, sigma, f_gap: 0.0,
            };
            let plan = plan_rates(&inputs(c, n, t, d)).unwrap();
            prop_assert!(plan.eta_x.value <= plan.eta_y.value);
        }

        #[test]
        fn budget_covers_both_terms(
            eps in 0.01f64..1.0, delta in 0.01f64..0.99, g in 0.0f64..10.0,
            gap in 0.0f64..100.0, n in 1usize..100, d2 in 0.0f64..0.99,
        ) {
            let b = epoch_budget_terms(eps, delta, g, gap, n).unwrap();
            prop_assert!(b.epochs as f64 >= b.confidence_term + b.descent_term);
            prop_assert!((b.epochs as f64) < b.confidence_term + b.descent_term + 1.0);
            let looser = epoch_budget(eps, delta.max(d2), g, gap, n).unwrap();
            prop_assert!(looser <= b.epochs);
        }
    }
}
