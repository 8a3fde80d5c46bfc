//! JSON objective descriptions.
//!
//! Every description carries `kind`, `d_x`, `d_y` and `n`. Data is either
//! given explicitly or generated from `seed` on the stream
//! [`DATA_STREAM`](super::DATA_STREAM):
//!
//! ```json
//! {"kind": "block_quadratic", "d_x": 10, "d_y": 10, "n": 20,
//!  "a_x": 100.0, "a_y": 1.0, "seed": 7, "spread": 1.0}
//! {"kind": "block_quadratic", "d_x": 1, "d_y": 1, "n": 2,
//!  "a_x": 1.0, "a_y": 1.0, "centers": [[0, 0], [1, 1]]}
//! {"kind": "dense_quadratic", "d_x": 3, "d_y": 3, "n": 4, "seed": 1,
//!  "hessian": [[...], ...], "centers": [[...], ...]}
//! {"kind": "cosh", "d_x": 2, "d_y": 2, "n": 1, "seed": 3, "spread": 0.5}
//! {"kind": "logistic", "d_x": 4, "d_y": 2, "n": 50, "seed": 9, "lambda": 0.01}
//! {"kind": "linear", "d_x": 5, "d_y": 1, "n": 1, "slopes": [[1, 2, 3, 4, 5, 0]]}
//! ```
//!
//! Generation rules: centers, shifts and slopes are `spread · N(0, I)`
//! (`spread` defaults to 1; a `center` field instead gives all samples the
//! same center); a dense Hessian is `B Bᵀ / d` with Gaussian `B`; logistic
//! features are `N(0, I)` with labels from a planted direction plus unit noise.

use serde::{Deserialize, Serialize};

use super::{
    BlockQuadratic, CoshObjective, DenseQuadratic, FiniteSumObjective, LinearObjective, LogisticObjective, DATA_STREAM,
};
use crate::error::{Error, Result};
use crate::point::BlockLayout;
use crate::rng::RngStream;

fn default_spread() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    BlockQuadratic {
        d_x: usize,
        d_y: usize,
        n: usize,
        a_x: f64,
        a_y: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        centers: Option<Vec<Vec<f64>>>,
    },
    DenseQuadratic {
        d_x: usize,
        d_y: usize,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hessian: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        centers: Option<Vec<Vec<f64>>>,
    },
    Cosh {
        d_x: usize,
        d_y: usize,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shifts: Option<Vec<Vec<f64>>>,
    },
    Logistic {
        d_x: usize,
        d_y: usize,
        n: usize,
        #[serde(default)]
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<f64>>,
    },
    Linear {
        d_x: usize,
        d_y: usize,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slopes: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offsets: Option<Vec<f64>>,
    },
}

impl ObjectiveSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("objective spec: {e}")))
    }

    pub fn layout(&self) -> Result<BlockLayout> {
        let (d_x, d_y) = match self {
            ObjectiveSpec::BlockQuadratic { d_x, d_y, .. }
            | ObjectiveSpec::DenseQuadratic { d_x, d_y, .. }
            | ObjectiveSpec::Cosh { d_x, d_y, .. }
            | ObjectiveSpec::Logistic { d_x, d_y, .. }
            | ObjectiveSpec::Linear { d_x, d_y, .. } => (*d_x, *d_y),
        };
        BlockLayout::new(d_x, d_y)
    }

    pub fn n(&self) -> usize {
        match self {
            ObjectiveSpec::BlockQuadratic { n, .. }
            | ObjectiveSpec::DenseQuadratic { n, .. }
            | ObjectiveSpec::Cosh { n, .. }
            | ObjectiveSpec::Logistic { n, .. }
            | ObjectiveSpec::Linear { n, .. } => *n,
        }
    }

    /// Materializes the objective, generating missing data from `seed`.
    pub fn build(&self) -> Result<Box<dyn FiniteSumObjective>> {
        let layout = self.layout()?;
        let n = self.n();
        if n == 0 {
            return Err(Error::invalid("objective needs n >= 1"));
        }
        let rng = |seed: &Option<u64>| -> Result<RngStream> {
            seed.map(|s| RngStream::new(s, DATA_STREAM))
                .ok_or_else(|| Error::invalid("objective data must be given explicitly or via `seed`"))
        };
        let check_n = |got: usize| -> Result<()> {
            if got != n {
                return Err(Error::DimensionMismatch {
                    context: "objective sample count",
                    expected: n,
                    got,
                });
            }
            Ok(())
        };
        Ok(match self {
            ObjectiveSpec::BlockQuadratic {
                a_x,
                a_y,
                seed,
                spread,
                center,
                centers,
                ..
            } => match (centers, center) {
                (Some(c), _) => {
                    check_n(c.len())?;
                    Box::new(BlockQuadratic::new(layout, *a_x, *a_y, c.clone())?)
                }
                (None, Some(c)) => Box::new(BlockQuadratic::identical(layout, n, *a_x, *a_y, c.clone())?),
                (None, None) => Box::new(BlockQuadratic::random(layout, n, *a_x, *a_y, *spread, &mut rng(seed)?)?),
            },
            ObjectiveSpec::DenseQuadratic {
                seed,
                spread,
                hessian,
                centers,
                ..
            } => match (hessian, centers) {
                (Some(h), Some(c)) => {
                    check_n(c.len())?;
                    Box::new(DenseQuadratic::new(layout, h.clone(), c.clone())?)
                }
                (None, None) => Box::new(DenseQuadratic::random(layout, n, *spread, &mut rng(seed)?)?),
                _ => {
                    return Err(Error::invalid(
                        "dense_quadratic needs both `hessian` and `centers`, or neither",
                    ))
                }
            },
            ObjectiveSpec::Cosh {
                seed, spread, shifts, ..
            } => match shifts {
                Some(s) => {
                    check_n(s.len())?;
                    Box::new(CoshObjective::new(layout, s.clone())?)
                }
                None => Box::new(CoshObjective::random(layout, n, *spread, &mut rng(seed)?)?),
            },
            ObjectiveSpec::Logistic {
                lambda,
                seed,
                features,
                labels,
                ..
            } => match (features, labels) {
                (Some(z), Some(b)) => {
                    check_n(z.len())?;
                    Box::new(LogisticObjective::new(layout, z.clone(), b.clone(), *lambda)?)
                }
                (None, None) => Box::new(LogisticObjective::random(layout, n, *lambda, &mut rng(seed)?)?),
                _ => {
                    return Err(Error::invalid(
                        "logistic needs both `features` and `labels`, or neither",
                    ))
                }
            },
            ObjectiveSpec::Linear {
                seed,
                spread,
                slopes,
                offsets,
                ..
            } => match slopes {
                Some(s) => {
                    check_n(s.len())?;
                    let b = offsets.clone().unwrap_or_else(|| vec![0.0; n]);
                    Box::new(LinearObjective::new(layout, s.clone(), b)?)
                }
                None => Box::new(LinearObjective::random(layout, n, *spread, &mut rng(seed)?)?),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::HybridPoint;

    #[test]
    fn seeded_specs_are_reproducible() {
        let text = r#"{"kind": "block_quadratic", "d_x": 3, "d_y": 2, "n": 4,
                       "a_x": 10.0, "a_y": 1.0, "seed": 5}"#;
        let spec = ObjectiveSpec::from_json(text).unwrap();
        let a = spec.build().unwrap();
        let b = spec.build().unwrap();
        let w = HybridPoint::new(spec.layout().unwrap(), vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        assert_eq!(a.eval_full(&w).unwrap(), b.eval_full(&w).unwrap());
        assert_eq!(a.n_samples(), 4);
    }

    #[test]
    fn explicit_data_is_used_verbatim() {
        let text = r#"{"kind": "linear", "d_x": 2, "d_y": 1, "n": 1, "slopes": [[1, 2, 0]]}"#;
        let obj = ObjectiveSpec::from_json(text).unwrap().build().unwrap();
        let w = HybridPoint::from_blocks(&[1.0, 1.0], &[5.0]).unwrap();
        assert_eq!(obj.eval_full(&w).unwrap(), 3.0);
    }

    #[test]
    fn malformed_specs_are_rejected() {
        assert!(ObjectiveSpec::from_json(r#"{"kind": "nope"}"#).is_err());
        assert!(ObjectiveSpec::from_json(r#"{"kind": "cosh", "d_x": 1, "d_y": 1, "n": 1, "bogus": 1}"#).is_err());
        // no seed and no data
        let spec = ObjectiveSpec::from_json(r#"{"kind": "cosh", "d_x": 1, "d_y": 1, "n": 1}"#).unwrap();
        assert!(spec.build().is_err());
        // count mismatch
        let spec =
            ObjectiveSpec::from_json(r#"{"kind": "cosh", "d_x": 1, "d_y": 1, "n": 2, "shifts": [[0, 0]]}"#).unwrap();
        assert!(spec.build().is_err());
        let spec = ObjectiveSpec::from_json(r#"{"kind": "cosh", "d_x": 0, "d_y": 1, "n": 1, "seed": 1}"#).unwrap();
        assert!(spec.build().is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let spec = ObjectiveSpec::Logistic {
            d_x: 2,
            d_y: 2,
            n: 3,
            lambda: 0.5,
            seed: Some(1),
            features: None,
            labels: None,
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(ObjectiveSpec::from_json(&text).unwrap(), spec);
    }
}
