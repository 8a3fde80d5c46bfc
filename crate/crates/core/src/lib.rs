//! Hybrid zeroth-order / first-order SGD with random reshuffling.
//!
//! Parameters are split into a large base block `x` (updated from two-point
//! Gaussian function-value estimates) and a small adapter block `y` (updated
//! from exact stochastic gradients). Besides the optimizer the crate carries
//! the machinery needed to study it on synthetic finite-sum objectives:
//!
//! - [`objectives`]: quadratic, cosh and logistic finite sums with exact gradients
//! - [`estimator`]: the two-point estimator and its Monte Carlo aggregates
//! - [`optimizer`]: reshuffled per-sample updates with block-wise rates and modes
//! - [`probe`]: Hessian-vector-product smoothness probes
//! - [`planner`]: learning-rate / perturbation / epoch-budget constraints
//! - [`oracle`]: slow, independent validators used by tests and `check`

pub mod error;
pub mod estimator;
pub mod numeric;
pub mod objectives;
pub mod optimizer;
pub mod oracle;
pub mod planner;
pub mod point;
pub mod probe;
pub mod rng;

pub use error::{Error, Result};
pub use point::{Block, BlockLayout, HybridPoint};
pub use rng::RngStream;
