//! Extrapolation benchmark for regression models.
//!
//! Samples `f(x) = exp(x^2 + x)` on `[0, 1]`, trains on `x < 0.7` and scores
//! every model on `x >= 0.7`. The model zoo covers linear baselines, CART
//! ensembles, distance-weighted KNN and a two-hidden-layer ReLU network, plus
//! the random-search / successive-halving / Hyperband tuners used to pick
//! their hyperparameters.
//!
//! ```
//! use extrap_core::dataset::{SplitSpec, TargetFunction};
//! use extrap_core::metrics::gap_row;
//! use extrap_core::tree::{fit_tree, TreeConfig};
//!
//! let data = SplitSpec::default().build(&TargetFunction::exp_growth()).unwrap();
//! let tree = fit_tree(data.train.xs.view(), data.train.ys.view(), &TreeConfig::default(), None);
//! let row = gap_row(
//!     "tree",
//!     data.train.ys.as_slice().unwrap(),
//!     &tree.predict(data.train.xs.view()),
//!     data.test.ys.as_slice().unwrap(),
//!     &tree.predict(data.test.xs.view()),
//! )
//! .unwrap();
//! assert!(row.linf_test > 4.0);
//! ```

pub mod dataset;
pub mod error;
pub mod harness;
pub mod knn;
pub mod linear;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod tree;
pub mod tuning;

pub use error::{Error, Result};
