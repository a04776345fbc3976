//! kNN classification under unknown class-conditional label noise.
//!
//! The robust classifier estimates the corrupted regression function with a
//! k-nearest-neighbour average, recovers the two flip probabilities from its
//! empirical extrema over the training points, and thresholds the estimate
//! at `(1 + p0_hat - p1_hat) / 2`. Alongside it the crate ships closed-form
//! finite-sample bounds, synthetic distributions with exactly computable
//! risks, and a Monte Carlo harness that checks the bounds empirically.
//!
//! ```
//! use noisyknn::harness::corrupted_sample;
//! use noisyknn::synthetic::{Distribution, SyntheticDistribution};
//! use noisyknn::{Metric, NoiseRates, RobustKnnModel};
//!
//! let dist = SyntheticDistribution::three_piece_example(0.1, 0.3)?;
//! let data = corrupted_sample(&Distribution::Exact(dist.clone()), NoiseRates::new(0.1, 0.3)?, 20_000, 7)?;
//! let model = RobustKnnModel::fit(data.to_sample(), 500, Metric::Euclidean)?;
//! let step = model.regressor().line_partition().unwrap();
//! assert!(dist.excess_risk_of_step(&step, model.threshold()) < 0.01);
//! # Ok::<(), noisyknn::Error>(())
//! ```

pub mod bounds;
pub mod data;
pub mod error;
pub mod harness;
mod kdtree;
pub mod knn;
pub mod nn_index;
pub mod noise;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
pub use knn::{KnnRegressor, NoiseRates, RegressionSample, RobustKnnModel};
pub use nn_index::{Index, Metric, NeighborList, PointSet};
pub use noise::NoiseChannel;
pub use synthetic::SyntheticDistribution;
