//! Class-conditional label flips and the affine link between the clean and
//! corrupted regression functions.

use rand::Rng;

use crate::error::Result;
use crate::knn::NoiseRates;
use crate::rng::{rng_from_seed, Rng as StreamRng};

/// A label-flip channel: a true label `y` is flipped with probability `p_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChannel {
    pub rates: NoiseRates,
    pub seed: u64,
}

impl NoiseChannel {
    pub fn new(rates: NoiseRates, seed: u64) -> Result<Self> {
        rates.validate_channel()?;
        Ok(NoiseChannel { rates, seed })
    }

    /// Flips labels using a fresh stream from the channel's seed.
    pub fn corrupt(&self, labels: &[u8]) -> Vec<u8> {
        let mut rng = rng_from_seed(self.seed);
        corrupt_with(labels, self.rates, &mut rng)
    }
}

/// Consumes exactly one uniform draw per label, in order; label `y` flips
/// when the draw is below `p_y`.
pub fn corrupt_with(labels: &[u8], rates: NoiseRates, rng: &mut StreamRng) -> Vec<u8> {
    labels
        .iter()
        .map(|&y| {
            let p = if y == 0 { rates.p0 } else { rates.p1 };
            let u: f64 = rng.gen();
            if u < p {
                1 - y.min(1)
            } else {
                y
            }
        })
        .collect()
}

pub fn corrupt_labels(labels: &[u8], channel: &NoiseChannel) -> Vec<u8> {
    channel.corrupt(labels)
}

/// `(1 - p0 - p1) * eta + p0`.
pub fn corrupt_regression(eta: f64, rates: NoiseRates) -> f64 {
    rates.denominator() * eta + rates.p0
}

/// `(eta_corr - p0) / (1 - p0 - p1)`.
pub fn invert_regression(eta_corr: f64, rates: NoiseRates) -> Result<f64> {
    rates.validate_channel()?;
    Ok((eta_corr - rates.p0) / rates.denominator())
}
