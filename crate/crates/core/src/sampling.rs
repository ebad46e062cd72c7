//! Deterministic Gaussian draws split into independently seeded batches.
//!
//! Batch `b` of a run with seed `s` always reads the ChaCha8 stream `b` of
//! key `s`, so batches can be evaluated in any order (or in parallel) and
//! still give bit-identical estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussianDrawConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub batch_count: usize,
}

impl Default for GaussianDrawConfig {
    fn default() -> Self {
        Self { seed: 0, n_samples: 4000, batch_count: 20 }
    }
}

impl GaussianDrawConfig {
    pub fn new(seed: u64, n_samples: usize, batch_count: usize) -> Result<Self> {
        let cfg = Self { seed, n_samples, batch_count };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_count < 2 {
            return invalid("batch_count must be at least 2");
        }
        if self.n_samples < 10 * self.batch_count {
            return invalid(format!(
                "n_samples = {} must be at least 10 * batch_count = {}",
                self.n_samples,
                10 * self.batch_count
            ));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Sizes of the batches; the remainder goes to the leading batches.
    pub fn batch_sizes(&self) -> Vec<usize> {
        let base = self.n_samples / self.batch_count;
        let extra = self.n_samples % self.batch_count;
        (0..self.batch_count).map(|b| base + usize::from(b < extra)).collect()
    }

    pub fn batch_rng(&self, batch: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(batch as u64);
        rng
    }

    /// Runs `sample` over every draw and returns the overall mean with the
    /// batch-means standard error.
    pub fn estimate<F>(&self, truncation: usize, sample: F) -> Result<GaussianSumEstimate<f64>>
    where
        F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
    {
        self.validate()?;
        let sizes = self.batch_sizes();
        let batch_means: Vec<f64> = sizes
            .par_iter()
            .enumerate()
            .map(|(b, &size)| {
                let mut rng = self.batch_rng(b);
                let mut acc = 0.0;
                for _ in 0..size {
                    acc += sample(&mut rng);
                }
                acc / size as f64
            })
            .collect();
        Ok(GaussianSumEstimate::from_batches(&batch_means, &sizes, truncation))
    }
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn rademacher(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Estimate of a Gaussian second moment `E‖Σ γ_k v_k‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSumEstimate<T> {
    pub mean: T,
    /// Standard deviation of the batch means over `√batch_count`; zero on
    /// exact paths.
    pub std_error: T,
    /// Zero when the value was computed in closed form.
    pub n_samples: usize,
    pub truncation: usize,
}

impl<T: Real> GaussianSumEstimate<T> {
    pub fn exact(value: T, truncation: usize) -> Self {
        Self { mean: value, std_error: T::zero(), n_samples: 0, truncation }
    }

    pub fn is_exact(&self) -> bool {
        self.n_samples == 0
    }

    /// Whether `x` lies within `k` standard errors (exact paths use a
    /// relative `1e-12` window instead).
    pub fn agrees_with(&self, x: T, k: T) -> bool {
        let gap = (self.mean - x).abs();
        if self.is_exact() {
            gap <= T::lit(1e-12) * x.abs().max(T::one())
        } else {
            gap <= k * self.std_error
        }
    }

    pub fn cast<U: Real>(&self) -> GaussianSumEstimate<U> {
        GaussianSumEstimate {
            mean: U::lit(self.mean.as_f64()),
            std_error: U::lit(self.std_error.as_f64()),
            n_samples: self.n_samples,
            truncation: self.truncation,
        }
    }
}

impl GaussianSumEstimate<f64> {
    fn from_batches(means: &[f64], sizes: &[usize], truncation: usize) -> Self {
        let total: usize = sizes.iter().sum();
        let mean = means.iter().zip(sizes).map(|(m, &s)| m * s as f64).sum::<f64>() / total as f64;
        let b = means.len() as f64;
        let avg = means.iter().sum::<f64>() / b;
        let var = means.iter().map(|m| (m - avg).powi(2)).sum::<f64>() / (b - 1.0);
        Self { mean, std_error: (var / b).sqrt(), n_samples: total, truncation }
    }
}
