//! Sharded Monte Carlo estimation with reproducible per-shard streams.
//!
//! Every shard owns a `ChaCha8Rng` seeded from the run seed and selected by
//! stream index, so the estimate depends only on `(seed, shards, samples)`
//! and not on the number of worker threads.  Shard accumulators are merged in
//! shard order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::Vec3;

pub type McRng = ChaCha8Rng;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Estimate {
        Estimate {
            mean: value,
            std_err: 0.0,
            samples: 0,
        }
    }

    pub fn scaled(self, factor: f64) -> Estimate {
        Estimate {
            mean: self.mean * factor,
            std_err: self.std_err * factor.abs(),
            samples: self.samples,
        }
    }

    /// `|self − other| ≤ k·√(σ₁² + σ₂²) + slack`.
    pub fn agrees_with(&self, other: &Estimate, k: f64, slack: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.std_err.hypot(other.std_err) + slack
    }

    /// Deviation in units of the combined standard error.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let s = self.std_err.hypot(other.std_err);
        let d = (self.mean - other.mean).abs();
        if s > 0.0 {
            d / s
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Stratification of the sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stratification {
    #[default]
    None,
    /// The uniform variate behind the post-collision energy is stratified
    /// within each shard.  The reported error uses the unstratified formula
    /// and is therefore conservative.
    ByEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMode {
    #[default]
    StdError,
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub samples: u64,
    pub seed: u64,
    pub shards: u32,
    pub stratification: Stratification,
    pub error_mode: ErrorMode,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            samples: 100_000,
            seed: 7,
            shards: 16,
            stratification: Stratification::None,
            error_mode: ErrorMode::StdError,
        }
    }
}

impl MonteCarloConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        MonteCarloConfig {
            samples,
            seed,
            ..Default::default()
        }
    }

    pub fn with_samples(mut self, samples: u64) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(argument("Monte Carlo needs at least one sample"));
        }
        if self.shards == 0 {
            return Err(argument("Monte Carlo needs at least one shard"));
        }
        Ok(())
    }

    /// Derive an independent configuration for a sub-task.
    pub fn derived(&self, salt: u64) -> Self {
        let mut c = *self;
        c.seed = splitmix(self.seed ^ splitmix(salt));
        c
    }

    fn shard_sizes(&self) -> Vec<u64> {
        let shards = self.shards.max(1) as u64;
        let base = self.samples / shards;
        let extra = self.samples % shards;
        (0..shards).map(|k| base + u64::from(k < extra)).collect()
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Context handed to the per-sample closure.
pub struct Draw<'a> {
    pub rng: &'a mut McRng,
    /// Index of this sample inside its shard and the shard size, for
    /// stratified designs.
    pub index: u64,
    pub count: u64,
    pub stratify: bool,
}

impl Draw<'_> {
    /// A uniform variate on `[0, 1)`, stratified across the shard when the
    /// configuration asks for it.
    pub fn stratified_uniform(&mut self) -> f64 {
        let u: f64 = self.rng.random();
        if self.stratify && self.count > 0 {
            (self.index as f64 + u) / self.count as f64
        } else {
            u
        }
    }
}

/// Welford accumulator over `N` components, mergeable with Chan's formula.
#[derive(Debug, Clone, Copy)]
struct Moments<const N: usize> {
    n: u64,
    mean: [f64; N],
    m2: [f64; N],
}

impl<const N: usize> Moments<N> {
    fn new() -> Self {
        Moments {
            n: 0,
            mean: [0.0; N],
            m2: [0.0; N],
        }
    }

    fn add(&mut self, x: &[f64; N]) {
        self.n += 1;
        let n = self.n as f64;
        for ((xk, mean), m2) in x.iter().zip(&mut self.mean).zip(&mut self.m2) {
            let d = xk - *mean;
            *mean += d / n;
            *m2 += d * (xk - *mean);
        }
    }

    fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for k in 0..N {
            let d = other.mean[k] - self.mean[k];
            self.mean[k] += d * nb / n;
            self.m2[k] += other.m2[k] + d * d * na * nb / n;
        }
        self.n += other.n;
    }

    fn estimates(&self) -> [Estimate; N] {
        std::array::from_fn(|k| {
            let n = self.n as f64;
            let var = if self.n > 1 { self.m2[k] / (n - 1.0) } else { 0.0 };
            Estimate {
                mean: self.mean[k],
                std_err: (var / n).sqrt(),
                samples: self.n,
            }
        })
    }
}

/// Estimate the means of `N` jointly sampled quantities.
pub fn estimate_vec<const N: usize, F>(config: &MonteCarloConfig, sample: F) -> Result<[Estimate; N]>
where
    F: Fn(&mut Draw<'_>) -> [f64; N] + Sync,
{
    config.validate()?;
    let sizes = config.shard_sizes();
    let stratify = config.stratification == Stratification::ByEnergy;
    let partials: Vec<Moments<N>> = sizes
        .par_iter()
        .enumerate()
        .map(|(shard, &count)| {
            let mut rng = McRng::seed_from_u64(config.seed);
            rng.set_stream(shard as u64);
            let mut acc = Moments::<N>::new();
            for index in 0..count {
                let mut draw = Draw {
                    rng: &mut rng,
                    index,
                    count,
                    stratify,
                };
                let x = sample(&mut draw);
                acc.add(&x);
            }
            acc
        })
        .collect();
    let mut total = Moments::<N>::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.estimates())
}

/// Estimate the mean of one sampled quantity.
pub fn estimate<F>(config: &MonteCarloConfig, sample: F) -> Result<Estimate>
where
    F: Fn(&mut Draw<'_>) -> f64 + Sync,
{
    let [e] = estimate_vec::<1, _>(config, |d| [sample(d)])?;
    Ok(e)
}

/// Uniform point on the unit sphere from a normalised Gaussian triple.
pub fn uniform_sphere(rng: &mut impl Rng) -> Vec3 {
    loop {
        let g = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n = g.norm();
        if n > 1e-150 {
            return g / n;
        }
    }
}

/// Uniform point in the open unit ball.
pub fn uniform_ball(rng: &mut impl Rng) -> Vec3 {
    let dir = uniform_sphere(rng);
    let u: f64 = rng.random();
    dir * u.cbrt()
}

/// Isotropic Gaussian vector with per-component variance `var`.
pub fn gaussian_vec(rng: &mut impl Rng, mean: Vec3, var: f64) -> Vec3 {
    let s = var.sqrt();
    mean + Vec3::new(
        rng.sample::<f64, _>(StandardNormal) * s,
        rng.sample::<f64, _>(StandardNormal) * s,
        rng.sample::<f64, _>(StandardNormal) * s,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed_and_shards() {
        let cfg = MonteCarloConfig::new(10_000, 11);
        let f = |d: &mut Draw<'_>| d.rng.random::<f64>();
        let a = estimate(&cfg, f).unwrap();
        let b = estimate(&cfg, f).unwrap();
        assert_eq!(a, b);
        assert!((a.mean - 0.5).abs() < 4.0 * a.std_err);
        let other = estimate(&cfg.with_seed(12), f).unwrap();
        assert_ne!(a.mean, other.mean);
    }

    #[test]
    fn merge_matches_single_pass() {
        let data: Vec<[f64; 1]> = (0..1000).map(|k| [((k * 37) % 101) as f64]).collect();
        let mut whole = Moments::<1>::new();
        data.iter().for_each(|x| whole.add(x));
        let mut left = Moments::<1>::new();
        let mut right = Moments::<1>::new();
        data[..313].iter().for_each(|x| left.add(x));
        data[313..].iter().for_each(|x| right.add(x));
        left.merge(&right);
        assert!((left.mean[0] - whole.mean[0]).abs() < 1e-12);
        assert!((left.m2[0] - whole.m2[0]).abs() < 1e-8 * whole.m2[0]);
    }

    #[test]
    fn stratified_uniform_covers_strata() {
        let cfg = MonteCarloConfig {
            samples: 4000,
            shards: 4,
            stratification: Stratification::ByEnergy,
            ..Default::default()
        };
        let e = estimate(&cfg, |d| d.stratified_uniform()).unwrap();
        assert!((e.mean - 0.5).abs() < 1e-3);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(estimate(&MonteCarloConfig::new(0, 1), |_| 0.0).is_err());
    }
}
