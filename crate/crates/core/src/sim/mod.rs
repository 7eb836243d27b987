//! Seeded Monte Carlo: the reinforced population itself, the spine chain
//! `ζ₁, ζ₂, …`, and the multitype Yule process.
//!
//! Replica `r` draws from ChaCha8 stream `r` of the generator seeded with
//! the configured seed, so results do not depend on how replicas are spread
//! over threads. Reductions run in replica order.

mod population;
mod spine;
pub mod stats;
mod yule;

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Initial;
use crate::quadrature::CompensatedSum;

pub use population::{simulate_rgw, trajectories_csv, Trajectory};
pub use spine::simulate_spine;
pub use stats::{chi_square_geometric, ChiSquareTest};
pub use yule::{
    estimate_yule_functional, root_type_fraction, simulate_yule, variance_warning, YuleSample,
};

/// Environment variable bounding the number of worker threads.
pub const THREADS_ENV: &str = "RGW_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replicas: usize,
    pub population_cap: u64,
    pub initial: Initial,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            replicas: 10_000,
            population_cap: 1_000_000,
            initial: Initial::Law,
        }
    }
}

impl SimConfig {
    pub fn new(seed: u64, replicas: usize) -> Self {
        Self {
            seed,
            replicas,
            ..Self::default()
        }
    }

    pub fn with_initial(mut self, initial: Initial) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.population_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Domain("replicas must be at least 1".into()));
        }
        if self.population_cap == 0 {
            return Err(Error::Domain("population cap must be at least 1".into()));
        }
        Ok(())
    }
}

impl serde::Serialize for Initial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Sample mean with its standard error over the uncapped replicas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicas_used: usize,
    pub capped_fraction: f64,
}

impl Estimate {
    /// `None` entries are capped replicas.
    pub fn from_samples(samples: &[Option<f64>]) -> Result<Self> {
        let used: Vec<f64> = samples.iter().flatten().copied().collect();
        if used.is_empty() {
            return Err(Error::Domain("every replica hit the population cap".into()));
        }
        let n = used.len() as f64;
        let mean = used.iter().copied().collect::<CompensatedSum>().value() / n;
        let ss = used
            .iter()
            .map(|x| (x - mean).powi(2))
            .collect::<CompensatedSum>()
            .value();
        let std_error = if used.len() > 1 {
            (ss / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std_error,
            replicas_used: used.len(),
            capped_fraction: (samples.len() - used.len()) as f64 / samples.len() as f64,
        })
    }

    /// `|self − other| / sqrt(se₁² + se₂²)`, or `|self − value| / se` when
    /// compared with an exact value.
    pub fn z_score(&self, value: f64, value_se: f64) -> f64 {
        let se = (self.std_error.powi(2) + value_se.powi(2)).sqrt();
        let diff = (self.mean - value).abs();
        if se == 0.0 {
            if diff == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            diff / se
        }
    }

    /// JSON object with the seed attached.
    pub fn to_json(&self, seed: u64) -> serde_json::Value {
        let mut v = crate::report::to_json(self);
        v["seed"] = seed.into();
        v
    }
}

/// Independent generator for `replica`.
pub fn replica_rng(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool builds")
    })
}

/// Runs `f(replica, rng)` for every replica and returns results in replica
/// order.
pub(crate) fn run_replicas<T, F>(config: &SimConfig, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    pool().install(|| {
        (0..config.replicas)
            .into_par_iter()
            .map(|r| f(r, &mut replica_rng(config.seed, r)))
            .collect()
    })
}
