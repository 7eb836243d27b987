use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{run_replicas, Estimate, SimConfig};
use crate::error::{Error, Result};
use crate::model::{Initial, ModelParams};

/// Generation sizes `Z(0..=n)` of one replica.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// Counts; for a capped replica these are the counts reached when the
    /// cap was hit, hence lower bounds.
    pub z: Vec<u64>,
    /// First generation whose size exceeded the cap.
    pub capped_at: Option<usize>,
}

impl Trajectory {
    pub fn is_capped(&self) -> bool {
        self.capped_at.is_some()
    }

    pub fn complete(&self, cap: u64) -> Result<&[u64]> {
        match self.capped_at {
            Some(generation) => Err(Error::PopulationCapExceeded { cap, generation }),
            None => Ok(&self.z),
        }
    }
}

fn draw_offspring(params: &ModelParams, path: &[u32], rng: &mut ChaCha8Rng) -> u32 {
    if rng.random::<f64>() < params.q() {
        path[rng.random_range(0..path.len())]
    } else {
        params.law.sample_with(rng.random())
    }
}

/// One replica by depth-first traversal. `path[d]` holds the offspring count
/// of the ancestor at depth `d` on the current lineage, so drawing a uniform
/// ancestor is a single index.
pub(crate) fn one_replica(
    params: &ModelParams,
    n: usize,
    initial: Initial,
    cap: u64,
    rng: &mut ChaCha8Rng,
) -> Trajectory {
    let mut z = vec![0u64; n + 1];
    z[0] = 1;
    let root = match initial {
        Initial::Law => params.law.sample_with(rng.random()),
        Initial::Fixed(l) => l,
    };
    let mut path = vec![root];
    let mut remaining = vec![root];
    while let Some(left) = remaining.last_mut() {
        if *left == 0 {
            remaining.pop();
            path.pop();
            continue;
        }
        *left -= 1;
        let depth = path.len();
        z[depth] += 1;
        if z[depth] > cap {
            return Trajectory {
                z,
                capped_at: Some(depth),
            };
        }
        if depth == n {
            continue;
        }
        let k = draw_offspring(params, &path, rng);
        path.push(k);
        remaining.push(k);
    }
    Trajectory { z, capped_at: None }
}

/// Simulates `Z(0..=n)` for every replica. Capped replicas are flagged
/// rather than dropped.
pub fn simulate_rgw(params: &ModelParams, n: usize, config: &SimConfig) -> Result<Vec<Trajectory>> {
    config.validate()?;
    config.initial.check(&params.law)?;
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    Ok(run_replicas(config, |_, rng| {
        one_replica(params, n, config.initial, config.population_cap, rng)
    }))
}

impl Estimate {
    /// Estimate of `E[Z(n)]` from simulated trajectories.
    pub fn from_trajectories(trajectories: &[Trajectory], n: usize) -> Result<Self> {
        let samples: Vec<Option<f64>> = trajectories
            .iter()
            .map(|t| (!t.is_capped()).then(|| t.z[n] as f64))
            .collect();
        Self::from_samples(&samples)
    }
}

/// CSV with columns `replica,generation,Z`. Capped replicas are omitted.
pub fn trajectories_csv(trajectories: &[Trajectory]) -> String {
    let mut out = String::from("replica,generation,Z\n");
    for (r, t) in trajectories.iter().enumerate().filter(|(_, t)| !t.is_capped()) {
        for (g, z) in t.z.iter().enumerate() {
            writeln!(out, "{r},{g},{z}").unwrap();
        }
    }
    out
}
