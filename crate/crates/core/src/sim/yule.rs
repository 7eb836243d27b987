use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{run_replicas, Estimate, SimConfig};
use crate::error::{Error, Result};
use crate::model::{Initial, ModelParams};

/// Types alive at the horizon of one Yule replica.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YuleSample {
    /// Type of every individual, in birth order; `types[0]` is the root.
    pub types: Vec<u32>,
    pub capped: bool,
}

impl YuleSample {
    pub fn size(&self) -> usize {
        self.types.len()
    }

    /// `(j, Y_j(t))` for every support point `j`.
    pub fn counts(&self, params: &ModelParams) -> Vec<(u32, u64)> {
        params
            .law
            .support()
            .iter()
            .map(|&j| (j, self.types.iter().filter(|&&t| t == j).count() as u64))
            .collect()
    }
}

fn one_yule(params: &ModelParams, t: f64, initial: Initial, cap: u64, rng: &mut ChaCha8Rng) -> YuleSample {
    let root = match initial {
        Initial::Law => params.law.sample_with(rng.random()),
        Initial::Fixed(l) => l,
    };
    let mut types = vec![root];
    let mut clock = 0.0;
    loop {
        let k = types.len() as f64;
        // Exponential(k) holding time by inversion
        clock += -(1.0 - rng.random::<f64>()).ln() / k;
        if clock > t {
            return YuleSample { types, capped: false };
        }
        if types.len() as u64 >= cap {
            return YuleSample { types, capped: true };
        }
        let parent = types[rng.random_range(0..types.len())];
        let child = if rng.random::<f64>() < params.q() {
            parent
        } else {
            params.law.sample_with(rng.random())
        };
        types.push(child);
    }
}

/// Simulates the multitype Yule process up to time `t`.
pub fn simulate_yule(params: &ModelParams, t: f64, config: &SimConfig) -> Result<Vec<YuleSample>> {
    config.validate()?;
    config.initial.check(&params.law)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t = {t} must be finite and non-negative")));
    }
    Ok(run_replicas(config, |_, rng| {
        one_yule(params, t, config.initial, config.population_cap, rng)
    }))
}

/// Monte Carlo estimate of `E_ℓ[∏_j (cj)^{Y_j(t)}]`.
pub fn estimate_yule_functional(
    params: &ModelParams,
    ell: u32,
    c: f64,
    t: f64,
    config: &SimConfig,
) -> Result<Estimate> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("c = {c} must be positive")));
    }
    let config = config.with_initial(Initial::Fixed(ell));
    let samples = simulate_yule(params, t, &config)?;
    let values: Vec<Option<f64>> = samples
        .iter()
        .map(|s| {
            (!s.capped).then(|| s.types.iter().map(|&j| c * j as f64).product::<f64>())
        })
        .collect();
    Estimate::from_samples(&values)
}

/// Warns when `c k* > 1`, where the functional has heavy tails.
pub fn variance_warning(params: &ModelParams, c: f64) -> Option<String> {
    let top = c * params.law.kstar() as f64;
    (top > 1.0).then(|| format!("c·k* = {top} exceeds 1; the Monte Carlo variance may be large"))
}

/// Mean fraction of individuals alive at `t` that carry the root's type.
pub fn root_type_fraction(params: &ModelParams, t: f64, config: &SimConfig) -> Result<Estimate> {
    let samples = simulate_yule(params, t, config)?;
    let values: Vec<Option<f64>> = samples
        .iter()
        .map(|s| {
            let same = s.types.iter().filter(|&&j| j == s.types[0]).count();
            (!s.capped).then(|| same as f64 / s.size() as f64)
        })
        .collect();
    Estimate::from_samples(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_law;
    use crate::sim::stats::chi_square_geometric;

    fn params(text: &str, q: f64) -> ModelParams {
        ModelParams::new(parse_law(text).unwrap(), q).unwrap()
    }

    #[test]
    fn time_zero_is_the_root() {
        let p = params("1:0.5,2:0.5", 0.5);
        let cfg = SimConfig::new(4, 100).with_initial(Initial::Fixed(2));
        let s = simulate_yule(&p, 0.0, &cfg).unwrap();
        assert!(s.iter().all(|y| y.types == vec![2]));
        let e = estimate_yule_functional(&p, 2, 0.3, 0.0, &cfg).unwrap();
        assert!((e.mean - 0.6).abs() < 1e-15 && e.std_error == 0.0);
    }

    #[test]
    fn counts_add_up() {
        let p = params("0:0.2,1:0.3,3:0.5", 0.4);
        for s in simulate_yule(&p, 1.5, &SimConfig::new(6, 200)).unwrap() {
            let total: u64 = s.counts(&p).iter().map(|c| c.1).sum();
            assert_eq!(total as usize, s.size());
        }
    }

    #[test]
    fn size_is_geometric() {
        let p = params("1:0.5,2:0.5", 0.5);
        let s = simulate_yule(&p, 1.0, &SimConfig::new(21, 50_000)).unwrap();
        let sizes: Vec<u64> = s.iter().map(|y| y.size() as u64).collect();
        let test = chi_square_geometric(&sizes, (-1.0f64).exp()).unwrap();
        assert!(test.p_value > 0.001, "{test:?}");
        let mean = Estimate::from_samples(&sizes.iter().map(|&x| Some(x as f64)).collect::<Vec<_>>()).unwrap();
        assert!(mean.z_score(1f64.exp(), 0.0) < 4.0);
    }

    #[test]
    fn zero_type_annihilates() {
        let p = params("0:0.5,1:0.5", 0.5);
        let e = estimate_yule_functional(&p, 0, 0.5, 1.0, &SimConfig::new(1, 100)).unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn stronger_memory_keeps_the_root_type() {
        let lo = params("0:0.3,1:0.3,2:0.4", 0.2);
        let hi = params("0:0.3,1:0.3,2:0.4", 0.99);
        let cfg = SimConfig::new(5, 4000);
        let a = root_type_fraction(&lo, 2.0, &cfg).unwrap();
        let b = root_type_fraction(&hi, 2.0, &cfg).unwrap();
        assert!(b.mean > a.mean);
    }

    #[test]
    fn warns_for_large_c() {
        let p = params("1:0.5,2:0.5", 0.5);
        assert!(variance_warning(&p, 0.6).is_some());
        assert!(variance_warning(&p, 0.3).is_none());
    }
}
