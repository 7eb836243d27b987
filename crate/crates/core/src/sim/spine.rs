use rand::Rng;

use super::{run_replicas, Estimate, SimConfig};
use crate::error::{Error, Result};
use crate::model::{Initial, ModelParams};

/// Unbiased estimate of `E[Z(n)]` (or `E_ℓ[Z(n)]`) as the mean of
/// `ζ₁ ⋯ ζ_n` along simulated spines.
pub fn simulate_spine(params: &ModelParams, n: usize, config: &SimConfig) -> Result<Estimate> {
    config.validate()?;
    config.initial.check(&params.law)?;
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let q = params.q();
    let samples = run_replicas(config, |_, rng| {
        let mut history = Vec::with_capacity(n);
        let first = match config.initial {
            Initial::Law => params.law.sample_with(rng.random()),
            Initial::Fixed(l) => l,
        };
        history.push(first);
        let mut product = first as f64;
        while history.len() < n && product != 0.0 {
            let next = if rng.random::<f64>() < q {
                history[rng.random_range(0..history.len())]
            } else {
                params.law.sample_with(rng.random())
            };
            history.push(next);
            product *= next as f64;
        }
        Some(product)
    });
    Estimate::from_samples(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_law;

    #[test]
    fn one_step_is_the_mean() {
        let p = ModelParams::new(parse_law("0:0.25,1:0.25,4:0.5").unwrap(), 0.3).unwrap();
        let e = simulate_spine(&p, 1, &SimConfig::new(1, 100_000)).unwrap();
        assert!(e.z_score(2.25, 0.0) < 4.0);
        let e = simulate_spine(&p, 1, &SimConfig::new(1, 10).with_initial(Initial::Fixed(4))).unwrap();
        assert_eq!((e.mean, e.std_error), (4.0, 0.0));
    }

    #[test]
    fn binary_closed_form() {
        let (pp, q) = (0.6, 0.4);
        let p = ModelParams::new(parse_law("0:0.4,2:0.6").unwrap(), q).unwrap();
        let e = simulate_spine(&p, 15, &SimConfig::new(8, 200_000)).unwrap();
        let m: f64 = 2.0 * (q + (1.0 - q) * pp);
        assert!(e.z_score(2.0 * pp * m.powi(14), 0.0) < 4.0, "{e:?}");
    }
}
