//! Goodness-of-fit helpers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Smallest expected count per bin.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

impl ChiSquareTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// Pearson test of `samples` (values in `1, 2, …`) against
/// `P(Y = k) = p (1−p)^{k−1}`. Bins `1..K` are kept while their expected
/// count is at least [`MIN_EXPECTED`]; the tail `≥ K` is pooled.
pub fn chi_square_geometric(samples: &[u64], p: f64) -> Result<ChiSquareTest> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p = {p} must lie in (0, 1)")));
    }
    let n = samples.len() as f64;
    let mut probs = Vec::new();
    let mut tail = 1.0;
    loop {
        let pk = p * (1.0 - p).powi(probs.len() as i32);
        if n * pk < MIN_EXPECTED || n * (tail - pk) < MIN_EXPECTED {
            break;
        }
        probs.push(pk);
        tail -= pk;
    }
    probs.push(tail);
    let bins = probs.len();
    if bins < 2 {
        return Err(Error::Domain("too few samples for a chi-square test".into()));
    }
    let mut observed = vec![0u64; bins];
    for &y in samples {
        if y == 0 {
            return Err(Error::Domain("geometric samples start at 1".into()));
        }
        observed[((y - 1) as usize).min(bins - 1)] += 1;
    }
    let statistic: f64 = observed
        .iter()
        .zip(&probs)
        .map(|(&o, &pk)| (o as f64 - n * pk).powi(2) / (n * pk))
        .sum();
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        bins,
    })
}
