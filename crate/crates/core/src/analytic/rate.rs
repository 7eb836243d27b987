use serde::Serialize;

use super::{AnalyticContext, WeightVector};
use crate::error::{Error, Result};
use crate::model::{ModelParams, ReproductionLaw};

/// Malthusian rate together with the constants that accompany it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateProfile {
    /// `m_{ν,q} = q / ∫₀^{1/k*} Π(t) dt`.
    pub m: f64,
    /// Malthusian exponent `log m`.
    pub log_m: f64,
    /// `β = 1 + (1−q)ν(k*)/q`.
    pub beta: f64,
    /// Limit of `m^{−n} E[Z(n)]`: `ν(k*)/(q + (1−q)ν(k*))`.
    pub thm1_constant: f64,
    /// Exponent of the `O(n^{−1/β})` correction, `q/(q + (1−q)ν(k*))`.
    pub error_exponent: f64,
    /// `k*(q + (1−q)ν(k*))`.
    pub lower: f64,
    /// `k*q + (1−q)ν̄`.
    pub upper: f64,
    /// `∫₀^{1/k*} Π(t) dt`.
    pub integral: f64,
}

pub fn malthusian_rate(params: &ModelParams) -> Result<RateProfile> {
    let law = &params.law;
    let q = params.q();
    let ctx = AnalyticContext::new(params, WeightVector::linear(law, 1.0)?)?;
    let integral = ctx.i_a();
    let m = q / integral;
    let top = law.mass(law.kstar());
    let kstar = law.kstar() as f64;
    let denom = q + (1.0 - q) * top;
    Ok(RateProfile {
        m,
        log_m: m.ln(),
        beta: params.beta(),
        thm1_constant: top / denom,
        error_exponent: q / denom,
        lower: kstar * denom,
        upper: kstar * q + (1.0 - q) * law.mean(),
        integral,
    })
}

/// `m_{ν,q}` at two memory parameters `q_lo < q_hi`.
pub fn rate_limits(law: &ReproductionLaw, q_lo: f64, q_hi: f64) -> Result<(f64, f64)> {
    if !(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0) {
        return Err(Error::Domain(format!(
            "need 0 < q_lo < q_hi < 1, got {q_lo}, {q_hi}"
        )));
    }
    let lo = malthusian_rate(&ModelParams::new(law.clone(), q_lo)?)?.m;
    let hi = malthusian_rate(&ModelParams::new(law.clone(), q_hi)?)?.m;
    Ok((lo, hi))
}
