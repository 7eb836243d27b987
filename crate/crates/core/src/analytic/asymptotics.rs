use serde::Serialize;

use super::{gamma_function, malthusian_rate, AnalyticContext, Criticality};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{self, AdaptiveOptions};

/// Stop the horizon doubling once a doubling changes `log γ` by less than this.
pub const GAMMA_STABILITY: f64 = 1e-8;
const MAX_HORIZON: f64 = 1024.0;

impl AnalyticContext {
    /// `γ = exp ∫₀^∞ (φ(t) + 1/β) dt` for a critical context with a unique
    /// maximal weight. Returns `(γ, horizon)` where `horizon` is the
    /// truncation point at which the doubling criterion was met.
    pub fn gamma_constant(&self) -> Result<(f64, f64)> {
        if self.criticality() != Criticality::Critical {
            return Err(Error::Domain(format!(
                "γ needs a critical context, i_a = {} vs q = {}",
                self.i_a(),
                self.params().q()
            )));
        }
        self.weights().j1()?;
        let inv_beta = 1.0 / self.beta();
        let integrand = |t: f64| self.phi(t).map_or(f64::NAN, |p| p + inv_beta);
        let opts = AdaptiveOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-11,
            max_panels: 2000,
        };
        let mut horizon = (8.0 * self.beta()).max(8.0);
        let (mut total, _) = quadrature::integrate(integrand, 0.0, horizon, opts)?;
        while horizon < MAX_HORIZON {
            let (piece, _) = quadrature::integrate(integrand, horizon, 2.0 * horizon, opts)?;
            total += piece;
            horizon *= 2.0;
            if piece.abs() < GAMMA_STABILITY {
                break;
            }
        }
        Ok((total.exp(), horizon))
    }
}

/// `γ` for the critical weights `a_j = j/m_{ν,q}`.
pub fn gamma_constant(params: &ModelParams) -> Result<f64> {
    Ok(AnalyticContext::critical(params)?.gamma_constant()?.0)
}

/// First-order constants of `E_ℓ[Z(n)]` at fixed `(ν, q)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AsymptoticProfile {
    pub m: f64,
    pub beta: f64,
    pub gamma: f64,
    pub horizon: f64,
    pub kstar: u32,
    /// `1/(q + (1−q)ν(k*))`, the limit of `m^{−n} E_{k*}[Z(n)]`.
    pub top_constant: f64,
}

impl AsymptoticProfile {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let rate = malthusian_rate(params)?;
        let ctx = AnalyticContext::critical(params)?;
        let (gamma, horizon) = ctx.gamma_constant()?;
        let q = params.q();
        let top = params.law.mass(params.law.kstar());
        Ok(Self {
            m: rate.m,
            beta: rate.beta,
            gamma,
            horizon,
            kstar: params.law.kstar(),
            top_constant: 1.0 / (q + (1.0 - q) * top),
        })
    }

    /// Limit of `n^{1/β} m^{−n} E_ℓ[Z(n)]` for `0 < ℓ < k*`, of
    /// `m^{−n} E_{k*}[Z(n)]` for `ℓ = k*`, and `0` for `ℓ = 0`.
    ///
    /// For `ℓ < k*` the generating function `Σ z^{n−1} m^{−n} E_ℓ[Z(n)]`
    /// behaves like `γ (1−z)^{1/β − 1} / (m (1/ℓ − 1/k*))` at `z = 1`, so the
    /// coefficients carry `1/Γ(1 − 1/β)`.
    pub fn constant(&self, ell: u32) -> Result<f64> {
        if ell == self.kstar {
            return Ok(self.top_constant);
        }
        if ell == 0 {
            return Ok(0.0);
        }
        if ell > self.kstar {
            return Err(Error::Domain(format!("ℓ = {ell} exceeds k* = {}", self.kstar)));
        }
        let gap = 1.0 / ell as f64 - 1.0 / self.kstar as f64;
        Ok(self.gamma / (gamma_function(1.0 - 1.0 / self.beta)? * self.m * gap))
    }
}

pub fn theorem2_constant(params: &ModelParams, ell: u32) -> Result<f64> {
    if !params.law.contains(ell) {
        return Err(Error::Domain(format!("{ell} is not a support point")));
    }
    AsymptoticProfile::new(params)?.constant(ell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::WeightVector;
    use crate::model::parse_law;

    fn params(text: &str, q: f64) -> ModelParams {
        ModelParams::new(parse_law(text).unwrap(), q).unwrap()
    }

    /// `γ = (q β a_{j1})^{1/β − 1} · Π*(1/a_{j1})^{−1/β}` from the endpoint
    /// expansion of the tail integral (independent of the φ quadrature).
    fn gamma_closed(p: &ModelParams) -> f64 {
        let m = malthusian_rate(p).unwrap().m;
        let kstar = p.law.kstar() as f64;
        let a1 = kstar / m;
        let beta = p.beta();
        let b0: f64 = p
            .law
            .iter()
            .filter(|(j, _)| *j != p.law.kstar())
            .map(|(j, nu)| (1.0 - j as f64 / kstar).powf(nu * (1.0 - p.q()) / p.q()))
            .product();
        (p.q() * beta * a1).powf(1.0 / beta - 1.0) * b0.powf(-1.0 / beta)
    }

    #[test]
    fn binary_gamma_is_one() {
        for (pp, q) in [(0.5, 0.5), (0.2, 0.7), (0.9, 0.1)] {
            let g = gamma_constant(&params(&format!("0:{},2:{pp}", 1.0 - pp), q)).unwrap();
            assert!((g - 1.0).abs() < 1e-8, "p={pp} q={q}: {g}");
        }
    }

    #[test]
    fn gamma_matches_closed_form() {
        // mpmath values of the closed form
        let cases = [
            ("1:0.5,2:0.5", 0.5, 1.309_192_675_878_363_728_5),
            ("0:0.25,1:0.25,4:0.5", 0.3, 1.109_089_522_944_840_423_7),
            ("0:0.1,1:0.2,2:0.3,5:0.4", 0.45, 1.210_163_783_172_380_750_2),
        ];
        for (law, q, want) in cases {
            let p = params(law, q);
            assert!((gamma_closed(&p) / want - 1.0).abs() < 1e-12);
            let g = gamma_constant(&p).unwrap();
            assert!((g / want - 1.0).abs() < 1e-7, "{law}: {g} vs {want}");
        }
    }

    #[test]
    fn gamma_stable_under_doubling() {
        let p = params("1:0.5,2:0.5", 0.5);
        let ctx = AnalyticContext::critical(&p).unwrap();
        let (g, horizon) = ctx.gamma_constant().unwrap();
        let inv_beta = 1.0 / p.beta();
        let (extra, _) = quadrature::integrate(
            |t| ctx.phi(t).unwrap() + inv_beta,
            horizon,
            2.0 * horizon,
            AdaptiveOptions {
                abs_tol: 1e-11,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(((g * extra.exp()) - g).abs() < 1e-6);
        assert!(g > 0.0 && g.is_finite());
    }

    #[test]
    fn gamma_needs_critical_unique_context() {
        let p = params("1:0.5,2:0.5", 0.5);
        let ctx = AnalyticContext::new(&p, WeightVector::linear(&p.law, 1.0).unwrap()).unwrap();
        assert!(matches!(ctx.gamma_constant(), Err(Error::Domain(_))));
        // equal weights scaled to criticality: i_a = q/c, so c = 1 is critical
        let tie = WeightVector::constant(&p.law, 1.0).unwrap();
        let ctx = AnalyticContext::new(&p, tie).unwrap();
        assert_eq!(ctx.criticality(), Criticality::Critical);
        assert!(matches!(ctx.gamma_constant(), Err(Error::UnsupportedTie(_))));
    }

    #[test]
    fn theorem2_examples() {
        let p = params("0:0.5,2:0.5", 0.5);
        assert!((theorem2_constant(&p, 2).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(theorem2_constant(&p, 0).unwrap(), 0.0);
        assert!(theorem2_constant(&p, 1).is_err());

        let p = params("1:0.5,2:0.5", 0.5);
        let prof = AsymptoticProfile::new(&p).unwrap();
        let want = prof.gamma / (gamma_function(1.0 / 3.0).unwrap() * prof.m * 0.5);
        assert!((prof.constant(1).unwrap() - want).abs() < 1e-14);
        // exact-DP value of n^{2/3} m^{-n} E_1[Z(n)] at n = 64 is 0.62504
        assert!((prof.constant(1).unwrap() - 0.5807).abs() < 1e-3);
    }
}
