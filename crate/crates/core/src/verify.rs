//! Verification suites. Each criterion recomputes its quantities from
//! scratch and compares them with independent routes at pinned tolerances.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytic::{
    explosion_time, gamma_constant, gamma_function, malthusian_rate, AnalyticContext,
    AsymptoticProfile, WeightVector,
};
use crate::error::{Error, Result};
use crate::exact::{lemma1_series, spine_dp, urn_dp};
use crate::model::{parse_law, Initial, ModelParams, ReproductionLaw};
use crate::ode::{blow_up_time, integrate_m, pde_residual_g};
use crate::report::num;
use crate::sim::stats::chi_square_geometric;
use crate::sim::{estimate_yule_functional, simulate_rgw, simulate_spine, simulate_yule, Estimate, SimConfig};

/// Tolerances and sample sizes of every criterion.
pub mod tolerances {
    pub const BINARY_RATE_REL: f64 = 1e-10;
    pub const MIXED_RATE_ABS: f64 = 1e-5;
    pub const MIXED_RATE_STATED: f64 = 1.682_949;
    /// High-precision value of the mixed-law rate computed independently.
    pub const MIXED_RATE_ORACLE: f64 = 1.682_952_910_622_461_066;
    pub const SANDWICH_CASES: usize = 200;
    pub const MONOTONE_LAWS: usize = 50;
    pub const MONOTONE_TIE: f64 = 1e-12;
    pub const LIMIT_REL: f64 = 0.01;
    pub const LOG_CONCAVE_CASES: usize = 100;
    pub const LOG_CONCAVE_SLACK: f64 = 1e-12;
    pub const ORACLE_CASES: usize = 25;
    pub const ORACLE_N: usize = 25;
    pub const ORACLE_REL: f64 = 1e-10;
    pub const BINARY_EXACT_REL: f64 = 1e-12;
    pub const BINARY_EXACT_N: usize = 30;
    pub const RATE_RATIO_RANGE: (f64, f64) = (0.7, 1.4);
    pub const TREND_REL: f64 = 0.25;
    pub const GAMMA_BINARY_ABS: f64 = 1e-8;
    pub const GAMMA_STABILITY: f64 = 1e-6;
    pub const SPINE_REPLICAS: usize = 1_000_000;
    pub const SPINE_N: usize = 20;
    pub const RGW_REPLICAS: usize = 100_000;
    pub const RGW_N: usize = 10;
    pub const MC_Z: f64 = 4.0;
    pub const YULE_REPLICAS: usize = 100_000;
    pub const LEMMA1_Z: f64 = 3.0;
    pub const CHI_SQUARE_LEVEL: f64 = 0.01;
    pub const ODE_REL_TOL: f64 = 1e-10;
    pub const ODE_SUP_REL: f64 = 1e-6;
    pub const ODE_WEIGHTS_PER_LAW: usize = 5;
    pub const BLOW_UP_REL: f64 = 0.02;
    pub const CONSTANT_RHO_ABS: f64 = 1e-10;
    pub const PDE_FACTOR_RANGE: (f64, f64) = (3.2, 4.8);
}

use tolerances as tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Rates,
    Oracles,
    Asymptotics,
    MonteCarlo,
    Ode,
    All,
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Rates => &[1, 2, 3, 4, 5],
            Suite::Oracles => &[6, 7, 8],
            Suite::Asymptotics => &[9],
            Suite::MonteCarlo => &[10, 11, 12],
            Suite::Ode => &[13, 14],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Rates => "rates",
            Suite::Oracles => "oracles",
            Suite::Asymptotics => "asymptotics",
            Suite::MonteCarlo => "montecarlo",
            Suite::Ode => "ode",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rates" => Suite::Rates,
            "oracles" => Suite::Oracles,
            "asymptotics" => Suite::Asymptotics,
            "montecarlo" => Suite::MonteCarlo,
            "ode" => Suite::Ode,
            "all" => Suite::All,
            other => return Err(Error::Parse(format!("unknown suite {other:?}"))),
        })
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    /// Criterion number, or e.g. `"9c"` for a supplementary check.
    pub id: String,
    pub name: &'static str,
    pub passed: bool,
    /// Counted towards the suite verdict.
    pub required: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u8, name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id: id.to_string(),
            name,
            passed,
            required: true,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let tag = if self.required { "" } else { " (supplementary)" };
        format!("[{status}] {:>3} {}{tag}: {}", self.id, self.name, self.detail)
    }
}

fn failed(id: u8, name: &'static str, e: Error) -> CriterionResult {
    CriterionResult::new(id, name, false, format!("error: {e}"))
}

macro_rules! guard {
    ($id:expr, $name:expr, $body:expr) => {
        match (|| -> Result<CriterionResult> { $body })() {
            Ok(r) => r,
            Err(e) => failed($id, $name, e),
        }
    };
}

fn params(law: &str, q: f64) -> Result<ModelParams> {
    ModelParams::new(parse_law(law)?, q)
}

fn rng_for(seed: u64, criterion: u8) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1000 + criterion as u64);
    rng
}

/// Random law with `k* = kstar` and random masses on a random subset of
/// `0..kstar`; with `interior`, some point of `1..kstar` is always present.
pub fn random_law(rng: &mut ChaCha8Rng, kstar: u32, interior: bool) -> ReproductionLaw {
    loop {
        let mut pts: Vec<(u32, f64)> = vec![];
        for k in 0..kstar {
            if rng.random_bool(0.6) {
                pts.push((k, rng.random_range(0.05..1.0)));
            }
        }
        pts.push((kstar, rng.random_range(0.05..1.0)));
        if pts.len() < 2 || (interior && !pts.iter().any(|&(k, _)| k > 0 && k < kstar)) {
            continue;
        }
        let total: f64 = pts.iter().map(|p| p.1).sum();
        if let Ok(law) = ReproductionLaw::new(pts.into_iter().map(|(k, p)| (k, p / total))) {
            return law;
        }
    }
}

fn c1_binary_rate() -> CriterionResult {
    const NAME: &str = "binary closed form of the Malthusian rate";
    guard!(1, NAME, {
        let mut worst: f64 = 0.0;
        for i in 1..=9 {
            for k in 1..=9 {
                let (pp, q) = (i as f64 / 10.0, k as f64 / 10.0);
                let p = ModelParams::new(ReproductionLaw::new([(0, 1.0 - pp), (2, pp)])?, q)?;
                let m = malthusian_rate(&p)?.m;
                let want = 2.0 * (q + (1.0 - q) * pp);
                worst = worst.max((m - want).abs() / m);
            }
        }
        Ok(CriterionResult::new(
            1,
            NAME,
            worst <= tol::BINARY_RATE_REL,
            format!("max relative error {} over 81 (p, q)", num(worst)),
        ))
    })
}

fn c2_mixed_rate() -> CriterionResult {
    const NAME: &str = "Malthusian rate of {1:0.5,2:0.5} at q = 0.5";
    guard!(2, NAME, {
        let m = malthusian_rate(&params("1:0.5,2:0.5", 0.5)?)?.m;
        let d_oracle = (m - tol::MIXED_RATE_ORACLE).abs();
        let d_stated = (m - tol::MIXED_RATE_STATED).abs();
        Ok(CriterionResult::new(
            2,
            NAME,
            d_oracle <= tol::MIXED_RATE_ABS && d_stated <= tol::MIXED_RATE_ABS,
            format!(
                "m = {}, |m − oracle| = {}, |m − 1.682949| = {}",
                num(m),
                num(d_oracle),
                num(d_stated)
            ),
        ))
    })
}

fn c3_sandwich(seed: u64) -> CriterionResult {
    const NAME: &str = "strict bounds k*(q+(1−q)ν(k*)) < m < k*q+(1−q)ν̄";
    guard!(3, NAME, {
        let mut rng = rng_for(seed, 3);
        let mut violations = 0;
        let mut min_gap = f64::INFINITY;
        for _ in 0..tol::SANDWICH_CASES {
            let kstar = rng.random_range(2..=6);
            let law = random_law(&mut rng, kstar, true);
            let q = rng.random_range(0.05..0.95);
            let r = malthusian_rate(&ModelParams::new(law, q)?)?;
            if !(r.lower < r.m && r.m < r.upper) {
                violations += 1;
            }
            min_gap = min_gap.min((r.m - r.lower).min(r.upper - r.m));
        }
        Ok(CriterionResult::new(
            3,
            NAME,
            violations == 0,
            format!(
                "{violations} violations in {} cases, smallest gap {}",
                tol::SANDWICH_CASES,
                num(min_gap)
            ),
        ))
    })
}

fn c4_monotone(seed: u64) -> CriterionResult {
    const NAME: &str = "m nondecreasing in q with limits ν̄ and k*";
    guard!(4, NAME, {
        let mut rng = rng_for(seed, 4);
        let (mut drops, mut worst_lo, mut worst_hi) = (0, 0.0f64, 0.0f64);
        for _ in 0..tol::MONOTONE_LAWS {
            let kstar = rng.random_range(1..=6);
            let law = random_law(&mut rng, kstar, false);
            let mut prev = 0.0;
            for k in 1..=19 {
                let m = malthusian_rate(&ModelParams::new(law.clone(), 0.05 * k as f64)?)?.m;
                if m < prev - tol::MONOTONE_TIE {
                    drops += 1;
                }
                prev = m;
            }
            let (lo, hi) = crate::analytic::rate_limits(&law, 1e-4, 1.0 - 1e-4)?;
            worst_lo = worst_lo.max((lo - law.mean()).abs() / law.mean());
            worst_hi = worst_hi.max((hi - law.kstar() as f64).abs() / law.kstar() as f64);
        }
        Ok(CriterionResult::new(
            4,
            NAME,
            drops == 0 && worst_lo <= tol::LIMIT_REL && worst_hi <= tol::LIMIT_REL,
            format!(
                "{drops} decreases on the grid, worst limit errors {} (q→0) and {} (q→1)",
                num(worst_lo),
                num(worst_hi)
            ),
        ))
    })
}

fn c5_log_concave(seed: u64) -> CriterionResult {
    const NAME: &str = "log-concavity of ν ↦ m at fixed k*";
    guard!(5, NAME, {
        let mut rng = rng_for(seed, 5);
        let mut worst = f64::INFINITY;
        for _ in 0..tol::LOG_CONCAVE_CASES {
            let kstar = rng.random_range(1..=6);
            let (a, b) = (random_law(&mut rng, kstar, false), random_law(&mut rng, kstar, false));
            let c = rng.random_range(1..=9) as f64 / 10.0;
            let q = rng.random_range(0.05..0.95);
            let mix = ReproductionLaw::new(
                (0..=kstar).map(|k| (k, c * a.mass(k) + (1.0 - c) * b.mass(k))),
            )?;
            let m = |law: ReproductionLaw| -> Result<f64> {
                Ok(malthusian_rate(&ModelParams::new(law, q)?)?.m)
            };
            let slack = m(mix)? - m(a)?.powf(c) * m(b)?.powf(1.0 - c);
            worst = worst.min(slack);
        }
        Ok(CriterionResult::new(
            5,
            NAME,
            worst >= -tol::LOG_CONCAVE_SLACK,
            format!("smallest slack {} over {} triples", num(worst), tol::LOG_CONCAVE_CASES),
        ))
    })
}

fn c6_oracles(seed: u64) -> CriterionResult {
    const NAME: &str = "spine DP agrees with urn DP";
    guard!(6, NAME, {
        let mut rng = rng_for(seed, 6);
        let mut worst: f64 = 0.0;
        for _ in 0..tol::ORACLE_CASES {
            let kstar = rng.random_range(1..=6);
            let law = random_law(&mut rng, kstar, false);
            let p = ModelParams::new(law, rng.random_range(0.05..0.95))?;
            let a = spine_dp(&p, tol::ORACLE_N, Initial::Law)?;
            let b = urn_dp(&p, tol::ORACLE_N)?;
            for n in 0..=tol::ORACLE_N {
                worst = worst.max((a.scaled[n] - b.scaled[n]).abs() / b.scaled[n]);
            }
        }
        Ok(CriterionResult::new(
            6,
            NAME,
            worst <= tol::ORACLE_REL,
            format!("max relative difference {} over {} laws, n ≤ {}", num(worst), tol::ORACLE_CASES, tol::ORACLE_N),
        ))
    })
}

fn c7_binary_exact() -> CriterionResult {
    const NAME: &str = "m^{−n} E[Z(n)] = p/(q+(1−q)p) for binary laws";
    guard!(7, NAME, {
        let mut worst: f64 = 0.0;
        for (pp, q) in [(0.5, 0.5), (0.3, 0.8), (0.9, 0.2)] {
            let p = ModelParams::new(ReproductionLaw::new([(0, 1.0 - pp), (2, pp)])?, q)?;
            let t = spine_dp(&p, tol::BINARY_EXACT_N, Initial::Law)?;
            let want = pp / (q + (1.0 - q) * pp);
            for n in 1..=tol::BINARY_EXACT_N {
                worst = worst.max((t.scaled[n] / want - 1.0).abs());
            }
        }
        Ok(CriterionResult::new(
            7,
            NAME,
            worst <= tol::BINARY_EXACT_REL,
            format!("max relative error {} for n ≤ {}", num(worst), tol::BINARY_EXACT_N),
        ))
    })
}

fn c8_rate_of_convergence() -> CriterionResult {
    const NAME: &str = "error of m^{−n} E[Z(n)] decays like n^{−1/β}";
    guard!(8, NAME, {
        let p = params("1:0.5,2:0.5", 0.5)?;
        let t = spine_dp(&p, 64, Initial::Law)?;
        let e = |n: usize| (t.scaled[n] - 2.0 / 3.0).abs();
        let ratio = e(64) / e(32) / 2f64.powf(-2.0 / 3.0);
        let (lo, hi) = tol::RATE_RATIO_RANGE;
        Ok(CriterionResult::new(
            8,
            NAME,
            (lo..=hi).contains(&ratio),
            format!("e_32 = {}, e_64 = {}, (e_64/e_32)/2^(−2/3) = {}", num(e(32)), num(e(64)), num(ratio)),
        ))
    })
}

struct TrendData {
    r16: f64,
    r64: f64,
    profile: AsymptoticProfile,
    binary_gamma: f64,
    gamma_shift: f64,
}

fn trend_data() -> Result<TrendData> {
    let p = params("1:0.5,2:0.5", 0.5)?;
    let profile = AsymptoticProfile::new(&p)?;
    let t = spine_dp(&p, 64, Initial::Fixed(1))?;
    let r = |n: usize| (n as f64).powf(2.0 / 3.0) * t.scaled[n];
    // stability of γ: one more doubling of the truncation horizon
    let ctx = AnalyticContext::critical(&p)?;
    let inv_beta = 1.0 / profile.beta;
    let (extra, _) = crate::quadrature::integrate(
        |s| ctx.phi(s).map_or(f64::NAN, |v| v + inv_beta),
        profile.horizon,
        2.0 * profile.horizon,
        crate::quadrature::AdaptiveOptions { abs_tol: 1e-11, ..Default::default() },
    )?;
    Ok(TrendData {
        r16: r(16),
        r64: r(64),
        profile,
        binary_gamma: gamma_constant(&params("0:0.5,2:0.5", 0.5)?)?,
        gamma_shift: profile.gamma * extra.exp_m1().abs(),
    })
}

fn trend_result(id: u8, d: &TrendData, target: f64, label: &str) -> (bool, String) {
    let dev = |r: f64| (r / target - 1.0).abs();
    let passed = dev(d.r64) <= tol::TREND_REL
        && dev(d.r64) < dev(d.r16)
        && (d.binary_gamma - 1.0).abs() <= tol::GAMMA_BINARY_ABS
        && d.gamma_shift <= tol::GAMMA_STABILITY;
    let _ = id;
    let detail = format!(
        "target {label} = {}, r_16 = {}, r_64 = {}, |r_64/target − 1| = {}, |r_16/target − 1| = {}, γ = {} (doubling shift {}), binary γ = {}",
        num(target),
        num(d.r16),
        num(d.r64),
        num(dev(d.r64)),
        num(dev(d.r16)),
        num(d.profile.gamma),
        num(d.gamma_shift),
        num(d.binary_gamma)
    );
    (passed, detail)
}

fn c9_trend() -> Vec<CriterionResult> {
    const NAME: &str = "n^{2/3} m^{−n} E_1[Z(n)] approaches 2γ/Γ(2/3)";
    const NAME_C: &str = "n^{2/3} m^{−n} E_1[Z(n)] approaches 2γ/(Γ(1/3)·m)";
    match trend_data() {
        Ok(d) => {
            let stated = match gamma_function(2.0 / 3.0) {
                Ok(g) => 2.0 * d.profile.gamma / g,
                Err(e) => return vec![failed(9, NAME, e)],
            };
            let (ok, detail) = trend_result(9, &d, stated, "2γ/Γ(2/3)");
            let mut main = CriterionResult::new(9, NAME, ok, detail);
            if !ok {
                main.detail.push_str("; limit constant with Γ(1/β) is not reached by exact values");
            }
            let corrected = d.profile.constant(1).unwrap_or(f64::NAN);
            let (ok_c, detail_c) = trend_result(9, &d, corrected, "2γ/(Γ(1/3)·m)");
            let supp = CriterionResult {
                id: "9c".into(),
                name: NAME_C,
                passed: ok_c,
                required: false,
                detail: detail_c,
            };
            vec![main, supp]
        }
        Err(e) => vec![failed(9, NAME, e)],
    }
}

/// Fixed panel for the Monte Carlo criterion.
pub const MC_PANEL: [(&str, f64); 6] = [
    ("1:0.5,2:0.5", 0.5),
    ("0:0.5,2:0.5", 0.5),
    ("0:0.3,1:0.4,2:0.3", 0.3),
    ("0:0.4,1:0.3,3:0.3", 0.4),
    ("0:0.2,1:0.6,2:0.2", 0.7),
    ("1:0.7,3:0.3", 0.25),
];

fn c10_monte_carlo(seed: u64) -> CriterionResult {
    const NAME: &str = "spine and population Monte Carlo agree with exact values";
    guard!(10, NAME, {
        let mut worst: f64 = 0.0;
        let mut detail = String::new();
        for (i, (law, q)) in MC_PANEL.iter().enumerate() {
            let p = params(law, *q)?;
            let exact = spine_dp(&p, tol::SPINE_N, Initial::Law)?;
            let spine = simulate_spine(&p, tol::SPINE_N, &SimConfig::new(seed.wrapping_add(i as u64), tol::SPINE_REPLICAS))?;
            let cfg = SimConfig::new(seed.wrapping_add(100 + i as u64), tol::RGW_REPLICAS);
            let rgw = Estimate::from_trajectories(&simulate_rgw(&p, tol::RGW_N, &cfg)?, tol::RGW_N)?;
            let zs = spine.z_score(exact.values[tol::SPINE_N], 0.0);
            let zr = rgw.z_score(exact.values[tol::RGW_N], 0.0);
            worst = worst.max(zs).max(zr);
            write!(detail, "{law}@{q}: z_spine = {}, z_pop = {}; ", num(zs), num(zr)).unwrap();
        }
        detail.push_str(&format!("max z = {}", num(worst)));
        Ok(CriterionResult::new(10, NAME, worst <= tol::MC_Z, detail))
    })
}

/// Configurations `(law, q, ℓ, c, t)` for the generating-function identity.
pub const LEMMA1_PANEL: [(&str, f64, u32, f64, f64); 3] = [
    ("1:0.5,2:0.5", 0.5, 2, 0.3, 0.5),
    ("1:0.5,2:0.5", 0.5, 1, 0.3, 0.5),
    ("1:0.3,2:0.3,3:0.4", 0.4, 3, 0.3, 0.6),
];

fn c11_lemma1(seed: u64) -> CriterionResult {
    const NAME: &str = "Yule functional equals the generating series";
    guard!(11, NAME, {
        let mut worst: f64 = 0.0;
        let mut detail = String::new();
        for (i, (law, q, ell, c, t)) in LEMMA1_PANEL.iter().enumerate() {
            let p = params(law, *q)?;
            let series = lemma1_series(&p, *ell, *c, *t, None)?;
            let cfg = SimConfig::new(seed.wrapping_add(200 + i as u64), tol::YULE_REPLICAS);
            let est = estimate_yule_functional(&p, *ell, *c, *t, &cfg)?;
            let z = est.z_score(series.value, series.tail_bound);
            worst = worst.max(z);
            write!(detail, "ℓ={ell}: series {} vs MC {} ± {} (z = {}); ", num(series.value), num(est.mean), num(est.std_error), num(z)).unwrap();
        }
        detail.push_str(&format!("max z = {}", num(worst)));
        Ok(CriterionResult::new(11, NAME, worst <= tol::LEMMA1_Z, detail))
    })
}

fn c12_yule_marginal(seed: u64) -> CriterionResult {
    const NAME: &str = "Y(1) is Geometric(e^{−1})";
    guard!(12, NAME, {
        let p = params("1:0.5,2:0.5", 0.5)?;
        let cfg = SimConfig::new(seed.wrapping_add(300), tol::YULE_REPLICAS);
        let sizes: Vec<u64> = simulate_yule(&p, 1.0, &cfg)?.iter().map(|s| s.size() as u64).collect();
        let test = chi_square_geometric(&sizes, (-1.0f64).exp())?;
        Ok(CriterionResult::new(
            12,
            NAME,
            test.passes(tol::CHI_SQUARE_LEVEL),
            format!("χ² = {} on {} dof, p-value {}", num(test.statistic), test.dof, num(test.p_value)),
        ))
    })
}

/// Laws for the ODE criterion.
pub const ODE_LAWS: [(&str, f64); 3] = [
    ("1:0.5,2:0.5", 0.5),
    ("0:0.2,1:0.3,3:0.5", 0.7),
    ("0:0.1,2:0.4,5:0.5", 0.3),
];

fn c13_ode(seed: u64) -> CriterionResult {
    const NAME: &str = "moment ODE matches the closed form and blows up at ρ(a)";
    guard!(13, NAME, {
        let mut rng = rng_for(seed, 13);
        let (mut sup_rel, mut blow_rel, mut rho_abs) = (0.0f64, 0.0f64, 0.0f64);
        let mut explosive = 0;
        for (law, q) in ODE_LAWS {
            let p = params(law, q)?;
            for _ in 0..tol::ODE_WEIGHTS_PER_LAW {
                let pairs: Vec<(u32, f64)> = p.law.support().iter().map(|&j| (j, rng.random_range(0.2..3.0))).collect();
                let a = WeightVector::new(&p.law, pairs)?;
                let rho = explosion_time(&p, &a)?;
                let t_max = if rho.is_finite() { 0.9 * rho } else { 5.0 };
                let sol = integrate_m(&p, &a, t_max, tol::ODE_REL_TOL)?;
                let ctx = AnalyticContext::new(&p, a.clone())?;
                for (t, row) in sol.grid.iter().zip(&sol.values) {
                    for (got, want) in row.iter().zip(ctx.mgf_vector(*t)?) {
                        sup_rel = sup_rel.max((got / want - 1.0).abs());
                    }
                }
                if rho.is_finite() {
                    explosive += 1;
                    let tb = blow_up_time(&p, &a, 2.0 * rho, tol::ODE_REL_TOL)?
                        .ok_or_else(|| Error::Domain("no blow-up before 2ρ".into()))?;
                    blow_rel = blow_rel.max((tb / rho - 1.0).abs());
                }
            }
            for c in [1.5, 2.0, 4.0] {
                let rho = explosion_time(&p, &WeightVector::constant(&p.law, c)?)?;
                rho_abs = rho_abs.max((rho + (1.0 - 1.0 / c).ln()).abs());
            }
        }
        Ok(CriterionResult::new(
            13,
            NAME,
            sup_rel <= tol::ODE_SUP_REL && blow_rel <= tol::BLOW_UP_REL && rho_abs <= tol::CONSTANT_RHO_ABS && explosive > 0,
            format!(
                "sup relative deviation {}, blow-up offset {} over {explosive} explosive vectors, constant-weight ρ error {}",
                num(sup_rel),
                num(blow_rel),
                num(rho_abs)
            ),
        ))
    })
}

/// Parameters, weights, t grid, s grid and coarse steps `(h_t, h_s)`.
type PdeCase = (ModelParams, WeightVector, Vec<f64>, Vec<f64>, (f64, f64));

fn pde_panel() -> Result<Vec<PdeCase>> {
    let p1 = params("1:0.5,2:0.5", 0.5)?;
    let a1 = WeightVector::linear(&p1.law, 1.0)?;
    let p2 = params("0:0.2,1:0.3,3:0.5", 0.6)?;
    let a2 = WeightVector::new(&p2.law, [(0, 0.4), (1, 0.7), (3, 0.5)])?;
    Ok(vec![
        (
            p1,
            a1,
            (1..=10).map(|k| 0.06 * k as f64).collect(),
            (0..=10).map(|k| 0.005 * k as f64).collect(),
            (0.04, 0.02),
        ),
        (
            p2,
            a2,
            (1..=10).map(|k| 0.1 * k as f64).collect(),
            (0..=10).map(|k| 0.02 * k as f64).collect(),
            (0.04, 0.04),
        ),
    ])
}

fn c14_pde() -> CriterionResult {
    const NAME: &str = "transport-equation residual is second order";
    guard!(14, NAME, {
        let (lo, hi) = tol::PDE_FACTOR_RANGE;
        let mut ok = true;
        let mut parts = vec![];
        for (p, a, tg, sg, (ht, hs)) in pde_panel()? {
            let r1 = pde_residual_g(&p, &a, &tg, &sg, Some((ht, hs)))?;
            let r2 = pde_residual_g(&p, &a, &tg, &sg, Some((ht / 2.0, hs / 2.0)))?;
            let f = r1.max_residual / r2.max_residual;
            ok &= (lo..=hi).contains(&f);
            parts.push(format!(
                "{}@{}: {} → {} (factor {})",
                p.law,
                p.q(),
                num(r1.max_residual),
                num(r2.max_residual),
                num(f)
            ));
        }
        Ok(CriterionResult::new(14, NAME, ok, parts.join("; ")))
    })
}

fn c15_determinism(seed: u64, first: &[CriterionResult]) -> CriterionResult {
    const NAME: &str = "seeded criteria reproduce byte for byte";
    let again: Vec<CriterionResult> = vec![c10_monte_carlo(seed), c11_lemma1(seed), c12_yule_marginal(seed)];
    let matches = again.iter().all(|r| first.iter().any(|f| f.id == r.id && f.detail == r.detail));
    CriterionResult::new(
        15,
        NAME,
        matches,
        format!("re-ran criteria 10-12 with seed {seed}: {}", if matches { "identical" } else { "different" }),
    )
}

/// Runs one criterion. Criterion 9 also yields its supplementary row.
pub fn run_criterion(id: u8, seed: u64) -> Vec<CriterionResult> {
    match id {
        1 => vec![c1_binary_rate()],
        2 => vec![c2_mixed_rate()],
        3 => vec![c3_sandwich(seed)],
        4 => vec![c4_monotone(seed)],
        5 => vec![c5_log_concave(seed)],
        6 => vec![c6_oracles(seed)],
        7 => vec![c7_binary_exact()],
        8 => vec![c8_rate_of_convergence()],
        9 => c9_trend(),
        10 => vec![c10_monte_carlo(seed)],
        11 => vec![c11_lemma1(seed)],
        12 => vec![c12_yule_marginal(seed)],
        13 => vec![c13_ode(seed)],
        14 => vec![c14_pde()],
        15 => {
            let first = vec![c10_monte_carlo(seed), c11_lemma1(seed), c12_yule_marginal(seed)];
            vec![c15_determinism(seed, &first)]
        }
        _ => vec![failed(id, "unknown criterion", Error::Domain(format!("no criterion {id}")))],
    }
}

/// Runs every criterion of `suite`.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<CriterionResult> {
    let mut out: Vec<CriterionResult> = vec![];
    for &id in suite.criteria() {
        if id == 15 {
            let r = c15_determinism(seed, &out);
            out.push(r);
        } else {
            out.extend(run_criterion(id, seed));
        }
    }
    out
}

/// `true` iff every required criterion passed.
pub fn all_passed(results: &[CriterionResult]) -> bool {
    results.iter().filter(|r| r.required).all(|r| r.passed)
}
