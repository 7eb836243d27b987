//! Exact expected population sizes.
//!
//! Two independent dynamic programs compute `E[Z(n)]`:
//!
//! - [`spine_dp`] follows the offspring counts `ζ₁, ζ₂, …` along a single
//!   reinforced lineage, for which `E_ℓ[Z(n)] = E_ℓ[ζ₁ ⋯ ζ_n]`. Given the
//!   first `n` counts, `ζ_{n+1} = k` with probability
//!   `q · #{i ≤ n : ζ_i = k}/n + (1−q) ν(k)`, so the count vector is a
//!   sufficient statistic.
//! - [`urn_dp`] tracks the block structure of the Pólya urn behind the
//!   repetitions: `E[Z(n)] = E[∏_blocks m_ν(|block|)]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::analytic::malthusian_rate;
use crate::error::{Error, Result};
use crate::model::{Initial, ModelParams};
use crate::report::num;

/// Largest number of count vectors [`spine_dp`] keeps at one generation.
pub const MAX_SPINE_STATES: u128 = 10_000_000;
/// Largest generation [`urn_dp`] accepts.
pub const MAX_URN_GENERATION: usize = 60;

/// `E[Z(n)]` (or `E_ℓ[Z(n)]`) for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub values: Vec<f64>,
    /// `values[n] · scale^{−n}`, accumulated directly without overflow.
    pub scaled: Vec<f64>,
    pub scale: f64,
    pub initial: Initial,
}

impl MomentTable {
    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    fn from_scaled(scaled: Vec<f64>, scale: f64, initial: Initial) -> Self {
        let values = scaled
            .iter()
            .enumerate()
            .map(|(n, s)| s * scale.powi(n as i32))
            .collect();
        Self {
            values,
            scaled,
            scale,
            initial,
        }
    }

    /// CSV with columns `n,EZ,scaled`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,EZ,scaled\n");
        for (n, (v, s)) in self.values.iter().zip(&self.scaled).enumerate() {
            writeln!(out, "{n},{},{}", num(*v), num(*s)).unwrap();
        }
        out
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| {
        acc.saturating_mul((n - i) as u128) / (i as u128 + 1)
    })
}

/// Number of compositions of `n` into `parts` non-negative parts.
fn compositions(n: usize, parts: usize) -> u128 {
    if parts == 0 {
        return u128::from(n == 0);
    }
    binomial((n + parts - 1) as u64, (parts - 1) as u64)
}

/// Lexicographic ranking of fixed-sum compositions via a binomial table.
struct Ranker {
    parts: usize,
    // table[r][p] = number of compositions of r into p parts
    table: Vec<Vec<usize>>,
}

impl Ranker {
    fn new(n_max: usize, parts: usize) -> Self {
        let table = (0..=n_max)
            .map(|r| (0..=parts).map(|p| compositions(r, p) as usize).collect())
            .collect();
        Self { parts, table }
    }

    fn count(&self, n: usize) -> usize {
        self.table[n][self.parts]
    }

    fn rank(&self, c: &[usize]) -> usize {
        let mut remaining: usize = c.iter().sum();
        let mut rank = 0;
        for (i, &ci) in c.iter().enumerate().take(self.parts - 1) {
            let p = self.parts - i;
            // compositions whose i-th part is smaller than ci
            rank += self.table[remaining][p] - self.table[remaining - ci][p];
            remaining -= ci;
        }
        rank
    }
}

/// Advances `c` to the next composition with the same sum in lexicographic
/// order; returns `false` after the last one.
fn next_composition(c: &mut [usize]) -> bool {
    let s = c.len();
    if s < 2 {
        return false;
    }
    let Some(i) = (0..s - 1).rev().find(|&i| c[i + 1..].iter().any(|&v| v > 0)) else {
        return false;
    };
    let tail: usize = c[i + 1..].iter().sum();
    c[i] += 1;
    c[i + 1..].iter_mut().for_each(|v| *v = 0);
    c[s - 1] = tail - 1;
    true
}

/// Exact `E[Z(n)]` (initial = law) or `E_ℓ[Z(n)]` for `n = 0..=n_max` from
/// the spine recursion, with weights rescaled by the Malthusian rate at each
/// step.
pub fn spine_dp(params: &ModelParams, n_max: usize, initial: Initial) -> Result<MomentTable> {
    let scale = malthusian_rate(params)?.m;
    spine_dp_scaled(params, n_max, initial, scale)
}

/// [`spine_dp`] with a caller-supplied scale `m̂`.
pub fn spine_dp_scaled(
    params: &ModelParams,
    n_max: usize,
    initial: Initial,
    scale: f64,
) -> Result<MomentTable> {
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Domain(format!("scale {scale} must be positive")));
    }
    initial.check(&params.law)?;
    let law = &params.law;
    let q = params.q();
    let types: Vec<(usize, f64)> = law
        .iter()
        .filter(|&(k, _)| k > 0)
        .map(|(k, p)| (k as usize, p))
        .collect();
    let s = types.len();
    let states = compositions(n_max, s);
    if states > MAX_SPINE_STATES {
        return Err(Error::StateExplosion {
            states,
            limit: MAX_SPINE_STATES,
        });
    }
    let ranker = Ranker::new(n_max, s);

    let mut scaled = vec![1.0, 0.0];
    let mut weights = vec![0.0; ranker.count(1)];
    let mut c = vec![0usize; s];
    for (t, &(k, p)) in types.iter().enumerate() {
        let start = match initial {
            Initial::Law => p * k as f64,
            Initial::Fixed(l) if l as usize == k => k as f64,
            Initial::Fixed(_) => 0.0,
        };
        c[t] = 1;
        weights[ranker.rank(&c)] = start / scale;
        c[t] = 0;
    }
    scaled[1] = weights.iter().sum();

    for n in 1..n_max {
        let mut next = vec![0.0; ranker.count(n + 1)];
        c.iter_mut().for_each(|v| *v = 0);
        c[s - 1] = n;
        let mut idx = 0;
        loop {
            let w = weights[idx];
            if w != 0.0 {
                for t in 0..s {
                    let (k, p) = types[t];
                    let prob = q * c[t] as f64 / n as f64 + (1.0 - q) * p;
                    c[t] += 1;
                    next[ranker.rank(&c)] += w * prob * k as f64 / scale;
                    c[t] -= 1;
                }
            }
            idx += 1;
            if !next_composition(&mut c) {
                break;
            }
        }
        debug_assert_eq!(idx, weights.len());
        weights = next;
        scaled.push(weights.iter().sum());
    }
    Ok(MomentTable::from_scaled(scaled, scale, initial))
}

/// Number of integer partitions of `n`.
pub fn partition_count(n: usize) -> u128 {
    let mut p = vec![0u128; n + 1];
    p[0] = 1;
    for part in 1..=n {
        for m in part..=n {
            p[m] += p[m - part];
        }
    }
    p[n]
}

/// Exact `E[Z(n)]` under `P` for `n = 0..=n_max` from the distribution of the
/// urn's block sizes. At step `n → n+1` a block of size `s` grows with
/// probability `q s / n` and a new singleton appears with probability `1−q`.
pub fn urn_dp(params: &ModelParams, n_max: usize) -> Result<MomentTable> {
    if n_max > MAX_URN_GENERATION {
        return Err(Error::StateExplosion {
            states: partition_count(n_max),
            limit: partition_count(MAX_URN_GENERATION),
        });
    }
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let q = params.q();
    let scale = malthusian_rate(params)?.m;
    // m_ν(s) / m̂^s, so a partition's product is already scaled by m̂^{−n}
    let moments: Vec<f64> = (0..=n_max)
        .map(|s| params.law.moment(s as u32) / scale.powi(s as i32))
        .collect();

    // partitions as block sizes sorted in decreasing order
    let mut dist: BTreeMap<Vec<u32>, f64> = BTreeMap::from([(vec![1], 1.0)]);
    let mut scaled = vec![1.0, moments[1]];
    for n in 1..n_max {
        let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (blocks, &p) in &dist {
            let mut i = 0;
            while i < blocks.len() {
                let size = blocks[i];
                let mult = blocks[i..].iter().take_while(|&&b| b == size).count();
                let mut grown = blocks.clone();
                // the first copy of `size` keeps the order decreasing
                grown[i] += 1;
                let prob = q * (size as usize * mult) as f64 / n as f64;
                *next.entry(grown).or_insert(0.0) += p * prob;
                i += mult;
            }
            let mut fresh = blocks.clone();
            fresh.push(1);
            *next.entry(fresh).or_insert(0.0) += p * (1.0 - q);
        }
        dist = next;
        scaled.push(
            dist.iter()
                .map(|(blocks, p)| p * blocks.iter().map(|&b| moments[b as usize]).product::<f64>())
                .sum(),
        );
    }
    Ok(MomentTable::from_scaled(scaled, scale, Initial::Law))
}

/// Effective reproduction numbers `E[Z(n+1)]/E[Z(n)]`, indexed by `n`.
pub fn effective_reproduction(table: &MomentTable) -> Result<Vec<f64>> {
    if let Some(n) = table.scaled.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroPopulationMean(n));
    }
    Ok(table
        .scaled
        .windows(2)
        .map(|w| w[1] / w[0] * table.scale)
        .collect())
}

/// Truncated generating-function series with its tail bound.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// Target bound on the truncated tail of [`lemma1_series`].
pub const SERIES_TAIL: f64 = 1e-10;
const MAX_SERIES_TERMS: usize = 4000;

/// `e^{−t} Σ_{n≥1} (1−e^{−t})^{n−1} cⁿ E_ℓ[Z(n)]`, which equals the Yule
/// functional `E_ℓ[∏_j (cj)^{Y_j(t)}]`.
///
/// The tail beyond `N` terms is bounded with `E_ℓ[Z(n)] ≤ C mⁿ`, where `C` is
/// twice the largest value of `m^{−n} E_ℓ[Z(n)]` in the table. Without
/// `n_terms` the smallest `N` with tail below [`SERIES_TAIL`] is used.
pub fn lemma1_series(
    params: &ModelParams,
    ell: u32,
    c: f64,
    t: f64,
    n_terms: Option<usize>,
) -> Result<SeriesValue> {
    if !params.law.contains(ell) {
        return Err(Error::Domain(format!("{ell} is not a support point")));
    }
    if !(c > 0.0 && t >= 0.0 && c.is_finite() && t.is_finite()) {
        return Err(Error::Domain(format!("need c > 0 and t ≥ 0, got c = {c}, t = {t}")));
    }
    let m = malthusian_rate(params)?.m;
    let x = -(-t).exp_m1();
    let decay = (-t).exp();
    let r = x * c * m;
    if r >= 1.0 {
        return Err(Error::SeriesDiverges(format!(
            "(1−e^{{−t}})·c·m = {r} ≥ 1; t is past the explosion time"
        )));
    }
    if x == 0.0 {
        return Ok(SeriesValue {
            value: c * ell as f64,
            tail_bound: 0.0,
            terms: 1,
        });
    }
    // C grows with the table, so size a short table first to estimate it
    let probe = spine_dp_scaled(params, 16, Initial::Fixed(ell), m)?;
    let bound_const = |table: &MomentTable| 2.0 * table.scaled.iter().cloned().fold(0.0, f64::max);
    let tail = |n: usize, cst: f64| decay * cst * c * m * r.powi(n as i32) / (1.0 - r);
    let n = match n_terms {
        Some(n) => n.max(1),
        None => {
            let cst = bound_const(&probe);
            (1..=MAX_SERIES_TERMS)
                .find(|&n| tail(n, cst) < SERIES_TAIL)
                .ok_or_else(|| {
                    Error::SeriesDiverges(format!(
                        "ratio {r} needs more than {MAX_SERIES_TERMS} terms"
                    ))
                })?
        }
    };
    let table = spine_dp_scaled(params, n, Initial::Fixed(ell), m)?;
    let mut sum = crate::quadrature::CompensatedSum::new();
    // term n: e^{−t} x^{n−1} cⁿ E = e^{−t}/x · rⁿ · (m^{−n} E)
    for k in 1..=n {
        sum.add(r.powi(k as i32) * table.scaled[k]);
    }
    Ok(SeriesValue {
        value: decay / x * sum.value(),
        tail_bound: tail(n, bound_const(&table)),
        terms: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{AnalyticContext, WeightVector};
    use crate::model::parse_law;
    use proptest::prelude::*;

    fn params(text: &str, q: f64) -> ModelParams {
        ModelParams::new(parse_law(text).unwrap(), q).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn ranking_is_dense_and_lexicographic() {
        let r = Ranker::new(6, 3);
        let mut c = vec![0, 0, 6];
        let mut k = 0;
        loop {
            assert_eq!(r.rank(&c), k);
            k += 1;
            if !next_composition(&mut c) {
                break;
            }
        }
        assert_eq!(k, r.count(6));
        assert_eq!(k, 28);
        assert_eq!(c, vec![6, 0, 0]);
    }

    #[test]
    fn hand_enumerated_values() {
        let p = params("1:0.5,2:0.5", 0.5);
        let law = spine_dp(&p, 2, Initial::Law).unwrap();
        assert!(rel(law.values[1], 1.5) < 1e-15);
        assert!(rel(law.values[2], 2.375) < 1e-15);
        assert_eq!(law.values[0], 1.0);
        let two = spine_dp(&p, 2, Initial::Fixed(2)).unwrap();
        assert!(rel(two.values[2], 3.5) < 1e-15);
        let one = spine_dp(&p, 2, Initial::Fixed(1)).unwrap();
        assert!(rel(one.values[2], 1.25) < 1e-15);
        let urn = urn_dp(&p, 2).unwrap();
        assert!(rel(urn.values[1], 1.5) < 1e-15);
        assert!(rel(urn.values[2], 2.375) < 1e-15);
    }

    #[test]
    fn binary_law_closed_form() {
        for (pp, q) in [(0.5, 0.5), (0.3, 0.8), (0.9, 0.2)] {
            let prm = params(&format!("0:{},2:{pp}", 1.0 - pp), q);
            let table = spine_dp(&prm, 30, Initial::Law).unwrap();
            let m = 2.0 * (q + (1.0 - q) * pp);
            for n in 1..=30 {
                let want = 2.0 * pp * m.powi(n as i32 - 1);
                assert!(rel(table.values[n], want) < 1e-12, "n={n}");
                assert!(rel(table.scaled[n], pp / (q + (1.0 - q) * pp)) < 1e-12);
            }
            let ratios = effective_reproduction(&table).unwrap();
            assert!(ratios[1..].iter().all(|r| rel(*r, m) < 1e-12));
        }
    }

    #[test]
    fn zero_start_has_no_ratios() {
        let p = params("0:0.5,2:0.5", 0.5);
        let table = spine_dp(&p, 5, Initial::Fixed(0)).unwrap();
        assert_eq!(&table.values[1..], &[0.0; 5]);
        assert_eq!(effective_reproduction(&table), Err(Error::ZeroPopulationMean(1)));
    }

    #[test]
    fn effective_reproduction_approaches_rate() {
        let p = params("1:0.5,2:0.5", 0.5);
        let ratios = effective_reproduction(&spine_dp(&p, 41, Initial::Law).unwrap()).unwrap();
        assert!(rel(ratios[1], 2.375 / 1.5) < 1e-14);
        assert!((ratios[40] - 1.682_949).abs() < 0.01);
    }

    #[test]
    fn mixture_identity() {
        let p = params("0:0.1,1:0.2,3:0.3,4:0.4", 0.35);
        let law = spine_dp(&p, 20, Initial::Law).unwrap();
        let mut mix = [0.0; 21];
        for (l, nu) in p.law.iter() {
            let t = spine_dp(&p, 20, Initial::Fixed(l)).unwrap();
            mix.iter_mut().zip(&t.values).for_each(|(a, v)| *a += nu * v);
        }
        for n in 1..=20 {
            assert!(rel(mix[n], law.values[n]) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn error_decays_at_rate_one_over_beta() {
        let p = params("1:0.5,2:0.5", 0.5);
        let t = spine_dp(&p, 64, Initial::Law).unwrap();
        let e = |n: usize| (t.scaled[n] - 2.0 / 3.0).abs();
        let ratio = e(64) / e(32) / 2f64.powf(-2.0 / 3.0);
        assert!((0.5..=1.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn larger_memory_gives_larger_means() {
        let lo = spine_dp(&params("0:0.2,1:0.3,3:0.5", 0.4), 20, Initial::Law).unwrap();
        let hi = spine_dp(&params("0:0.2,1:0.3,3:0.5", 0.6), 20, Initial::Law).unwrap();
        for n in 0..=20 {
            assert!(hi.values[n] >= lo.values[n] * (1.0 - 1e-14), "n={n}");
        }
    }

    #[test]
    fn refuses_huge_state_spaces() {
        let p = params("1:0.1,2:0.1,3:0.1,4:0.1,5:0.1,6:0.1,7:0.1,8:0.1,9:0.1,10:0.1", 0.5);
        assert!(matches!(
            spine_dp(&p, 200, Initial::Law),
            Err(Error::StateExplosion { .. })
        ));
        assert!(matches!(
            urn_dp(&params("1:0.5,2:0.5", 0.5), 61),
            Err(Error::StateExplosion { .. })
        ));
    }

    #[test]
    fn partition_counts() {
        assert_eq!(partition_count(10), 42);
        assert_eq!(partition_count(60), 966_467);
    }

    #[test]
    fn csv_has_three_columns() {
        let t = spine_dp(&params("0:0.5,2:0.5", 0.5), 3, Initial::Law).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,EZ,scaled"));
        assert_eq!(lines.next(), Some("0,1,1"));
        assert_eq!(lines.nth(2), Some("3,2.25,0.666666666667"));
    }

    #[test]
    fn series_at_time_zero() {
        let p = params("1:0.5,2:0.5", 0.5);
        let s = lemma1_series(&p, 2, 0.3, 0.0, None).unwrap();
        assert_eq!(s.value, 0.6);
    }

    #[test]
    fn series_matches_closed_form_mgf() {
        // a_j = c j gives the closed-form M_ℓ of the analytic module
        let p = params("1:0.5,2:0.5", 0.5);
        for (ell, c, t) in [(2, 0.3, 0.5), (1, 0.3, 0.5), (1, 0.4, 0.8), (2, 0.2, 1.5)] {
            let s = lemma1_series(&p, ell, c, t, None).unwrap();
            let a = WeightVector::linear(&p.law, c).unwrap();
            let want = AnalyticContext::new(&p, a).unwrap().mgf_closed(ell, t).unwrap();
            assert!(s.tail_bound < 1e-10);
            assert!((s.value - want).abs() < 1e-9, "ℓ={ell} c={c} t={t}: {} vs {want}", s.value);
        }
    }

    #[test]
    fn binary_series_mixture_is_constant() {
        // critical weights: Σ ν(ℓ) · series = 2p/m for all t
        let (pp, q) = (0.5, 0.5);
        let p = params("0:0.5,2:0.5", q);
        let m = 2.0 * (q + (1.0 - q) * pp);
        for t in [0.0, 0.3, 1.0, 2.0] {
            let s = lemma1_series(&p, 2, 1.0 / m, t, Some(400)).unwrap();
            assert!((pp * s.value - 2.0 * pp / m).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn series_refuses_past_explosion() {
        let p = params("1:0.5,2:0.5", 0.5);
        assert!(matches!(
            lemma1_series(&p, 1, 1.0, 3.0, None),
            Err(Error::SeriesDiverges(_))
        ));
    }

    fn arb_params() -> impl Strategy<Value = ModelParams> {
        (proptest::collection::btree_map(0u32..=5, 0.05f64..1.0, 2..5), 0.05f64..0.95).prop_map(
            |(m, q)| {
                let total: f64 = m.values().sum();
                let law = crate::model::ReproductionLaw::new(
                    m.into_iter().map(|(k, p)| (k, p / total)),
                )
                .unwrap();
                ModelParams::new(law, q).unwrap()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(25))]
        #[test]
        fn spine_and_urn_agree(p in arb_params(), n in 1usize..=25) {
            let a = spine_dp(&p, n, Initial::Law).unwrap();
            let b = urn_dp(&p, n).unwrap();
            for k in 0..=n {
                prop_assert!(rel(a.scaled[k], b.scaled[k]) <= 1e-10, "n={} {} {}", k, a.scaled[k], b.scaled[k]);
            }
        }
    }
}
