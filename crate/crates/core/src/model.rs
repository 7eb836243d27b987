//! Reproduction laws, the memory parameter and elementary law functionals.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Masses below this are treated as absent from the support.
pub const PRUNE_BELOW: f64 = 1e-15;
/// Largest deviation of the total mass from 1 that is silently renormalized.
pub const RENORMALIZE_WINDOW: f64 = 1e-9;
/// Largest offspring count accepted by the text and JSON parsers.
pub const MAX_OFFSPRING: u32 = 1_000_000;

/// A finitely supported, non-degenerate offspring distribution.
///
/// The support is stored in increasing order; every stored mass is strictly
/// positive and the masses sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproductionLaw {
    support: Vec<u32>,
    masses: Vec<f64>,
}

impl ReproductionLaw {
    pub fn new<I>(masses: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut merged: BTreeMap<u32, f64> = BTreeMap::new();
        for (count, mass) in masses {
            if mass < 0.0 || mass.is_nan() {
                return Err(Error::NegativeMass { count, mass });
            }
            *merged.entry(count).or_insert(0.0) += mass;
        }
        merged.retain(|_, m| *m >= PRUNE_BELOW);
        let total: f64 = merged.values().sum();
        if !total.is_finite() || (total - 1.0).abs() > RENORMALIZE_WINDOW {
            return Err(Error::NotNormalized(total));
        }
        if merged.len() < 2 {
            let k = merged.keys().next().copied().unwrap_or(0);
            return Err(Error::DegenerateLaw(k));
        }
        let (support, masses) = merged.into_iter().map(|(k, m)| (k, m / total)).unzip();
        Ok(Self { support, masses })
    }

    /// Support points in increasing order.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    /// Masses aligned with [`support`](Self::support).
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.support.iter().copied().zip(self.masses.iter().copied())
    }

    pub fn mass(&self, k: u32) -> f64 {
        self.index_of(k).map_or(0.0, |i| self.masses[i])
    }

    pub fn index_of(&self, k: u32) -> Option<usize> {
        self.support.binary_search(&k).ok()
    }

    pub fn contains(&self, k: u32) -> bool {
        self.index_of(k).is_some()
    }

    /// Largest support point `k*`.
    pub fn kstar(&self) -> u32 {
        *self.support.last().expect("validated law has non-empty support")
    }

    /// Mean offspring number `ν̄ = Σ j ν(j)`.
    pub fn mean(&self) -> f64 {
        self.iter().map(|(j, p)| j as f64 * p).sum()
    }

    /// `Σ j^ℓ ν(j)` with the convention `0^0 = 1`.
    pub fn moment(&self, ell: u32) -> f64 {
        let e = i32::try_from(ell).unwrap_or(i32::MAX);
        self.iter().map(|(j, p)| (j as f64).powi(e) * p).sum()
    }

    /// Inverse-CDF sample from a uniform variate in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> u32 {
        let mut acc = 0.0;
        for (k, p) in self.iter() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.kstar()
    }

    /// Text form `k:p,k:p,...` that [`parse_law`] reads back.
    pub fn to_text(&self) -> String {
        self.iter()
            .map(|(k, p)| format!("{k}:{p}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for ReproductionLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for ReproductionLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_law(s)
    }
}

/// Parses `"k:p,k:p,..."` into a validated law.
pub fn parse_law(text: &str) -> Result<ReproductionLaw> {
    let mut entries = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, p) = item
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected `k:p`, found `{item}`")))?;
        let k = parse_count(k.trim())?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("invalid probability `{}`", p.trim())))?;
        entries.push((k, p));
    }
    if entries.is_empty() {
        return Err(Error::Parse("empty law".into()));
    }
    ReproductionLaw::new(entries)
}

fn parse_count(s: &str) -> Result<u32> {
    let k: u64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("invalid offspring count `{s}`")))?;
    if k > MAX_OFFSPRING as u64 {
        return Err(Error::Parse(format!(
            "offspring count {k} exceeds the limit {MAX_OFFSPRING}"
        )));
    }
    Ok(k as u32)
}

/// A reproduction law together with the memory parameter `q ∈ (0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub law: ReproductionLaw,
    q: f64,
}

impl ModelParams {
    pub fn new(law: ReproductionLaw, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidMemory(q));
        }
        Ok(Self { law, q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Exponent `ν(j)(1−q)/q` carried by support point `j` in `Π`.
    pub fn exponent(&self, j: u32) -> f64 {
        self.law.mass(j) * (1.0 - self.q) / self.q
    }

    /// `β = 1 + (1−q)ν(k*)/q`.
    pub fn beta(&self) -> f64 {
        1.0 + self.exponent(self.law.kstar())
    }
}

/// Initial condition of the population: `Z(1) ~ ν` or `Z(1) = ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Initial {
    #[default]
    Law,
    Fixed(u32),
}

impl Initial {
    pub fn check(self, law: &ReproductionLaw) -> Result<()> {
        match self {
            Initial::Fixed(l) if !law.contains(l) => Err(Error::Domain(format!(
                "initial offspring count {l} is not in the support {:?}",
                law.support()
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Initial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Initial::Law => f.write_str("law"),
            Initial::Fixed(l) => write!(f, "{l}"),
        }
    }
}

impl FromStr for Initial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "law" => Ok(Initial::Law),
            other => parse_count(other).map(Initial::Fixed),
        }
    }
}

/// On-disk law description: `{"law": {"0": 0.5, "2": 0.5}, "q": 0.5}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LawFile {
    pub law: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

impl LawFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_params(law: &ReproductionLaw, q: Option<f64>) -> Self {
        Self {
            law: law.iter().map(|(k, p)| (k.to_string(), p)).collect(),
            q,
        }
    }

    pub fn to_law(&self) -> Result<ReproductionLaw> {
        let entries = self
            .law
            .iter()
            .map(|(k, p)| parse_count(k.trim()).map(|k| (k, *p)))
            .collect::<Result<Vec<_>>>()?;
        ReproductionLaw::new(entries)
    }
}
