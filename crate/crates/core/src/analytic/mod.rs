//! Closed-form and quadrature-based quantities.
//!
//! Everything here is built on the weighted product
//! `Π_a(x) = ∏ (1 − x a_j)^{ν(j)(1−q)/q}` on `[0, 1/‖a‖∞]` and its primitive
//! `I_a`. Near the right endpoint `Π_a` behaves like `(1 − x‖a‖∞)^α` with
//! `α` the summed exponent of the maximal weights, so integrals touching the
//! endpoint are evaluated in the coordinate `v = 1 − x‖a‖∞` with a
//! Gauss-Jacobi rule for the weight `v^α`; the remainder uses adaptive
//! Gauss-Kronrod. Points of the flow are carried in whichever coordinate
//! (`x` or `v`) is exact, so `1 − x a_j` never suffers cancellation.

mod asymptotics;
mod gamma;
mod rate;

pub use asymptotics::{gamma_constant, theorem2_constant, AsymptoticProfile};
pub use gamma::gamma_function;
pub use rate::{malthusian_rate, rate_limits, RateProfile};

use crate::error::{Error, Result};
use crate::model::{ModelParams, ReproductionLaw};
use crate::quadrature::{self, AdaptiveOptions, GaussJacobi};

/// Tolerance on `|i_a − q|` under which a context is classified critical.
pub const CRITICAL_TOLERANCE: f64 = 1e-10;
/// Tolerance used by [`explosion_time`] when comparing `i_a` with `q`.
pub const EXPLOSION_TOLERANCE: f64 = 1e-12;

const JACOBI_NODES: usize = 48;
const QUAD: AdaptiveOptions = AdaptiveOptions {
    rel_tol: 1e-14,
    abs_tol: 1e-300,
    max_panels: 4000,
};

/// Non-negative weights `a = (a_j)` indexed by the support of the law.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    support: Vec<u32>,
    weights: Vec<f64>,
    amax: f64,
    argmax: Vec<u32>,
}

impl WeightVector {
    /// Weights given as `(j, a_j)` pairs; the keys must be exactly the support.
    pub fn new<I>(law: &ReproductionLaw, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut pairs: Vec<(u32, f64)> = weights.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        let keys: Vec<u32> = pairs.iter().map(|p| p.0).collect();
        if keys != law.support() {
            return Err(Error::InvalidWeights(format!(
                "keys {keys:?} differ from the support {:?}",
                law.support()
            )));
        }
        let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if let Some(&bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {bad} is not a finite non-negative number")));
        }
        let amax = weights.iter().copied().fold(0.0, f64::max);
        if amax <= 0.0 {
            return Err(Error::InvalidWeights("all weights vanish".into()));
        }
        let argmax = keys
            .iter()
            .zip(&weights)
            .filter(|(_, &w)| w == amax)
            .map(|(&j, _)| j)
            .collect();
        Ok(Self {
            support: keys,
            weights,
            amax,
            argmax,
        })
    }

    pub fn from_fn(law: &ReproductionLaw, f: impl Fn(u32) -> f64) -> Result<Self> {
        Self::new(law, law.support().iter().map(|&j| (j, f(j))))
    }

    /// `a_j = c` for every support point.
    pub fn constant(law: &ReproductionLaw, c: f64) -> Result<Self> {
        Self::from_fn(law, |_| c)
    }

    /// `a_j = c·j`.
    pub fn linear(law: &ReproductionLaw, c: f64) -> Result<Self> {
        Self::from_fn(law, |j| c * j as f64)
    }

    /// The critical weights `a_j = j / m_{ν,q}`.
    pub fn critical(params: &ModelParams) -> Result<Self> {
        let m = malthusian_rate(params)?.m;
        Self::linear(&params.law, 1.0 / m)
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, j: u32) -> Option<f64> {
        self.support.binary_search(&j).ok().map(|i| self.weights[i])
    }

    /// `‖a‖∞`.
    pub fn amax(&self) -> f64 {
        self.amax
    }

    pub fn argmax_unique(&self) -> bool {
        self.argmax.len() == 1
    }

    /// The unique maximiser `j₁`, or [`Error::UnsupportedTie`].
    pub fn j1(&self) -> Result<u32> {
        match self.argmax.as_slice() {
            [j] => Ok(*j),
            many => Err(Error::UnsupportedTie(many.to_vec())),
        }
    }

    /// Maximiser of `a_j` over `j ≠ j₁`, if any other point exists.
    pub fn j2(&self) -> Result<Option<u32>> {
        let j1 = self.j1()?;
        Ok(self
            .support
            .iter()
            .zip(&self.weights)
            .filter(|(&j, _)| j != j1)
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(&j, _)| j))
    }
}

/// Position of the explosion time relative to the critical case `i_a = q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    /// `i_a < q`: the moment generating functions explode in finite time.
    Explosive,
    /// `|i_a − q| ≤ 1e-10`.
    Critical,
    /// `i_a > q`.
    NonExplosive,
}

/// `(1 − r) + v·r` for a factor whose weight is `r·‖a‖∞` with `r < 1`.
#[derive(Debug, Clone, Copy)]
struct InnerFactor {
    ratio: f64,
    exponent: f64,
}

/// A point on `[0, 1/‖a‖∞]` stored in the coordinate it was solved in.
#[derive(Debug, Clone, Copy)]
struct Point {
    x: f64,
    v: f64,
    near_end: bool,
}

/// Precomputed state for `Π_a`, `I_a`, `i_a` and the flow at fixed `(ν, q, a)`.
#[derive(Debug, Clone)]
pub struct AnalyticContext {
    params: ModelParams,
    a: WeightVector,
    exponents: Vec<f64>,
    alpha: f64,
    inner: Vec<InnerFactor>,
    jacobi: GaussJacobi,
    split: f64,
    tail_at_split: f64,
    head_at_half: f64,
    i_a: f64,
    criticality: Criticality,
}

impl AnalyticContext {
    pub fn new(params: &ModelParams, a: WeightVector) -> Result<Self> {
        if a.support() != params.law.support() {
            return Err(Error::InvalidWeights("weights do not match the law's support".into()));
        }
        let exponents: Vec<f64> = params
            .law
            .support()
            .iter()
            .map(|&j| params.exponent(j))
            .collect();
        let amax = a.amax();
        let mut alpha = 0.0;
        let mut inner = Vec::new();
        for (&w, &e) in a.weights().iter().zip(&exponents) {
            if w == amax {
                alpha += e;
            } else if w > 0.0 {
                inner.push(InnerFactor {
                    ratio: w / amax,
                    exponent: e,
                });
            }
        }
        // nearest singularity of the smooth factor sits at v = −(1−r)/r
        let split = inner
            .iter()
            .map(|f| (1.0 - f.ratio) / f.ratio)
            .fold(1.0, f64::min);
        let mut ctx = Self {
            params: params.clone(),
            a,
            exponents,
            alpha,
            inner,
            jacobi: GaussJacobi::new(JACOBI_NODES, alpha),
            split,
            tail_at_split: 0.0,
            head_at_half: 0.0,
            i_a: 0.0,
            criticality: Criticality::Critical,
        };
        ctx.tail_at_split = ctx.jacobi_tail(split);
        ctx.i_a = ctx.tail_v(1.0)?;
        ctx.head_at_half = ctx.head_x(0.5 / amax)?;
        let q = params.q();
        ctx.criticality = if (ctx.i_a - q).abs() <= CRITICAL_TOLERANCE {
            Criticality::Critical
        } else if ctx.i_a < q {
            Criticality::Explosive
        } else {
            Criticality::NonExplosive
        };
        Ok(ctx)
    }

    /// Context for the critical weights `a_j = j / m_{ν,q}`.
    pub fn critical(params: &ModelParams) -> Result<Self> {
        Self::new(params, WeightVector::critical(params)?)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn weights(&self) -> &WeightVector {
        &self.a
    }

    /// Exponents `ν(j)(1−q)/q` aligned with the support.
    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// `i_a = I_a(1/‖a‖∞)`.
    pub fn i_a(&self) -> f64 {
        self.i_a
    }

    pub fn criticality(&self) -> Criticality {
        self.criticality
    }

    /// `β = 1 + α` with `α` the summed exponent of the maximal weights.
    pub fn beta(&self) -> f64 {
        1.0 + self.alpha
    }

    pub fn right_end(&self) -> f64 {
        1.0 / self.a.amax()
    }

    fn smooth_factor(&self, v: f64) -> f64 {
        let log: f64 = self
            .inner
            .iter()
            .map(|f| f.exponent * ((1.0 - f.ratio) + v * f.ratio).ln())
            .sum();
        log.exp()
    }

    fn pi_v(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        (self.alpha * v.ln()).exp() * self.smooth_factor(v)
    }

    fn pi_x(&self, x: f64) -> f64 {
        let mut log = 0.0;
        for (&w, &e) in self.a.weights().iter().zip(&self.exponents) {
            if w > 0.0 {
                let base = 1.0 - x * w;
                if base <= 0.0 {
                    return 0.0;
                }
                log += e * base.ln();
            }
        }
        log.exp()
    }

    /// `(1/‖a‖∞) ∫₀^v u^α g(vy) dy`-scaled Gauss-Jacobi tail, valid for `v ≤ split`.
    fn jacobi_tail(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let scale = ((self.alpha + 1.0) * v.ln()).exp();
        scale * self.jacobi.integrate(|y| self.smooth_factor(v * y)) / self.a.amax()
    }

    /// `∫_{x(v)}^{1/‖a‖∞} Π_a`, where `x(v) = (1 − v)/‖a‖∞`.
    fn tail_v(&self, v: f64) -> Result<f64> {
        if v <= self.split {
            return Ok(self.jacobi_tail(v));
        }
        let (rest, _) = quadrature::integrate(|u| self.pi_v(u), self.split, v, QUAD)?;
        Ok(self.tail_at_split + rest / self.a.amax())
    }

    fn head_x(&self, x: f64) -> Result<f64> {
        let half = 0.5 / self.a.amax();
        if x <= half {
            let (v, _) = quadrature::integrate(|y| self.pi_x(y), 0.0, x, QUAD)?;
            Ok(v)
        } else {
            Ok(self.i_a - self.tail_v(1.0 - x * self.a.amax())?)
        }
    }

    fn check_x(&self, x: f64) -> Result<f64> {
        let end = self.right_end();
        if !(x >= 0.0 && x <= end * (1.0 + 4.0 * f64::EPSILON)) {
            return Err(Error::Domain(format!("x = {x} outside [0, {end}]")));
        }
        Ok(x.min(end))
    }

    /// `Π_a(x)` on `[0, 1/‖a‖∞]`.
    pub fn pi_weighted(&self, x: f64) -> Result<f64> {
        let x = self.check_x(x)?;
        Ok(self.pi_x(x))
    }

    /// `I_a(x) = ∫₀ˣ Π_a(y) dy`.
    pub fn integral_i(&self, x: f64) -> Result<f64> {
        let x = self.check_x(x)?;
        self.head_x(x)
    }

    /// `∫ₓ^{1/‖a‖∞} Π_a(y) dy`, accurate in relative terms near the endpoint.
    pub fn tail_integral(&self, x: f64) -> Result<f64> {
        let x = self.check_x(x)?;
        self.tail_v(1.0 - x * self.a.amax())
    }

    /// `I_a^{-1}(y)` for `y ∈ [0, i_a]`.
    pub fn inverse_integral(&self, y: f64) -> Result<f64> {
        if !(0.0..=self.i_a).contains(&y) {
            return Err(Error::Domain(format!("y = {y} outside [0, {}]", self.i_a)));
        }
        Ok(if y <= self.head_at_half {
            self.solve_head(y)?.x
        } else {
            self.solve_tail(self.i_a - y)?.x
        })
    }

    fn solve_head(&self, target: f64) -> Result<Point> {
        let (mut lo, mut hi) = (0.0, 0.5 / self.a.amax());
        let mut x = target.clamp(lo, hi);
        for _ in 0..200 {
            let r = self.head_x(x)? - target;
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - r / self.pi_x(x);
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - x).abs();
            x = next;
            if step <= 1e-16 * x || hi - lo <= 1e-16 * hi {
                break;
            }
        }
        Ok(Point {
            x,
            v: 1.0 - x * self.a.amax(),
            near_end: false,
        })
    }

    /// Solves `tail_v(v) = target` for `v ∈ [0, 1/2]` to relative precision.
    fn solve_tail(&self, target: f64) -> Result<Point> {
        let amax = self.a.amax();
        let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
        let p = self.alpha + 1.0;
        let g0 = self.smooth_factor(0.0);
        let mut v = ((target * amax * p / g0).ln() / p).exp().clamp(0.0, hi);
        if target <= 0.0 {
            v = 0.0;
        }
        for _ in 0..300 {
            if v == 0.0 || target <= 0.0 {
                break;
            }
            let r = self.tail_v(v)? - target;
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                hi = v;
            } else {
                lo = v;
            }
            let newton = v - r * amax / self.pi_v(v);
            let next = if newton > lo && newton < hi {
                newton
            } else if lo > 0.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * hi
            };
            let step = (next - v).abs();
            v = next;
            if step <= 1e-16 * v || hi - lo <= 1e-16 * hi {
                break;
            }
        }
        Ok(Point {
            x: (1.0 - v) / amax,
            v,
            near_end: true,
        })
    }

    fn one_minus(&self, p: Point, w: f64) -> f64 {
        let amax = self.a.amax();
        if w == amax {
            p.v
        } else if p.near_end {
            let r = w / amax;
            (1.0 - r) + p.v * r
        } else {
            1.0 - p.x * w
        }
    }

    fn pi_at(&self, p: Point) -> f64 {
        if p.near_end {
            self.pi_v(p.v)
        } else {
            self.pi_x(p.x)
        }
    }

    /// The explosion time `ρ(a)`; infinite unless the context is explosive.
    pub fn explosion_time(&self) -> f64 {
        match self.criticality {
            Criticality::Explosive if self.i_a < self.params.q() - EXPLOSION_TOLERANCE => {
                -(-self.i_a / self.params.q()).ln_1p()
            }
            _ => f64::INFINITY,
        }
    }

    fn flow_point(&self, t: f64) -> Result<Point> {
        let rho = self.explosion_time();
        if !(t >= 0.0 && t < rho) {
            return Err(Error::Domain(format!("t = {t} outside [0, ρ(a) = {rho})")));
        }
        let q = self.params.q();
        let head = -q * (-t).exp_m1();
        if head <= self.head_at_half {
            return self.solve_head(head);
        }
        let tail = match self.criticality {
            Criticality::Critical => q * (-t).exp(),
            _ => (self.i_a - q) + q * (-t).exp(),
        };
        self.solve_tail(tail)
    }

    /// The flow `A(t)` with `qA(t) = I_a^{-1}(q(1 − e^{−t}))` and its
    /// derivative `A'(t) = e^{−t} / Π_a(qA(t))`.
    pub fn flow_a(&self, t: f64) -> Result<(f64, f64)> {
        let p = self.flow_point(t)?;
        let q = self.params.q();
        Ok((p.x / q, (-t).exp() / self.pi_at(p)))
    }

    fn moments_at(&self, t: f64) -> Result<Vec<f64>> {
        let p = self.flow_point(t)?;
        let a_prime = (-t).exp() / self.pi_at(p);
        Ok(self
            .a
            .weights()
            .iter()
            .map(|&w| {
                if w == 0.0 {
                    0.0
                } else {
                    w * a_prime / self.one_minus(p, w)
                }
            })
            .collect())
    }

    /// `M_ℓ(a, t) = a_ℓ A'(t) / (1 − q a_ℓ A(t))`.
    pub fn mgf_closed(&self, ell: u32, t: f64) -> Result<f64> {
        let i = self
            .params
            .law
            .index_of(ell)
            .ok_or_else(|| Error::Domain(format!("{ell} is not a support point")))?;
        Ok(self.moments_at(t)?[i])
    }

    /// All `M_j(a, t)` aligned with the support.
    pub fn mgf_vector(&self, t: f64) -> Result<Vec<f64>> {
        self.moments_at(t)
    }

    /// `φ(t) = (1−q)⟨ν; M(a,t)⟩ − 1`, evaluated through the flow as
    /// `(1−q) A'(t) G(0, qA(t)) − 1`.
    pub fn phi(&self, t: f64) -> Result<f64> {
        let m = self.moments_at(t)?;
        let dot: f64 = self
            .params
            .law
            .masses()
            .iter()
            .zip(&m)
            .map(|(p, mj)| p * mj)
            .sum();
        Ok((1.0 - self.params.q()) * dot - 1.0)
    }
}

/// `ρ(a) = −log(1 − i_a/q)` when `i_a < q`, else `∞`.
pub fn explosion_time(params: &ModelParams, a: &WeightVector) -> Result<f64> {
    Ok(AnalyticContext::new(params, a.clone())?.explosion_time())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_law;

    fn params(text: &str, q: f64) -> ModelParams {
        ModelParams::new(parse_law(text).unwrap(), q).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn weight_vector_validation() {
        let law = parse_law("0:0.5,2:0.5").unwrap();
        assert!(WeightVector::new(&law, [(0, 1.0)]).is_err());
        assert!(WeightVector::new(&law, [(0, 0.0), (2, 0.0)]).is_err());
        assert!(WeightVector::new(&law, [(0, -1.0), (2, 1.0)]).is_err());
        let a = WeightVector::new(&law, [(2, 3.0), (0, 1.0)]).unwrap();
        assert_eq!(a.amax(), 3.0);
        assert_eq!(a.j1().unwrap(), 2);
        assert_eq!(a.j2().unwrap(), Some(0));
        let tie = WeightVector::constant(&law, 2.0).unwrap();
        assert!(!tie.argmax_unique());
        assert_eq!(tie.j1(), Err(Error::UnsupportedTie(vec![0, 2])));
    }

    #[test]
    fn pi_examples() {
        let p = params("0:0.5,2:0.5", 0.5);
        let ctx = AnalyticContext::new(&p, WeightVector::linear(&p.law, 1.0).unwrap()).unwrap();
        assert!((ctx.pi_weighted(0.25).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(ctx.pi_weighted(0.0).unwrap(), 1.0);
        assert_eq!(ctx.pi_weighted(0.5).unwrap(), 0.0);
        assert!(ctx.pi_weighted(0.51).is_err());
        assert!(ctx.pi_weighted(-0.01).is_err());
        assert!(ctx.integral_i(0.6).is_err());
    }

    #[test]
    fn integral_examples() {
        let p = params("0:0.5,2:0.5", 0.5);
        let ctx = AnalyticContext::new(&p, WeightVector::linear(&p.law, 1.0).unwrap()).unwrap();
        assert!(rel(ctx.integral_i(0.5).unwrap(), 1.0 / 3.0) < 1e-14);
        assert_eq!(ctx.integral_i(0.0).unwrap(), 0.0);

        // mpmath: ∫₀^{1/2} √((1−t)(1−2t)) dt
        let p = params("1:0.5,2:0.5", 0.5);
        let ctx = AnalyticContext::new(&p, WeightVector::linear(&p.law, 1.0).unwrap()).unwrap();
        assert!(rel(ctx.integral_i(0.5).unwrap(), 0.297_096_844_982_471_185_8) < 1e-13);
        assert!((ctx.integral_i(0.5).unwrap() - 0.297_097_5).abs() < 1e-6);
    }

    #[test]
    fn integrals_on_generic_weights_match_mpmath() {
        // ties at the maximum (a_2 = a_3 = 1.3), mpmath reference values
        let p = params("1:0.2,2:0.5,3:0.3", 0.4);
        let a = WeightVector::new(&p.law, [(1, 0.7), (2, 1.3), (3, 1.3)]).unwrap();
        let ctx = AnalyticContext::new(&p, a).unwrap();
        assert!(rel(ctx.integral_i(0.3).unwrap(), 0.224_860_003_028_347_934_52) < 1e-12);
        assert!(rel(ctx.i_a(), 0.330_044_869_180_365_799) < 1e-12);
        assert!((ctx.beta() - (1.0 + 0.8 * 0.6 / 0.4)).abs() < 1e-15);

        // nearly tied weights put a second singularity close to the endpoint
        let p = params("1:0.5,2:0.5", 0.5);
        let a = WeightVector::new(&p.law, [(1, 2.0), (2, 1.9)]).unwrap();
        let ctx = AnalyticContext::new(&p, a).unwrap();
        assert!(rel(ctx.i_a(), 0.255_843_796_008_974_546_35) < 1e-12);
        assert!(rel(ctx.integral_i(0.2).unwrap(), 0.160_995_238_065_284_560_7) < 1e-12);
    }

    #[test]
    fn inverse_recovers_argument() {
        let p = params("0:0.2,1:0.3,3:0.5", 0.7);
        let ctx = AnalyticContext::new(&p, WeightVector::linear(&p.law, 1.0).unwrap()).unwrap();
        for k in 0..=20 {
            let x = ctx.right_end() * k as f64 / 20.0;
            let y = ctx.integral_i(x).unwrap();
            let back = ctx.inverse_integral(y).unwrap();
            assert!((back - x).abs() < 1e-13, "x={x} back={back}");
        }
        assert!(ctx.inverse_integral(ctx.i_a() * 1.01).is_err());
    }

    #[test]
    fn explosion_time_examples() {
        let p = params("0:0.5,2:0.5", 0.5);
        let a = WeightVector::linear(&p.law, 1.0).unwrap();
        assert!((explosion_time(&p, &a).unwrap() - 3f64.ln()).abs() < 1e-13);
        for text in ["0:0.5,2:0.5", "1:0.5,2:0.5", "0:0.1,1:0.2,2:0.3,5:0.4"] {
            for q in [0.2, 0.5, 0.9] {
                let p = params(text, q);
                let a = WeightVector::constant(&p.law, 2.0).unwrap();
                assert!((explosion_time(&p, &a).unwrap() - 2f64.ln()).abs() < 1e-12);
            }
        }
        let p = params("1:0.5,2:0.5", 0.5);
        let ctx = AnalyticContext::critical(&p).unwrap();
        assert_eq!(ctx.criticality(), Criticality::Critical);
        assert!((ctx.i_a() - 0.5).abs() < 1e-12);
        assert_eq!(ctx.explosion_time(), f64::INFINITY);
        let small = WeightVector::linear(&p.law, 0.1).unwrap();
        assert_eq!(
            AnalyticContext::new(&p, small).unwrap().criticality(),
            Criticality::NonExplosive
        );
    }

    #[test]
    fn explosion_time_matches_series_radius() {
        // ρ for a_j = j: 1 − e^{−ρ} = 1/m
        let p = params("1:0.5,2:0.5", 0.5);
        let m = malthusian_rate(&p).unwrap().m;
        let rho = explosion_time(&p, &WeightVector::linear(&p.law, 1.0).unwrap()).unwrap();
        assert!((-(-rho).exp_m1() - 1.0 / m).abs() < 1e-13);
    }

    #[test]
    fn flow_at_origin() {
        let p = params("1:0.5,2:0.5", 0.5);
        let ctx = AnalyticContext::critical(&p).unwrap();
        let (a, ap) = ctx.flow_a(0.0).unwrap();
        assert_eq!(a, 0.0);
        assert_eq!(ap, 1.0);
        assert!(ctx.flow_a(-1.0).is_err());
    }

    #[test]
    fn flow_constant_weights_closed_form() {
        let (c, q) = (2.0, 0.5);
        let p = params("0:0.3,1:0.3,4:0.4", q);
        let ctx = AnalyticContext::new(&p, WeightVector::constant(&p.law, c).unwrap()).unwrap();
        for t in [0.05, 0.2, 0.5, 0.6, 0.69] {
            let (a, ap) = ctx.flow_a(t).unwrap();
            let u = 1.0 - c * (-(-t).exp_m1());
            let want = (1.0 - u.powf(q)) / (q * c);
            let want_prime = (-t).exp() * u.powf(q - 1.0);
            assert!(rel(a, want) < 1e-12, "t={t}: {a} vs {want}");
            assert!(rel(ap, want_prime) < 1e-11, "t={t}: {ap} vs {want_prime}");
        }
        assert!(ctx.flow_a(2f64.ln()).is_err());
    }

    #[test]
    fn flow_tends_to_endpoint_in_critical_case() {
        let p = params("1:0.5,2:0.5", 0.5);
        let ctx = AnalyticContext::critical(&p).unwrap();
        let (a, _) = ctx.flow_a(60.0).unwrap();
        let target = 1.0 / (p.q() * ctx.weights().amax());
        assert!(rel(a, target) < 1e-12);
    }

    #[test]
    fn flow_derivative_consistency() {
        // d/dt I_a(qA(t)) = q e^{−t}
        let p = params("0:0.25,1:0.25,4:0.5", 0.3);
        let ctx = AnalyticContext::new(&p, WeightVector::linear(&p.law, 0.5).unwrap()).unwrap();
        let rho = ctx.explosion_time();
        let h = 1e-5;
        for k in 1..=50 {
            let t = 0.9 * rho * k as f64 / 51.0;
            let f = |s: f64| ctx.integral_i(p.q() * ctx.flow_a(s).unwrap().0).unwrap();
            let fd = (f(t + h) - f(t - h)) / (2.0 * h);
            assert!((fd - p.q() * (-t).exp()).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn mgf_examples() {
        let p = params("0:0.2,1:0.3,3:0.5", 0.6);
        let ctx = AnalyticContext::new(&p, WeightVector::constant(&p.law, 2.0).unwrap()).unwrap();
        for t in [0.0_f64, 0.1, 0.4, 0.65] {
            let want = 2.0 * (-t).exp() / (1.0 - 2.0 * (-(-t).exp_m1()));
            for &l in p.law.support() {
                assert!(rel(ctx.mgf_closed(l, t).unwrap(), want) < 1e-11);
            }
        }
        let a = WeightVector::new(&p.law, [(0, 0.0), (1, 0.4), (3, 0.9)]).unwrap();
        let ctx = AnalyticContext::new(&p, a).unwrap();
        assert_eq!(ctx.mgf_closed(0, 0.3).unwrap(), 0.0);
        assert!((ctx.mgf_closed(1, 0.0).unwrap() - 0.4).abs() < 1e-15);
        assert!(ctx.mgf_closed(2, 0.0).is_err());
    }

    #[test]
    fn phi_examples() {
        let p = params("1:0.5,2:0.5", 0.5);
        let ctx = AnalyticContext::critical(&p).unwrap();
        let m = malthusian_rate(&p).unwrap().m;
        let want = 0.5 * (0.5 / m + 0.5 * 2.0 / m) - 1.0;
        assert!((ctx.phi(0.0).unwrap() - want).abs() < 1e-14);
        assert!((ctx.phi(0.0).unwrap() + 0.554_346).abs() < 1e-5);
        let beta = p.beta();
        assert!((ctx.phi(30.0).unwrap() + 1.0 / beta).abs() < 1e-4);
        assert!((ctx.phi(40.0).unwrap() + 1.0 / beta).abs() < 1e-5);

        // binary laws: φ is constant and equal to −1/β
        for (pp, q) in [(0.3, 0.4), (0.5, 0.5), (0.8, 0.2)] {
            let p = params(&format!("0:{},2:{}", 1.0 - pp, pp), q);
            let ctx = AnalyticContext::critical(&p).unwrap();
            let want = -q / (q + (1.0 - q) * pp);
            for t in [0.0, 0.5, 3.0, 20.0] {
                assert!((ctx.phi(t).unwrap() - want).abs() < 1e-12, "t={t}");
            }
        }
    }

    #[test]
    fn phi_approaches_limit_monotonically() {
        let p = params("0:0.25,1:0.25,4:0.5", 0.3);
        let ctx = AnalyticContext::critical(&p).unwrap();
        let beta = p.beta();
        let gaps: Vec<f64> = (10..=40)
            .map(|t| (ctx.phi(t as f64).unwrap() + 1.0 / beta).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(gaps.last().unwrap() < &1e-5);
    }
}
