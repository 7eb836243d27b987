//! Numerical integration of the factorial-moment system
//! `M′_ℓ = M_ℓ (q M_ℓ + φ)`, `φ = (1−q)⟨ν; M⟩ − 1`, `M(0) = a`, and the
//! residual of the transport equation
//! `∂_t G = (q + sφ) ∂_s G + φ G` for `G(t, s) = Σ_j ν(j) M_j / (1 − s M_j)`.

use std::fmt::Write as _;

use crate::analytic::{explosion_time, WeightVector};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::report::num;

/// State norm at which integration stops with [`Error::BlowUpDetected`].
pub const BLOW_UP_NORM: f64 = 1e8;
/// Smallest step the controller may take.
pub const MIN_STEP: f64 = 1e-14;
const ABS_FLOOR: f64 = 1e-14;
const MAX_STEPS: usize = 2_000_000;

/// `M(a, t)` sampled on an increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub support: Vec<u32>,
    pub grid: Vec<f64>,
    /// `values[k][i]` is `M_{support[i]}(a, grid[k])`.
    pub values: Vec<Vec<f64>>,
    pub accepted: usize,
    pub rejected: usize,
}

impl OdeSolution {
    pub fn column(&self, j: u32) -> Option<Vec<f64>> {
        let i = self.support.iter().position(|&s| s == j)?;
        Some(self.values.iter().map(|v| v[i]).collect())
    }

    /// CSV with a `t` column followed by one column per support point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for j in &self.support {
            write!(out, ",M{j}").unwrap();
        }
        out.push('\n');
        for (t, row) in self.grid.iter().zip(&self.values) {
            out.push_str(&num(*t));
            for v in row {
                write!(out, ",{}", num(*v)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

struct System {
    q: f64,
    nu: Vec<f64>,
}

impl System {
    fn new(params: &ModelParams) -> Self {
        Self {
            q: params.q(),
            nu: params.law.masses().to_vec(),
        }
    }

    fn phi(&self, m: &[f64]) -> f64 {
        (1.0 - self.q) * self.nu.iter().zip(m).map(|(n, v)| n * v).sum::<f64>() - 1.0
    }

    fn rhs(&self, m: &[f64], out: &mut [f64]) {
        let phi = self.phi(m);
        for (o, &v) in out.iter_mut().zip(m) {
            *o = v * (self.q * v + phi);
        }
    }
}

// Dormand-Prince 5(4) tableau; the system is autonomous, so the nodes
// are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince integration from `M(0) = a`, recording the state
/// at every time in `stops` (sorted, non-negative). With `stops` empty every
/// accepted step up to `t_end` is recorded.
fn run(params: &ModelParams, a: &WeightVector, t_end: f64, rel_tol: f64, stops: &[f64]) -> Result<OdeSolution> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Domain(format!("rel_tol = {rel_tol} must lie in (0, 1)")));
    }
    let sys = System::new(params);
    let dim = a.weights().len();
    let mut y = a.weights().to_vec();
    let mut t = 0.0;
    let mut sol = OdeSolution {
        support: a.support().to_vec(),
        grid: vec![],
        values: vec![],
        accepted: 0,
        rejected: 0,
    };
    let dense = stops.is_empty();
    let mut stop_iter = stops.iter().copied().peekable();
    while stop_iter.peek() == Some(&0.0) {
        stop_iter.next();
        sol.grid.push(0.0);
        sol.values.push(y.clone());
    }
    if dense {
        sol.grid.push(0.0);
        sol.values.push(y.clone());
    }
    let t_final = if dense { t_end } else { stops.last().copied().unwrap_or(0.0) };

    let mut k = vec![vec![0.0; dim]; 7];
    sys.rhs(&y, &mut k[0]);
    let scale0 = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let mut h = (rel_tol.powf(0.2) * 0.1 / scale0).min(t_final.max(MIN_STEP));
    let mut err_prev: f64 = 1e-4;
    let mut stage = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];

    while t < t_final {
        if sol.accepted + sol.rejected > MAX_STEPS {
            return Err(Error::StepSizeUnderflow(t));
        }
        let target = if dense { t_final } else { *stop_iter.peek().expect("pending stop") };
        let hit = t + h >= target;
        let step = if hit { target - t } else { h };
        for s in 1..7 {
            for i in 0..dim {
                let incr: f64 = (0..s).map(|r| A[s][r] * k[r][i]).sum();
                stage[i] = y[i] + step * incr;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            sys.rhs(&stage, &mut tail[0]);
        }
        // stage 7 evaluated at the fifth-order solution (FSAL)
        let mut err = 0.0;
        for i in 0..dim {
            y5[i] = y[i] + step * (0..7).map(|r| B5[r] * k[r][i]).sum::<f64>();
            let y4 = y[i] + step * (0..7).map(|r| B4[r] * k[r][i]).sum::<f64>();
            let sc = ABS_FLOOR + rel_tol * y[i].abs().max(y5[i].abs());
            err += ((y5[i] - y4) / sc).powi(2);
        }
        let err = (err / dim as f64).sqrt();
        if !err.is_finite() || err > 1.0 {
            sol.rejected += 1;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.1) } else { 0.1 };
            h = step * factor;
            if h < MIN_STEP {
                return Err(Error::StepSizeUnderflow(t));
            }
            continue;
        }
        sol.accepted += 1;
        t = if hit { target } else { t + step };
        std::mem::swap(&mut y, &mut y5);
        k.swap(0, 6);
        let norm = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if norm > BLOW_UP_NORM || !norm.is_finite() {
            return Err(Error::BlowUpDetected { t, norm });
        }
        if dense || hit {
            sol.grid.push(t);
            sol.values.push(y.clone());
            if !dense {
                stop_iter.next();
                while stop_iter.peek() == Some(&t) {
                    stop_iter.next();
                    sol.grid.push(t);
                    sol.values.push(y.clone());
                }
            }
        }
        // proportional-integral controller
        let err = err.max(1e-10);
        let factor = 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
        err_prev = err;
        let grown = step * factor.clamp(0.2, 5.0);
        h = if hit { grown.max(h) } else { grown };
        if h < MIN_STEP {
            return Err(Error::StepSizeUnderflow(t));
        }
    }
    Ok(sol)
}

fn check_before_explosion(params: &ModelParams, a: &WeightVector, t_max: f64) -> Result<()> {
    let rho = explosion_time(params, a)?;
    if !(t_max >= 0.0) || t_max >= rho {
        return Err(Error::Domain(format!(
            "t_max = {t_max} must lie in [0, ρ(a)) with ρ(a) = {rho}"
        )));
    }
    Ok(())
}

/// Integrates `M(a, ·)` on `[0, t_max]`, recording every accepted step.
/// Requires `t_max < ρ(a)`; the intended range is `t_max ≤ 0.9 ρ(a)`.
pub fn integrate_m(params: &ModelParams, a: &WeightVector, t_max: f64, rel_tol: f64) -> Result<OdeSolution> {
    check_before_explosion(params, a, t_max)?;
    run(params, a, t_max, rel_tol, &[])
}

/// Integrates `M(a, ·)` and samples it exactly at the given increasing times,
/// all of which must lie before `ρ(a)`.
pub fn integrate_m_at(params: &ModelParams, a: &WeightVector, times: &[f64], rel_tol: f64) -> Result<OdeSolution> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("sample times must be sorted".into()));
    }
    let Some(&last) = times.last() else {
        return Err(Error::Domain("no sample times".into()));
    };
    check_before_explosion(params, a, last)?;
    if times[0] < 0.0 {
        return Err(Error::Domain("sample times must be non-negative".into()));
    }
    run(params, a, last, rel_tol, times)
}

/// Integrates up to `t_max` without the explosion-time guard. Past `ρ(a)`
/// this returns [`Error::BlowUpDetected`] at the time the state norm crosses
/// [`BLOW_UP_NORM`].
pub fn integrate_unguarded(params: &ModelParams, a: &WeightVector, t_max: f64, rel_tol: f64) -> Result<OdeSolution> {
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::Domain(format!("t_max = {t_max} must be finite and non-negative")));
    }
    run(params, a, t_max, rel_tol, &[])
}

/// Time at which the integrator reports blow-up, searching up to `t_max`.
pub fn blow_up_time(params: &ModelParams, a: &WeightVector, t_max: f64, rel_tol: f64) -> Result<Option<f64>> {
    match integrate_unguarded(params, a, t_max, rel_tol) {
        Ok(_) => Ok(None),
        Err(Error::BlowUpDetected { t, .. }) => Ok(Some(t)),
        Err(e) => Err(e),
    }
}

/// Largest residual of the transport equation on a grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PdeResidual {
    pub max_residual: f64,
    pub h_t: f64,
    pub h_s: f64,
}

/// Tolerance used for the ODE solves behind [`pde_residual_g`].
pub const PDE_ODE_TOL: f64 = 1e-12;

/// Residual of `∂_t G = (q + sφ) ∂_s G + φ G` with `G` assembled from the
/// integrated `M`, using central differences with steps `(h_t, h_s)`.
/// Without `steps`, each step is the span of its grid over 400 (or `1e-3`
/// for a single-point grid).
pub fn pde_residual_g(
    params: &ModelParams,
    a: &WeightVector,
    t_grid: &[f64],
    s_grid: &[f64],
    steps: Option<(f64, f64)>,
) -> Result<PdeResidual> {
    if t_grid.is_empty() || s_grid.is_empty() {
        return Err(Error::Domain("empty grid".into()));
    }
    let span = |g: &[f64]| {
        let lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo { (hi - lo) / 400.0 } else { 1e-3 }
    };
    let (h_t, h_s) = steps.unwrap_or((span(t_grid), span(s_grid)));
    if !(h_t > 0.0 && h_s > 0.0) {
        return Err(Error::Domain("finite-difference steps must be positive".into()));
    }
    if t_grid.iter().any(|&t| t - h_t < 0.0) {
        return Err(Error::Domain(format!("t grid must start at or after h_t = {h_t}")));
    }
    let mut times: Vec<f64> = t_grid.iter().flat_map(|&t| [t - h_t, t, t + h_t]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let sol = integrate_m_at(params, a, &times, PDE_ODE_TOL)?;
    let sys = System::new(params);
    let state = |t: f64| -> &[f64] {
        let k = times.partition_point(|&x| x < t);
        &sol.values[k]
    };
    let g = |m: &[f64], s: f64| -> Result<f64> {
        let mut total = 0.0;
        for (n, &v) in sys.nu.iter().zip(m) {
            let d = 1.0 - s * v;
            if d <= 0.1 {
                return Err(Error::Domain(format!("s = {s} exceeds 0.9/‖M‖∞")));
            }
            total += n * v / d;
        }
        Ok(total)
    };
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let (mm, m0, mp) = (state(t - h_t), state(t), state(t + h_t));
        let phi = sys.phi(m0);
        for &s in s_grid {
            let dt = (g(mp, s)? - g(mm, s)?) / (2.0 * h_t);
            let ds = (g(m0, s + h_s)? - g(m0, s - h_s)?) / (2.0 * h_s);
            let r = dt - (sys.q + s * phi) * ds - phi * g(m0, s)?;
            worst = worst.max(r.abs());
        }
    }
    Ok(PdeResidual {
        max_residual: worst,
        h_t,
        h_s,
    })
}

/// `true` iff `t ↦ M_ℓ/M_j` is nondecreasing along the solution, up to a
/// relative slack of `1e-9`. Requires `0 < a_j ≤ a_ℓ`.
pub fn ratio_monotonicity_check(solution: &OdeSolution, j: u32, ell: u32) -> Result<bool> {
    let (Some(mj), Some(ml)) = (solution.column(j), solution.column(ell)) else {
        return Err(Error::Domain(format!("{j} or {ell} is not a support point")));
    };
    let (aj, al) = (mj[0], ml[0]);
    if !(aj > 0.0 && aj <= al) {
        return Err(Error::Domain(format!("need 0 < a_j ≤ a_ℓ, got a_j = {aj}, a_ℓ = {al}")));
    }
    let ratios: Vec<f64> = ml.iter().zip(&mj).map(|(l, j)| l / j).collect();
    Ok(ratios.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::AnalyticContext;
    use crate::model::parse_law;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(text: &str, q: f64) -> ModelParams {
        ModelParams::new(parse_law(text).unwrap(), q).unwrap()
    }

    fn sup_rel_vs_closed(p: &ModelParams, a: &WeightVector, t_max: f64) -> f64 {
        let sol = integrate_m(p, a, t_max, 1e-10).unwrap();
        let ctx = AnalyticContext::new(p, a.clone()).unwrap();
        let mut worst: f64 = 0.0;
        for (t, row) in sol.grid.iter().zip(&sol.values) {
            let want = ctx.mgf_vector(*t).unwrap();
            for (g, w) in row.iter().zip(&want) {
                if *w != 0.0 {
                    worst = worst.max((g / w - 1.0).abs());
                } else {
                    assert_eq!(*g, 0.0);
                }
            }
        }
        worst
    }

    #[test]
    fn starts_at_the_weights() {
        let p = params("1:0.5,2:0.5", 0.5);
        let a = WeightVector::linear(&p.law, 1.0).unwrap();
        let sol = integrate_m(&p, &a, 0.5, 1e-9).unwrap();
        assert_eq!(sol.grid[0], 0.0);
        assert_eq!(sol.values[0], vec![1.0, 2.0]);
        assert!(sol.accepted > 0);
    }

    #[test]
    fn derivative_at_zero() {
        let p = params("0:0.2,1:0.3,3:0.5", 0.4);
        let a = WeightVector::new(&p.law, [(0, 0.3), (1, 0.5), (3, 0.2)]).unwrap();
        let h = 1e-6;
        let sol = integrate_m_at(&p, &a, &[0.0, h], 1e-13).unwrap();
        let dot: f64 = p.law.masses().iter().zip(a.weights()).map(|(n, v)| n * v).sum();
        for (i, &al) in a.weights().iter().enumerate() {
            let fd = (sol.values[1][i] - sol.values[0][i]) / h;
            let want = al * (p.q() * al + (1.0 - p.q()) * dot - 1.0);
            assert!((fd - want).abs() < 1e-4);
        }
    }

    #[test]
    fn constant_weights_match_monotype() {
        let p = params("0:0.2,1:0.3,3:0.5", 0.6);
        let c = 2.0;
        let a = WeightVector::constant(&p.law, c).unwrap();
        let sol = integrate_m(&p, &a, 0.6, 1e-10).unwrap();
        for (t, row) in sol.grid.iter().zip(&sol.values) {
            let want = c * (-t).exp() / (1.0 - c * (-(-t).exp_m1()));
            assert!(row.iter().all(|v| (v / want - 1.0).abs() < 1e-6), "t={t}");
        }
    }

    #[test]
    fn matches_closed_form() {
        let p = params("1:0.5,2:0.5", 0.5);
        let a = WeightVector::linear(&p.law, 1.0).unwrap();
        let rho = explosion_time(&p, &a).unwrap();
        assert!(sup_rel_vs_closed(&p, &a, 0.9 * rho) < 1e-6);
    }

    #[test]
    fn random_weights_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (law, q) in [("1:0.5,2:0.5", 0.5), ("0:0.2,1:0.3,3:0.5", 0.7), ("0:0.1,2:0.4,5:0.5", 0.3)] {
            let p = params(law, q);
            for _ in 0..3 {
                let pairs: Vec<(u32, f64)> =
                    p.law.support().iter().map(|&j| (j, rng.random_range(0.05..2.5))).collect();
                let a = WeightVector::new(&p.law, pairs).unwrap();
                let rho = explosion_time(&p, &a).unwrap();
                let t_max = if rho.is_finite() { 0.9 * rho } else { 5.0 };
                let err = sup_rel_vs_closed(&p, &a, t_max);
                assert!(err < 1e-6, "{law} {:?}: {err}", a.weights());
            }
        }
    }

    #[test]
    fn refuses_horizon_past_explosion() {
        let p = params("1:0.5,2:0.5", 0.5);
        let a = WeightVector::linear(&p.law, 1.0).unwrap();
        assert!(matches!(integrate_m(&p, &a, 2.0, 1e-8), Err(Error::Domain(_))));
    }

    #[test]
    fn blow_up_near_explosion_time() {
        let p = params("0:0.5,2:0.5", 0.5);
        let a = WeightVector::linear(&p.law, 1.0).unwrap();
        let rho = 3f64.ln();
        let t = blow_up_time(&p, &a, 2.0 * rho, 1e-10).unwrap().unwrap();
        assert!((t / rho - 1.0).abs() < 0.02, "{t} vs {rho}");
        let p = params("1:0.5,2:0.5", 0.5);
        let a = WeightVector::constant(&p.law, 2.0).unwrap();
        let t = blow_up_time(&p, &a, 2.0, 1e-10).unwrap().unwrap();
        assert!((t / 2f64.ln() - 1.0).abs() < 0.02);
    }

    #[test]
    fn csv_layout() {
        let p = params("0:0.5,2:0.5", 0.5);
        let a = WeightVector::linear(&p.law, 0.5).unwrap();
        let sol = integrate_m_at(&p, &a, &[0.0, 0.5], 1e-10).unwrap();
        let csv = sol.to_csv();
        assert!(csv.starts_with("t,M0,M2\n0,0,1\n0.5,0,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn pde_residual_is_second_order() {
        let p = params("1:0.5,2:0.5", 0.5);
        let a = WeightVector::linear(&p.law, 1.0).unwrap();
        let t_grid: Vec<f64> = (1..=10).map(|k| 0.06 * k as f64).collect();
        let s_grid: Vec<f64> = (0..=10).map(|k| 0.005 * k as f64).collect();
        let r1 = pde_residual_g(&p, &a, &t_grid, &s_grid, Some((0.04, 0.02))).unwrap();
        let r2 = pde_residual_g(&p, &a, &t_grid, &s_grid, Some((0.02, 0.01))).unwrap();
        let factor = r1.max_residual / r2.max_residual;
        assert!((3.2..=4.8).contains(&factor), "{factor}: {r1:?} {r2:?}");
    }

    #[test]
    fn pde_on_the_s_axis() {
        let p = params("0:0.2,1:0.3,3:0.5", 0.6);
        let a = WeightVector::new(&p.law, [(0, 0.4), (1, 0.7), (3, 0.5)]).unwrap();
        let h = 1e-4;
        let sys = System::new(&p);
        for t in [0.2, 0.5, 1.0] {
            let sol = integrate_m_at(&p, &a, &[t - h, t, t + h], 1e-13).unwrap();
            let dot = |m: &[f64]| sys.nu.iter().zip(m).map(|(n, v)| n * v).sum::<f64>();
            let lhs = (dot(&sol.values[2]) - dot(&sol.values[0])) / (2.0 * h);
            let m = &sol.values[1];
            let ds: f64 = sys.nu.iter().zip(m).map(|(n, v)| n * v * v).sum();
            let rhs = p.q() * ds + sys.phi(m) * dot(m);
            assert!((lhs - rhs).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn constant_weight_residual_is_small() {
        let p = params("1:0.5,2:0.5", 0.5);
        let c = 2.0;
        let a = WeightVector::constant(&p.law, c).unwrap();
        let rho = -(1.0 - 1.0 / c).ln();
        // central differences lose accuracy like (h/d)² as the box nears
        // the pole of G, so the box stays well inside the domain
        let t_end = 0.25 * rho;
        let t_grid: Vec<f64> = (1..=50).map(|k| t_end * k as f64 / 50.0).collect();
        let m_max = c * (-t_end).exp() / (1.0 - c * (1.0 - (-t_end).exp()));
        let s_grid: Vec<f64> = (0..50).map(|k| 0.25 / m_max * k as f64 / 50.0).collect();
        let r = pde_residual_g(&p, &a, &t_grid, &s_grid, None).unwrap();
        assert!(r.max_residual <= 1e-5, "{r:?}");
    }

    #[test]
    fn ratio_monotonicity() {
        let p = params("0:0.2,1:0.3,3:0.5", 0.5);
        let a = WeightVector::new(&p.law, [(0, 0.2), (1, 0.2), (3, 0.6)]).unwrap();
        let sol = integrate_m(&p, &a, 6.0, 1e-10).unwrap();
        assert!(ratio_monotonicity_check(&sol, 0, 1).unwrap());
        assert!(ratio_monotonicity_check(&sol, 1, 3).unwrap());
        assert!(ratio_monotonicity_check(&sol, 3, 1).is_err());
        let (m0, m1) = (sol.column(0).unwrap(), sol.column(1).unwrap());
        assert!(m0.iter().zip(&m1).all(|(x, y)| x == y));
        // bounded case: the smaller weight dies out
        let m0 = sol.column(0).unwrap();
        assert!(m0.last().unwrap() < &1e-2);
    }
}
