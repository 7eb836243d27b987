//! Integrates the factorial-moment ODE up to its blow-up time and checks the transport equation.
//!
//! Run with `cargo run --example ode_check`.

use rgw::analytic::AnalyticContext;
use rgw::ode::blow_up_time;
use rgw::{explosion_time, integrate_m, parse_law, pde_residual_g, ModelParams, WeightVector};

fn main() -> rgw::Result<()> {
    let params = ModelParams::new(parse_law("0:0.2,1:0.3,3:0.5")?, 0.6)?;
    let a = WeightVector::linear(&params.law, 1.0)?;
    let rho = explosion_time(&params, &a)?;
    println!("explosion time rho(a) = {rho:.10}");

    let ctx = AnalyticContext::new(&params, a.clone())?;
    let sol = integrate_m(&params, &a, 0.9 * rho, 1e-10)?;
    let last = sol.grid.len() - 1;
    let t = sol.grid[last];
    let closed = ctx.mgf_vector(t)?;
    println!("t = {t:.6} after {} accepted and {} rejected steps", sol.accepted, sol.rejected);
    for (j, (&k, exact)) in sol.support.iter().zip(&closed).enumerate() {
        println!("  M_{k}: ode {:.10e}  closed form {exact:.10e}", sol.values[last][j]);
    }

    let blow = blow_up_time(&params, &a, 2.0 * rho, 1e-10)?;
    println!("numerical blow-up at {:?}", blow);

    let t_grid: Vec<f64> = (1..=4).map(|i| 0.05 * rho * i as f64).collect();
    let s_grid = [0.01, 0.02, 0.03];
    let coarse = pde_residual_g(&params, &a, &t_grid, &s_grid, Some((0.02, 0.01)))?;
    let fine = pde_residual_g(&params, &a, &t_grid, &s_grid, Some((0.01, 0.005)))?;
    println!(
        "transport residual {:.3e} -> {:.3e} when halving steps (factor {:.2})",
        coarse.max_residual,
        fine.max_residual,
        coarse.max_residual / fine.max_residual
    );
    Ok(())
}
