//! Monte Carlo estimates of E[Z(n)] from whole populations and from the spine chain.
//!
//! Run with `cargo run --release --example simulate`.

use rgw::sim::{simulate_rgw, simulate_spine};
use rgw::{parse_law, spine_dp, Estimate, Initial, ModelParams, SimConfig};

fn main() -> rgw::Result<()> {
    let params = ModelParams::new(parse_law("0:0.4,1:0.3,3:0.3")?, 0.4)?;
    let n = 8;
    let exact = spine_dp(&params, n, Initial::Law)?.values[n];
    let config = SimConfig::new(7, 20_000);

    let trajectories = simulate_rgw(&params, n, &config)?;
    let population = Estimate::from_trajectories(&trajectories, n)?;
    let spine = simulate_spine(&params, n, &config)?;

    println!("exact E[Z({n})] = {exact:.6}");
    for (name, est) in [("population", population), ("spine", spine)] {
        println!(
            "{name:>10}: {:.6} ± {:.6}  (z = {:+.3}, capped {:.4})",
            est.mean,
            est.std_error,
            est.z_score(exact, 0.0),
            est.capped_fraction
        );
    }
    let extinct = trajectories.iter().filter(|t| t.z[n] == 0).count();
    println!("extinct by generation {n}: {extinct} of {}", trajectories.len());
    Ok(())
}
