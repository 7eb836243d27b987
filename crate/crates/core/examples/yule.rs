//! The multitype Yule process behind the moment flows.
//!
//! Run with `cargo run --release --example yule`.

use rgw::sim::{chi_square_geometric, estimate_yule_functional, simulate_yule};
use rgw::{lemma1_series, parse_law, ModelParams, SimConfig};

fn main() -> rgw::Result<()> {
    let params = ModelParams::new(parse_law("1:0.3,2:0.4,3:0.3")?, 0.5)?;
    let config = SimConfig::new(11, 50_000);

    let (ell, c, t) = (2, 0.3, 0.5);
    let series = lemma1_series(&params, ell, c, t, None)?;
    let mc = estimate_yule_functional(&params, ell, c, t, &config)?;
    println!("E_{ell}[prod (c j)^Y_j(t)] at c = {c}, t = {t}");
    println!("  series      {:.8} ({} terms, tail ≤ {:.1e})", series.value, series.terms, series.tail_bound);
    println!("  Monte Carlo {:.8} ± {:.8}", mc.mean, mc.std_error);

    let sizes: Vec<u64> = simulate_yule(&params, 1.0, &config)?
        .iter()
        .map(|s| s.size() as u64)
        .collect();
    let fit = chi_square_geometric(&sizes, (-1.0_f64).exp())?;
    println!(
        "size at t = 1 against Geometric(e^-1): chi2 = {:.3} on {} dof, p = {:.3}",
        fit.statistic, fit.dof, fit.p_value
    );
    Ok(())
}
