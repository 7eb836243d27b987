//! Exact expected population sizes from the spine and urn recursions.
//!
//! Run with `cargo run --example moments`.

use rgw::{effective_reproduction, malthusian_rate, parse_law, spine_dp, urn_dp, Initial, ModelParams};

fn main() -> rgw::Result<()> {
    let params = ModelParams::new(parse_law("1:0.5,2:0.5")?, 0.5)?;
    let rate = malthusian_rate(&params)?;
    let spine = spine_dp(&params, 40, Initial::Law)?;
    let urn = urn_dp(&params, 20)?;
    let ratios = effective_reproduction(&spine)?;

    println!("m = {:.10}, limit of m^-n E[Z(n)] = {:.6}", rate.m, rate.thm1_constant);
    println!("{:>4} {:>16} {:>12} {:>12} {:>10}", "n", "E[Z(n)]", "spine/m^n", "urn/m^n", "ratio");
    for n in [1, 2, 5, 10, 20, 30, 39] {
        let urn_col = urn
            .scaled
            .get(n)
            .map_or_else(|| "-".to_string(), |v| format!("{v:.8}"));
        let ratio = ratios.get(n).map_or(f64::NAN, |r| *r);
        println!(
            "{n:>4} {:>16.6} {:>12.8} {:>12} {:>10.6}",
            spine.values[n], spine.scaled[n], urn_col, ratio
        );
    }
    Ok(())
}
