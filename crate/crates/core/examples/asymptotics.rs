//! First-order asymptotics of E_ℓ[Z(n)] compared with exact values.
//!
//! Run with `cargo run --example asymptotics`.

use rgw::analytic::AsymptoticProfile;
use rgw::exact::spine_dp_scaled;
use rgw::{parse_law, Initial, ModelParams};

fn main() -> rgw::Result<()> {
    let params = ModelParams::new(parse_law("1:0.5,2:0.5")?, 0.5)?;
    let profile = AsymptoticProfile::new(&params)?;
    println!(
        "m = {:.8}, beta = {:.4}, gamma = {:.8} (horizon {})",
        profile.m, profile.beta, profile.gamma, profile.horizon
    );
    let ell = 1;
    let constant = profile.constant(ell)?;
    let table = spine_dp_scaled(&params, 256, Initial::Fixed(ell), profile.m)?;
    println!("predicted limit of n^(1/beta) m^-n E_{ell}[Z(n)]: {constant:.8}");
    for n in [4, 16, 64, 256] {
        let r = (n as f64).powf(1.0 / profile.beta) * table.scaled[n];
        println!("  n = {n:>3}: {r:.8}  (relative gap {:+.4})", r / constant - 1.0);
    }
    Ok(())
}
