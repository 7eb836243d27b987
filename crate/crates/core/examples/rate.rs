//! Malthusian rate of a reinforced Galton-Watson process across reinforcement levels.
//!
//! Run with `cargo run --example rate`.

use rgw::{malthusian_rate, parse_law, ModelParams};

fn main() -> rgw::Result<()> {
    let law = parse_law("0:0.2,1:0.3,3:0.5")?;
    println!("law {}  mean {:.4}  k* {}", law.to_text(), law.mean(), law.kstar());
    println!("{:>6} {:>10} {:>10} {:>10} {:>8}", "q", "lower", "m", "upper", "beta");
    for q in [0.05, 0.25, 0.5, 0.75, 0.95] {
        let params = ModelParams::new(law.clone(), q)?;
        let r = malthusian_rate(&params)?;
        println!(
            "{q:>6.2} {:>10.6} {:>10.6} {:>10.6} {:>8.4}",
            r.lower, r.m, r.upper, r.beta
        );
    }
    Ok(())
}
