//! Runs a verification suite and prints one line per check.
//!
//! Run with `cargo run --release --example verify -- oracles`.

use rgw::verify::{all_passed, run_suite, Suite};

fn main() {
    let suite: Suite = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "rates".into())
        .parse()
        .unwrap_or_else(|e| panic!("{e}"));
    let results = run_suite(suite, 42);
    for r in &results {
        println!("{}", r.line());
    }
    println!("all required checks passed: {}", all_passed(&results));
}
