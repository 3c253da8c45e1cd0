//! Runs the full verification battery and prints one line per check.
//!
//! `cargo run --release --example propositions`

use coarse_beliefs::props::{run_all, PropsConfig};

fn main() -> coarse_beliefs::Result<()> {
    let cfg = PropsConfig::default();
    let outcomes = run_all(&cfg)?;
    for o in &outcomes {
        println!("{o}  ({:.2}s)", o.seconds);
    }
    if outcomes.iter().any(|o| !o.passed) {
        std::process::exit(1);
    }
    Ok(())
}
