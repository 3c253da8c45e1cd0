//! The same coin tosses read one at a time or in batches: batching pools
//! weak tosses into stronger evidence that survives censoring.
//!
//! `cargo run --example framing_and_batching`

use coarse_beliefs::scenarios::{coin_model, CoinParams};
use coarse_beliefs::signal_model::{conditional_dynamics, DEFAULT_BATCH_CAP};

fn main() -> coarse_beliefs::Result<()> {
    let single = coin_model(&CoinParams::default())?;
    let beta = 2.0;
    for j in 1..=4 {
        let tuples = single.batch(j, DEFAULT_BATCH_CAP)?;
        let counts = single.batch_counts(j, DEFAULT_BATCH_CAP)?;
        let pt = conditional_dynamics(&tuples.censored_transitions(beta)?);
        let pc = conditional_dynamics(&counts.censored_transitions(beta)?);
        let show = |r: coarse_beliefs::Result<coarse_beliefs::signal_model::PVector>| match r {
            Ok(p) => format!("({:.4}, {:.4})", p.p11, p.p22),
            Err(_) => "all censored".to_string(),
        };
        println!(
            "batches of {j}: {:>3} tuples, {:>2} count classes, p at beta={beta}: {}  {}",
            tuples.len(),
            counts.len(),
            show(pt),
            show(pc)
        );
    }
    // j tosses read as one signal, by the number of tails
    let framed = coin_model(&CoinParams { tosses: 3, ..Default::default() })?;
    println!("\nthree tosses framed as one signal:");
    for row in framed.evidence_table() {
        println!("  {:<8} direction {} strength {:.4}", row.outcome, row.evidence.direction, row.evidence.strength);
    }
    Ok(())
}
