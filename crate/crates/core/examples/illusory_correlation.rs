//! Premise and consequence: censoring the weak co-occurrence signals leaves
//! only "premise and consequence together", which reads as a correlation.
//!
//! `cargo run --example illusory_correlation`

use coarse_beliefs::scenarios::{illusory_model, IllusoryParams};
use coarse_beliefs::signal_model::conditional_dynamics;

fn main() -> coarse_beliefs::Result<()> {
    let model = illusory_model(&IllusoryParams::default())?;
    println!("outcome  direction  strength");
    for row in model.evidence_table() {
        println!("{:<8} {:>9}  {:.4}", row.outcome, row.evidence.direction, row.evidence.strength);
    }
    for beta in [0.0, 0.05, 0.5, 1.0] {
        let q = model.censored_transitions(beta)?;
        match conditional_dynamics(&q) {
            Ok(p) => println!("beta {beta:<4}: p11 {:.4}  p22 {:.4}", p.p11, p.p22),
            Err(e) => println!("beta {beta:<4}: {e}"),
        }
    }
    Ok(())
}
