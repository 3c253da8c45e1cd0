//! Three theories of a binary sequence (persistent, alternating, random)
//! and the ladder of mental states that tracks them.
//!
//! `cargo run --release --example autocorrelation_ladder`

use coarse_beliefs::mental_chain::{general_stationary, ladder_transition, LadderSystem};
use coarse_beliefs::oracle::simulate_ladder;
use coarse_beliefs::scenarios::{autocorr_model, autocorr_table, AutocorrParams};

fn main() -> coarse_beliefs::Result<()> {
    for draws in [6, 10] {
        let params = AutocorrParams { draws, ..Default::default() };
        println!("{draws} draws: reversals, favoured theory, strength, Pr(count | random)");
        for row in autocorr_table(&params)? {
            println!("  {:>2}  {}  {:>7.3}  {:.5}", row.reversals, row.direction, row.strength, row.prob_last);
        }
    }

    let model = autocorr_model(&AutocorrParams { draws: 10, ..Default::default() })?;
    let system = LadderSystem::new(2)?;
    let beta = 0.0;
    let matrices = ladder_transition(&model.ladder_evidence(beta)?, system)?;
    let sims = simulate_ladder(&model, system, beta, 500, 100_000, 3)?;
    println!("\nmass on each ladder, long run vs simulated after 500 sequences:");
    for (theta, (m, sim)) in matrices.iter().zip(&sims).enumerate() {
        let long_run = general_stationary(m)?;
        let cells: Vec<String> = (1..=3)
            .map(|t| format!("{:.3}/{:.3}", system.ladder_mass(&long_run, t), system.ladder_mass(&sim.distribution, t)))
            .collect();
        println!("  truth {}: {}", theta + 1, cells.join("  "));
    }
    Ok(())
}
