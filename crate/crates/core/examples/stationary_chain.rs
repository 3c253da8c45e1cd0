//! Long-run law of the mental chain, and how fast a finite run gets there.
//!
//! `cargo run --example stationary_chain`

use coarse_beliefs::mental_chain::{finite_n_distribution, stationary, MentalSystem};
use coarse_beliefs::signal_model::{PVector, TransitionKernel};

fn main() -> coarse_beliefs::Result<()> {
    let system = MentalSystem::new(2)?;
    for r in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
        let dist = stationary(r, system);
        let cells: Vec<String> = dist.probs().iter().map(|p| format!("{p:.5}")).collect();
        println!("r = {r:>4}: {}", cells.join("  "));
    }

    // p = (0.8, 0.7): how far is the chain after n signals from its limit?
    let p = PVector::new(0.8, 0.7)?;
    let q = TransitionKernel::from_p(p);
    let limit = stationary(p.r1(), system);
    println!("\nunder theta=1, p=(0.8, 0.7):");
    for n in [1, 2, 5, 10, 20, 50] {
        let tv = finite_n_distribution(&q, 1, system, n).total_variation(&limit);
        println!("  n = {n:>2}: total variation to the limit {tv:.5}");
    }
    Ok(())
}
