//! How the stakes decide whether a coarse mind helps at all: gains over the
//! prior as gamma moves away from 1/2.
//!
//! `cargo run --example stake_skepticism`

use coarse_beliefs::signal_model::PVector;
use coarse_beliefs::welfare::{delta_bayes, delta_fixed, in_b, ProblemSpec};

fn main() -> coarse_beliefs::Result<()> {
    let p = PVector::new(0.8, 0.7)?;
    // Bayes gain with the exact prior; the d=3 rule with a prior seen through
    // lognormal noise, whose baseline is lower
    println!("gamma   bayes gain   d=3 gain, noisy prior   in B");
    for i in 1..=19 {
        let gamma = i as f64 * 0.05;
        let exact = ProblemSpec::correct(0.5, gamma, 2)?;
        let noisy = ProblemSpec::tied(0.5, gamma, 0.5, 2)?;
        let fixed = delta_fixed(p, &noisy, 3.0)?;
        println!(
            "{gamma:.2}   {:.6}     {:+.6}               {}",
            delta_bayes(p, &exact)?,
            fixed.decomposition,
            in_b(p, &noisy)?
        );
    }
    Ok(())
}
