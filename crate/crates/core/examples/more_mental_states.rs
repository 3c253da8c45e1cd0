//! Bigger memories: the Bayesian value of extra states and how slowly a
//! finite run fills them.
//!
//! `cargo run --example more_mental_states`

use coarse_beliefs::belief::{bayes_params, BeliefStrategy};
use coarse_beliefs::signal_model::{PVector, TransitionKernel};
use coarse_beliefs::welfare::{bayes_welfare, baseline_welfare, expected_welfare, finite_n_welfare, ProblemSpec};

fn main() -> coarse_beliefs::Result<()> {
    let p = PVector::new(0.65, 0.6)?;
    let q = TransitionKernel::from_p(p);
    println!(" K   d_p      Lambda_bar   long-run gain   gain after 10   after 50");
    for k in 1..=8 {
        let spec = ProblemSpec::correct(0.5, 0.5, k)?;
        let b = bayes_params(p, spec.system)?;
        let strategy: BeliefStrategy = b.strategy()?;
        let w0 = baseline_welfare(&spec).under;
        let long = expected_welfare(p, &spec, &strategy)?.value;
        debug_assert!((long - bayes_welfare(p, &spec)).abs() < 1e-12);
        let at = |n| finite_n_welfare(&q, &spec, &strategy, n).map(|w| w - w0);
        println!(
            "{k:>2}   {:.4}   {:>10.4}   {:.6}        {:.6}        {:.6}",
            b.d,
            b.lambda_bar(spec.system),
            long - w0,
            at(10)?,
            at(50)?
        );
    }
    Ok(())
}
