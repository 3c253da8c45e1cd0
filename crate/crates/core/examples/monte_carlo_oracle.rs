//! Simulated chains and welfare against the closed forms.
//!
//! `cargo run --release --example monte_carlo_oracle`

use coarse_beliefs::belief::BeliefStrategy;
use coarse_beliefs::mental_chain::{finite_n_distribution, stationary, MentalSystem};
use coarse_beliefs::oracle::{simulate_chain, simulate_welfare};
use coarse_beliefs::signal_model::{ContinuousSignalModel, PVector, SignalModel, TransitionKernel};
use coarse_beliefs::welfare::{finite_n_welfare, ProblemSpec};

fn main() -> coarse_beliefs::Result<()> {
    let system = MentalSystem::new(3)?;
    let p = PVector::new(0.7, 0.6)?;
    let q = TransitionKernel::from_p(p);
    let est = simulate_chain(&q, 1, system, 1000, 200_000, 42)?;
    let tv = est.distribution.total_variation(&stationary(p.r1(), system));
    println!("chain after 1000 signals vs long run: total variation {tv:.5}");
    let short = simulate_chain(&q, 2, system, 5, 200_000, 42)?;
    let exact = finite_n_distribution(&q, 2, system, 5);
    for (i, (e, x)) in short.distribution.probs().iter().zip(exact.probs()).enumerate() {
        println!("  state {:>2}: simulated {e:.4} +- {:.4}, exact {x:.4}", i as i64 - 3, short.stderr[i]);
    }

    let model: SignalModel = ContinuousSignalModel::exp_tilt(2.0)?.into();
    let spec = ProblemSpec::tied(0.5, 0.6, 0.5, 3)?;
    let strategy = BeliefStrategy::new(2.0, 1.0)?;
    for beta in [0.0, 0.3] {
        let sim = simulate_welfare(&model, &spec, &strategy, beta, 50, 200_000, 7)?;
        let exact = finite_n_welfare(&model.censored_transitions(beta)?, &spec, &strategy, 50)?;
        println!(
            "welfare at beta {beta}: simulated {:.5} +- {:.5}, exact {exact:.5}, z = {:.2}",
            sim.estimate,
            sim.stderr,
            sim.z_score(exact)
        );
    }
    Ok(())
}
