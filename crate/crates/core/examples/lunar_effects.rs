//! Emergency-room tension and the full moon: which evidence survives
//! censoring, and the beliefs it produces.
//!
//! `cargo run --example lunar_effects`

use coarse_beliefs::belief::BeliefStrategy;
use coarse_beliefs::scenarios::{evidence_row, lunar_model, LunarParams, LUNAR_THETA1_ROW, LUNAR_THETA2_ROW};
use coarse_beliefs::signal_model::conditional_dynamics;
use coarse_beliefs::welfare::{finite_n_welfare, ProblemSpec};

fn main() -> coarse_beliefs::Result<()> {
    let model = lunar_model(&LunarParams::default())?;
    for (name, labels) in [("favouring no effect", &LUNAR_THETA2_ROW), ("favouring an effect", &LUNAR_THETA1_ROW)] {
        let row = evidence_row(&model, labels)?;
        println!("{name}:");
        for (label, ev) in labels.iter().zip(&row) {
            println!("  {label:<6} strength {:.4}", ev.strength);
        }
    }

    let pooled = lunar_model(&LunarParams {
        pool_tension_above: Some(8),
        ..Default::default()
    })?;
    let spec = ProblemSpec::correct(0.5, 0.5, 3)?;
    let strategy = BeliefStrategy::fixed(3.0)?;
    println!("\n beta    p11       p22       welfare after 200 shifts");
    for beta in [0.0, 0.1, 0.2, 0.35, 0.5] {
        let q = pooled.censored_transitions(beta)?;
        let p = conditional_dynamics(&q)?;
        let w = finite_n_welfare(&q, &spec, &strategy, 200)?;
        println!(" {beta:<5}  {:.6}  {:.6}  {w:.6}", p.p11, p.p22);
    }
    Ok(())
}
