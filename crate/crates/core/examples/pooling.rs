//! Pooling outcomes before classification can erase strong evidence.
//!
//! `cargo run --example pooling`

use coarse_beliefs::scenarios::{lunar_model, LunarParams};
use coarse_beliefs::signal_model::conditional_dynamics;

fn main() -> coarse_beliefs::Result<()> {
    let beta = 0.35;
    for pool in [None, Some(12), Some(8), Some(4)] {
        let model = lunar_model(&LunarParams {
            pool_tension_above: pool,
            ..Default::default()
        })?;
        let p = conditional_dynamics(&model.censored_transitions(beta)?)?;
        let label = pool.map_or("distinct".to_string(), |t| format!("pooled above {t}"));
        println!("{label:<16} {:>3} outcomes  p11 {:.6}  p22 {:.3e}", model.len(), p.p11, p.p22);
    }

    // merging two outcomes by hand
    let model = lunar_model(&LunarParams::default())?;
    let merged = model.merge("(0,*)", &["(0,0)", "(0,1)"])?;
    let ev = merged.classify("(0,*)")?;
    println!("\n(0,0) and (0,1) merged: direction {} strength {:.4}", ev.direction, ev.strength);
    Ok(())
}
