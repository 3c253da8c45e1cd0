//! Paths of the conditional dynamics p(beta) for the two continuous families.
//!
//! `cargo run --example censor_paths`

use coarse_beliefs::signal_model::{censor_path, ContinuousSignalModel, SignalModel, DEFAULT_SPIKED};

fn main() -> coarse_beliefs::Result<()> {
    let betas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let (lambda, weight, spike) = DEFAULT_SPIKED;
    let families: [(&str, SignalModel); 2] = [
        ("symmetric tilt", ContinuousSignalModel::exp_tilt(1.0)?.into()),
        ("spiked tilt", ContinuousSignalModel::spiked_tilt(lambda, weight, spike)?.into()),
    ];
    for (name, model) in families {
        println!("{name}:");
        for pt in censor_path(&model, &betas)? {
            match pt.p {
                Some(p) => println!("  beta {:.1}  p11 {:.5}  p22 {:.5}  {:?}", pt.beta, p.p11, p.p22, pt.flags),
                None => println!("  beta {:.1}  undefined {:?}", pt.beta, pt.flags),
            }
        }
    }
    Ok(())
}
