//! Welfare gains over the (p22, gamma) plane as a coarse text map, and the
//! same sweep as CSV for plotting.
//!
//! `cargo run --release --example welfare_landscape [out.csv]`

use coarse_beliefs::sweep::{sweep, Axis, Grid, Metric, SweepConfig, SweepParams};

fn main() -> coarse_beliefs::Result<()> {
    let mut cfg = SweepConfig::new(Axis::P22, Axis::Gamma, Metric::DeltaBayes, SweepParams::default());
    cfg.x_grid = Grid::new(0.05, 0.95, 19)?;
    cfg.y_grid = Grid::new(0.05, 0.95, 19)?;
    let table = sweep(&cfg)?;

    // rows: gamma from high to low; columns: p22; '.' means no gain
    println!("gain of the Bayesian rule over the prior, p11 = 0.8, K = 2");
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#'];
    let top = table.values().iter().cloned().fold(0.0, f64::max);
    for yi in (0..cfg.y_grid.n).rev() {
        let line: String = (0..cfg.x_grid.n)
            .map(|xi| {
                let v = table.rows[xi * cfg.y_grid.n + yi].value;
                if v <= 1e-12 {
                    '.'
                } else {
                    shades[1 + ((v / top) * 6.0).min(6.0) as usize]
                }
            })
            .collect();
        println!("gamma {:.2} |{line}|", cfg.y_grid.values()[yi]);
    }

    if let Some(path) = std::env::args().nth(1) {
        table.write_csv(std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
