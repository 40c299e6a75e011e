//! Fraction of probe points in the unit ball visited within distance epsilon
//! by the range of BBM up to time t.
//!
//!     cargo run --release --example range_density

use bbm_lab::estimators::{range_density_experiment, ExperimentConfig, ExperimentKind};

fn main() -> bbm_lab::Result<()> {
    for dim in [1, 2] {
        let cfg = ExperimentConfig {
            dim,
            replicas: 10,
            t_grid: vec![0.0, 2.0, 4.0, 6.0],
            ..ExperimentKind::RangeDensity.default_config()
        };
        let r = range_density_experiment(&cfg)?;
        println!("d = {dim}, epsilon = {}", cfg.epsilon);
        for row in r.series("covered_fraction") {
            println!("  t = {:>3}: {:.3}", row.t, row.estimate);
        }
    }
    Ok(())
}
