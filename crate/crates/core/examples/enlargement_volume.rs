//! Volume of the r-enlargement of the particle cloud, scaled by t^d, against
//! its limiting constant.
//!
//!     cargo run --release --example enlargement_volume

use bbm_lab::estimators::{enlargement_volume_experiment, ExperimentConfig, ExperimentKind};
use bbm_lab::geometry::union_volume;
use bbm_lab::rate_fn::volume_constant;
use bbm_lab::sim::{simulate, SimConfig};

fn main() -> bbm_lab::Result<()> {
    let out = simulate(&SimConfig::new(1.0, 1, 10.0, 3).with_snapshots(vec![5.0, 10.0]))?;
    for s in &out.snapshots {
        let v = union_volume(&s.positions, 1, 1.0, 0.005, 1)?;
        println!(
            "t = {:>4}: {} particles, volume {:.3} ± {:.3}, volume / t = {:.4}",
            s.time,
            s.len(),
            v.volume,
            v.standard_error,
            v.volume / s.time
        );
    }
    println!(
        "limit 2*sqrt(2*beta) = {:.4}\n",
        volume_constant(1.0, 0.0, 1)?
    );

    let cfg = ExperimentConfig {
        replicas: 12,
        ..ExperimentKind::EnlargementVolume.default_config()
    };
    print!("{}", enlargement_volume_experiment(&cfg)?.summary());
    Ok(())
}
