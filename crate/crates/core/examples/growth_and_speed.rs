//! Mass in the moving ball and speed of the farthest particle, as medians
//! over replicas.
//!
//!     cargo run --release --example growth_and_speed

use bbm_lab::estimators::{growth_experiment, speed_experiment, ExperimentConfig, ExperimentKind};

fn main() -> bbm_lab::Result<()> {
    for theta in [0.0, 0.5] {
        let cfg = ExperimentConfig {
            theta,
            replicas: 60,
            t_grid: vec![4.0, 8.0, 10.0],
            ..ExperimentKind::Growth.default_config()
        };
        let r = growth_experiment(&cfg)?;
        println!(
            "growth, theta = {theta}, limit {:.3}",
            r.reference.unwrap_or(f64::NAN)
        );
        for row in r.series("median_exponent") {
            println!(
                "  t = {:>4}: {:.4} ± {:.4}",
                row.t,
                row.estimate,
                row.standard_error.unwrap_or(0.0)
            );
        }
    }

    let cfg = ExperimentConfig {
        replicas: 60,
        t_grid: vec![4.0, 8.0, 12.0],
        ..ExperimentKind::Speed.default_config()
    };
    let r = speed_experiment(&cfg)?;
    println!(
        "\nspeed, beta = {}, limit {:.3}",
        cfg.beta,
        r.reference.unwrap_or(f64::NAN)
    );
    for row in r.series("median_speed") {
        println!("  t = {:>4}: M_t / t = {:.4}", row.t, row.estimate);
    }
    Ok(())
}
