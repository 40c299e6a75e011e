//! Replicated runs are reproducible: the same seed gives the same report for
//! any worker count.
//!
//!     cargo run --release --example parallel_replicas

use bbm_lab::estimators::{ExperimentConfig, ExperimentKind};

fn main() -> bbm_lab::Result<()> {
    let kind = ExperimentKind::ManyToOne;
    let cfg = ExperimentConfig {
        replicas: 2_000,
        ..kind.default_config()
    };
    let mut reports = Vec::new();
    for workers in [1, 2, 4] {
        let r = kind.run(&cfg.clone().with_workers(workers))?;
        println!("{workers} workers: mean mass {:.6}", r.rows[0].estimate);
        reports.push(r.to_json()?);
    }
    println!(
        "identical reports: {}",
        reports.windows(2).all(|w| w[0] == w[1])
    );
    Ok(())
}
