//! Probability that a single Brownian path leaves [-b, b] with b = gamma*t
//! before time t, estimated on a grid with a bridge correction, against the
//! exact two-sided exit law.
//!
//!     cargo run --release --example brownian_tail

use bbm_lab::estimators::{
    brownian_tail_experiment, brownian_two_sided_exit, ExperimentConfig, ExperimentKind,
};

fn main() -> bbm_lab::Result<()> {
    for (b, t) in [(1.0, 1.0), (2.0, 1.0), (4.0, 4.0)] {
        println!(
            "P(sup |B_s| >= {b}, s <= {t}) = {:.6e}",
            brownian_two_sided_exit(b, t)?
        );
    }
    let cfg = ExperimentConfig {
        replicas: 200_000,
        ..ExperimentKind::BrownianTail.default_config()
    };
    print!("\n{}", brownian_tail_experiment(&cfg)?.summary());
    Ok(())
}
