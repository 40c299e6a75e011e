//! r-density of a particle cloud in a ball, decided twice: by querying each
//! probe against a spatial index and by painting probes from the particles.
//! Then a small replicated run of both.
//!
//!     cargo run --release --example density_and_coverage

use bbm_lab::estimators::{density_coverage_experiment, ExperimentConfig, ExperimentKind};
use bbm_lab::geometry::{coverage_by_painting, is_r_dense_with, Ball, DensityOptions};
use bbm_lab::sim::{simulate, SimConfig};

fn main() -> bbm_lab::Result<()> {
    let out = simulate(&SimConfig::new(1.0, 2, 6.0, 5))?;
    let snap = out.last();
    let opts = DensityOptions::default();
    println!("{} particles at t = 6 in d = 2", snap.len());
    println!(
        "{:>8} {:>6} {:>15} {:>15}",
        "region", "r", "index", "painting"
    );
    for (radius, r) in [(2.0, 1.0), (4.0, 1.0), (4.0, 0.5), (6.0, 1.0)] {
        let region = Ball::centered(2, radius)?;
        let a = is_r_dense_with(&snap.positions, &region, r, &opts)?;
        let b = coverage_by_painting(&snap.positions, &region, r, &opts)?;
        println!("{radius:>8} {r:>6} {:>15?} {:>15?}", a.verdict, b.verdict);
        if let Some(w) = a.witness {
            println!("{:>32} uncovered point {:.3?}", "", w);
        }
    }

    let cfg = ExperimentConfig {
        replicas: 300,
        t_grid: vec![2.0, 4.0, 6.0],
        ..ExperimentKind::Density.default_config()
    };
    let both = density_coverage_experiment(&cfg)?;
    println!(
        "\nroutes disagree on {} of {} replica-time pairs",
        both.mismatches, both.comparisons
    );
    print!("{}", both.density.summary());
    print!("{}", both.coverage.summary());
    Ok(())
}
