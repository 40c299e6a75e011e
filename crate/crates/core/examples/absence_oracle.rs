//! Probability that the moving ball B(theta*sqrt(2)*t, 0.5) holds no
//! particle: the FKPP solution against a Monte Carlo estimate, and the decay
//! rate read off the PDE at larger times.
//!
//!     cargo run --release --example absence_oracle

use bbm_lab::estimators::{
    absence_ld_experiment, absence_oracle_experiment, ExperimentConfig, ExperimentKind,
};
use bbm_lab::fkpp::{solve_absence, FkppConfig};
use bbm_lab::rate_fn::rate_theorem_b;

fn main() -> bbm_lab::Result<()> {
    let theta = 0.4;
    let sol = solve_absence(&FkppConfig::new(1.0, 0.5, 3.0, theta))?;
    let cfg = ExperimentConfig {
        theta,
        r0: 0.5,
        ..ExperimentKind::AbsenceLd.default_config()
    };
    let mc = absence_ld_experiment(
        &cfg.with_replicas(20_000)
            .with_t_grid(vec![1.0, 2.0, 3.0])
            .with_seed(11),
    )?;
    println!("theta = {theta}, r = 0.5");
    println!("{:>4} {:>10} {:>18}", "t", "PDE u", "Monte Carlo");
    for row in mc.series("p") {
        println!(
            "{:>4} {:>10.5} {:>10.5} ± {:.5}",
            row.t,
            sol.absence_moving(theta, row.t)?,
            row.estimate,
            row.standard_error.unwrap_or(0.0)
        );
    }

    for theta in [0.0, 0.5] {
        let cfg = ExperimentConfig {
            theta,
            ..ExperimentKind::AbsenceOracle.default_config()
        };
        let r = absence_oracle_experiment(&cfg)?;
        let fit = r.fit.expect("grid has several times");
        println!(
            "\ntheta = {theta}: slope of -log u over t in [10, 20] = {:.4} (limit {:.4})",
            fit.slope,
            rate_theorem_b(theta)?
        );
    }
    Ok(())
}
