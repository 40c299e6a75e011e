//! The population size N_t is geometric with parameter e^(-beta t); this runs
//! the chi-square and tail checks.
//!
//!     cargo run --release --example mass_distribution

use bbm_lab::estimators::mass_distribution_test;

fn main() -> bbm_lab::Result<()> {
    for t in [std::f64::consts::LN_2, 1.5] {
        let r = mass_distribution_test(1.0, t, 20_000, 4)?;
        print!("{}", r.summary());
        for row in &r.rows {
            if let Some(reference) = row.reference {
                println!(
                    "    {:<8} {:.5} (exact {reference:.5})",
                    row.label, row.estimate
                );
            }
        }
    }
    Ok(())
}
