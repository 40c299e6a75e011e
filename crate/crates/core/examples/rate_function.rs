//! Absence rate function: the minimizer, the closed form at k = a = 0, and a
//! theta sweep in two dimensions.
//!
//!     cargo run --release --example rate_function

use bbm_lab::rate_fn::{minimize, rate_theorem_b, RateParams};

fn main() -> bbm_lab::Result<()> {
    let p = RateParams::new(1.0, 1, 0.5, 0.0, 0.0)?;
    let r = minimize(&p)?;
    println!("theta = 0.5, k = a = 0, d = 1");
    println!("  rho_bar = {:.9}  rho_hat = {:.9}", r.rho_bar, r.rho_hat);
    println!(
        "  I = {:.12}  closed form {:.12}",
        r.rate_value,
        rate_theorem_b(0.5)?
    );

    let shifted = minimize(&RateParams::unit(2, 0.3, 0.1, 0.2)?)?;
    let direct = minimize(&RateParams::unit(2, 0.3, 0.0, 0.2 + 0.1 * 2.0)?)?;
    println!("\nI(0.3, 0.1, 0.2) in d = 2: {:.12}", shifted.rate_value);
    println!("I(0.3, 0, 0.4)   in d = 2: {:.12}", direct.rate_value);

    println!("\ntheta sweep over 0..0.8, k = 0.05, a = 0.1, d = 2");
    println!(
        "{:>6} {:>10} {:>10} {:>10}",
        "theta", "rho_bar", "rho_hat", "I"
    );
    for i in 0..9 {
        let theta = 0.1 * i as f64;
        let r = minimize(&RateParams::unit(2, theta, 0.05, 0.1)?)?;
        println!(
            "{theta:>6.1} {:>10.6} {:>10.6} {:>10.6}",
            r.rho_bar, r.rho_hat, r.rate_value
        );
    }

    match RateParams::unit(2, 0.5, 0.4, 0.0) {
        Err(e) => println!("\nk = 0.4 in d = 2 at theta = 0.5 is rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
