//! Runs an acceptance suite from code and prints its table.
//!
//!     cargo run --release --example verify_suite -- [rate|sim|geometry|fkpp|all] [--quick]

use bbm_lab::verify::{run_suite, Suite, VerifyOptions};

fn main() -> bbm_lab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let suite: Suite = args
        .iter()
        .find(|a| !a.starts_with("--"))
        .map_or("rate", String::as_str)
        .parse()?;
    let opts = VerifyOptions {
        quick: args.iter().any(|a| a == "--quick"),
        ..VerifyOptions::default()
    };
    let report = run_suite(suite, &opts)?;
    print!("{}", report.table());
    println!(
        "{}",
        if report.passed() {
            "all passed"
        } else {
            "some criteria failed"
        }
    );
    Ok(())
}
