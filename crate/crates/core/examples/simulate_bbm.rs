//! One BBM realization: population size and maximal displacement at a few
//! times, plus the first lines of the snapshot table.
//!
//!     cargo run --release --example simulate_bbm -- [seed]

use bbm_lab::sim::{simulate, write_snapshots_csv, SimConfig};

fn main() -> bbm_lab::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let cfg = SimConfig::new(1.0, 2, 6.0, seed).with_snapshots(vec![1.0, 2.0, 4.0, 6.0]);
    let out = simulate(&cfg)?;

    println!(
        "seed {seed}, beta = 1, d = 2, {} branching events",
        out.branch_events
    );
    println!("{:>4} {:>8} {:>10} {:>10}", "t", "N_t", "E N_t", "M_t / t");
    for s in &out.snapshots {
        println!(
            "{:>4} {:>8} {:>10.1} {:>10.4}",
            s.time,
            s.len(),
            s.time.exp(),
            s.max_radius()? / s.time
        );
    }

    let mut table = Vec::new();
    write_snapshots_csv(&mut table, 2, out.snapshots.iter().take(1).map(|s| (0, s)))?;
    println!("\nsnapshot table at t = 1:");
    print!("{}", String::from_utf8_lossy(&table));
    Ok(())
}
