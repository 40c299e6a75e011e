//! The `bbm` command line.
//!
//! Every command that writes files writes them into one output directory
//! together with a `manifest.json` ([`RunManifest`]). Settings resolve as
//! flags over config file over built-in defaults, and the manifest records
//! the resolved values. A missing `--seed` is drawn from the OS and recorded.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{resolve_workers, ExperimentKind, WORKERS_ENV};
use crate::rate_fn::{minimize, RateParams};
use crate::rng::replica_seed;
use crate::sim::{simulate, write_snapshots_csv, SimConfig, DEFAULT_PARTICLE_CAP};
use crate::verify::{run_suite_with, Suite, VerifyOptions};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "bbm",
    version,
    about = "Dyadic branching Brownian motion density lab"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the absence rate function.
    Rate(RateArgs),
    /// Simulate BBM and export particle snapshots.
    Simulate(SimulateArgs),
    /// Run one named experiment.
    Experiment(ExperimentArgs),
    /// Run an acceptance suite: rate, sim, geometry, fkpp or all.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub k: f64,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Sweep one parameter, as `name=start:stop:step` (name is theta, k or a).
    #[arg(long)]
    pub sweep: Option<String>,
    /// Directory for the sweep table and manifest; without it the table goes
    /// to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML file with any of the keys beta, d, t, seed, cap, snapshots, replicas.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Horizon.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Particle cap.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Snapshot times, comma separated (default: the horizon only).
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Print N_t and M_t per snapshot time.
    #[arg(long)]
    pub summary: bool,
    #[arg(long, default_value = "bbm-out/simulate")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment name, e.g. growth or absence-oracle.
    pub name: String,
    /// TOML file overriding the experiment's default configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Time grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,
    /// Output directory (default `bbm-out/<name>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub suite: Suite,
    /// Reduced replica counts.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value = "bbm-out/verify")]
    pub out: PathBuf,
}

impl clap::ValueEnum for Suite {
    fn value_variants<'a>() -> &'a [Self] {
        &[
            Suite::Rate,
            Suite::Sim,
            Suite::Geometry,
            Suite::Fkpp,
            Suite::All,
        ]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub config: serde_json::Value,
    pub master_seed: Option<u64>,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub elapsed_seconds: f64,
    pub outputs: Vec<PathBuf>,
    #[serde(default)]
    pub truncated: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(
            dir.join(MANIFEST_FILE),
        )?)?)
    }
}

struct Run {
    command: &'static str,
    started: chrono::DateTime<chrono::Utc>,
    clock: Instant,
}

impl Run {
    fn start(command: &'static str) -> Self {
        Self {
            command,
            started: chrono::Utc::now(),
            clock: Instant::now(),
        }
    }

    fn finish(
        self,
        dir: &Path,
        config: &impl Serialize,
        seed: Option<u64>,
        outputs: Vec<PathBuf>,
        truncated: bool,
        warnings: Vec<String>,
    ) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            arguments: std::env::args().skip(1).collect(),
            config: serde_json::to_value(config)?,
            master_seed: seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started.to_rfc3339(),
            finished_at: chrono::Utc::now().to_rfc3339(),
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
            outputs,
            truncated,
            warnings,
        };
        fs::write(
            dir.join(MANIFEST_FILE),
            serde_json::to_string_pretty(&manifest)? + "\n",
        )?;
        Ok(())
    }
}

fn seed_or_draw(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

/// `defaults`, with the keys of the TOML file at `path` replacing theirs.
pub fn layered<T: Serialize + DeserializeOwned>(defaults: &T, path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(serde_json::from_value(serde_json::to_value(defaults)?)?);
    };
    let text = fs::read_to_string(path)?;
    let file: toml::Table =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut merged = serde_json::to_value(defaults)?;
    let object = merged
        .as_object_mut()
        .ok_or_else(|| Error::Config("defaults are not a table".into()))?;
    for (key, value) in file {
        object.insert(key, serde_json::to_value(value)?);
    }
    serde_json::from_value(merged).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Parses `name=start:stop:step` into the parameter name and its values,
/// stop included.
pub fn parse_sweep(spec: &str) -> Result<(String, Vec<f64>)> {
    let bad = || {
        Error::Config(format!(
            "sweep must look like theta=0:0.95:0.05, got '{spec}'"
        ))
    };
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let parts: Vec<f64> = range
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !matches!(name, "theta" | "k" | "a") {
        return Err(Error::Config(format!(
            "can only sweep theta, k or a, not '{name}'"
        )));
    }
    if !(step > 0.0) || stop < start {
        return Err(Error::Config(format!(
            "sweep needs step > 0 and stop >= start, got '{spec}'"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((
        name.to_string(),
        (0..=n).map(|i| start + i as f64 * step).collect(),
    ))
}

fn rate_csv_line(p: &RateParams) -> Result<String> {
    let r = minimize(p)?;
    Ok(format!(
        "{},{},{},{},{},{},{},{},{}",
        p.theta,
        p.k,
        p.a,
        p.beta,
        p.d,
        r.rho_bar,
        r.rho_hat,
        r.rate_value,
        p.beta * r.rate_value
    ))
}

fn cmd_rate(args: RateArgs) -> Result<i32> {
    let Some(sweep) = &args.sweep else {
        let p = RateParams::new(args.beta, args.d, args.theta, args.k, args.a)?;
        let r = minimize(&p)?;
        println!(
            "theta = {}, k = {}, a = {}, beta = {}, d = {}",
            p.theta, p.k, p.a, p.beta, p.d
        );
        println!("rho_bar  = {:.9}", r.rho_bar);
        println!("rho_hat  = {:.9}", r.rho_hat);
        println!("I        = {:.9}", r.rate_value);
        println!("beta * I = {:.9}", p.beta * r.rate_value);
        return Ok(0);
    };

    let run = Run::start("rate");
    let (name, values) = parse_sweep(sweep)?;
    let mut table = String::from("theta,k,a,beta,d,rho_bar,rho_hat,I,beta_I\n");
    for v in values {
        let (mut theta, mut k, mut a) = (args.theta, args.k, args.a);
        match name.as_str() {
            "theta" => theta = v,
            "k" => k = v,
            _ => a = v,
        }
        table += &rate_csv_line(&RateParams::new(args.beta, args.d, theta, k, a)?)?;
        table.push('\n');
    }
    match &args.out {
        None => print!("{table}"),
        Some(dir) => {
            create_dir(dir)?;
            let path = dir.join("rate_sweep.csv");
            fs::write(&path, &table)?;
            let config = serde_json::json!({
                "theta": args.theta, "k": args.k, "a": args.a,
                "beta": args.beta, "d": args.d, "sweep": sweep,
            });
            run.finish(dir, &config, None, vec![path.clone()], false, vec![])?;
            println!("wrote {}", path.display());
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSettings {
    pub beta: f64,
    pub d: usize,
    pub t: f64,
    pub seed: Option<u64>,
    pub cap: usize,
    pub snapshots: Option<Vec<f64>>,
    pub replicas: usize,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        Self {
            beta: 1.0,
            d: 1,
            t: 1.0,
            seed: None,
            cap: DEFAULT_PARTICLE_CAP,
            snapshots: None,
            replicas: 1,
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let run = Run::start("simulate");
    let mut s = layered(&SimulateSettings::default(), args.config.as_deref())?;
    if let Some(v) = args.beta {
        s.beta = v;
    }
    if let Some(v) = args.d {
        s.d = v;
    }
    if let Some(v) = args.t {
        s.t = v;
    }
    if args.seed.is_some() {
        s.seed = args.seed;
    }
    if let Some(v) = args.cap {
        s.cap = v;
    }
    if args.snapshots.is_some() {
        s.snapshots = args.snapshots;
    }
    if let Some(v) = args.replicas {
        s.replicas = v;
    }
    let seed = seed_or_draw(s.seed);
    s.seed = Some(seed);
    if s.replicas == 0 {
        return Err(Error::Config("replicas >= 1 violated".into()));
    }
    let base = SimConfig::new(s.beta, s.d, s.t, seed)
        .with_snapshots(s.snapshots.clone().unwrap_or_else(|| vec![s.t]))
        .with_cap(s.cap);
    base.validate()?;

    create_dir(&args.out)?;
    let path = args.out.join("snapshots.csv");
    let mut csv = BufWriter::new(fs::File::create(&path)?);
    let mut warnings = Vec::new();
    if args.summary {
        println!("replica,t,N_t,M_t");
    }
    for i in 0..s.replicas {
        let cfg = if s.replicas == 1 {
            base.clone()
        } else {
            base.with_seed(replica_seed(seed, i as u64))
        };
        let out = simulate(&cfg)?;
        if i == 0 {
            write_snapshots_csv(&mut csv, s.d, out.snapshots.iter().map(|x| (i as u64, x)))?;
        } else {
            let mut body = Vec::new();
            write_snapshots_csv(&mut body, s.d, out.snapshots.iter().map(|x| (i as u64, x)))?;
            let start = body
                .iter()
                .position(|&b| b == b'\n')
                .map_or(body.len(), |p| p + 1);
            csv.write_all(&body[start..])?;
        }
        for snap in &out.snapshots {
            if snap.truncated {
                let msg = format!(
                    "replica {i}: particle cap {} reached by t = {}; snapshot truncated",
                    s.cap, snap.time
                );
                eprintln!("warning: {msg}");
                warnings.push(msg);
                break;
            }
        }
        if args.summary {
            for snap in &out.snapshots {
                if snap.truncated {
                    println!("{i},{},truncated,truncated", snap.time);
                } else {
                    println!("{i},{},{},{}", snap.time, snap.len(), snap.max_radius()?);
                }
            }
        }
    }
    csv.flush()?;
    drop(csv);
    let truncated = !warnings.is_empty();
    run.finish(
        &args.out,
        &s,
        Some(seed),
        vec![path.clone()],
        truncated,
        warnings,
    )?;
    if !args.summary {
        println!("wrote {} (seed {seed})", path.display());
    }
    Ok(0)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<i32> {
    let run = Run::start("experiment");
    let kind: ExperimentKind = args.name.parse()?;
    let mut cfg = layered(&kind.default_config(), args.config.as_deref())?;
    let seed = match (args.seed, &args.config) {
        (Some(s), _) => s,
        (None, Some(path)) if file_sets_key(path, "master_seed")? => cfg.master_seed,
        _ => rand::random(),
    };
    cfg.master_seed = seed;
    if let Some(r) = args.replicas {
        cfg.replicas = r;
    }
    if let Some(t) = args.t_grid {
        cfg.t_grid = t;
    }
    cfg.workers = resolve_workers(args.workers);

    let report = kind.run(&cfg)?;
    let dir = args
        .out
        .unwrap_or_else(|| PathBuf::from("bbm-out").join(kind.name()));
    create_dir(&dir)?;
    let json = dir.join("report.json");
    let csv = dir.join("estimates.csv");
    fs::write(&json, report.to_json()? + "\n")?;
    report.write_csv(BufWriter::new(fs::File::create(&csv)?))?;
    let truncated = report.rows.iter().any(|r| r.excluded > 0);
    let resolved =
        serde_json::json!({ "experiment": kind.name(), "workers": cfg.workers, "config": cfg });
    run.finish(
        &dir,
        &resolved,
        Some(seed),
        vec![json, csv],
        truncated,
        report.notes.clone(),
    )?;
    print!("{}", report.summary());
    println!("outputs in {}", dir.display());
    Ok(0)
}

fn file_sets_key(path: &Path, key: &str) -> Result<bool> {
    let table: toml::Table = toml::from_str(&fs::read_to_string(path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(table.contains_key(key))
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let run = Run::start("verify");
    let opts = VerifyOptions {
        seed: seed_or_draw(args.seed),
        quick: args.quick,
        workers: resolve_workers(args.workers),
    };
    println!(
        "verify {} (seed {}, {} workers{})",
        args.suite,
        opts.seed,
        opts.workers,
        if opts.quick { ", quick" } else { "" }
    );
    let report = run_suite_with(args.suite, &opts, |o| {
        println!(
            "  {:>2} {:<30} {} ({:.1} s)",
            o.id,
            o.claim,
            if o.passed { "PASS" } else { "FAIL" },
            o.seconds
        );
    })?;
    println!();
    print!("{}", report.table());

    create_dir(&args.out)?;
    let path = args.out.join("verify.json");
    fs::write(&path, report.to_json()? + "\n")?;
    let failed: Vec<String> = report.failed().iter().map(|o| o.claim.clone()).collect();
    let warnings = failed.iter().map(|c| format!("failed: {c}")).collect();
    run.finish(
        &args.out,
        &opts,
        Some(opts.seed),
        vec![path],
        false,
        warnings,
    )?;
    if failed.is_empty() {
        println!("all {} criteria passed", report.outcomes.len());
        Ok(0)
    } else {
        eprintln!("failed claims: {}", failed.join(", "));
        Ok(1)
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Rate(a) => cmd_rate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Parses the process arguments and runs. Errors exit with status 2, failed
/// verification with status 1.
pub fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_includes_stop() {
        let (name, v) = parse_sweep("theta=0:0.95:0.05").unwrap();
        assert_eq!(name, "theta");
        assert_eq!(v.len(), 20);
        assert!((v[19] - 0.95).abs() < 1e-12);
        assert!(parse_sweep("beta=0:1:0.1").is_err());
        assert!(parse_sweep("theta=0:1").is_err());
        assert!(parse_sweep("theta=1:0:0.1").is_err());
    }

    #[test]
    fn file_settings_sit_between_defaults_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim.toml");
        fs::write(&path, "t = 2.5\nd = 2\n").unwrap();
        let s = layered(&SimulateSettings::default(), Some(&path)).unwrap();
        assert_eq!((s.t, s.d, s.beta), (2.5, 2, 1.0));
        fs::write(&path, "horizon = 2.5\n").unwrap();
        assert!(layered(&SimulateSettings::default(), Some(&path)).is_err());
    }

    #[test]
    fn experiment_file_overlays_kind_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        fs::write(&path, "replicas = 7\n").unwrap();
        let base = ExperimentKind::Speed.default_config();
        let cfg = layered(&base, Some(&path)).unwrap();
        assert_eq!(cfg.replicas, 7);
        assert_eq!(cfg.beta, base.beta);
        assert_eq!(cfg.t_grid, base.t_grid);
        assert!(file_sets_key(&path, "replicas").unwrap());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
