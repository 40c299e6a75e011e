//! Monte Carlo experiments that compare finite-time BBM statistics with the
//! limits computed by [`crate::rate_fn`], [`crate::geometry`] and
//! [`crate::fkpp`].
//!
//! Every experiment takes an [`ExperimentConfig`] and returns an
//! [`ExperimentReport`]. Replicas are simulated in parallel on a dedicated
//! thread pool. Replica `i` always uses the seed
//! `replica_seed(master_seed, i)` and results are reduced in replica order, so
//! reports do not depend on the number of workers.

mod absence;
mod density;
mod distribution;
mod growth;
mod report;

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use absence::{absence_ld_experiment, absence_oracle_experiment, many_to_one_check};
pub use density::{
    coverage_experiment, density_coverage_experiment, density_experiment, range_density_experiment,
    range_probes, DensityCoverage,
};
pub use distribution::{
    brownian_tail_experiment, brownian_two_sided_exit, mass_distribution_experiment,
    mass_distribution_test,
};
pub use growth::{enlargement_volume_experiment, growth_experiment, speed_experiment};
pub use report::{Check, EstimateRow, ExperimentReport, SlopeFit, Verdict};

use crate::error::{domain, Error, Result};
use crate::geometry::{axis_direction, MovingBallSpec};
use crate::rng::replica_seed;
use crate::sim::{SimConfig, DEFAULT_PARTICLE_CAP, DEFAULT_RANGE_DT};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "BBM_WORKERS";

/// Parameters shared by all experiments. Fields an experiment does not use
/// are ignored by it and still echoed in its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub beta: f64,
    pub dim: usize,
    pub theta: f64,
    pub k: f64,
    pub a: f64,
    /// Initial ball radius `r₀`; also the density radius scale.
    pub r0: f64,
    pub replicas: usize,
    pub t_grid: Vec<f64>,
    pub master_seed: u64,
    pub particle_cap: usize,
    /// Relative tolerance of the main comparison (absolute multiple of the
    /// standard error for many-to-one).
    pub tolerance: f64,
    /// Density probe spacing as a fraction of the density radius.
    pub probe_fraction: f64,
    /// Probe radius for the range experiment.
    pub epsilon: f64,
    /// Number of range probes in the unit ball.
    pub probes: usize,
    pub range_dt: f64,
    /// Relative standard error target of each union-volume estimate.
    pub volume_rel_err: f64,
    /// Displacement factor of the Brownian tail experiment.
    pub gamma: f64,
    /// Worker threads; 0 picks `BBM_WORKERS` or the available parallelism.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            dim: 1,
            theta: 0.0,
            k: 0.0,
            a: 0.0,
            r0: 1.0,
            replicas: 1000,
            t_grid: vec![1.0, 2.0, 3.0],
            master_seed: 20261016,
            particle_cap: DEFAULT_PARTICLE_CAP,
            tolerance: 0.15,
            probe_fraction: crate::geometry::DEFAULT_PROBE_FRACTION,
            epsilon: 0.1,
            probes: 100,
            range_dt: DEFAULT_RANGE_DT,
            volume_rel_err: 0.01,
            gamma: 1.0,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn t_max(&self) -> f64 {
        self.t_grid.last().copied().unwrap_or(0.0)
    }

    /// Simulation template with snapshots at every positive grid time. The
    /// seed is replaced per replica.
    pub fn sim_template(&self) -> SimConfig {
        let snaps: Vec<f64> = self.t_grid.iter().copied().filter(|&t| t > 0.0).collect();
        SimConfig::new(self.beta, self.dim, self.t_max(), self.master_seed)
            .with_snapshots(snaps)
            .with_cap(self.particle_cap)
    }

    /// The moving ball along the first axis.
    pub fn ball(&self) -> Result<MovingBallSpec> {
        MovingBallSpec::new(
            self.beta,
            self.theta,
            self.k,
            self.r0,
            axis_direction(self.dim),
        )
    }

    pub fn with_replicas(mut self, replicas: usize) -> Self {
        self.replicas = replicas;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_t_grid(mut self, t_grid: Vec<f64>) -> Self {
        self.t_grid = t_grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return domain(format!("beta > 0 violated (beta = {})", self.beta));
        }
        if self.dim == 0 {
            return domain("d >= 1 violated");
        }
        if self.replicas < 2 {
            return domain(format!(
                "replicas >= 2 violated (replicas = {})",
                self.replicas
            ));
        }
        if self.t_grid.is_empty() {
            return domain("t_grid must be nonempty");
        }
        let increasing = self.t_grid.windows(2).all(|w| w[1] > w[0]);
        if !increasing || self.t_grid[0] < 0.0 || !self.t_max().is_finite() || self.t_max() <= 0.0 {
            return domain(format!(
                "t_grid must be increasing, nonnegative and end at a positive time; got {:?}",
                self.t_grid
            ));
        }
        if !(self.tolerance > 0.0) {
            return domain(format!(
                "tolerance > 0 violated (tolerance = {})",
                self.tolerance
            ));
        }
        if !(self.r0 > 0.0) {
            return domain(format!("r0 > 0 violated (r0 = {})", self.r0));
        }
        if self.particle_cap == 0 {
            return domain("particle_cap >= 1 violated");
        }
        Ok(())
    }

    /// Errors when the expected population at the last grid time exceeds
    /// the particle cap.
    pub(crate) fn check_feasible(&self) -> Result<()> {
        let expected = (self.beta * self.t_max()).exp();
        if expected > self.particle_cap as f64 {
            return domain(format!(
                "t_grid beyond feasible horizon: E[N_t] = e^(beta t) = {expected:.3e} exceeds particle_cap {}",
                self.particle_cap
            ));
        }
        Ok(())
    }

    pub(crate) fn replica_sim(&self, template: &SimConfig, replica: usize) -> SimConfig {
        template.with_seed(replica_seed(self.master_seed, replica as u64))
    }
}

/// Experiments selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    AbsenceLd,
    AbsenceOracle,
    ManyToOne,
    Growth,
    Speed,
    EnlargementVolume,
    Density,
    Coverage,
    RangeDensity,
    MassDistribution,
    BrownianTail,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::AbsenceLd,
        ExperimentKind::AbsenceOracle,
        ExperimentKind::ManyToOne,
        ExperimentKind::Growth,
        ExperimentKind::Speed,
        ExperimentKind::EnlargementVolume,
        ExperimentKind::Density,
        ExperimentKind::Coverage,
        ExperimentKind::RangeDensity,
        ExperimentKind::MassDistribution,
        ExperimentKind::BrownianTail,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AbsenceLd => "absence-ld",
            ExperimentKind::AbsenceOracle => "absence-oracle",
            ExperimentKind::ManyToOne => "many-to-one",
            ExperimentKind::Growth => "growth",
            ExperimentKind::Speed => "speed",
            ExperimentKind::EnlargementVolume => "enlargement-volume",
            ExperimentKind::Density => "density",
            ExperimentKind::Coverage => "coverage",
            ExperimentKind::RangeDensity => "range-density",
            ExperimentKind::MassDistribution => "mass-distribution",
            ExperimentKind::BrownianTail => "brownian-tail",
        }
    }

    /// Desk-scale default configuration.
    pub fn default_config(self) -> ExperimentConfig {
        let base = ExperimentConfig::default();
        match self {
            ExperimentKind::AbsenceLd => ExperimentConfig {
                theta: 0.9,
                r0: 1.0,
                replicas: 100_000,
                t_grid: vec![1.0, 2.0, 3.0, 4.0],
                tolerance: 0.25,
                ..base
            },
            ExperimentKind::AbsenceOracle => ExperimentConfig {
                r0: 0.5,
                replicas: 2,
                t_grid: (10..=20).map(f64::from).collect(),
                tolerance: 0.15,
                ..base
            },
            ExperimentKind::ManyToOne => ExperimentConfig {
                theta: 0.5,
                k: 0.1,
                dim: 2,
                replicas: 10_000,
                t_grid: vec![4.0],
                tolerance: 3.0,
                ..base
            },
            ExperimentKind::Growth => ExperimentConfig {
                replicas: 200,
                t_grid: vec![4.0, 8.0, 12.0],
                tolerance: 0.15,
                ..base
            },
            ExperimentKind::Speed => ExperimentConfig {
                beta: 0.5,
                replicas: 200,
                t_grid: vec![7.0, 14.0],
                tolerance: 0.10,
                ..base
            },
            ExperimentKind::EnlargementVolume => ExperimentConfig {
                replicas: 40,
                t_grid: vec![6.0, 8.0, 10.0, 12.0],
                tolerance: 0.30,
                ..base
            },
            ExperimentKind::Density => ExperimentConfig {
                theta: 0.9,
                replicas: 10_000,
                t_grid: vec![2.0, 3.0, 4.0, 5.0, 6.0],
                tolerance: 0.30,
                ..base
            },
            ExperimentKind::Coverage => ExperimentConfig {
                theta: 0.5,
                dim: 2,
                replicas: 1000,
                t_grid: vec![2.0, 4.0, 6.0, 8.0],
                tolerance: 0.05,
                ..base
            },
            ExperimentKind::RangeDensity => ExperimentConfig {
                replicas: 20,
                t_grid: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
                ..base
            },
            ExperimentKind::MassDistribution => ExperimentConfig {
                replicas: 100_000,
                t_grid: vec![std::f64::consts::LN_2, 2.0],
                tolerance: 0.01,
                ..base
            },
            ExperimentKind::BrownianTail => ExperimentConfig {
                replicas: 1_000_000,
                t_grid: vec![4.0, 6.0, 8.0],
                tolerance: 0.20,
                ..base
            },
        }
    }

    pub fn run(self, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
        match self {
            ExperimentKind::AbsenceLd => absence_ld_experiment(cfg),
            ExperimentKind::AbsenceOracle => absence_oracle_experiment(cfg),
            ExperimentKind::ManyToOne => many_to_one_check(cfg),
            ExperimentKind::Growth => growth_experiment(cfg),
            ExperimentKind::Speed => speed_experiment(cfg),
            ExperimentKind::EnlargementVolume => enlargement_volume_experiment(cfg),
            ExperimentKind::Density => density_experiment(cfg),
            ExperimentKind::Coverage => coverage_experiment(cfg),
            ExperimentKind::RangeDensity => range_density_experiment(cfg),
            ExperimentKind::MassDistribution => mass_distribution_experiment(cfg),
            ExperimentKind::BrownianTail => brownian_tail_experiment(cfg),
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!(
                    "unknown experiment '{s}'; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Worker count: `requested` if positive, else `BBM_WORKERS`, else the
/// available parallelism.
pub fn resolve_workers(requested: usize) -> usize {
    if requested > 0 {
        return requested;
    }
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Evaluates `f(0), …, f(replicas − 1)` on `workers` threads and returns the
/// results in replica order. The first error aborts the run.
pub fn run_replicas<T, F>(replicas: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_workers(workers))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..replicas).into_par_iter().map(&f).collect())
}
