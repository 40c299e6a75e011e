//! Exact simulation of strictly dyadic branching Brownian motion.
//!
//! Every particle owns a counter-based random stream. The root stream is
//! keyed by the seed; the two offspring of a particle get the keys
//! `split_key(parent, 0)` and `split_key(parent, 1)`. A particle's lifetime is
//! the first draw of its stream and its Gaussian increments follow in order,
//! so a realization depends only on `(seed, config)`.
//!
//! The population is carried from one stop time to the next (snapshot times
//! merged with the optional range-recording grid). Within an interval each
//! particle's subtree is expanded depth first: a particle moves to its branch
//! time or to the end of the interval, whichever comes first, with an exact
//! Gaussian displacement.

mod io;

pub use io::{read_snapshots_csv, write_snapshots_csv, CsvRecord};

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::{mix64, CounterRng};

pub const DEFAULT_PARTICLE_CAP: usize = 5_000_000;
pub const DEFAULT_RANGE_DT: f64 = 0.05;

/// Times closer than this are treated as the same stop.
const TIME_EPS: f64 = 1e-12;

fn default_cap() -> usize {
    DEFAULT_PARTICLE_CAP
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub beta: f64,
    pub dim: usize,
    pub horizon: f64,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub particle_cap: usize,
    /// Step of the range-recording grid; `None` disables recording.
    #[serde(default)]
    pub range_grid_dt: Option<f64>,
    /// When `false` particles never branch (single Brownian path).
    #[serde(default = "default_true")]
    pub branching: bool,
}

impl SimConfig {
    /// Snapshot at the horizon only.
    pub fn new(beta: f64, dim: usize, horizon: f64, seed: u64) -> Self {
        Self {
            beta,
            dim,
            horizon,
            snapshot_times: vec![horizon],
            seed,
            particle_cap: DEFAULT_PARTICLE_CAP,
            range_grid_dt: None,
            branching: true,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.particle_cap = cap;
        self
    }

    pub fn with_range(mut self, dt: f64) -> Self {
        self.range_grid_dt = Some(dt);
        self
    }

    pub fn without_branching(mut self) -> Self {
        self.branching = false;
        self
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return domain(format!("beta > 0 violated (beta = {})", self.beta));
        }
        if self.dim == 0 {
            return domain("d >= 1 violated");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return domain(format!("horizon > 0 violated (horizon = {})", self.horizon));
        }
        if self.snapshot_times.is_empty() {
            return domain("snapshot_times must be nonempty");
        }
        let mut prev = 0.0;
        for (i, &t) in self.snapshot_times.iter().enumerate() {
            if !(t > prev || (i == 0 && t > 0.0)) || !t.is_finite() {
                return domain(format!(
                    "snapshot_times must be strictly increasing in (0, horizon]; got {:?}",
                    self.snapshot_times
                ));
            }
            prev = t;
        }
        if prev > self.horizon {
            return domain(format!(
                "snapshot time {prev} exceeds horizon {}",
                self.horizon
            ));
        }
        if self.particle_cap == 0 {
            return domain("particle_cap >= 1 violated");
        }
        if let Some(dt) = self.range_grid_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return domain(format!("range_grid_dt > 0 violated (dt = {dt})"));
            }
        }
        Ok(())
    }
}

/// Particle positions at one time, flat with `dim` values per particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSnapshot {
    pub time: f64,
    pub dim: usize,
    pub positions: Vec<f64>,
    pub seed: u64,
    /// Set when the particle cap was hit at or before this time; positions
    /// are then empty.
    pub truncated: bool,
}

impl ParticleSnapshot {
    /// `N_t`, the number of particles.
    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim)
    }

    /// `Z_t(B(center, radius))`, counting the open ball.
    pub fn mass_in_ball(&self, center: &[f64], radius: f64) -> Result<usize> {
        if center.len() != self.dim {
            return domain(format!(
                "center has dimension {} but snapshot has dimension {}",
                center.len(),
                self.dim
            ));
        }
        if !(radius >= 0.0) {
            return domain(format!("radius >= 0 violated (radius = {radius})"));
        }
        let r2 = radius * radius;
        Ok(self
            .points()
            .filter(|p| crate::geometry::dist2(p, center) < r2)
            .count())
    }

    /// `M_t`, the largest distance of a particle from the origin.
    pub fn max_radius(&self) -> Result<f64> {
        if self.is_empty() {
            return domain("max_radius of an empty snapshot");
        }
        Ok(self
            .points()
            .map(|p| p.iter().map(|x| x * x).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt())
    }
}

/// All particle positions on the grid `0, dt, 2dt, …` up to the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSample {
    pub grid_dt: f64,
    pub dim: usize,
    pub times: Vec<f64>,
    /// Positions at `times[i]` occupy `points[offsets[i]*dim..offsets[i+1]*dim]`.
    pub offsets: Vec<usize>,
    pub points: Vec<f64>,
    /// Recording stopped early because the particle cap was hit.
    pub truncated: bool,
}

impl RangeSample {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of recorded points at grid times `≤ t`.
    pub fn count_until(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s <= t + TIME_EPS);
        self.offsets[k]
    }

    /// Recorded points at grid times `≤ t`, flat.
    pub fn points_until(&self, t: f64) -> &[f64] {
        &self.points[..self.count_until(t) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub snapshots: Vec<ParticleSnapshot>,
    pub range: Option<RangeSample>,
    /// Branching events processed.
    pub branch_events: u64,
}

impl SimOutput {
    pub fn truncated(&self) -> bool {
        self.snapshots.iter().any(|s| s.truncated)
    }

    /// The snapshot at time `t`, if one was requested.
    pub fn at(&self, t: f64) -> Option<&ParticleSnapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.time - t).abs() <= TIME_EPS * t.max(1.0))
    }

    pub fn last(&self) -> &ParticleSnapshot {
        self.snapshots
            .last()
            .expect("validated config has snapshots")
    }
}

/// Live particles, structure of arrays.
#[derive(Default)]
struct Population {
    pos: Vec<f64>,
    branch_at: Vec<f64>,
    rng: Vec<CounterRng>,
}

impl Population {
    fn with_capacity(n: usize, d: usize) -> Self {
        Self {
            pos: Vec::with_capacity(n * d),
            branch_at: Vec::with_capacity(n),
            rng: Vec::with_capacity(n),
        }
    }

    fn len(&self) -> usize {
        self.branch_at.len()
    }
}

struct Stepper {
    dim: usize,
    beta: f64,
    branching: bool,
    cap: usize,
    branch_events: u64,
    stack_pos: Vec<f64>,
    stack: Vec<(f64, f64, CounterRng)>,
}

impl Stepper {
    fn lifetime(&self, rng: &mut CounterRng) -> f64 {
        if self.branching {
            let e: f64 = rng.sample(Exp1);
            e / self.beta
        } else {
            f64::INFINITY
        }
    }

    /// Moves every particle from `from` to `to`, expanding branchings.
    /// Returns `None` when the population at `to` would exceed the cap.
    fn advance(&mut self, pop: Population, from: f64, to: f64) -> Option<Population> {
        let d = self.dim;
        let mut out = Population::with_capacity(pop.len() * 2, d);
        for i in 0..pop.len() {
            self.stack.push((from, pop.branch_at[i], pop.rng[i]));
            self.stack_pos
                .extend_from_slice(&pop.pos[i * d..(i + 1) * d]);
            while let Some((t, branch_at, mut rng)) = self.stack.pop() {
                let base = self.stack_pos.len() - d;
                let end = branch_at.min(to);
                let sd = (end - t).sqrt();
                for a in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    self.stack_pos[base + a] += sd * z;
                }
                if branch_at >= to {
                    if out.len() == self.cap {
                        return None;
                    }
                    out.pos.extend_from_slice(&self.stack_pos[base..]);
                    out.branch_at.push(branch_at);
                    out.rng.push(rng);
                    self.stack_pos.truncate(base);
                } else {
                    self.branch_events += 1;
                    let mut first = rng.child(0);
                    let mut second = rng.child(1);
                    let l1 = self.lifetime(&mut first);
                    let l2 = self.lifetime(&mut second);
                    // the block at `base` now belongs to the second child
                    self.stack_pos.extend_from_within(base..base + d);
                    self.stack.push((branch_at, branch_at + l2, second));
                    self.stack.push((branch_at, branch_at + l1, first));
                }
            }
        }
        Some(out)
    }
}

fn record_range(
    pop: &Population,
    t: f64,
    grid: &[f64],
    next: &mut usize,
    range: &mut Option<RangeSample>,
) {
    let Some(rs) = range.as_mut() else {
        return;
    };
    let tol = TIME_EPS * t.max(1.0);
    while *next < grid.len() && grid[*next] <= t + tol {
        if (grid[*next] - t).abs() <= tol {
            rs.times.push(grid[*next]);
            rs.points.extend_from_slice(&pop.pos);
            rs.offsets.push(rs.points.len() / rs.dim);
        }
        *next += 1;
    }
}

/// Runs one realization of BBM started from a single particle at the origin.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let d = cfg.dim;

    let range_times: Vec<f64> = match cfg.range_grid_dt {
        Some(dt) => {
            let n = (cfg.horizon / dt + 1e-9).floor() as usize;
            (0..=n).map(|k| k as f64 * dt).collect()
        }
        None => Vec::new(),
    };
    let mut stops: Vec<f64> = cfg
        .snapshot_times
        .iter()
        .chain(range_times.iter())
        .copied()
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|b, a| (*b - *a).abs() <= TIME_EPS * a.max(1.0));

    let mut stepper = Stepper {
        dim: d,
        beta: cfg.beta,
        branching: cfg.branching,
        cap: cfg.particle_cap,
        branch_events: 0,
        stack_pos: Vec::new(),
        stack: Vec::new(),
    };

    let mut root_rng = CounterRng::new(mix64(cfg.seed ^ 0x6A09_E667_F3BC_C908));
    let first_branch = stepper.lifetime(&mut root_rng);
    let mut pop = Population {
        pos: vec![0.0; d],
        branch_at: vec![first_branch],
        rng: vec![root_rng],
    };

    let mut range = cfg.range_grid_dt.map(|dt| RangeSample {
        grid_dt: dt,
        dim: d,
        times: Vec::new(),
        offsets: vec![0],
        points: Vec::new(),
        truncated: false,
    });
    let mut range_idx = 0;
    let mut snap_idx = 0;
    let mut snapshots = Vec::with_capacity(cfg.snapshot_times.len());
    let mut now = 0.0;
    let mut truncated = false;

    record_range(&pop, 0.0, &range_times, &mut range_idx, &mut range);

    for &stop in stops.iter().filter(|&&s| s > TIME_EPS) {
        match stepper.advance(std::mem::take(&mut pop), now, stop) {
            Some(next) => pop = next,
            None => {
                truncated = true;
                break;
            }
        }
        now = stop;
        record_range(&pop, stop, &range_times, &mut range_idx, &mut range);
        if snap_idx < cfg.snapshot_times.len()
            && (cfg.snapshot_times[snap_idx] - stop).abs() <= TIME_EPS * stop.max(1.0)
        {
            snapshots.push(ParticleSnapshot {
                time: cfg.snapshot_times[snap_idx],
                dim: d,
                positions: pop.pos.clone(),
                seed: cfg.seed,
                truncated: false,
            });
            snap_idx += 1;
        }
        if snap_idx == cfg.snapshot_times.len() && range_idx == range_times.len() {
            break;
        }
    }

    if truncated {
        for &t in &cfg.snapshot_times[snap_idx..] {
            snapshots.push(ParticleSnapshot {
                time: t,
                dim: d,
                positions: Vec::new(),
                seed: cfg.seed,
                truncated: true,
            });
        }
        if let Some(rs) = range.as_mut() {
            rs.truncated = true;
        }
    }

    Ok(SimOutput {
        snapshots,
        range,
        branch_events: stepper.branch_events,
    })
}
