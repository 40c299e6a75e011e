use rand::Rng;

use super::{run_replicas, Check, EstimateRow, ExperimentConfig, ExperimentReport, SlopeFit};
use crate::error::{domain, Result};
use crate::geometry::{
    coverage_by_painting, is_r_dense_with, Ball, DensityOptions, DensityVerdict, SpatialGrid,
};
use crate::rate_fn::{minimize, RateParams};
use crate::rng::{mix64, CounterRng};
use crate::sim::simulate;
use crate::stats::{binomial_se, mean_se};

/// Both evaluations of one replica at one time; `None` for a route not run.
type Outcome = Option<[Option<DensityVerdict>; 2]>;

/// Density and coverage computed on the same snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCoverage {
    pub density: ExperimentReport,
    pub coverage: ExperimentReport,
    /// Replica-time pairs evaluated by both routes.
    pub comparisons: usize,
    /// Pairs where the routes disagree.
    pub mismatches: usize,
}

fn density_inputs(cfg: &ExperimentConfig) -> Result<(Vec<Ball>, Vec<f64>)> {
    if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
        return domain(format!("0 < theta < 1 violated (theta = {})", cfg.theta));
    }
    if cfg.t_grid.iter().any(|&t| t <= 0.0) {
        return domain(format!("t_grid times must be > 0; got {:?}", cfg.t_grid));
    }
    let speed = cfg.theta * (2.0 * cfg.beta).sqrt();
    let regions = cfg
        .t_grid
        .iter()
        .map(|&t| Ball::centered(cfg.dim, speed * t))
        .collect::<Result<Vec<_>>>()?;
    let radii = cfg
        .t_grid
        .iter()
        .map(|&t| cfg.r0 * (-cfg.beta * cfg.k * t).exp())
        .collect();
    Ok((regions, radii))
}

fn run_routes(cfg: &ExperimentConfig, grid: bool, paint: bool) -> Result<Vec<Vec<Outcome>>> {
    cfg.validate()?;
    cfg.check_feasible()?;
    let (regions, radii) = density_inputs(cfg)?;
    let opts = DensityOptions {
        probe_spacing_fraction: cfg.probe_fraction,
    };
    let template = cfg.sim_template();
    run_replicas(cfg.replicas, cfg.workers, |i| {
        let out = simulate(&cfg.replica_sim(&template, i))?;
        out.snapshots
            .iter()
            .zip(regions.iter().zip(&radii))
            .map(|(s, (region, &r))| {
                if s.truncated {
                    return Ok(None);
                }
                let a = if grid {
                    Some(is_r_dense_with(&s.positions, region, r, &opts)?.verdict)
                } else {
                    None
                };
                let b = if paint {
                    Some(coverage_by_painting(&s.positions, region, r, &opts)?.verdict)
                } else {
                    None
                };
                Ok(Some([a, b]))
            })
            .collect()
    })
}

struct Tally {
    dense: usize,
    not_dense: usize,
    indeterminate: usize,
    truncated: usize,
}

impl Tally {
    fn decided(&self) -> usize {
        self.dense + self.not_dense
    }
}

fn tally(outcomes: &[Vec<Outcome>], j: usize, route: usize) -> Tally {
    let mut t = Tally {
        dense: 0,
        not_dense: 0,
        indeterminate: 0,
        truncated: 0,
    };
    for o in outcomes {
        match o[j].and_then(|pair| pair[route]) {
            Some(DensityVerdict::Dense) => t.dense += 1,
            Some(DensityVerdict::NotDense) => t.not_dense += 1,
            Some(DensityVerdict::Indeterminate) => t.indeterminate += 1,
            None => t.truncated += 1,
        }
    }
    t
}

fn density_report(
    cfg: &ExperimentConfig,
    outcomes: &[Vec<Outcome>],
    route: usize,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "density",
        "P(particles not r_t-dense in B(0, theta sqrt(2 beta) t)) decays at rate beta*I(theta,k,0)",
        cfg,
    );
    let params = RateParams::new(cfg.beta, cfg.dim, cfg.theta, cfg.k, 0.0)?;
    let reference = cfg.beta * minimize(&params)?.rate_value;
    report.reference = Some(reference);

    let mut ps = Vec::new();
    let (mut fit_t, mut fit_y) = (Vec::new(), Vec::new());
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let c = tally(outcomes, j, route);
        let n = c.decided();
        let p = c.not_dense as f64 / n.max(1) as f64;
        report.rows.push(
            EstimateRow::monte_carlo("p_not_dense", t, p, binomial_se(p, n.max(1)), n)
                .with_excluded(c.truncated)
                .with_indeterminate(c.indeterminate),
        );
        if c.not_dense > 0 {
            fit_t.push(t);
            fit_y.push(-p.ln());
        } else {
            report.notes.push(format!(
                "t = {t}: no non-dense replicas; excluded from the fit"
            ));
        }
        ps.push(p);
    }
    report.checks.push(if ps.len() < 2 {
        Check::undecided("trend", "need two grid times")
    } else {
        Check::new(
            "trend",
            ps.windows(2).all(|w| w[1] < w[0]),
            format!("P(not dense) along the grid: {ps:.5?}"),
        )
    });
    report.fit = SlopeFit::fit(&fit_t, &fit_y);
    report.checks.push(match report.fit {
        Some(fit) => {
            let rel = (fit.slope - reference).abs() / reference;
            Check::new(
                "slope",
                rel <= cfg.tolerance,
                format!(
                    "slope {:.5} vs {:.5}: relative error {:.3} (tolerance {})",
                    fit.slope, reference, rel, cfg.tolerance
                ),
            )
        }
        None => Check::undecided("slope", "fewer than two grid times with events"),
    });
    Ok(report)
}

fn coverage_report(
    cfg: &ExperimentConfig,
    outcomes: &[Vec<Outcome>],
    route: usize,
) -> ExperimentReport {
    let mut report = ExperimentReport::new(
        "coverage",
        "B(0, theta sqrt(2 beta) t) is eventually inside the r_t-enlargement of the particles",
        cfg,
    );
    report.reference = Some(1.0);
    let mut fr = Vec::new();
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let c = tally(outcomes, j, route);
        let n = c.decided();
        let f = c.dense as f64 / n.max(1) as f64;
        let se = binomial_se(f, n.max(1));
        report.rows.push(
            EstimateRow::monte_carlo("covered_fraction", t, f, se, n)
                .with_reference(1.0)
                .with_excluded(c.truncated)
                .with_indeterminate(c.indeterminate),
        );
        fr.push((f, se));
    }
    // a drop larger than two combined standard errors counts as a decrease
    let rising = fr
        .windows(2)
        .all(|w| w[1].0 >= w[0].0 - 2.0 * w[0].1.hypot(w[1].1));
    let values: Vec<f64> = fr.iter().map(|x| x.0).collect();
    report.checks.push(if fr.len() < 2 {
        Check::undecided("trend", "need two grid times")
    } else {
        Check::new(
            "trend",
            rising,
            format!("covered fraction along the grid: {values:.5?}"),
        )
    });
    report
}

/// Fraction of replicas whose snapshot is not `r_t`-dense in the subcritical
/// ball `B(0, θ√(2β)t)`, with `r_t = r₀e^{−βkt}`, tested through the spatial
/// index route.
pub fn density_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let outcomes = run_routes(cfg, true, false)?;
    Ok(density_report(cfg, &outcomes, 0)?.finish())
}

/// Fraction of replicas whose `r_t`-enlargement contains `B(0, θ√(2β)t)`,
/// decided by painting probes from the particles.
pub fn coverage_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let outcomes = run_routes(cfg, false, true)?;
    Ok(coverage_report(cfg, &outcomes, 1).finish())
}

/// Runs both routes on every snapshot and checks that their verdicts agree
/// replica by replica, so that the density event is exactly the complement
/// of the coverage event.
pub fn density_coverage_experiment(cfg: &ExperimentConfig) -> Result<DensityCoverage> {
    let outcomes = run_routes(cfg, true, true)?;
    let mut comparisons = 0;
    let mut mismatches = 0;
    for pair in outcomes.iter().flatten().flatten() {
        comparisons += 1;
        if pair[0] != pair[1] {
            mismatches += 1;
        }
    }
    let check = Check::new(
        "complementary",
        mismatches == 0,
        format!("{mismatches} disagreements in {comparisons} replica-time pairs"),
    );
    let mut density = density_report(cfg, &outcomes, 0)?;
    density.checks.push(check.clone());
    let mut coverage = coverage_report(cfg, &outcomes, 1);
    coverage.checks.push(check);
    Ok(DensityCoverage {
        density: density.finish(),
        coverage: coverage.finish(),
        comparisons,
        mismatches,
    })
}

/// `count` probe points in the open unit ball, flat. The first is the origin;
/// the others are uniform, drawn by rejection from a stream keyed by `seed`.
pub fn range_probes(count: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = CounterRng::new(mix64(seed ^ 0xB7E1_5162_8AED_2A6B));
    let mut out = Vec::with_capacity(count * dim);
    if count == 0 {
        return out;
    }
    out.extend(std::iter::repeat_n(0.0, dim));
    let mut p = vec![0.0; dim];
    while out.len() < count * dim {
        for x in p.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        if p.iter().map(|x| x * x).sum::<f64>() < 1.0 {
            out.extend_from_slice(&p);
        }
    }
    out
}

/// Fraction of fixed probes in the unit ball lying within `epsilon` of the
/// range recorded on the grid `0, dt, 2dt, …`, as the time horizon grows.
pub fn range_density_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.check_feasible()?;
    if !(cfg.epsilon > 0.0) || !(cfg.range_dt > 0.0) || cfg.probes == 0 {
        return domain("range density needs epsilon > 0, range_dt > 0 and probes >= 1");
    }
    let probes = range_probes(cfg.probes, cfg.dim, cfg.master_seed);
    let template = crate::sim::SimConfig::new(cfg.beta, cfg.dim, cfg.t_max(), 0)
        .with_cap(cfg.particle_cap)
        .with_range(cfg.range_dt);

    // first grid time at which each probe is covered, per replica
    let first_hits: Vec<Option<Vec<f64>>> = run_replicas(cfg.replicas, cfg.workers, |i| {
        let out = simulate(&cfg.replica_sim(&template, i))?;
        let range = out.range.expect("range recording enabled");
        if range.truncated {
            return Ok(None);
        }
        let grid = SpatialGrid::new(&range.points, cfg.dim, cfg.epsilon)?;
        let hits = probes
            .chunks_exact(cfg.dim)
            .map(|q| {
                grid.indices_within(q, cfg.epsilon)
                    .into_iter()
                    .min()
                    .map_or(f64::INFINITY, |first| {
                        let k = range.offsets.partition_point(|&o| o <= first) - 1;
                        range.times[k]
                    })
            })
            .collect();
        Ok(Some(hits))
    })?;

    let mut report =
        ExperimentReport::new("range-density", "the range of BBM is dense in R^d", cfg);
    report.reference = Some(1.0);
    let valid: Vec<&Vec<f64>> = first_hits.iter().flatten().collect();
    let excluded = cfg.replicas - valid.len();
    if excluded > 0 {
        report
            .notes
            .push(format!("{excluded} truncated replicas excluded"));
    }
    let mut means = Vec::new();
    for &t in &cfg.t_grid {
        let fractions: Vec<f64> = valid
            .iter()
            .map(|h| h.iter().filter(|&&s| s <= t + 1e-12).count() as f64 / cfg.probes as f64)
            .collect();
        let (m, se) = mean_se(&fractions);
        report.rows.push(
            EstimateRow::monte_carlo("covered_fraction", t, m, se, fractions.len())
                .with_reference(1.0)
                .with_excluded(excluded),
        );
        means.push(m);
    }
    report.checks.push(Check::new(
        "monotone",
        means.windows(2).all(|w| w[1] >= w[0]),
        format!("mean covered fraction along the grid: {means:.4?}"),
    ));
    let last = *means.last().expect("validated grid is nonempty");
    if cfg.dim <= 2 {
        report.checks.push(Check::new(
            "complete",
            last == 1.0,
            format!("mean covered fraction {last:.4} at t = {}", cfg.t_max()),
        ));
    } else {
        report
            .notes
            .push("full coverage at the final time is only required for d <= 2".to_string());
    }
    Ok(report.finish())
}
