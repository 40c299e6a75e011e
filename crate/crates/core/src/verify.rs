//! The acceptance criteria as runnable checks, grouped into suites.
//!
//! Each criterion is a list of named gates (see [`Check`]); it passes when
//! every gate passes. Criteria that run Monte Carlo experiments also return
//! the experiment reports. With `quick` set, replica counts are reduced for a
//! smoke run; tolerances are never changed.

use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    absence_ld_experiment, absence_oracle_experiment, density_coverage_experiment,
    enlargement_volume_experiment, growth_experiment, many_to_one_check,
    mass_distribution_experiment, speed_experiment, Check, ExperimentConfig, ExperimentKind,
    ExperimentReport, Verdict,
};
use crate::fkpp::{picard_check, solve_absence, FkppConfig};
use crate::geometry::{
    cubic_covering, density_probes, enlarged_packing_count, gaussian_ball_prob, is_r_dense_with,
    shrinking_packing_count, union_volume, unit_ball_volume, Ball, DensityOptions, DensityVerdict,
};
use crate::rate_fn::{minimize, objective, rate_theorem_b, RateParams};
use crate::rng::{mix64, CounterRng};

pub const DEFAULT_SEED: u64 = 20261016;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Rate,
    Sim,
    Geometry,
    Fkpp,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Rate => "rate",
            Suite::Sim => "sim",
            Suite::Geometry => "geometry",
            Suite::Fkpp => "fkpp",
            Suite::All => "all",
        }
    }

    pub fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rate" => Ok(Suite::Rate),
            "sim" => Ok(Suite::Sim),
            "geometry" => Ok(Suite::Geometry),
            "fkpp" => Ok(Suite::Fkpp),
            "all" => Ok(Suite::All),
            _ => Err(Error::Config(format!(
                "unknown suite '{s}'; expected rate, sim, geometry, fkpp or all"
            ))),
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub quick: bool,
    /// 0 picks the default worker count.
    pub workers: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            quick: false,
            workers: 0,
        }
    }
}

impl VerifyOptions {
    fn replicas(&self, full: usize, quick: usize) -> usize {
        if self.quick {
            quick
        } else {
            full
        }
    }

    fn config(&self, kind: ExperimentKind) -> ExperimentConfig {
        kind.default_config()
            .with_seed(self.seed)
            .with_workers(self.workers)
    }

    fn rng(&self, stream: u64) -> CounterRng {
        CounterRng::new(mix64(self.seed ^ mix64(stream)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub claim: String,
    pub suite: Suite,
    pub passed: bool,
    pub gates: Vec<Check>,
    pub reports: Vec<ExperimentReport>,
    /// Wall-clock time; not serialized so that outcomes are reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn gate(&self, name: &str) -> Option<&Check> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn gate_passed(&self, name: &str) -> bool {
        self.gate(name).and_then(|g| g.passed) == Some(true)
    }
}

/// Gates and reports of one criterion while it runs.
#[derive(Default)]
struct Gates {
    gates: Vec<Check>,
    reports: Vec<ExperimentReport>,
}

impl Gates {
    fn require(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.gates.push(Check::new(name, ok, detail));
    }

    /// A gate that passes when the named check of `report` passed.
    fn check_of(&mut self, name: &str, report: &ExperimentReport, check: &str) {
        let gate = match report.check(check) {
            Some(c) => Check {
                name: name.to_string(),
                passed: Some(c.passed == Some(true)),
                detail: c.detail.clone(),
            },
            None => Check::new(
                name,
                false,
                format!("report {} has no check '{check}'", report.name),
            ),
        };
        self.gates.push(gate);
    }

    /// A gate that passes when the whole report passed.
    fn verdict_of(&mut self, name: &str, report: &ExperimentReport) {
        let detail = report
            .checks
            .iter()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ");
        self.gates
            .push(Check::new(name, report.verdict == Verdict::Pass, detail));
    }
}

pub struct Criterion {
    pub id: u8,
    pub claim: &'static str,
    pub suite: Suite,
    /// Runtime budget at full scale, in seconds.
    pub budget: f64,
    run: fn(&VerifyOptions, &mut Gates) -> Result<()>,
}

pub const CRITERIA: [Criterion; 13] = [
    Criterion {
        id: 1,
        claim: "absence rate closed form",
        suite: Suite::Rate,
        budget: 1.0,
        run: c1_closed_form,
    },
    Criterion {
        id: 2,
        claim: "rate function structure",
        suite: Suite::Rate,
        budget: 10.0,
        run: c2_rate_properties,
    },
    Criterion {
        id: 3,
        claim: "geometric mass law",
        suite: Suite::Sim,
        budget: 60.0,
        run: c3_mass_law,
    },
    Criterion {
        id: 4,
        claim: "many-to-one mean",
        suite: Suite::Sim,
        budget: 120.0,
        run: c4_many_to_one,
    },
    Criterion {
        id: 5,
        claim: "absence PDE oracle validity",
        suite: Suite::Fkpp,
        budget: 120.0,
        run: c5_fkpp_validity,
    },
    Criterion {
        id: 6,
        claim: "absence rate via PDE slope",
        suite: Suite::Fkpp,
        budget: 60.0,
        run: c6_oracle_slope,
    },
    Criterion {
        id: 7,
        claim: "absence MC vs PDE",
        suite: Suite::Fkpp,
        budget: 180.0,
        run: c7_mc_vs_oracle,
    },
    Criterion {
        id: 8,
        claim: "growth in moving ball",
        suite: Suite::Sim,
        budget: 300.0,
        run: c8_growth,
    },
    Criterion {
        id: 9,
        claim: "speed of the maximum",
        suite: Suite::Sim,
        budget: 300.0,
        run: c9_speed,
    },
    Criterion {
        id: 10,
        claim: "density decay and coverage",
        suite: Suite::Sim,
        budget: 300.0,
        run: c10_density,
    },
    Criterion {
        id: 11,
        claim: "enlargement volume",
        suite: Suite::Sim,
        budget: 600.0,
        run: c11_volume,
    },
    Criterion {
        id: 12,
        claim: "geometry oracles",
        suite: Suite::Geometry,
        budget: 120.0,
        run: c12_geometry,
    },
    Criterion {
        id: 13,
        claim: "determinism",
        suite: Suite::Sim,
        budget: 300.0,
        run: c13_determinism,
    },
];

pub fn criterion(id: u8) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

pub fn run_criterion(id: u8, opts: &VerifyOptions) -> Result<CriterionOutcome> {
    let c = criterion(id).ok_or_else(|| Error::Config(format!("no criterion {id}")))?;
    let start = Instant::now();
    let mut g = Gates::default();
    (c.run)(opts, &mut g)?;
    let passed = !g.gates.is_empty() && g.gates.iter().all(|x| x.passed == Some(true));
    Ok(CriterionOutcome {
        id,
        claim: c.claim.to_string(),
        suite: c.suite,
        passed,
        gates: g.gates,
        reports: g.reports,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub options: VerifyOptions,
    pub outcomes: Vec<CriterionOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failed(&self) -> Vec<&CriterionOutcome> {
        self.outcomes.iter().filter(|o| !o.passed).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per criterion, then the failing gates.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>3}  {:<30} {:<9} {:<6} {:>9}\n",
            "#", "claim", "suite", "result", "seconds"
        );
        for o in &self.outcomes {
            s += &format!(
                "{:>3}  {:<30} {:<9} {:<6} {:>9.2}\n",
                o.id,
                o.claim,
                o.suite.name(),
                if o.passed { "PASS" } else { "FAIL" },
                o.seconds
            );
        }
        for o in self.failed() {
            for gate in o.gates.iter().filter(|g| g.passed != Some(true)) {
                s += &format!(
                    "  [{}] {} / {}: {}\n",
                    o.id, o.claim, gate.name, gate.detail
                );
            }
        }
        s
    }
}

/// Runs every criterion of `suite` in order.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    run_suite_with(suite, opts, |_| {})
}

/// As [`run_suite`], calling `progress` after each criterion.
pub fn run_suite_with(
    suite: Suite,
    opts: &VerifyOptions,
    mut progress: impl FnMut(&CriterionOutcome),
) -> Result<SuiteReport> {
    let mut outcomes = Vec::new();
    for c in CRITERIA.iter().filter(|c| suite.includes(c.suite)) {
        let o = run_criterion(c.id, opts)?;
        progress(&o);
        outcomes.push(o);
    }
    Ok(SuiteReport {
        suite,
        options: *opts,
        outcomes,
    })
}

fn c1_closed_form(_: &VerifyOptions, g: &mut Gates) -> Result<()> {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let theta = i as f64 / 100.0;
        let got = minimize(&RateParams::unit(1, theta, 0.0, 0.0)?)?.rate_value;
        worst = worst.max((got - rate_theorem_b(theta)?).abs());
    }
    g.require(
        "closed form",
        worst < 1e-9,
        format!("max |I - 2(sqrt2-1)(1-theta)| = {worst:.2e} over 100 theta"),
    );
    Ok(())
}

fn random_params(rng: &mut CounterRng) -> Result<RateParams> {
    let d = rng.random_range(1..=3usize);
    let theta = rng.random_range(0.0..0.95);
    let k_max = (1.0 - theta * theta) / d as f64;
    let k = rng.random_range(0.0..0.9) * k_max;
    let a_max = 1.0 - theta * theta - k * d as f64;
    let a = rng.random_range(0.0..0.9) * a_max;
    RateParams::unit(d, theta, k, a)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn c2_rate_properties(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    let mut rng = opts.rng(2);
    let (mut order_ok, mut convex_ok, mut shift_ok) = (true, true, true);
    let mut worst_shift: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_params(&mut rng)?;
        let r = minimize(&p)?;
        order_ok &= r.rho_hat > 0.0 && r.rho_hat <= r.rho_bar;

        let x = rng.random_range(0.0..1.0) * r.rho_bar;
        let y = rng.random_range(0.0..1.0) * r.rho_bar;
        let (lo, hi) = (x.min(y).max(1e-6), x.max(y));
        if hi - lo > 1e-9 {
            let mid = objective(0.5 * (lo + hi), &p)?;
            let avg = 0.5 * (objective(lo, &p)? + objective(hi, &p)?);
            convex_ok &= mid < avg + 1e-12;
        }

        let shifted = minimize(&RateParams::unit(p.d, p.theta, 0.0, p.shift())?)?;
        let gap = (shifted.rate_value - r.rate_value).abs();
        worst_shift = worst_shift.max(gap);
        shift_ok &= gap < 1e-9 && (shifted.rho_hat - r.rho_hat).abs() < 1e-9;
    }
    g.require(
        "rho order",
        order_ok,
        "0 < rho_hat <= rho_bar on 1000 random instances",
    );
    g.require(
        "convexity",
        convex_ok,
        "midpoint convexity on 1000 random instances",
    );
    g.require(
        "shift identity",
        shift_ok,
        format!("max |I(theta,k,a) - I(theta,0,a+kd)| = {worst_shift:.2e}"),
    );

    let sweep = |f: &dyn Fn(f64) -> Result<RateParams>, grid: &[f64]| -> Result<(bool, bool)> {
        let rs = grid
            .iter()
            .map(|&v| minimize(&f(v)?))
            .collect::<Result<Vec<_>>>()?;
        let rho: Vec<f64> = rs.iter().map(|r| r.rho_hat).collect();
        let rate: Vec<f64> = rs.iter().map(|r| r.rate_value).collect();
        Ok((strictly_decreasing(&rho), strictly_decreasing(&rate)))
    };
    let thetas: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
    let ks: Vec<f64> = (0..9).map(|i| i as f64 * 0.05).collect();
    let as_: Vec<f64> = (0..9).map(|i| i as f64 * 0.1).collect();
    let by_theta = sweep(&|v| RateParams::unit(1, v, 0.05, 0.05), &thetas)?;
    let by_k = sweep(&|v| RateParams::unit(2, 0.3, v, 0.05), &ks)?;
    let by_a = sweep(&|v| RateParams::unit(1, 0.3, 0.05, v), &as_)?;
    for (name, (rho, rate)) in [
        ("monotone theta", by_theta),
        ("monotone k", by_k),
        ("monotone a", by_a),
    ] {
        g.require(
            name,
            rho && rate,
            format!("rho_hat decreasing: {rho}, I decreasing: {rate}"),
        );
    }
    Ok(())
}

fn c3_mass_law(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    let cfg = opts
        .config(ExperimentKind::MassDistribution)
        .with_replicas(opts.replicas(100_000, 20_000));
    let r = mass_distribution_experiment(&cfg)?;
    g.verdict_of("geometric law", &r);
    g.reports.push(r);
    Ok(())
}

fn c4_many_to_one(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    let base = opts
        .config(ExperimentKind::ManyToOne)
        .with_replicas(opts.replicas(10_000, 2_000));
    for theta in [0.0, 0.5] {
        for k in [0.0, 0.1] {
            for dim in [1, 2] {
                let cfg = ExperimentConfig {
                    theta,
                    k,
                    dim,
                    ..base.clone()
                };
                let r = many_to_one_check(&cfg)?;
                g.verdict_of(&format!("theta={theta},k={k},d={dim}"), &r);
                g.reports.push(r);
            }
        }
    }
    Ok(())
}

fn c5_fkpp_validity(_: &VerifyOptions, g: &mut Gates) -> Result<()> {
    let heat = solve_absence(&FkppConfig::new(1.0, 0.5, 3.0, 0.0).without_reaction())?;
    let ball = Ball::centered(1, 0.5)?;
    let mut worst: f64 = 0.0;
    for &t in &[0.5, 1.0, 2.0, 3.0] {
        for i in 0..=12 {
            let x = -3.0 + 0.5 * i as f64;
            let want = 1.0 - gaussian_ball_prob(t, &[x], &ball)?;
            worst = worst.max((heat.at(t, x)? - want).abs());
        }
    }
    g.require(
        "heat flow",
        worst < 1e-4,
        format!("max |u - (1 - p)| = {worst:.2e}"),
    );

    let cfg = FkppConfig::new(1.0, 0.5, 3.0, 0.4);
    let sol = solve_absence(&cfg)?;
    let mut worst: f64 = 0.0;
    for &t in &[0.5, 1.0, 2.0] {
        for &x in &[0.0, 0.5, 1.0] {
            worst = worst.max((picard_check(&cfg, t, x)? - sol.at(t, x)?).abs());
        }
    }
    g.require(
        "integral equation",
        worst < 1e-3,
        format!("max |picard - pde| = {worst:.2e} on 3x3 grid"),
    );

    let n = sol.points;
    let mut monotone = true;
    let mut bounded = true;
    for k in 0..sol.times.len() {
        let row = sol.row(k);
        bounded &= row.iter().all(|u| (0.0..=1.0).contains(u));
        for i in n / 2..n - 1 {
            monotone &= row[i + 1] >= row[i] - 1e-8;
            monotone &= row[n - 2 - i] >= row[n - 1 - i] - 1e-8;
        }
    }
    g.require(
        "monotone in |x|",
        monotone,
        format!("{} recorded times, {n} points each", sol.times.len()),
    );
    g.require("bounded", bounded, "0 <= u <= 1 on the grid");

    let base = FkppConfig::new(1.0, 0.5, 3.0, 0.0);
    let coarse = solve_absence(&base)?;
    let fine = solve_absence(&base.refined(2.0))?;
    let change = (coarse.at(3.0, 0.0)? - fine.at(3.0, 0.0)?).abs();
    g.require(
        "grid halving",
        change < 1e-4,
        format!("|u(3,0) - u_half(3,0)| = {change:.2e}"),
    );
    Ok(())
}

fn c6_oracle_slope(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    for theta in [0.0, 0.5] {
        let cfg = ExperimentConfig {
            theta,
            ..opts.config(ExperimentKind::AbsenceOracle)
        };
        let r = absence_oracle_experiment(&cfg)?;
        g.check_of(&format!("theta={theta}"), &r, "slope");
        g.reports.push(r);
    }
    Ok(())
}

fn c7_mc_vs_oracle(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    for theta in [0.0, 0.4] {
        let cfg = ExperimentConfig {
            theta,
            r0: 0.5,
            t_grid: vec![1.0, 2.0, 3.0],
            ..opts.config(ExperimentKind::AbsenceLd)
        }
        .with_replicas(opts.replicas(100_000, 20_000));
        let r = absence_ld_experiment(&cfg)?;
        g.check_of(&format!("theta={theta}"), &r, "oracle");
        g.reports.push(r);
    }
    Ok(())
}

fn c8_growth(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    for (theta, k) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.05)] {
        let cfg = ExperimentConfig {
            theta,
            k,
            ..opts.config(ExperimentKind::Growth)
        }
        .with_replicas(opts.replicas(200, 50));
        let r = growth_experiment(&cfg)?;
        g.check_of(&format!("theta={theta},k={k}"), &r, "growth");
        g.reports.push(r);
    }
    Ok(())
}

fn c9_speed(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    let slow = opts
        .config(ExperimentKind::Speed)
        .with_replicas(opts.replicas(200, 50));
    let fast = ExperimentConfig {
        beta: 2.0,
        dim: 2,
        t_grid: vec![3.5, 7.0],
        tolerance: 0.12,
        ..slow.clone()
    }
    .with_replicas(opts.replicas(200, 30));
    for (name, cfg) in [("beta=0.5,d=1", slow), ("beta=2,d=2", fast)] {
        let r = speed_experiment(&cfg)?;
        g.check_of(name, &r, "speed");
        g.reports.push(r);
    }
    Ok(())
}

fn c10_density(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    let cfg = opts
        .config(ExperimentKind::Density)
        .with_replicas(opts.replicas(10_000, 1_000));
    let out = density_coverage_experiment(&cfg)?;
    g.check_of("trend", &out.density, "trend");
    g.require(
        "complementary",
        out.mismatches == 0 && out.comparisons > 0,
        format!(
            "{} disagreements in {} replica-time pairs",
            out.mismatches, out.comparisons
        ),
    );
    g.reports.push(out.density);
    g.reports.push(out.coverage);
    Ok(())
}

fn c11_volume(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    let one = opts
        .config(ExperimentKind::EnlargementVolume)
        .with_replicas(opts.replicas(40, 12));
    let two = ExperimentConfig {
        dim: 2,
        beta: 0.5,
        t_grid: vec![4.0, 6.0, 8.0, 10.0],
        ..one.clone()
    };
    for (name, cfg) in [("d=1", one), ("d=2", two)] {
        let r = enlargement_volume_experiment(&cfg)?;
        g.check_of(&format!("{name} final"), &r, "final");
        g.check_of(&format!("{name} trend"), &r, "trend");
        g.reports.push(r);
    }
    Ok(())
}

/// Verdict of the probe classification computed by exhaustive search.
fn brute_force_density(
    points: &[f64],
    region: &Ball,
    r: f64,
    fraction: f64,
) -> Result<(DensityVerdict, Option<Vec<f64>>)> {
    let d = region.dim();
    let spacing = r * fraction;
    let safe = r - spacing * (d as f64).sqrt() / 2.0;
    let mut all_close = true;
    for probe in density_probes(region, spacing)? {
        let nearest2 = points
            .chunks_exact(d)
            .map(|p| {
                p.iter()
                    .zip(&probe.point)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        if probe.interior && nearest2 >= r * r {
            return Ok((DensityVerdict::NotDense, Some(probe.point)));
        }
        all_close &= nearest2 < safe * safe;
    }
    Ok((
        if all_close {
            DensityVerdict::Dense
        } else {
            DensityVerdict::Indeterminate
        },
        None,
    ))
}

fn c12_geometry(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    let pi = std::f64::consts::PI;
    let cases: [(&str, Vec<f64>, usize, f64); 5] = [
        ("single d=1", vec![0.3], 1, 2.0),
        ("single d=2", vec![0.0, 0.0], 2, pi),
        ("single d=3", vec![0.0, 0.0, 0.0], 3, unit_ball_volume(3)),
        ("disjoint pair", vec![0.0, 0.0, 3.0, 0.0], 2, 2.0 * pi),
        (
            "lens pair",
            vec![0.0, 0.0, 1.0, 0.0],
            2,
            2.0 * pi - (2.0 * pi / 3.0 - 3f64.sqrt() / 2.0),
        ),
    ];
    for (i, (name, pts, d, exact)) in cases.into_iter().enumerate() {
        let v = union_volume(&pts, d, 1.0, 0.002, mix64(opts.seed + i as u64))?;
        let gap = (v.volume - exact).abs();
        g.require(
            &format!("volume {name}"),
            gap <= 4.0 * v.standard_error + 1e-12,
            format!("{:.5} ± {:.5} vs {exact:.5}", v.volume, v.standard_error),
        );
    }

    let mut rng = opts.rng(12);
    let mut agree = 0;
    let mut mix = [0usize; 3];
    let mut first_mismatch = String::new();
    for case in 0..100 {
        let d = 1 + case % 3;
        let n = rng.random_range(1..=200usize);
        let pts: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let region = Ball::centered(d, rng.random_range(0.3..1.0))?;
        let r = rng.random_range(0.3..0.8);
        let fraction = if d == 3 { 0.25 } else { 0.1 };
        let fast = is_r_dense_with(
            &pts,
            &region,
            r,
            &DensityOptions {
                probe_spacing_fraction: fraction,
            },
        )?;
        let slow = brute_force_density(&pts, &region, r, fraction)?;
        mix[fast.verdict as usize] += 1;
        if fast.verdict == slow.0 && fast.witness == slow.1 {
            agree += 1;
        } else if first_mismatch.is_empty() {
            first_mismatch = format!("; case {case}: {:?} vs {:?}", fast.verdict, slow.0);
        }
    }
    g.require("density vs brute force", agree == 100, format!(
            "{agree}/100 instances agree ({} dense, {} not dense, {} indeterminate){first_mismatch}",
            mix[0], mix[1], mix[2]
        ));

    let mut covered = 0;
    for i in 0..10_000 {
        let d = 1 + i % 3;
        let region = Ball::centered(d, 1.0)?;
        let cover = cubic_covering(&region, 1.0 / (2.0 * (d as f64).sqrt()))?;
        let x = loop {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            if region.contains(&x) {
                break x;
            }
        };
        if cover.farthest_point_distance(&x) < cover.enlargement_radius() {
            covered += 1;
        }
    }
    g.require(
        "covering property",
        covered == 10_000,
        format!("{covered}/10000 random region points covered"),
    );

    let mut counts_ok = true;
    for d in 1..=3usize {
        let sd = (d as f64).sqrt();
        for &k in &[0.0, 0.1, 0.2] {
            for t in 0..=10 {
                let t = t as f64;
                let r_t = (-k * t).exp();
                let n = cubic_covering(&Ball::centered(d, 1.0)?, r_t / (2.0 * sd))?.count;
                counts_ok &= n as f64 <= shrinking_packing_count(1.0, k, t, d);
            }
        }
        for theta in [0.3, 0.6, 0.9] {
            for t in 1..=6 {
                let rho = theta * 2f64.sqrt() * t as f64;
                let m = cubic_covering(&Ball::centered(d, rho)?, 1.0 / (2.0 * sd))?.count;
                counts_ok &= m as f64 <= enlarged_packing_count(rho, 1.0, d);
            }
        }
    }
    g.require(
        "packing counts",
        counts_ok,
        "counts within the n_t and m_t bounds for d <= 3",
    );
    Ok(())
}

fn c13_determinism(opts: &VerifyOptions, g: &mut Gates) -> Result<()> {
    let configs = [
        ExperimentConfig {
            replicas: 4_000,
            ..opts.config(ExperimentKind::MassDistribution)
        },
        ExperimentConfig {
            replicas: 300,
            t_grid: vec![2.0, 3.0],
            ..opts.config(ExperimentKind::Density)
        },
        ExperimentConfig {
            replicas: 40,
            t_grid: vec![4.0, 8.0],
            ..opts.config(ExperimentKind::Growth)
        },
    ];
    for (cfg, kind) in configs.iter().zip([
        ExperimentKind::MassDistribution,
        ExperimentKind::Coverage,
        ExperimentKind::Growth,
    ]) {
        let single = kind.run(&cfg.clone().with_workers(1))?.to_json()?;
        let again = kind.run(&cfg.clone().with_workers(1))?.to_json()?;
        let parallel = kind.run(&cfg.clone().with_workers(3))?.to_json()?;
        g.require(
            &format!("{kind} rerun"),
            single == again,
            "same seed, same report",
        );
        g.require(
            &format!("{kind} workers"),
            single == parallel,
            "1 vs 3 workers",
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_ordered() {
        let ids: Vec<u8> = CRITERIA.iter().map(|c| c.id).collect();
        assert_eq!(ids, (1..=13).collect::<Vec<u8>>());
        assert!(criterion(14).is_none());
        for s in ["rate", "sim", "geometry", "fkpp", "all"] {
            assert_eq!(s.parse::<Suite>().unwrap().name(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn rate_suite_passes() {
        let report = run_suite(Suite::Rate, &VerifyOptions::default()).unwrap();
        assert_eq!(report.outcomes.len(), 2);
        assert!(report.passed(), "{}", report.table());
    }

    #[test]
    fn unknown_criterion_is_an_error() {
        assert!(run_criterion(0, &VerifyOptions::default()).is_err());
    }
}
