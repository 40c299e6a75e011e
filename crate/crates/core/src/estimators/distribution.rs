use rand::Rng;
use rand_distr::StandardNormal;

use super::{run_replicas, Check, EstimateRow, ExperimentConfig, ExperimentReport};
use crate::error::{domain, Result};
use crate::rng::{replica_seed, CounterRng};
use crate::sim::simulate;
use crate::stats::{binomial_se, chi_square_gof, mean_se, normal_sf};

const TAIL_POINTS: [usize; 3] = [1, 5, 10];

/// Chi-square test of the population size against the geometric law
/// `P(N_t = k) = e^{−βt}(1 − e^{−βt})^{k−1}` at every grid time, with tail
/// probabilities and the mean `e^{βt}` as spot checks. `tolerance` is the
/// significance level of the chi-square test.
pub fn mass_distribution_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.check_feasible()?;
    if cfg.t_grid.iter().any(|&t| t <= 0.0) {
        return domain(format!("t_grid times must be > 0; got {:?}", cfg.t_grid));
    }
    let template = cfg.sim_template();
    let counts: Vec<Vec<Option<usize>>> = run_replicas(cfg.replicas, cfg.workers, |i| {
        let out = simulate(&cfg.replica_sim(&template, i))?;
        Ok(out
            .snapshots
            .iter()
            .map(|s| (!s.truncated).then(|| s.len()))
            .collect())
    })?;

    let mut report = ExperimentReport::new(
        "mass-distribution",
        "N_t is geometric with success probability e^(-beta t)",
        cfg,
    );
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let ns: Vec<usize> = counts.iter().filter_map(|c| c[j]).collect();
        let n = ns.len();
        let excluded = cfg.replicas - n;
        let q = (-cfg.beta * t).exp();
        let survive = 1.0 - q;

        // bins 1..K-1 exact, bin K collects N >= K
        let mut big_k = 1usize;
        while (n as f64) * survive.powi(big_k as i32) >= 1.0 && big_k < 100_000 {
            big_k += 1;
        }
        let big_k = big_k.max(2);
        let mut observed = vec![0u64; big_k];
        for &c in &ns {
            observed[c.min(big_k) - 1] += 1;
        }
        let probs: Vec<f64> = (1..=big_k)
            .map(|k| {
                if k < big_k {
                    q * survive.powi(k as i32 - 1)
                } else {
                    survive.powi(big_k as i32 - 1)
                }
            })
            .collect();
        let chi = chi_square_gof(&observed, &probs, 5.0);
        report.checks.push(Check::new(
            &format!("chi2 t={t:.4}"),
            chi.p_value > cfg.tolerance,
            format!(
                "statistic {:.3} on {} dof over {} bins, p = {:.4} (significance {})",
                chi.statistic, chi.dof, chi.bins, chi.p_value, cfg.tolerance
            ),
        ));

        let p_one = ns.iter().filter(|&&c| c == 1).count() as f64 / n as f64;
        report.rows.push(
            EstimateRow::monte_carlo("p_eq_1", t, p_one, binomial_se(p_one, n), n)
                .with_reference(q)
                .with_excluded(excluded),
        );
        let mut tails_ok = true;
        let mut detail = Vec::new();
        for k in TAIL_POINTS {
            let p = ns.iter().filter(|&&c| c > k).count() as f64 / n as f64;
            let reference = survive.powi(k as i32);
            let se = binomial_se(reference, n);
            tails_ok &= (p - reference).abs() <= 3.0 * se;
            detail.push(format!("P(N>{k}) = {p:.5} vs {reference:.5}"));
            report.rows.push(
                EstimateRow::monte_carlo(&format!("p_gt_{k}"), t, p, binomial_se(p, n), n)
                    .with_reference(reference)
                    .with_excluded(excluded),
            );
        }
        report.checks.push(Check::new(
            &format!("tails t={t:.4}"),
            tails_ok,
            detail.join("; "),
        ));

        let xs: Vec<f64> = ns.iter().map(|&c| c as f64).collect();
        let (m, se) = mean_se(&xs);
        let expected = (cfg.beta * t).exp();
        report.rows.push(
            EstimateRow::monte_carlo("mean", t, m, se, n)
                .with_reference(expected)
                .with_excluded(excluded),
        );
        report.checks.push(Check::new(
            &format!("mean t={t:.4}"),
            (m - expected).abs() <= 3.0 * se,
            format!("mean {m:.5} ± {se:.5} vs e^(beta t) = {expected:.5}"),
        ));
    }
    Ok(report.finish())
}

/// Single-time form of [`mass_distribution_experiment`] at significance 0.01.
pub fn mass_distribution_test(
    beta: f64,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let cfg = ExperimentConfig {
        beta,
        replicas,
        t_grid: vec![t],
        master_seed: seed,
        tolerance: 0.01,
        ..Default::default()
    };
    mass_distribution_experiment(&cfg)
}

/// `P(sup_{s≤t} |X_s| ≥ b)` for a standard one-dimensional Brownian motion
/// started at the origin.
pub fn brownian_two_sided_exit(b: f64, t: f64) -> Result<f64> {
    if !(b > 0.0 && t > 0.0) {
        return domain(format!("b > 0 and t > 0 required (b = {b}, t = {t})"));
    }
    let z = b / t.sqrt();
    if z >= 1.0 {
        // method of images: alternating sum of one-sided Gaussian tails
        let mut sum = 0.0;
        for k in 1..200 {
            let term = normal_sf((2 * k - 1) as f64 * z);
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        Ok((4.0 * sum).clamp(0.0, 1.0))
    } else {
        // eigenfunction expansion of the survival probability
        let c = std::f64::consts::PI.powi(2) * t / (8.0 * b * b);
        let mut stay = 0.0;
        for k in 0..10_000 {
            let m = (2 * k + 1) as f64;
            let term = (-m * m * c).exp() / m;
            stay += if k % 2 == 0 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        Ok((1.0 - 4.0 / std::f64::consts::PI * stay).clamp(0.0, 1.0))
    }
}

/// Empirical `P(sup_{s≤t} |X_s| > γt)` for one Brownian particle in `d = 1`,
/// whose exponential rate tends to `γ²/2`. Paths are sampled on a grid of
/// step `range_dt` and a barrier crossing between grid points is drawn from
/// the Brownian bridge crossing probability, so the estimate carries no
/// discretization bias beyond the overlap of the two barriers.
pub fn brownian_tail_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if !(cfg.gamma > 0.0) || !(cfg.range_dt > 0.0) {
        return domain("brownian tail needs gamma > 0 and range_dt > 0");
    }
    let h = cfg.range_dt;
    let steps: Vec<usize> = cfg
        .t_grid
        .iter()
        .map(|&t| {
            let n = (t / h).round();
            if t <= 0.0 || (n * h - t).abs() > 1e-9 * t.max(1.0) {
                domain(format!(
                    "grid time {t} is not a positive multiple of range_dt = {h}"
                ))
            } else {
                Ok(n as usize)
            }
        })
        .collect::<Result<_>>()?;
    let barriers: Vec<f64> = cfg.t_grid.iter().map(|&t| cfg.gamma * t).collect();
    let total = *steps.last().expect("validated grid is nonempty");
    let sd = h.sqrt();
    let near = 8.0 * sd;

    let exits: Vec<Vec<bool>> = run_replicas(cfg.replicas, cfg.workers, |i| {
        let mut rng = CounterRng::new(replica_seed(cfg.master_seed, i as u64));
        let mut exited = vec![false; barriers.len()];
        let mut x0 = 0.0f64;
        for step in 0..total {
            let z: f64 = rng.sample(StandardNormal);
            let x1 = x0 + sd * z;
            for (j, &b) in barriers.iter().enumerate() {
                if exited[j] || step >= steps[j] {
                    continue;
                }
                if x1.abs() >= b {
                    exited[j] = true;
                } else if b - x0.abs() < near || b - x1.abs() < near {
                    let up = (-2.0 * (b - x0) * (b - x1) / h).exp();
                    let down = (-2.0 * (b + x0) * (b + x1) / h).exp();
                    if rng.random::<f64>() < up + down {
                        exited[j] = true;
                    }
                }
            }
            x0 = x1;
        }
        Ok(exited)
    })?;

    let reference = 0.5 * cfg.gamma * cfg.gamma;
    let mut report = ExperimentReport::new(
        "brownian-tail",
        "-(1/t) log P(sup_{s<=t} |X_s| > gamma t) -> gamma^2/2",
        cfg,
    );
    report.reference = Some(reference);
    let n = cfg.replicas;
    let mut errs = Vec::new();
    let mut law_ok = true;
    let mut law_detail = Vec::new();
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let hits = exits.iter().filter(|e| e[j]).count();
        let p = hits as f64 / n as f64;
        let se = binomial_se(p, n);
        let exact = brownian_two_sided_exit(barriers[j], t)?;
        report
            .rows
            .push(EstimateRow::monte_carlo("p_exit", t, p, se, n).with_reference(exact));
        law_ok &= (p - exact).abs() <= 3.0 * se;
        law_detail.push(format!("t={t}: {p:.5} vs {exact:.5}"));
        if hits == 0 {
            report.notes.push(format!("t = {t}: no exits observed"));
            errs.push(f64::NAN);
            continue;
        }
        let rate = -p.ln() / t;
        let rate_se = se / (p * t);
        report
            .rows
            .push(EstimateRow::monte_carlo("rate", t, rate, rate_se, n).with_reference(reference));
        errs.push((rate - reference).abs() / reference);
    }
    report
        .checks
        .push(Check::new("exit_law", law_ok, law_detail.join("; ")));
    let last = *errs.last().expect("validated grid is nonempty");
    report.checks.push(if last.is_nan() {
        Check::undecided("final", "no exits at the last grid time")
    } else {
        Check::new(
            "final",
            last <= cfg.tolerance,
            format!(
                "relative error {last:.4} at t = {} (tolerance {})",
                cfg.t_max(),
                cfg.tolerance
            ),
        )
    });
    report.checks.push(Check::new(
        "convergence",
        errs.windows(2).all(|w| w[1] < w[0]),
        format!("relative errors along the grid: {errs:.4?}"),
    ));
    Ok(report.finish())
}
