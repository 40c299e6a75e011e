use super::{run_replicas, Check, EstimateRow, ExperimentConfig, ExperimentReport};
use crate::error::{domain, Result};
use crate::geometry::{union_volume, Ball};
use crate::rate_fn::{growth_exponent, volume_constant, RateParams};
use crate::rng::{replica_seed, split_key};
use crate::sim::simulate;
use crate::stats::{median, median_se};

fn require_positive_times(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.t_grid.iter().any(|&t| t <= 0.0) {
        return domain(format!("t_grid times must be > 0; got {:?}", cfg.t_grid));
    }
    Ok(())
}

/// Per-replica `(1/t)·log Z_t(B_t)` summarized by its median over replicas
/// with positive mass, against `β(1 − θ² − kd)`.
pub fn growth_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.check_feasible()?;
    require_positive_times(cfg)?;
    let spec = cfg.ball()?;
    let reference = growth_exponent(&RateParams::new(cfg.beta, cfg.dim, cfg.theta, cfg.k, 0.0)?)?;
    let balls: Vec<Ball> = cfg.t_grid.iter().map(|&t| spec.ball_at(t)).collect();

    let template = cfg.sim_template();
    let masses: Vec<Vec<Option<usize>>> = run_replicas(cfg.replicas, cfg.workers, |i| {
        let out = simulate(&cfg.replica_sim(&template, i))?;
        out.snapshots
            .iter()
            .zip(&balls)
            .map(|(s, b)| {
                if s.truncated {
                    Ok(None)
                } else {
                    s.mass_in_ball(&b.center, b.radius).map(Some)
                }
            })
            .collect()
    })?;

    let mut report = ExperimentReport::new(
        "growth",
        "(1/t) log Z_t(B_t) -> beta*(1 - theta^2 - k*d) almost surely",
        cfg,
    );
    report.reference = Some(reference);
    let mut last = None;
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let valid: Vec<usize> = masses.iter().filter_map(|m| m[j]).collect();
        let exponents: Vec<f64> = valid
            .iter()
            .filter(|&&z| z > 0)
            .map(|&z| (z as f64).ln() / t)
            .collect();
        let zeros = valid.len() - exponents.len();
        let truncated = cfg.replicas - valid.len();
        let m = median(&exponents);
        let se = median_se(&exponents);
        report.rows.push(
            EstimateRow::monte_carlo("median_exponent", t, m, se, exponents.len())
                .with_reference(reference)
                .with_excluded(zeros + truncated),
        );
        report.rows.push(
            EstimateRow::monte_carlo(
                "zero_fraction",
                t,
                zeros as f64 / valid.len().max(1) as f64,
                crate::stats::binomial_se(
                    zeros as f64 / valid.len().max(1) as f64,
                    valid.len().max(1),
                ),
                valid.len(),
            )
            .with_excluded(truncated),
        );
        if truncated > 0 {
            report
                .notes
                .push(format!("t = {t}: {truncated} truncated replicas excluded"));
        }
        last = Some((t, m, zeros, valid.len()));
    }

    let (t, m, zeros, n) = last.expect("validated grid is nonempty");
    report.checks.push(if 2 * zeros >= n {
        Check::undecided(
            "growth",
            format!("t = {t}: {zeros} of {n} replicas have zero mass in the ball"),
        )
    } else {
        let rel = (m - reference).abs() / reference;
        Check::new(
            "growth",
            rel <= cfg.tolerance,
            format!(
                "t = {t}: median {m:.5} vs {reference:.5}, relative error {rel:.3} (tolerance {})",
                cfg.tolerance
            ),
        )
    });
    Ok(report.finish())
}

/// Per-replica `M_t/t` summarized by its median, against `√(2β)`.
pub fn speed_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.check_feasible()?;
    require_positive_times(cfg)?;
    let reference = (2.0 * cfg.beta).sqrt();

    let template = cfg.sim_template();
    let speeds: Vec<Vec<Option<f64>>> = run_replicas(cfg.replicas, cfg.workers, |i| {
        let out = simulate(&cfg.replica_sim(&template, i))?;
        out.snapshots
            .iter()
            .map(|s| {
                if s.truncated {
                    Ok(None)
                } else {
                    s.max_radius().map(|m| Some(m / s.time))
                }
            })
            .collect()
    })?;

    let mut report = ExperimentReport::new("speed", "M_t / t -> sqrt(2 beta)", cfg);
    report.reference = Some(reference);
    let mut last = (0.0, f64::NAN);
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let xs: Vec<f64> = speeds.iter().filter_map(|s| s[j]).collect();
        let m = median(&xs);
        report.rows.push(
            EstimateRow::monte_carlo("median_speed", t, m, median_se(&xs), xs.len())
                .with_reference(reference)
                .with_excluded(cfg.replicas - xs.len()),
        );
        last = (t, m);
    }
    let (t, m) = last;
    let rel = (m - reference).abs() / reference;
    report.checks.push(if m.is_nan() {
        Check::undecided("speed", "every replica was truncated")
    } else {
        Check::new(
            "speed",
            rel <= cfg.tolerance,
            format!(
                "t = {t}: median {m:.5} vs {reference:.5}, relative error {rel:.3} (tolerance {})",
                cfg.tolerance
            ),
        )
    });
    Ok(report.finish())
}

/// Median over replicas of `vol(Z_t^{r_t})/t^d` with `r_t = r₀e^{−βkt}`,
/// against `[2β(1 − kd)]^{d/2}·ω_d`.
pub fn enlargement_volume_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.check_feasible()?;
    require_positive_times(cfg)?;
    if !(cfg.volume_rel_err > 0.0) {
        return domain(format!(
            "volume_rel_err > 0 violated (volume_rel_err = {})",
            cfg.volume_rel_err
        ));
    }
    let reference = volume_constant(cfg.beta, cfg.k, cfg.dim)?;
    let d = cfg.dim as i32;

    let template = cfg.sim_template();
    let ratios: Vec<Vec<Option<(f64, f64)>>> = run_replicas(cfg.replicas, cfg.workers, |i| {
        let out = simulate(&cfg.replica_sim(&template, i))?;
        let seed = replica_seed(cfg.master_seed, i as u64);
        out.snapshots
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if s.truncated {
                    return Ok(None);
                }
                let t = s.time;
                let r = cfg.r0 * (-cfg.beta * cfg.k * t).exp();
                let v = union_volume(
                    &s.positions,
                    cfg.dim,
                    r,
                    cfg.volume_rel_err,
                    split_key(seed, j as u64),
                )?;
                let scale = t.powi(d);
                Ok(Some((
                    v.volume / scale,
                    v.standard_error / v.volume.max(f64::MIN_POSITIVE),
                )))
            })
            .collect()
    })?;

    let mut report = ExperimentReport::new(
        "enlargement-volume",
        "vol(Z_t^{r_t}) / t^d -> [2 beta (1 - k d)]^{d/2} omega_d",
        cfg,
    );
    report.reference = Some(reference);
    let mut medians = Vec::new();
    let mut worst_rel_se: f64 = 0.0;
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let vals: Vec<(f64, f64)> = ratios.iter().filter_map(|r| r[j]).collect();
        let xs: Vec<f64> = vals.iter().map(|v| v.0).collect();
        worst_rel_se = vals.iter().map(|v| v.1).fold(worst_rel_se, f64::max);
        let m = median(&xs);
        report.rows.push(
            EstimateRow::monte_carlo("median_volume_ratio", t, m, median_se(&xs), xs.len())
                .with_reference(reference)
                .with_excluded(cfg.replicas - xs.len()),
        );
        if xs.len() < cfg.replicas {
            report.notes.push(format!(
                "t = {t}: {} truncated replicas excluded",
                cfg.replicas - xs.len()
            ));
        }
        medians.push((t, m));
    }
    report.notes.push(format!(
        "largest relative standard error of a single volume estimate: {worst_rel_se:.4}"
    ));

    let err = |m: f64| {
        if reference > 0.0 {
            (m - reference).abs() / reference
        } else {
            m.abs()
        }
    };
    let (t_last, m_last) = *medians.last().expect("validated grid is nonempty");
    report.checks.push(Check::new(
        "final",
        err(m_last) <= cfg.tolerance,
        format!(
            "t = {t_last}: median {m_last:.5} vs {reference:.5}, error {:.3} (tolerance {})",
            err(m_last),
            cfg.tolerance
        ),
    ));
    let tail = &medians[medians.len().saturating_sub(3)..];
    report.checks.push(if tail.len() < 3 {
        Check::undecided("trend", "need three grid times")
    } else {
        let errs: Vec<f64> = tail.iter().map(|&(_, m)| err(m)).collect();
        Check::new(
            "trend",
            errs.windows(2).all(|w| w[1] < w[0]),
            format!("errors over the last three grid times: {errs:.4?}"),
        )
    });
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_small_run_reports_each_time() {
        let cfg = ExperimentConfig {
            replicas: 40,
            t_grid: vec![2.0, 4.0],
            ..Default::default()
        };
        let r = growth_experiment(&cfg).unwrap();
        assert_eq!(r.series("median_exponent").len(), 2);
        assert_eq!(r.reference, Some(1.0));
        assert!(r.check("growth").is_some());
    }

    #[test]
    fn growth_with_mostly_empty_ball_is_undecided() {
        let cfg = ExperimentConfig {
            theta: 0.95,
            r0: 0.05,
            replicas: 40,
            t_grid: vec![3.0],
            ..Default::default()
        };
        let r = growth_experiment(&cfg).unwrap();
        assert_eq!(r.check("growth").unwrap().passed, None);
    }

    #[test]
    fn speed_small_run_is_plausible() {
        let cfg = ExperimentConfig {
            replicas: 20,
            t_grid: vec![3.0],
            ..Default::default()
        };
        let r = speed_experiment(&cfg).unwrap();
        let m = r.rows[0].estimate;
        assert!(m > 0.0 && m < 3.0, "{m}");
    }

    #[test]
    fn degenerate_volume_constant_gives_zero_reference() {
        let cfg = ExperimentConfig {
            k: 1.0,
            replicas: 6,
            t_grid: vec![1.0, 2.0, 3.0],
            volume_rel_err: 0.05,
            ..Default::default()
        };
        let r = enlargement_volume_experiment(&cfg).unwrap();
        assert_eq!(r.reference, Some(0.0));
        let ms: Vec<f64> = r
            .series("median_volume_ratio")
            .iter()
            .map(|x| x.estimate)
            .collect();
        assert!(ms.windows(2).all(|w| w[1] < w[0]), "{ms:?}");
    }
}
