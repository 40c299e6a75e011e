use bbm_lab::estimators::{
    absence_oracle_experiment, brownian_two_sided_exit, coverage_experiment,
    range_density_experiment, ExperimentConfig, ExperimentKind,
};
use bbm_lab::fkpp::{picard_check, solve_absence, FkppConfig};
use bbm_lab::rate_fn::rate_theorem_b;

#[test]
fn absence_slopes_decrease_with_theta() {
    let slopes: Vec<f64> = [0.0, 0.4, 0.8]
        .iter()
        .map(|&theta| {
            let cfg = ExperimentConfig {
                theta,
                ..ExperimentKind::AbsenceOracle.default_config()
            };
            absence_oracle_experiment(&cfg).unwrap().fit.unwrap().slope
        })
        .collect();
    assert!(slopes.windows(2).all(|w| w[1] < w[0]), "{slopes:?}");
    for (s, theta) in slopes.iter().zip([0.0, 0.4, 0.8]) {
        assert!(
            *s < rate_theorem_b(theta).unwrap(),
            "slope {s} at theta {theta}"
        );
    }
}

#[test]
fn larger_ball_is_harder_to_avoid() {
    let small = solve_absence(&FkppConfig::new(1.0, 0.25, 2.0, 0.0)).unwrap();
    let large = solve_absence(&FkppConfig::new(1.0, 1.0, 2.0, 0.0)).unwrap();
    for t in [0.5, 1.0, 2.0] {
        for x in [0.0, 0.5, 1.5] {
            assert!(
                large.at(t, x).unwrap() < small.at(t, x).unwrap(),
                "t {t}, x {x}"
            );
        }
    }
}

#[test]
fn integral_equation_agrees_for_a_unit_ball() {
    let cfg = FkppConfig::new(1.0, 1.0, 1.0, 0.0);
    let sol = solve_absence(&cfg).unwrap();
    for x in [0.0, 0.75, 2.0] {
        let gap = (picard_check(&cfg, 1.0, x).unwrap() - sol.at(1.0, x).unwrap()).abs();
        assert!(gap < 1e-3, "x {x}: {gap}");
    }
}

#[test]
fn exit_law_series_meet_at_the_switch() {
    for t in [0.5f64, 2.0, 9.0] {
        let b = t.sqrt();
        let below = brownian_two_sided_exit(b * (1.0 - 1e-9), t).unwrap();
        let above = brownian_two_sided_exit(b * (1.0 + 1e-9), t).unwrap();
        assert!((below - above).abs() < 1e-7, "t {t}: {below} vs {above}");
    }
    assert!((brownian_two_sided_exit(1.0, 1.0).unwrap() - 0.629_222_6).abs() < 1e-6);
}

/// Frozen at the default seed: covered fraction of B(0, t/sqrt(2)) by the
/// r0-enlargement in d = 2 with 400 replicas.
#[test]
fn coverage_baseline_small() {
    let cfg = ExperimentConfig {
        theta: 0.5,
        dim: 2,
        replicas: 400,
        t_grid: vec![4.0, 6.0],
        ..ExperimentKind::Coverage.default_config()
    };
    let r = coverage_experiment(&cfg).unwrap();
    let rows = r.series("covered_fraction");
    let frozen = [(4.0, 0.0278, 0.0083), (6.0, 0.1162, 0.0161)];
    for (row, (t, value, se)) in rows.iter().zip(frozen) {
        assert_eq!(row.t, t);
        assert!(
            (row.estimate - value).abs() < 3.0 * se,
            "t {t}: {}",
            row.estimate
        );
        assert!(
            row.indeterminate <= 8,
            "t {t}: {} undecided",
            row.indeterminate
        );
    }
    assert!(rows[1].estimate > rows[0].estimate);
}

/// The same measurement at t = 8 with 1000 replicas (about two minutes).
#[test]
#[ignore = "slow; run with --ignored"]
fn coverage_baseline_full() {
    let cfg = ExperimentConfig {
        t_grid: vec![8.0],
        ..ExperimentKind::Coverage.default_config()
    };
    let r = coverage_experiment(&cfg).unwrap();
    let row = &r.series("covered_fraction")[0];
    assert!(
        (row.estimate - 0.317).abs() < 3.0 * 0.015,
        "{}",
        row.estimate
    );
}

#[test]
fn range_fills_the_unit_interval() {
    let cfg = ExperimentConfig {
        replicas: 10,
        t_grid: vec![0.0, 2.0, 4.0, 6.0],
        ..ExperimentKind::RangeDensity.default_config()
    };
    let r = range_density_experiment(&cfg).unwrap();
    let fractions: Vec<f64> = r
        .series("covered_fraction")
        .iter()
        .map(|x| x.estimate)
        .collect();
    assert!(fractions.windows(2).all(|w| w[1] >= w[0]), "{fractions:?}");
    assert_eq!(*fractions.last().unwrap(), 1.0);
    assert_eq!(r.check("complete").unwrap().passed, Some(true));
}
