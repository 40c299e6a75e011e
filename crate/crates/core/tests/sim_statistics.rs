use bbm_lab::rng::replica_seed;
use bbm_lab::sim::{simulate, SimConfig};
use bbm_lab::stats::{chi_square_gof, ks_p_value, ks_statistic, mean_se, normal_cdf};

fn population_sizes(beta: f64, t: f64, replicas: u64, seed: u64) -> Vec<usize> {
    (0..replicas)
        .map(|i| {
            let out = simulate(&SimConfig::new(beta, 1, t, replica_seed(seed, i))).unwrap();
            out.last().len()
        })
        .collect()
}

#[test]
fn population_size_is_geometric() {
    let (beta, t) = (1.0, 1.0);
    let sizes = population_sizes(beta, t, 5000, 101);
    let p = (-beta * t).exp();
    let top = 25;
    let mut observed = vec![0u64; top + 1];
    for &n in &sizes {
        observed[(n - 1).min(top)] += 1;
    }
    let mut probs: Vec<f64> = (1..=top)
        .map(|n| p * (1.0 - p).powi(n as i32 - 1))
        .collect();
    probs.push((1.0 - p).powi(top as i32));
    let test = chi_square_gof(&observed, &probs, 5.0);
    assert!(
        test.p_value > 1e-3,
        "chi2 {} on {} dof, p = {}",
        test.statistic,
        test.dof,
        test.p_value
    );
}

#[test]
fn normalized_population_has_mean_one() {
    let (beta, t) = (0.7, 2.0);
    let xs: Vec<f64> = population_sizes(beta, t, 4000, 202)
        .into_iter()
        .map(|n| n as f64 * (-beta * t).exp())
        .collect();
    let (m, se) = mean_se(&xs);
    assert!((m - 1.0).abs() < 4.0 * se, "mean {m} ± {se}");
}

#[test]
fn single_path_marginal_is_gaussian() {
    let t = 3.0;
    let cfg = SimConfig::new(1.0, 2, t, 0)
        .with_snapshots(vec![1.0, t])
        .without_branching();
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut increments = Vec::new();
    for i in 0..3000 {
        let out = simulate(&cfg.with_seed(replica_seed(303, i))).unwrap();
        assert_eq!(out.last().len(), 1);
        let early = out.snapshots[0].point(0).to_vec();
        let late = out.snapshots[1].point(0);
        first.push(late[0]);
        second.push(late[1]);
        increments.push(late[0] - early[0]);
    }
    for (name, xs, var) in [
        ("x1", &first, t),
        ("x2", &second, t),
        ("increment", &increments, t - 1.0),
    ] {
        let d = ks_statistic(xs, |x| normal_cdf(x / var.sqrt()));
        let p = ks_p_value(d, xs.len());
        assert!(p > 1e-3, "{name}: KS {d}, p = {p}");
    }
}

#[test]
fn same_seed_same_realization() {
    let cfg = SimConfig::new(1.0, 3, 4.0, 99).with_snapshots(vec![2.0, 4.0]);
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert_eq!(a, b);
    let c = simulate(&cfg.with_seed(100)).unwrap();
    assert_ne!(a.last().positions, c.last().positions);
}

#[test]
fn cloud_is_symmetric_in_distribution() {
    let mut right = Vec::new();
    let mut left = Vec::new();
    let mut centers = Vec::new();
    for i in 0..1500 {
        let out = simulate(&SimConfig::new(1.0, 1, 3.0, replica_seed(404, i))).unwrap();
        let s = out.last();
        right.push(s.positions.iter().copied().fold(f64::MIN, f64::max));
        left.push(-s.positions.iter().copied().fold(f64::MAX, f64::min));
        centers.push(s.positions.iter().sum::<f64>() / s.len() as f64);
    }
    let (c, c_se) = mean_se(&centers);
    assert!(c.abs() < 4.0 * c_se, "center of mass {c} ± {c_se}");
    let diff: Vec<f64> = right.iter().zip(&left).map(|(r, l)| r - l).collect();
    let (d, d_se) = mean_se(&diff);
    assert!(d.abs() < 4.0 * d_se, "max minus -min {d} ± {d_se}");
}

#[test]
fn snapshot_lies_inside_recorded_range() {
    for seed in 0..20 {
        let cfg = SimConfig::new(1.0, 2, 4.0, seed)
            .with_snapshots(vec![2.0, 4.0])
            .with_range(0.1);
        let out = simulate(&cfg).unwrap();
        let range = out.range.as_ref().unwrap();
        assert!((range.times.last().unwrap() - 4.0).abs() < 1e-12);
        for snap in &out.snapshots {
            let recorded = range.points_until(snap.time);
            let widest = recorded
                .chunks_exact(2)
                .map(|p| p[0].hypot(p[1]))
                .fold(0.0, f64::max);
            assert!(snap.max_radius().unwrap() <= widest + 1e-12);
            for p in snap.points() {
                assert!(recorded.chunks_exact(2).any(|q| q == p));
            }
        }
    }
}

#[test]
fn cap_truncates_and_clears_positions() {
    let out = simulate(&SimConfig::new(1.0, 1, 20.0, 1).with_cap(1000)).unwrap();
    assert!(out.truncated());
    assert!(out.last().truncated);
    assert!(out.last().positions.is_empty());
}
