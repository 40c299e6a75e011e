use bbm_lab::geometry::{
    coverage_by_painting, cubic_covering, gaussian_ball_prob, is_r_dense_with, union_volume,
    unit_ball_volume, Ball, DensityOptions, DensityVerdict,
};
use bbm_lab::rate_fn::{minimize, objective, rho_bar, RateParams};
use bbm_lab::rng::{split_key, CounterRng};
use bbm_lab::sim::{simulate, SimConfig};
use proptest::prelude::*;
use rand::Rng;

/// Parameters strictly inside the admissible domain, as fractions of the
/// remaining room for k and a.
fn params() -> impl Strategy<Value = RateParams> {
    (
        1usize..=3,
        0.0..0.95f64,
        0.0..0.95f64,
        0.0..0.95f64,
        0.2..3.0f64,
    )
        .prop_map(|(d, theta, fk, fa, beta)| {
            let k = fk * (1.0 - theta * theta) / d as f64;
            let a = fa * (1.0 - theta * theta - k * d as f64);
            RateParams::new(beta, d, theta, k, a).unwrap()
        })
}

fn cloud(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, d..=40 * d).prop_map(move |mut v| {
        v.truncate(v.len() / d * d);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minimizer_lies_in_the_interval(p in params()) {
        let r = minimize(&p).unwrap();
        prop_assert!(r.rho_hat > 0.0 && r.rho_hat <= r.rho_bar);
        prop_assert!((r.rho_bar - rho_bar(&p).unwrap()).abs() < 1e-12);
        prop_assert!(r.rate_value > 0.0);
        let lo = objective(0.5 * r.rho_hat, &p).unwrap();
        let hi = objective(0.5 * (r.rho_hat + r.rho_bar), &p).unwrap();
        prop_assert!(r.objective_at_hat <= lo + 1e-12 && r.objective_at_hat <= hi + 1e-12);
    }

    #[test]
    fn objective_is_midpoint_convex(p in params(), u in 0.01..1.0f64, v in 0.01..1.0f64) {
        let bar = rho_bar(&p).unwrap();
        let (x, y) = (u * bar, v * bar);
        let mid = objective(0.5 * (x + y), &p).unwrap();
        let avg = 0.5 * (objective(x, &p).unwrap() + objective(y, &p).unwrap());
        prop_assert!(mid <= avg + 1e-12);
    }

    #[test]
    fn rate_depends_on_k_and_a_through_the_shift(p in params()) {
        let direct = minimize(&p).unwrap();
        let shifted = minimize(&RateParams::new(p.beta, p.d, p.theta, 0.0, p.shift()).unwrap()).unwrap();
        prop_assert!((direct.rate_value - shifted.rate_value).abs() < 1e-9);
    }

    #[test]
    fn rate_decreases_in_theta(p in params(), step in 0.001..0.05f64) {
        let theta = p.theta + step;
        if let Ok(q) = RateParams::new(p.beta, p.d, theta, p.k, p.a) {
            prop_assert!(minimize(&q).unwrap().rate_value < minimize(&p).unwrap().rate_value);
        }
    }

    #[test]
    fn ball_probability_is_a_probability(
        t in 0.01..20.0f64, x in -5.0..5.0f64, y in -5.0..5.0f64, r in 0.01..5.0f64,
    ) {
        let small = gaussian_ball_prob(t, &[x, y], &Ball::centered(2, r).unwrap()).unwrap();
        let large = gaussian_ball_prob(t, &[x, y], &Ball::centered(2, 1.5 * r).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&small));
        prop_assert!(large >= small - 1e-12);
    }

    #[test]
    fn union_volume_is_bracketed(pts in cloud(2), r in 0.05..1.0f64, seed in any::<u64>()) {
        let n = pts.len() / 2;
        let single = unit_ball_volume(2) * r * r;
        let v = union_volume(&pts, 2, r, 0.02, seed).unwrap();
        let slack = 5.0 * v.standard_error;
        prop_assert!(v.volume >= single - slack);
        prop_assert!(v.volume <= n as f64 * single + slack);
    }

    #[test]
    fn both_density_routes_agree(
        pts in cloud(2), radius in 0.2..2.0f64, r in 0.3..1.5f64,
    ) {
        let region = Ball::centered(2, radius).unwrap();
        let opts = DensityOptions { probe_spacing_fraction: 0.1 };
        let a = is_r_dense_with(&pts, &region, r, &opts).unwrap();
        let b = coverage_by_painting(&pts, &region, r, &opts).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(&a.witness, &b.witness);
        if let Some(w) = &a.witness {
            prop_assert!(region.contains(w));
            prop_assert!(pts.chunks_exact(2).all(|p| (p[0] - w[0]).hypot(p[1] - w[1]) >= r));
        }
    }

    #[test]
    fn dense_stays_dense_with_more_sources(
        pts in cloud(1), extra in cloud(1), r in 0.3..1.0f64,
    ) {
        let region = Ball::centered(1, 1.0).unwrap();
        let opts = DensityOptions::default();
        let before = is_r_dense_with(&pts, &region, r, &opts).unwrap();
        let mut more = pts.clone();
        more.extend(extra);
        let after = is_r_dense_with(&more, &region, r, &opts).unwrap();
        if before.verdict == DensityVerdict::Dense {
            prop_assert_eq!(after.verdict, DensityVerdict::Dense);
        }
        if after.verdict == DensityVerdict::NotDense {
            prop_assert_eq!(before.verdict, DensityVerdict::NotDense);
        }
    }

    #[test]
    fn covering_reaches_every_region_point(
        d in 1usize..=3, radius in 0.5..3.0f64, rho in 0.05..0.5f64, seed in any::<u64>(),
    ) {
        let region = Ball::centered(d, radius).unwrap();
        let cover = cubic_covering(&region, rho).unwrap();
        let mut rng = CounterRng::new(seed);
        for _ in 0..50 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-radius..radius) / (d as f64).sqrt()).collect();
            prop_assert!(cover.covers(&x));
        }
    }

    #[test]
    fn split_keys_are_distinct_and_stable(parent in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assert_eq!(split_key(parent, i), split_key(parent, i));
        if i != j {
            prop_assert_ne!(split_key(parent, i), split_key(parent, j));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn realization_depends_only_on_seed_and_config(
        seed in any::<u64>(), d in 1usize..=3, t in 0.5..4.0f64,
    ) {
        let cfg = SimConfig::new(1.0, d, t, seed).with_snapshots(vec![t / 2.0, t]);
        let a = simulate(&cfg).unwrap();
        prop_assert_eq!(&a, &simulate(&cfg).unwrap());
        for s in &a.snapshots {
            prop_assert!(!s.is_empty());
            prop_assert_eq!(s.positions.len() % d, 0);
            prop_assert!(s.positions.iter().all(|x| x.is_finite()));
        }
        prop_assert!(a.snapshots[0].len() <= a.snapshots[1].len());
        prop_assert_eq!(a.last().len() as u64, a.branch_events + 1);
    }
}
