//! Brownian transition probabilities of balls.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use super::{dist2, Ball};
use crate::error::{domain, Result};
use crate::stats::normal_interval;

const QUAD_TOL: f64 = 1e-13;
const MAX_DEPTH: u32 = 48;

/// `p(t, x, ball)`: probability that a Brownian motion started at `x` lies in
/// the open `ball` at time `t`.
pub fn gaussian_ball_prob(t: f64, x: &[f64], ball: &Ball) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("t > 0 violated (t = {t})"));
    }
    let d = ball.dim();
    if x.len() != d {
        return domain(format!(
            "point has dimension {} but ball has dimension {d}",
            x.len()
        ));
    }
    let s = t.sqrt();
    if d == 1 {
        let lo = (ball.center[0] - ball.radius - x[0]) / s;
        let hi = (ball.center[0] + ball.radius - x[0]) / s;
        return Ok(normal_interval(lo, hi));
    }
    let offset = dist2(x, &ball.center).sqrt() / s;
    let radius = ball.radius / s;
    Ok(centered_prob(d, offset, radius).clamp(0.0, 1.0))
}

/// `P(|Z + μe| < R)` for a standard Gaussian `Z` in `d ≥ 2` dimensions.
fn centered_prob(d: usize, mu: f64, big_r: f64) -> f64 {
    let half_d = d as f64 / 2.0;
    if mu == 0.0 {
        return gamma_lr(half_d, big_r * big_r / 2.0);
    }
    let inner = if big_r > mu {
        gamma_lr(half_d, (big_r - mu).powi(2) / 2.0)
    } else {
        0.0
    };
    let a = (big_r - mu).abs();
    let b = big_r + mu;
    let log_norm = (half_d - 1.0) * std::f64::consts::LN_2 + ln_gamma(half_d);
    let shell = |rho: f64| -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let density = ((d as f64 - 1.0) * rho.ln() - rho * rho / 2.0 - log_norm).exp();
        density * cap_fraction(d, mu, big_r, rho)
    };
    // ρ = a + (b − a)(1 − cos ψ)/2 removes the square-root edges of the cap
    let half_width = (b - a) / 2.0;
    let integrand = |psi: f64| {
        let rho = a + half_width * (1.0 - psi.cos());
        shell(rho) * half_width * psi.sin()
    };
    inner + adaptive_simpson(&integrand, 0.0, std::f64::consts::PI, QUAD_TOL)
}

/// Fraction of the sphere of radius `ρ` around the origin lying inside
/// `B(μe, R)`.
fn cap_fraction(d: usize, mu: f64, big_r: f64, rho: f64) -> f64 {
    let c0 = (big_r - mu) * (big_r + mu) / (2.0 * rho * mu) - rho / (2.0 * mu);
    if c0 >= 1.0 {
        return 1.0;
    }
    if c0 <= -1.0 {
        return 0.0;
    }
    let tail = 0.5 * beta_reg((d as f64 - 1.0) / 2.0, 0.5, 1.0 - c0 * c0);
    if c0 <= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_cdf;

    fn phi(x: f64) -> f64 {
        (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    /// Noncentral chi distribution function in three dimensions.
    fn d3_closed_form(mu: f64, r: f64) -> f64 {
        (phi(r + mu) - phi(r - mu)) / mu + normal_cdf(r - mu) + normal_cdf(r + mu) - 1.0
    }

    /// Planar probability by slicing along the offset axis.
    fn d2_slices(mu: f64, r: f64) -> f64 {
        let n = 200_000;
        let h = std::f64::consts::PI / n as f64;
        let g = |psi: f64| {
            let y = mu - r * psi.cos();
            let half_chord = r * psi.sin();
            phi(y) * (2.0 * normal_cdf(half_chord) - 1.0) * r * psi.sin()
        };
        let mut s = g(0.0) + g(std::f64::consts::PI);
        for i in 1..n {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn one_dimensional_reference() {
        let b = Ball::centered(1, 1.0).unwrap();
        let p = gaussian_ball_prob(1.0, &[0.0], &b).unwrap();
        assert!((p - 0.682_689_492_137_086).abs() < 1e-14);
    }

    #[test]
    fn three_dimensional_closed_form() {
        for &(mu, r) in &[(0.3, 1.0), (1.0, 1.0), (2.5, 0.4), (0.05, 3.0), (4.0, 2.0)] {
            let b = Ball::centered(3, r).unwrap();
            let p = gaussian_ball_prob(1.0, &[mu, 0.0, 0.0], &b).unwrap();
            let want = d3_closed_form(mu, r);
            assert!((p - want).abs() < 1e-10, "mu={mu} r={r}: {p} vs {want}");
        }
    }

    #[test]
    fn two_dimensional_slices() {
        for &(mu, r) in &[(0.5, 1.0), (1.0, 1.0), (3.0, 0.7), (0.2, 2.0)] {
            let b = Ball::centered(2, r).unwrap();
            let p = gaussian_ball_prob(1.0, &[0.0, mu], &b).unwrap();
            let want = d2_slices(mu, r);
            assert!((p - want).abs() < 1e-10, "mu={mu} r={r}: {p} vs {want}");
        }
        let b = Ball::centered(2, 1.5).unwrap();
        let p = gaussian_ball_prob(2.0, &[0.0, 0.0], &b).unwrap();
        assert!((p - (1.0 - (-1.5f64 * 1.5 / 4.0).exp())).abs() < 1e-14);
    }

    #[test]
    fn limits() {
        for d in 1..=4 {
            let huge = Ball::centered(d, 1e3).unwrap();
            let p = gaussian_ball_prob(1.0, &vec![0.0; d], &huge).unwrap();
            assert!((p - 1.0).abs() < 1e-9);
            // peak density times volume bounds the probability
            let unit = Ball::centered(d, 1.0).unwrap();
            let t = 1e6;
            let p = gaussian_ball_prob(t, &vec![0.0; d], &unit).unwrap();
            let bound = crate::geometry::unit_ball_volume(d)
                * (2.0 * std::f64::consts::PI * t).powf(-(d as f64) / 2.0);
            assert!(p > 0.0 && p <= bound, "d={d}: {p} vs {bound}");
            assert!(p < 1e-3);
        }
        let b = Ball::centered(2, 1.0).unwrap();
        assert!(gaussian_ball_prob(0.0, &[0.0, 0.0], &b).is_err());
        assert!(gaussian_ball_prob(1.0, &[0.0], &b).is_err());
    }

    #[test]
    fn scale_invariance() {
        let b = Ball::new(vec![1.0, -0.5], 0.8).unwrap();
        let p1 = gaussian_ball_prob(0.5, &[0.2, 0.1], &b).unwrap();
        let b2 = Ball::new(vec![2.0, -1.0], 1.6).unwrap();
        let p2 = gaussian_ball_prob(2.0, &[0.4, 0.2], &b2).unwrap();
        assert!((p1 - p2).abs() < 1e-12);
    }
}
