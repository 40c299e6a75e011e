//! Lower-tail rate function for the mass of BBM in a linearly moving,
//! exponentially shrinking ball.
//!
//! For `c = a + k·d` the objective is
//!
//! ```text
//! f(ρ) = ρ + (√((1−ρ)² − c(1−ρ)) − θ)² / ρ,      0 < ρ ≤ ρ̄
//! ρ̄    = 1 − c/2 − √((c/2)² + θ²)
//! I    = inf f
//! ```
//!
//! and `P(Z_t(B_t) < e^{βat}) = exp(−β·I·t + o(t))`. The objective depends on
//! `(k, a, d)` only through `c`, so `I(θ, k, a) = I(θ, 0, a + kd)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::unit_ball_volume;

/// Left end of the search bracket; the objective blows up as ρ → 0⁺.
const RHO_FLOOR: f64 = 1e-12;
const GOLDEN_WIDTH: f64 = 1e-7;
const BISECT_WIDTH: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub beta: f64,
    pub d: usize,
    pub theta: f64,
    pub k: f64,
    pub a: f64,
}

impl RateParams {
    pub fn new(beta: f64, d: usize, theta: f64, k: f64, a: f64) -> Result<Self> {
        let p = Self {
            beta,
            d,
            theta,
            k,
            a,
        };
        p.validate()?;
        Ok(p)
    }

    /// Dimensionless parameters with `β = 1`.
    pub fn unit(d: usize, theta: f64, k: f64, a: f64) -> Result<Self> {
        Self::new(1.0, d, theta, k, a)
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            beta,
            d,
            theta,
            k,
            a,
        } = *self;
        if !(beta > 0.0 && beta.is_finite()) {
            return domain(format!("beta > 0 violated (beta = {beta})"));
        }
        if d < 1 {
            return domain("d >= 1 violated (d = 0)");
        }
        if !(0.0..1.0).contains(&theta) {
            return domain(format!("0 <= theta < 1 violated (theta = {theta})"));
        }
        let k_max = (1.0 - theta * theta) / d as f64;
        if !(k >= 0.0 && k < k_max) {
            return domain(format!(
                "0 <= k < (1 - theta^2)/d violated (k = {k}, bound = {k_max})"
            ));
        }
        let a_max = 1.0 - theta * theta - k * d as f64;
        if !(a >= 0.0 && a < a_max) {
            return domain(format!(
                "0 <= a < 1 - theta^2 - k*d violated (a = {a}, bound = {a_max})"
            ));
        }
        Ok(())
    }

    /// `a + k·d`, the only combination of `(k, a, d)` the objective sees.
    pub fn shift(&self) -> f64 {
        self.a + self.k * self.d as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rho_bar: f64,
    pub rho_hat: f64,
    pub rate_value: f64,
    pub objective_at_hat: f64,
}

fn rho_bar_of(theta: f64, c: f64) -> f64 {
    let h = 0.5 * c;
    1.0 - h - h.hypot(theta)
}

/// Upper end ρ̄ of the admissible interval.
pub fn rho_bar(p: &RateParams) -> Result<f64> {
    p.validate()?;
    Ok(rho_bar_of(p.theta, p.shift()))
}

#[inline]
fn radicand(rho: f64, c: f64) -> f64 {
    let s = 1.0 - rho;
    s * s - c * s
}

#[inline]
fn objective_raw(rho: f64, theta: f64, c: f64) -> f64 {
    let root = radicand(rho, c).max(0.0).sqrt();
    rho + (root - theta).powi(2) / rho
}

/// Derivative of the objective. Only evaluated strictly inside (0, ρ̄).
fn derivative_raw(rho: f64, theta: f64, c: f64) -> f64 {
    let q = radicand(rho, c).max(0.0);
    let root = q.sqrt();
    let dq = -2.0 * (1.0 - rho) + c;
    let gap = root - theta;
    // gap·d(root)/dρ = (1 − θ/root)·q'/2, finite as root → 0 when θ = 0
    let gap_droot = if theta == 0.0 {
        0.5 * dq
    } else {
        (1.0 - theta / root) * 0.5 * dq
    };
    1.0 + (2.0 * gap_droot * rho - gap * gap) / (rho * rho)
}

/// The objective at `rho`.
pub fn objective(rho: f64, p: &RateParams) -> Result<f64> {
    p.validate()?;
    let c = p.shift();
    let rb = rho_bar_of(p.theta, c);
    if !(rho > 0.0 && rho <= rb) {
        return domain(format!(
            "0 < rho <= rho_bar violated (rho = {rho}, rho_bar = {rb})"
        ));
    }
    let q = radicand(rho, c);
    // At ρ̄ the radicand is θ² up to rounding; only a genuinely negative value is an error.
    if q < -1e-12 {
        return domain(format!(
            "(1-rho)^2 - (a+kd)(1-rho) >= 0 violated (value = {q})"
        ));
    }
    Ok(objective_raw(rho, p.theta, c))
}

/// Minimizes the strictly convex objective on (0, ρ̄]: golden-section search
/// down to a narrow bracket, then bisection on the sign of the derivative.
pub fn minimize(p: &RateParams) -> Result<RateResult> {
    p.validate()?;
    let theta = p.theta;
    let c = p.shift();
    let rb = rho_bar_of(theta, c);
    let f = |x: f64| objective_raw(x, theta, c);

    let (lo, hi) = golden_bracket(&f, RHO_FLOOR.min(0.5 * rb), rb, GOLDEN_WIDTH);

    let lo = (lo - GOLDEN_WIDTH).max(RHO_FLOOR.min(0.5 * rb));
    let hi = (hi + GOLDEN_WIDTH).min(rb);
    let df = |x: f64| derivative_raw(x, theta, c);

    let rho_hat = if hi >= rb && df(rb * (1.0 - 1e-15)) <= 0.0 {
        // f decreasing all the way to ρ̄ (possible for θ = 0, c ≥ 1/2)
        rb
    } else {
        bisect_sign(&df, lo, hi, BISECT_WIDTH)
    };

    let rate_value = f(rho_hat);
    Ok(RateResult {
        rho_bar: rb,
        rho_hat,
        rate_value,
        objective_at_hat: rate_value,
    })
}

fn golden_bracket(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if b - a <= width {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    (a, b)
}

/// Root of an increasing function on `[lo, hi]`, clamped to the ends when the
/// sign does not change.
fn bisect_sign(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    if g(lo) >= 0.0 {
        return lo;
    }
    if g(hi) <= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form absence rate for a moving ball of fixed size, `2(√2 − 1)(1 − θ)`,
/// with `β` factored out.
pub fn rate_theorem_b(theta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&theta) {
        return domain(format!("0 <= theta < 1 violated (theta = {theta})"));
    }
    Ok(2.0 * (2f64.sqrt() - 1.0) * (1.0 - theta))
}

/// Almost-sure exponential growth rate `β(1 − θ² − kd)` of the mass in the
/// moving, shrinking ball. `a` is ignored.
pub fn growth_exponent(p: &RateParams) -> Result<f64> {
    let probe = RateParams { a: 0.0, ..*p };
    probe.validate()?;
    Ok(p.beta * (1.0 - p.theta * p.theta - p.k * p.d as f64))
}

/// Limit of `vol(Z_t^{r_t}) / t^d`: `[2β(1 − kd)]^{d/2}·ω_d`.
pub fn volume_constant(beta: f64, k: f64, d: usize) -> Result<f64> {
    if d < 1 {
        return domain("d >= 1 violated (d = 0)");
    }
    if !(beta > 0.0) {
        return domain(format!("beta > 0 violated (beta = {beta})"));
    }
    let kd = k * d as f64;
    if !(k >= 0.0) || kd > 1.0 + 1e-15 {
        return domain(format!("0 <= k <= 1/d violated (k = {k}, d = {d})"));
    }
    let base = (2.0 * beta * (1.0 - kd)).max(0.0);
    Ok(base.powf(0.5 * d as f64) * unit_ball_volume(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(theta: f64, k: f64, a: f64, d: usize) -> RateParams {
        RateParams::unit(d, theta, k, a).unwrap()
    }

    #[test]
    fn rho_bar_special_cases() {
        assert!((rho_bar(&p(0.5, 0.0, 0.0, 1)).unwrap() - 0.5).abs() < 1e-15);
        assert!((rho_bar(&p(0.0, 0.0, 0.2, 1)).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(rho_bar(&p(0.0, 0.0, 0.0, 1)).unwrap(), 1.0);
    }

    #[test]
    fn objective_special_values() {
        let p0 = p(0.0, 0.0, 0.0, 1);
        assert!((objective(1.0, &p0).unwrap() - 1.0).abs() < 1e-15);
        let v = objective(std::f64::consts::FRAC_1_SQRT_2, &p0).unwrap();
        assert!((v - (2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-12);
        let q = p(0.3, 0.05, 0.1, 3);
        let rb = rho_bar(&q).unwrap();
        assert!((objective(rb, &q).unwrap() - rb).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_outside_domain() {
        let q = p(0.5, 0.0, 0.0, 1);
        assert!(objective(0.0, &q).is_err());
        assert!(objective(0.6, &q).is_err());
    }

    #[test]
    fn domain_errors_name_the_inequality() {
        let e = RateParams::unit(2, 0.5, 0.4, 0.0).unwrap_err().to_string();
        assert!(e.contains("k < (1 - theta^2)/d"), "{e}");
        let e = RateParams::unit(1, 1.0, 0.0, 0.0).unwrap_err().to_string();
        assert!(e.contains("theta < 1"), "{e}");
        let e = RateParams::unit(1, 0.5, 0.0, 0.8).unwrap_err().to_string();
        assert!(e.contains("a < 1 - theta^2 - k*d"), "{e}");
        assert!(RateParams::new(0.0, 1, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn minimize_known_cases() {
        let r = minimize(&p(0.0, 0.0, 0.0, 1)).unwrap();
        assert_eq!(r.rho_bar, 1.0);
        assert!((r.rho_hat - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        assert!((r.rate_value - (2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-9);

        let r = minimize(&p(0.5, 0.0, 0.0, 1)).unwrap();
        assert!((r.rate_value - (2f64.sqrt() - 1.0)).abs() < 1e-9);

        // dense-grid oracle (10^6 points, refined), computed offline
        let r = minimize(&p(0.2, 0.1, 0.1, 2)).unwrap();
        assert!((r.rho_bar - 0.6).abs() < 1e-12);
        assert!((r.rho_hat - 0.445_992_126).abs() < 1e-7);
        assert!((r.rate_value - 0.514_761_153_333).abs() < 1e-9);
    }

    #[test]
    fn boundary_minimizer_when_theta_zero_and_large_shift() {
        // θ = 0, c = 0.6: f'(ρ̄) = 1 − c/(1 − c) < 0 so the infimum sits at ρ̄
        let q = p(0.0, 0.0, 0.6, 1);
        let r = minimize(&q).unwrap();
        assert!((r.rho_hat - 0.4).abs() < 1e-12);
        assert!((r.rate_value - 0.4).abs() < 1e-12);
    }

    #[test]
    fn closed_form_values() {
        assert!((rate_theorem_b(0.0).unwrap() - 0.828_427_124_746).abs() < 1e-12);
        assert!((rate_theorem_b(0.5).unwrap() - 0.414_213_562_373).abs() < 1e-12);
        assert!(rate_theorem_b(1.0 - 1e-12).unwrap() < 1e-11);
        assert!(rate_theorem_b(1.0).is_err());
        assert!(rate_theorem_b(-0.1).is_err());
    }

    #[test]
    fn growth_exponent_arithmetic() {
        let g = |beta, theta, k, d| {
            growth_exponent(&RateParams::new(beta, d, theta, k, 0.0).unwrap()).unwrap()
        };
        assert!((g(1.0, 0.0, 0.0, 1) - 1.0).abs() < 1e-15);
        assert!((g(1.0, 0.5, 0.1, 2) - 0.55).abs() < 1e-15);
        assert!((g(2.0, 0.5, 0.0, 3) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn volume_constant_values() {
        assert!((volume_constant(0.5, 0.0, 2).unwrap() - std::f64::consts::PI).abs() < 1e-12);
        for d in 1..=4 {
            assert!(volume_constant(1.0, 1.0 / d as f64, d).unwrap().abs() < 1e-6);
        }
        assert!((volume_constant(1.0, 0.0, 1).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(volume_constant(1.0, 0.6, 2).is_err());
    }
}
