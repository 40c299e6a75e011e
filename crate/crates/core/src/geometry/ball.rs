use serde::{Deserialize, Serialize};

use super::{dist2, norm};
use crate::error::{domain, Result};

/// Open Euclidean ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return domain("ball center must have dimension >= 1");
        }
        if !(radius > 0.0) {
            return domain(format!("radius > 0 violated (radius = {radius})"));
        }
        Ok(Self { center, radius })
    }

    /// `B(0, radius)` in dimension `d`.
    pub fn centered(d: usize, radius: f64) -> Result<Self> {
        Self::new(vec![0.0; d], radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist2(x, &self.center) < self.radius * self.radius
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }
}

/// The linearly moving, exponentially shrinking ball
/// `B_t = B(θ√(2β)t·e, r₀e^{−βkt})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingBallSpec {
    pub beta: f64,
    pub theta: f64,
    pub k: f64,
    pub r0: f64,
    pub direction: Vec<f64>,
}

impl MovingBallSpec {
    pub fn new(beta: f64, theta: f64, k: f64, r0: f64, direction: Vec<f64>) -> Result<Self> {
        if !(beta > 0.0) {
            return domain(format!("beta > 0 violated (beta = {beta})"));
        }
        if !(0.0..1.0).contains(&theta) {
            return domain(format!("0 <= theta < 1 violated (theta = {theta})"));
        }
        if !(k >= 0.0) {
            return domain(format!("k >= 0 violated (k = {k})"));
        }
        if !(r0 > 0.0) {
            return domain(format!("r0 > 0 violated (r0 = {r0})"));
        }
        let n = norm(&direction);
        if direction.is_empty() || (n - 1.0).abs() > 1e-12 {
            return domain(format!("|direction| = 1 violated (|direction| = {n})"));
        }
        Ok(Self {
            beta,
            theta,
            k,
            r0,
            direction,
        })
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    /// Distance of the center from the origin at time `t`.
    pub fn center_offset(&self, t: f64) -> f64 {
        self.theta * (2.0 * self.beta).sqrt() * t
    }

    pub fn radius_at(&self, t: f64) -> f64 {
        self.r0 * (-self.beta * self.k * t).exp()
    }

    pub fn ball_at(&self, t: f64) -> Ball {
        let x = self.center_offset(t);
        Ball {
            center: self.direction.iter().map(|e| e * x).collect(),
            radius: self.radius_at(t),
        }
    }
}

/// First coordinate axis in dimension `d`.
pub fn axis_direction(d: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    e
}

/// Volume `ω_d = π^{d/2} / Γ(d/2 + 1)` of the unit ball.
pub fn unit_ball_volume(d: usize) -> f64 {
    // ω_d = ω_{d−2}·2π/d, ω_0 = 1, ω_1 = 2
    let mut w = if d.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut j = if d.is_multiple_of(2) { 2 } else { 3 };
    while j <= d {
        w *= 2.0 * std::f64::consts::PI / j as f64;
        j += 2;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        // π^{d/2}/Γ(d/2+1) through the gamma function
        for d in 1..12 {
            let g = statrs::function::gamma::gamma(d as f64 / 2.0 + 1.0);
            let w = PI.powf(d as f64 / 2.0) / g;
            assert!((unit_ball_volume(d) - w).abs() < 1e-12 * w, "d = {d}");
        }
    }

    #[test]
    fn ball_at_examples() {
        let s = MovingBallSpec::new(0.7, 0.0, 0.3, 1.0, axis_direction(2)).unwrap();
        let b = s.ball_at(5.0);
        assert_eq!(b.center, vec![0.0, 0.0]);
        assert!((b.radius - (-5.0 * 0.7 * 0.3f64).exp()).abs() < 1e-15);

        let s = MovingBallSpec::new(0.5, 0.5, 0.0, 1.0, vec![1.0, 0.0]).unwrap();
        let b = s.ball_at(4.0);
        assert!((b.center[0] - 2.0).abs() < 1e-15 && b.center[1] == 0.0);
        assert_eq!(b.radius, 1.0);

        let s = MovingBallSpec::new(1.0, 0.2, 0.1, 2.0, vec![1.0]).unwrap();
        assert!((s.ball_at(10.0).radius - 2.0 * (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn moving_ball_validation() {
        assert!(MovingBallSpec::new(1.0, 0.2, 0.1, 2.0, vec![1.0, 1.0]).is_err());
        assert!(MovingBallSpec::new(1.0, 0.2, 0.1, 0.0, vec![1.0]).is_err());
        assert!(Ball::new(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn open_ball_membership() {
        let b = Ball::centered(2, 1.0).unwrap();
        assert!(b.contains(&[0.5, 0.5]));
        assert!(!b.contains(&[1.0, 0.0]));
    }
}
