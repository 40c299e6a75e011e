//! Simple cubic packings of a ball's bounding cube, used as coverings.
//!
//! Balls of radius `ρ` sit on a cubic lattice of spacing `2ρ` filling the cube
//! `C(c, R)`, `⌈R/ρ⌉` per axis. Lattice points outside the region are moved
//! back into it, so every region point `x` satisfies
//! `min_j max_{y ∈ B(z_j, ρ)} |x − y| = min_j (|x − z_j| + ρ) < 2√d·ρ`.

use serde::{Deserialize, Serialize};

use super::{dist2, Ball};
use crate::error::{domain, Result};

/// What happens to lattice centers that fall outside the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SnapRule {
    /// Radially project onto the region's closed boundary. Projection onto a
    /// convex set never increases distances to region points, so the covering
    /// bound survives.
    #[default]
    Project,
    /// Replace by the region center. Near the boundary this can leave points
    /// whose nearest kept center is too far away (see tests).
    ToCenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringSpec {
    pub region: Ball,
    pub packing_radius: f64,
    /// Flat `count × d` center coordinates.
    pub centers: Vec<f64>,
    pub count: usize,
}

impl CoveringSpec {
    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn center(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.centers[j * d..(j + 1) * d]
    }

    /// Enlargement radius `2√d·ρ` of the covering.
    pub fn enlargement_radius(&self) -> f64 {
        2.0 * (self.dim() as f64).sqrt() * self.packing_radius
    }

    /// `min_j (|x − z_j| + ρ)`: distance from `x` to the farthest point of the
    /// closest packing ball.
    pub fn farthest_point_distance(&self, x: &[f64]) -> f64 {
        self.centers
            .chunks_exact(self.dim())
            .map(|c| dist2(x, c).sqrt())
            .fold(f64::INFINITY, f64::min)
            + self.packing_radius
    }

    pub fn covers(&self, x: &[f64]) -> bool {
        self.farthest_point_distance(x) < self.enlargement_radius()
    }
}

pub fn cubic_covering(region: &Ball, packing_radius: f64) -> Result<CoveringSpec> {
    cubic_covering_with(region, packing_radius, SnapRule::default())
}

pub fn cubic_covering_with(
    region: &Ball,
    packing_radius: f64,
    snap: SnapRule,
) -> Result<CoveringSpec> {
    if !(packing_radius > 0.0 && packing_radius.is_finite()) {
        return domain(format!(
            "packing_radius > 0 violated (packing_radius = {packing_radius})"
        ));
    }
    let d = region.dim();
    let big_r = region.radius;
    if packing_radius > big_r {
        return Ok(CoveringSpec {
            region: region.clone(),
            packing_radius,
            centers: region.center.clone(),
            count: 1,
        });
    }

    let per_axis = per_axis_count(big_r / packing_radius);
    let count = per_axis
        .checked_pow(d as u32)
        .filter(|&c| c <= 50_000_000)
        .ok_or_else(|| {
            crate::error::Error::Domain(format!(
                "covering would need {per_axis}^{d} centers; too many"
            ))
        })?;

    let mut centers = Vec::with_capacity(count * d);
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    for _ in 0..count {
        for a in 0..d {
            y[a] = region.center[a] - big_r + packing_radius * (1 + 2 * idx[a]) as f64;
        }
        if region.contains(&y) {
            centers.extend_from_slice(&y);
        } else {
            match snap {
                SnapRule::ToCenter => centers.extend_from_slice(&region.center),
                SnapRule::Project => {
                    let dist = dist2(&y, &region.center).sqrt();
                    let s = big_r / dist;
                    centers.extend(
                        y.iter()
                            .zip(&region.center)
                            .map(|(yi, ci)| ci + (yi - ci) * s),
                    );
                }
            }
        }
        // odometer over the lattice multi-index
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < per_axis {
                break;
            }
            *slot = 0;
        }
    }

    Ok(CoveringSpec {
        region: region.clone(),
        packing_radius,
        centers,
        count,
    })
}

/// `⌈x⌉`, ignoring rounding noise just above an integer.
fn per_axis_count(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r.max(1.0) as usize
    } else {
        x.ceil() as usize
    }
}

/// Number of balls of radius `r₀e^{−βkt}/(2√d)` needed to pack `C(0, r₀)`:
/// `⌈2√d·e^{βkt}⌉^d`.
pub fn shrinking_packing_count(beta: f64, k: f64, t: f64, d: usize) -> f64 {
    (2.0 * (d as f64).sqrt() * (beta * k * t).exp())
        .ceil()
        .powi(d as i32)
}

/// Number of balls of radius `r₀/(2√d)` needed to pack `C(0, ρ)`:
/// `⌈2√d·ρ/r₀⌉^d`.
pub fn enlarged_packing_count(rho: f64, r0: f64, d: usize) -> f64 {
    (2.0 * (d as f64).sqrt() * rho / r0).ceil().powi(d as i32)
}
