//! Monte Carlo volume of a union of equal balls.

use serde::{Deserialize, Serialize};

use super::SpatialGrid;
use crate::error::{domain, Result};
use crate::rng::CounterRng;

const BATCH: usize = 4096;
const MIN_SAMPLES: usize = 4 * BATCH;
const MAX_SAMPLES: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub volume: f64,
    pub standard_error: f64,
    pub samples: usize,
}

/// Estimates `vol(⋃ B(x, r))` by uniform sampling in the bounding box of the
/// enlarged point set, drawing batches until the relative standard error is at
/// most `rel_err_target` (or a hard sample ceiling is reached).
pub fn union_volume(
    points: &[f64],
    dim: usize,
    r: f64,
    rel_err_target: f64,
    seed: u64,
) -> Result<VolumeEstimate> {
    if !(rel_err_target > 0.0) {
        return domain(format!(
            "rel_err_target > 0 violated (rel_err_target = {rel_err_target})"
        ));
    }
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("r > 0 violated (r = {r})"));
    }
    if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
        return domain("points must be a nonempty list of d-vectors");
    }

    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points.chunks_exact(dim) {
        for a in 0..dim {
            lo[a] = lo[a].min(p[a] - r);
            hi[a] = hi[a].max(p[a] + r);
        }
    }
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    let grid = SpatialGrid::new(points, dim, r)?;
    let mut rng = CounterRng::new(seed);
    let mut q = vec![0.0; dim];
    let (mut hits, mut n) = (0usize, 0usize);

    loop {
        for _ in 0..BATCH {
            for a in 0..dim {
                q[a] = lo[a] + (hi[a] - lo[a]) * rng.open01();
            }
            hits += grid.any_within(&q, r) as usize;
        }
        n += BATCH;
        let p = hits as f64 / n as f64;
        let se = box_volume * (p * (1.0 - p) / n as f64).sqrt();
        let volume = box_volume * p;
        let done = hits > 0 && se <= rel_err_target * volume;
        if (n >= MIN_SAMPLES && done) || n >= MAX_SAMPLES {
            return Ok(VolumeEstimate {
                volume,
                standard_error: se,
                samples: n,
            });
        }
    }
}
