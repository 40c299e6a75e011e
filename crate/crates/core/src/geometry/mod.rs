//! Balls, simple cubic coverings, probe-based density testing, union-of-balls
//! volume and Gaussian ball probabilities.
//!
//! Point sets are flat coordinate slices: `d` consecutive values per point.

mod ball;
mod covering;
mod density;
mod gaussian;
mod grid;
mod volume;

pub use ball::{axis_direction, unit_ball_volume, Ball, MovingBallSpec};
pub use covering::{
    cubic_covering, cubic_covering_with, enlarged_packing_count, shrinking_packing_count,
    CoveringSpec, SnapRule,
};
pub use density::{
    coverage_by_painting, density_probes, is_r_dense, is_r_dense_with, DensityCheck,
    DensityOptions, DensityVerdict, Probe, DEFAULT_PROBE_FRACTION,
};
pub use gaussian::gaussian_ball_prob;
pub use grid::SpatialGrid;
pub use volume::{union_volume, VolumeEstimate};

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
