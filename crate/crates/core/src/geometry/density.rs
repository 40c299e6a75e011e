//! Probe-based r-density testing.
//!
//! A region `B(c, R)` is probed on the cubic lattice `c + δℤ^d`. Lattice points
//! inside the open ball are interior probes. Lattice points outside it whose
//! lattice cell still meets the ball are projected radially onto the sphere and
//! become boundary probes. Every region point is then within `δ√d/2` of a probe.
//!
//! Verdicts are one-sided:
//! * `Dense` when every probe has a source closer than `r − δ√d/2`;
//! * `NotDense` when some interior probe has no source closer than `r`
//!   (that probe is returned as the witness);
//! * `Indeterminate` otherwise.

use serde::{Deserialize, Serialize};

use super::{Ball, SpatialGrid};
use crate::error::{domain, Result};

pub const DEFAULT_PROBE_FRACTION: f64 = 1.0 / 20.0;

const MAX_PROBES: usize = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityOptions {
    /// Probe lattice spacing as a fraction of `r`.
    pub probe_spacing_fraction: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            probe_spacing_fraction: DEFAULT_PROBE_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DensityVerdict {
    Dense,
    NotDense,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub point: Vec<f64>,
    /// `false` for boundary probes, which lie on the sphere.
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub verdict: DensityVerdict,
    /// A region point with no source within `r`, present iff `NotDense`.
    pub witness: Option<Vec<f64>>,
    /// Probes generated for the region.
    pub probes: usize,
}

impl DensityCheck {
    pub fn is_dense(&self) -> bool {
        self.verdict == DensityVerdict::Dense
    }
}

/// Probe layout shared by both evaluation routes. Probes are generated on
/// demand from their lattice slot, in slot order.
struct ProbeLattice {
    dim: usize,
    spacing: f64,
    half: i64,
    side: i64,
    slots: usize,
    center: Vec<f64>,
    radius: f64,
}

impl ProbeLattice {
    fn new(region: &Ball, spacing: f64) -> Result<Self> {
        let d = region.dim();
        let half = (region.radius / spacing + 0.5).ceil() as i64;
        let side = 2 * half + 1;
        let slots = (side as f64).powi(d as i32);
        if slots > MAX_PROBES as f64 {
            return domain(format!(
                "probe lattice of {side}^{d} points is too large; increase the probe spacing"
            ));
        }
        Ok(Self {
            dim: d,
            spacing,
            half,
            side,
            slots: slots as usize,
            center: region.center.clone(),
            radius: region.radius,
        })
    }

    /// Writes the probe of `slot` into `out` and reports whether it is
    /// interior, or returns `None` when the slot's cell misses the region.
    fn probe(&self, slot: usize, out: &mut [f64]) -> Option<bool> {
        let mut rest = slot as i64;
        let mut norm2 = 0.0;
        let mut cell2 = 0.0;
        for (x, c) in out.iter_mut().zip(&self.center) {
            let i = rest % self.side - self.half;
            rest /= self.side;
            let off = i as f64 * self.spacing;
            *x = c + off;
            norm2 += off * off;
            let gap = (off.abs() - 0.5 * self.spacing).max(0.0);
            cell2 += gap * gap;
        }
        let r2 = self.radius * self.radius;
        if norm2 < r2 {
            Some(true)
        } else if cell2 < r2 {
            let scale = self.radius / norm2.sqrt();
            for (x, c) in out.iter_mut().zip(&self.center) {
                *x = c + (*x - c) * scale;
            }
            Some(false)
        } else {
            None
        }
    }

    fn slot_of(&self, idx: &[i64]) -> usize {
        idx.iter()
            .rev()
            .fold(0i64, |acc, &i| acc * self.side + (i + self.half)) as usize
    }
}

fn validate(points: &[f64], region: &Ball, r: f64, opts: &DensityOptions) -> Result<f64> {
    let d = region.dim();
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("r > 0 violated (r = {r})"));
    }
    if !points.len().is_multiple_of(d) {
        return domain(format!(
            "point buffer length {} is not a multiple of dimension {d}",
            points.len()
        ));
    }
    let f = opts.probe_spacing_fraction;
    if !(f > 0.0 && f * (d as f64).sqrt() < 2.0) {
        return domain(format!(
            "probe spacing fraction must lie in (0, 2/sqrt(d)), got {f}"
        ));
    }
    Ok(f * r)
}

/// Verdict from per-probe squared nearest distances (infinite when no source
/// is closer than `r`), scanning probes in slot order.
fn classify(
    lattice: &ProbeLattice,
    r: f64,
    mut nearest2: impl FnMut(usize, &[f64]) -> f64,
) -> DensityCheck {
    let slack = lattice.spacing * (lattice.dim as f64).sqrt() / 2.0;
    let r2 = r * r;
    let safe2 = (r - slack) * (r - slack);
    let mut undecided = false;
    let mut count = 0;
    let mut q = vec![0.0; lattice.dim];
    for slot in 0..lattice.slots {
        let Some(interior) = lattice.probe(slot, &mut q) else {
            continue;
        };
        count += 1;
        let n2 = nearest2(slot, &q);
        if n2 >= r2 && interior {
            return DensityCheck {
                verdict: DensityVerdict::NotDense,
                witness: Some(q),
                probes: count,
            };
        }
        if n2 >= safe2 {
            undecided = true;
        }
    }
    DensityCheck {
        verdict: if undecided {
            DensityVerdict::Indeterminate
        } else {
            DensityVerdict::Dense
        },
        witness: None,
        probes: count,
    }
}

fn empty_sources(region: &Ball) -> DensityCheck {
    DensityCheck {
        verdict: DensityVerdict::NotDense,
        witness: Some(region.center.clone()),
        probes: 0,
    }
}

/// All probes of `region` at lattice spacing `spacing`.
pub fn density_probes(region: &Ball, spacing: f64) -> Result<Vec<Probe>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return domain(format!("probe spacing > 0 violated (spacing = {spacing})"));
    }
    let lattice = ProbeLattice::new(region, spacing)?;
    let mut q = vec![0.0; lattice.dim];
    Ok((0..lattice.slots)
        .filter_map(|slot| {
            lattice.probe(slot, &mut q).map(|interior| Probe {
                point: q.clone(),
                interior,
            })
        })
        .collect())
}

/// Whether `points` (flat, `region.dim()` values each) is r-dense in `region`,
/// with the default probe spacing `r/20`.
pub fn is_r_dense(points: &[f64], region: &Ball, r: f64) -> Result<DensityCheck> {
    is_r_dense_with(points, region, r, &DensityOptions::default())
}

/// Queries each probe against a spatial index of the sources.
pub fn is_r_dense_with(
    points: &[f64],
    region: &Ball,
    r: f64,
    opts: &DensityOptions,
) -> Result<DensityCheck> {
    let spacing = validate(points, region, r, opts)?;
    if points.is_empty() {
        return Ok(empty_sources(region));
    }
    let lattice = ProbeLattice::new(region, spacing)?;
    let grid = SpatialGrid::new(points, region.dim(), r)?;
    Ok(classify(&lattice, r, |_, q| {
        grid.nearest_within(q, r).map_or(f64::INFINITY, |x| x * x)
    }))
}

/// Decides whether `region ⊆ ⋃ B(x, r)` by painting, from every source, the
/// probes it reaches. Uses the same probes and thresholds as
/// [`is_r_dense_with`], so the two verdicts coincide exactly.
pub fn coverage_by_painting(
    points: &[f64],
    region: &Ball,
    r: f64,
    opts: &DensityOptions,
) -> Result<DensityCheck> {
    let spacing = validate(points, region, r, opts)?;
    if points.is_empty() {
        return Ok(empty_sources(region));
    }
    let lattice = ProbeLattice::new(region, spacing)?;
    let d = lattice.dim;
    let mut best = vec![f64::INFINITY; lattice.slots];
    // boundary probes sit up to δ√d/2 away from their lattice point
    let reach = r + spacing * (d as f64).sqrt();
    let r2 = r * r;

    let mut lo = vec![0i64; d];
    let mut hi = vec![0i64; d];
    let mut idx = vec![0i64; d];
    let mut q = vec![0.0; d];
    for p in points.chunks_exact(d) {
        let mut empty = false;
        for a in 0..d {
            let rel = p[a] - lattice.center[a];
            lo[a] = (((rel - reach) / spacing).ceil() as i64).max(-lattice.half);
            hi[a] = (((rel + reach) / spacing).floor() as i64).min(lattice.half);
            empty |= lo[a] > hi[a];
        }
        if empty {
            continue;
        }
        idx.copy_from_slice(&lo);
        'walk: loop {
            let slot = lattice.slot_of(&idx);
            if lattice.probe(slot, &mut q).is_some() {
                let mut s = 0.0;
                for (a, b) in p.iter().zip(&q) {
                    s += (a - b) * (a - b);
                }
                if s < r2 && s < best[slot] {
                    best[slot] = s;
                }
            }
            for a in 0..d {
                idx[a] += 1;
                if idx[a] <= hi[a] {
                    continue 'walk;
                }
                idx[a] = lo[a];
            }
            break;
        }
    }
    Ok(classify(&lattice, r, |slot, _| best[slot]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dist2;
    use crate::rng::CounterRng;

    fn lattice_points(d: usize, s: f64, extent: f64) -> Vec<f64> {
        let n = (extent / s).ceil() as i64;
        let mut out = Vec::new();
        let mut idx = vec![-n; d];
        loop {
            out.extend(idx.iter().map(|&i| i as f64 * s));
            let mut a = 0;
            loop {
                if a == d {
                    return out;
                }
                idx[a] += 1;
                if idx[a] <= n {
                    break;
                }
                idx[a] = -n;
                a += 1;
            }
        }
    }

    fn brute(points: &[f64], region: &Ball, r: f64, fraction: f64) -> DensityCheck {
        let d = region.dim();
        let lattice = ProbeLattice::new(region, fraction * r).unwrap();
        classify(&lattice, r, |_, q| {
            let n2 = points
                .chunks_exact(d)
                .map(|p| dist2(p, q))
                .fold(f64::INFINITY, f64::min);
            if n2 < r * r {
                n2
            } else {
                f64::INFINITY
            }
        })
    }

    #[test]
    fn trivial_cases() {
        let small = Ball::centered(1, 0.5).unwrap();
        assert!(is_r_dense(&[0.0], &small, 1.0).unwrap().is_dense());
        let unit = Ball::centered(2, 1.0).unwrap();
        let c = is_r_dense(&[], &unit, 1.0).unwrap();
        assert_eq!(c.verdict, DensityVerdict::NotDense);
        assert_eq!(c.witness, Some(vec![0.0, 0.0]));
        assert!(is_r_dense(&[0.0], &small, 0.0).is_err());
    }

    #[test]
    fn probes_cover_the_region() {
        let mut rng = CounterRng::new(5);
        for d in 1..=3 {
            let region = Ball::new(vec![0.25; d], 1.3).unwrap();
            let spacing = 0.11;
            let probes = density_probes(&region, spacing).unwrap();
            let bound = spacing * (d as f64).sqrt() / 2.0 + 1e-12;
            for p in &probes {
                let dist = dist2(&p.point, &region.center).sqrt();
                if p.interior {
                    assert!(dist < region.radius);
                } else {
                    assert!((dist - region.radius).abs() < 1e-12);
                }
            }
            for _ in 0..300 {
                let x: Vec<f64> = (0..d)
                    .map(|a| region.center[a] + (2.0 * rng.open01() - 1.0) * 1.3)
                    .collect();
                if !region.contains(&x) {
                    continue;
                }
                let nearest = probes
                    .iter()
                    .map(|p| dist2(&p.point, &x).sqrt())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest <= bound);
            }
        }
    }

    #[test]
    fn cubic_source_grid() {
        // A 1% margin needs probes finer than the default r/20 spacing.
        for (d, s, fraction) in [
            (1usize, 0.25, 1.0 / 200.0),
            (2, 0.25, 1.0 / 200.0),
            (3, 1.0, 1.0 / 100.0),
        ] {
            let fine = DensityOptions {
                probe_spacing_fraction: fraction,
            };
            let pts = lattice_points(d, s, 1.5);
            let region = Ball::centered(d, 1.0).unwrap();
            let half_diag = s * (d as f64).sqrt() / 2.0;
            let yes = is_r_dense_with(&pts, &region, half_diag * 1.01, &fine).unwrap();
            assert_eq!(yes.verdict, DensityVerdict::Dense, "d={d}");
            let no = is_r_dense_with(&pts, &region, half_diag * 0.5, &fine).unwrap();
            assert_eq!(no.verdict, DensityVerdict::NotDense, "d={d}");
            let w = no.witness.unwrap();
            assert!(region.contains(&w));
            let nn = pts
                .chunks_exact(d)
                .map(|p| dist2(p, &w).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(nn >= half_diag * 0.5);
        }
    }

    #[test]
    fn matches_brute_force_and_painting() {
        let mut rng = CounterRng::new(17);
        for case in 0..60 {
            let d = 1 + case % 3;
            let n = 1 + (rng.open01() * 200.0) as usize;
            let extent = 1.0 + 2.0 * rng.open01();
            let pts: Vec<f64> = (0..n * d)
                .map(|_| (2.0 * rng.open01() - 1.0) * extent)
                .collect();
            let region = Ball::new(vec![0.1; d], 0.3 + rng.open01() * extent).unwrap();
            let r = 0.2 + rng.open01();
            let opts = DensityOptions {
                probe_spacing_fraction: 0.1,
            };
            let fast = is_r_dense_with(&pts, &region, r, &opts).unwrap();
            let slow = brute(&pts, &region, r, 0.1);
            let painted = coverage_by_painting(&pts, &region, r, &opts).unwrap();
            assert_eq!(fast.verdict, slow.verdict, "case {case}");
            assert_eq!(fast.witness, slow.witness, "case {case}");
            assert_eq!(fast.verdict, painted.verdict, "case {case}");
            assert_eq!(fast.witness, painted.witness, "case {case}");
        }
    }
}
