//! Uniform hash grid over a point set.
//!
//! Cells are hashed to 64-bit keys. Two cells that collide share a bucket,
//! which only adds candidates; distances are always checked exactly.
//! Points are stored sorted by cell key so each bucket is a contiguous run.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use crate::error::{domain, Result};
use crate::rng::mix64;

#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 = mix64(self.0 ^ u64::from(*b));
        }
    }
    fn write_u64(&mut self, v: u64) {
        self.0 = v;
    }
}

type CellMap = HashMap<u64, (u32, u32), BuildHasherDefault<KeyHasher>>;

#[inline]
fn cell_key(cell: &[i64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for &c in cell {
        h = mix64(h ^ (c as u64));
    }
    h
}

/// Uniform grid with cubic cells of edge `cell`. Queries with radius at most
/// `cell` inspect the 3^d cells around the query point.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    dim: usize,
    cell: f64,
    coords: Vec<f64>,
    /// Original index of each stored point.
    index: Vec<u32>,
    cells: CellMap,
    offsets: Vec<Vec<i64>>,
}

impl std::fmt::Debug for KeyHasher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KeyHasher")
    }
}

impl SpatialGrid {
    pub fn new(points: &[f64], dim: usize, cell: f64) -> Result<Self> {
        if dim == 0 {
            return domain("dimension >= 1 violated");
        }
        if !points.len().is_multiple_of(dim) {
            return domain(format!(
                "point buffer length {} is not a multiple of dimension {dim}",
                points.len()
            ));
        }
        if !(cell > 0.0 && cell.is_finite()) {
            return domain(format!("cell edge > 0 violated (cell = {cell})"));
        }
        let n = points.len() / dim;
        if n > u32::MAX as usize {
            return domain("too many points for the spatial grid");
        }

        let mut cellbuf = vec![0i64; dim];
        let mut keyed: Vec<(u64, u32)> = (0..n)
            .map(|i| {
                let p = &points[i * dim..(i + 1) * dim];
                for (c, x) in cellbuf.iter_mut().zip(p) {
                    *c = (x / cell).floor() as i64;
                }
                (cell_key(&cellbuf), i as u32)
            })
            .collect();
        keyed.sort_unstable();

        let mut coords = Vec::with_capacity(points.len());
        let mut index = Vec::with_capacity(n);
        let mut cells = CellMap::default();
        let mut start = 0usize;
        while start < keyed.len() {
            let key = keyed[start].0;
            let mut end = start;
            while end < keyed.len() && keyed[end].0 == key {
                let i = keyed[end].1 as usize;
                coords.extend_from_slice(&points[i * dim..(i + 1) * dim]);
                index.push(i as u32);
                end += 1;
            }
            cells.insert(key, (start as u32, (end - start) as u32));
            start = end;
        }

        Ok(Self {
            dim,
            cell,
            coords,
            index,
            cells,
            offsets: neighbor_offsets(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Visits every stored point in the 3^d cells around `q`, passing the
    /// original index and the squared distance. Stops early when `visit`
    /// returns `false`.
    fn scan(&self, q: &[f64], mut visit: impl FnMut(usize, f64) -> bool) {
        debug_assert_eq!(q.len(), self.dim);
        let d = self.dim;
        let mut stack = [0i64; 16];
        let mut heap;
        let buf: &mut [i64] = if d <= 8 {
            &mut stack[..2 * d]
        } else {
            heap = vec![0i64; 2 * d];
            &mut heap
        };
        let (base, cellbuf) = buf.split_at_mut(d);
        for (b, x) in base.iter_mut().zip(q) {
            *b = (x / self.cell).floor() as i64;
        }
        // In d = 1 keys are a bijection of the cell; in higher d two of the
        // 3^d neighbor keys colliding has probability ~3^{2d}/2^64 and is ignored.
        for off in &self.offsets {
            for ((c, b), o) in cellbuf.iter_mut().zip(base.iter()).zip(off) {
                *c = b + o;
            }
            let key = cell_key(cellbuf);
            if let Some(&(start, len)) = self.cells.get(&key) {
                let (start, len) = (start as usize, len as usize);
                for j in start..start + len {
                    let p = &self.coords[j * d..(j + 1) * d];
                    let mut s = 0.0;
                    for (a, b) in p.iter().zip(q) {
                        s += (a - b) * (a - b);
                    }
                    if !visit(self.index[j] as usize, s) {
                        return;
                    }
                }
            }
        }
    }

    fn check_radius(&self, radius: f64) {
        assert!(
            radius <= self.cell * (1.0 + 1e-12),
            "query radius {radius} exceeds grid cell {}",
            self.cell
        );
    }

    /// Distance to the nearest point strictly closer than `radius`, if any.
    pub fn nearest_within(&self, q: &[f64], radius: f64) -> Option<f64> {
        self.check_radius(radius);
        let r2 = radius * radius;
        let mut best = f64::INFINITY;
        self.scan(q, |_, s| {
            if s < best {
                best = s;
            }
            true
        });
        (best < r2).then(|| best.sqrt())
    }

    /// Whether some point lies strictly closer than `radius`.
    pub fn any_within(&self, q: &[f64], radius: f64) -> bool {
        self.check_radius(radius);
        let r2 = radius * radius;
        let mut hit = false;
        self.scan(q, |_, s| {
            if s < r2 {
                hit = true;
                false
            } else {
                true
            }
        });
        hit
    }

    /// Number of points strictly closer than `radius`.
    pub fn count_within(&self, q: &[f64], radius: f64) -> usize {
        self.check_radius(radius);
        let r2 = radius * radius;
        let mut n = 0;
        self.scan(q, |_, s| {
            if s < r2 {
                n += 1;
            }
            true
        });
        n
    }

    /// Original indices of the points strictly closer than `radius`.
    pub fn indices_within(&self, q: &[f64], radius: f64) -> Vec<usize> {
        self.check_radius(radius);
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.scan(q, |i, s| {
            if s < r2 {
                out.push(i);
            }
            true
        });
        out
    }
}

fn neighbor_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-1..=1).map(move |o| {
                    let mut w = v.clone();
                    w.push(o);
                    w
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn random_points(n: usize, d: usize, scale: f64, key: u64) -> Vec<f64> {
        let mut r = CounterRng::new(key);
        (0..n * d)
            .map(|_| (r.open01() - 0.5) * 2.0 * scale)
            .collect()
    }

    #[test]
    fn matches_linear_scan() {
        for d in 1..=3 {
            let pts = random_points(500, d, 3.0, d as u64);
            let g = SpatialGrid::new(&pts, d, 0.7).unwrap();
            let qs = random_points(200, d, 3.5, 100 + d as u64);
            for q in qs.chunks_exact(d) {
                let brute: Vec<f64> = pts
                    .chunks_exact(d)
                    .map(|p| super::super::dist2(p, q).sqrt())
                    .collect();
                let cnt = brute.iter().filter(|&&x| x < 0.7).count();
                assert_eq!(g.count_within(q, 0.7), cnt);
                assert_eq!(g.any_within(q, 0.5), brute.iter().any(|&x| x < 0.5));
                let nn = brute.iter().cloned().fold(f64::INFINITY, f64::min);
                match g.nearest_within(q, 0.7) {
                    Some(x) => assert!((x - nn).abs() < 1e-12),
                    None => assert!(nn >= 0.7),
                }
                let mut idx = g.indices_within(q, 0.7);
                idx.sort();
                let want: Vec<usize> = (0..brute.len()).filter(|&i| brute[i] < 0.7).collect();
                assert_eq!(idx, want);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SpatialGrid::new(&[0.0, 1.0, 2.0], 2, 1.0).is_err());
        assert!(SpatialGrid::new(&[0.0], 1, 0.0).is_err());
    }

    #[test]
    fn empty_grid_has_no_neighbors() {
        let g = SpatialGrid::new(&[], 2, 1.0).unwrap();
        assert!(g.is_empty());
        assert!(!g.any_within(&[0.0, 0.0], 1.0));
    }
}
