//! Uniform-grid hashing for radius queries on low-dimensional point clouds.

use std::collections::HashMap;

use crate::state::euclidean;

/// Above this dimension the 3^k neighbour-cell scan costs more than brute force.
const MAX_GRID_DIM: usize = 6;

pub(crate) struct GridIndex<'a> {
    points: &'a [Vec<f64>],
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> GridIndex<'a> {
    pub fn new(points: &'a [Vec<f64>], cell: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let cell = if cell > 0.0 && cell.is_finite() { cell } else { 1.0 };
        let gridded = points.first().is_some_and(|p| p.len() <= MAX_GRID_DIM);
        if gridded {
            for (i, p) in points.iter().enumerate() {
                cells.entry(key(p, cell)).or_default().push(i);
            }
        }
        Self { points, cell, cells }
    }

    fn gridded(&self) -> bool {
        !self.cells.is_empty()
    }

    /// Calls `f(j, dist)` for every point strictly within `r` of `x`.
    pub fn for_each_within(&self, x: &[f64], r: f64, mut f: impl FnMut(usize, f64)) {
        if !self.gridded() {
            for (j, p) in self.points.iter().enumerate() {
                let d = euclidean(p, x);
                if d < r {
                    f(j, d);
                }
            }
            return;
        }
        let reach = (r / self.cell).ceil() as i64;
        let center = key(x, self.cell);
        let mut offset = vec![-reach; x.len()];
        loop {
            let k: Vec<i64> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
            if let Some(bucket) = self.cells.get(&k) {
                for &j in bucket {
                    let d = euclidean(&self.points[j], x);
                    if d < r {
                        f(j, d);
                    }
                }
            }
            if !advance(&mut offset, reach) {
                break;
            }
        }
    }
}

fn key(x: &[f64], cell: f64) -> Vec<i64> {
    x.iter().map(|v| (v / cell).floor() as i64).collect()
}

/// Odometer over `[-reach, reach]^k`.
fn advance(offset: &mut [i64], reach: i64) -> bool {
    for o in offset.iter_mut() {
        if *o < reach {
            *o += 1;
            return true;
        }
        *o = -reach;
    }
    false
}

pub(crate) fn bounding_box(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let k = points.first().map_or(0, Vec::len);
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for p in points {
        for j in 0..k {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    (lo, hi)
}

/// Connected components of the graph joining points closer than `link`.
pub(crate) fn components(points: &[Vec<f64>], link: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let index = GridIndex::new(points, link);
    for i in 0..n {
        index.for_each_within(&points[i], link, |j, _| {
            if j > i {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        });
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

/// Distance from each point to its nearest distinct neighbour (infinite for a
/// lone point). Coincident duplicates are skipped.
pub(crate) fn nearest_neighbor_distances(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    if n < 2 {
        return vec![f64::INFINITY; n];
    }
    let (lo, hi) = bounding_box(points);
    let k = lo.len().max(1);
    let volume: f64 = lo.iter().zip(&hi).map(|(l, h)| (h - l).max(1e-12)).product();
    let mut r = (volume / n as f64).powf(1.0 / k as f64).max(1e-12);
    let span = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
    let mut out = vec![f64::INFINITY; n];
    let mut pending: Vec<usize> = (0..n).collect();
    // expanding-radius search; each round only revisits unresolved points
    while !pending.is_empty() {
        let index = GridIndex::new(points, r);
        pending.retain(|&i| {
            let mut best = f64::INFINITY;
            index.for_each_within(&points[i], r, |j, d| {
                if j != i && d > 0.0 && d < best {
                    best = d;
                }
            });
            if best.is_finite() {
                out[i] = best;
                false
            } else {
                true
            }
        });
        if r > 2.0 * span + 1.0 {
            break;
        }
        r *= 2.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_split_at_gaps() {
        let pts: Vec<Vec<f64>> = [0.0, 0.1, 0.2, 1.0, 1.05, 3.0].iter().map(|v| vec![*v]).collect();
        let c = components(&pts, 0.15);
        assert_eq!(c, vec![vec![0, 1, 2], vec![3, 4], vec![5]]);
    }

    #[test]
    fn nearest_neighbours_brute_force_agreement() {
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.618_033).fract(), (t * 0.414_213).fract()]
            })
            .collect();
        let fast = nearest_neighbor_distances(&pts);
        for (i, p) in pts.iter().enumerate() {
            let brute = pts
                .iter()
                .enumerate()
                .filter(|(j, q)| *j != i && euclidean(p, q) > 0.0)
                .map(|(_, q)| euclidean(p, q))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(fast[i], brute);
        }
    }

    #[test]
    fn high_dimensional_falls_back_to_scan() {
        let pts = vec![vec![0.0; 8], vec![0.1; 8]];
        let idx = GridIndex::new(&pts, 0.5);
        let mut hits = vec![];
        idx.for_each_within(&pts[0], 1.0, |j, _| hits.push(j));
        assert_eq!(hits, vec![0, 1]);
    }
}
