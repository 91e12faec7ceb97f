use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{euclidean, StateVector};

/// An open subset of the ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoverElement {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Union of open balls of a common radius; points kept sorted by their
    /// first coordinate.
    Neighborhood { points: Vec<Vec<f64>>, radius: f64 },
}

impl CoverElement {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Self::Ball { center, radius }
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self::Box { lo, hi }
    }

    pub fn neighborhood(mut points: Vec<Vec<f64>>, radius: f64) -> Self {
        points.sort_by(|a, b| a[0].total_cmp(&b[0]));
        Self::Neighborhood { points, radius }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.len(),
            Self::Box { lo, .. } => lo.len(),
            Self::Neighborhood { points, .. } => points.first().map_or(0, Vec::len),
        }
    }

    fn window(points: &[Vec<f64>], x0: f64, r: f64) -> &[Vec<f64>] {
        let start = points.partition_point(|p| p[0] <= x0 - r);
        let end = points.partition_point(|p| p[0] < x0 + r);
        &points[start..end.max(start)]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::Ball { center, radius } => euclidean(center, x) < *radius,
            Self::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l < v && v < h),
            Self::Neighborhood { points, radius } => {
                Self::window(points, x[0], *radius).iter().any(|p| euclidean(p, x) < *radius)
            }
        }
    }

    /// Radius of a Euclidean ball around `x` known to lie inside the element;
    /// non-positive outside.
    pub fn depth(&self, x: &[f64]) -> f64 {
        match self {
            Self::Ball { center, radius } => radius - euclidean(center, x),
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .fold(f64::INFINITY, |m, (v, (l, h))| m.min(v - l).min(h - v)),
            Self::Neighborhood { points, radius } => Self::window(points, x[0], *radius)
                .iter()
                .fold(0.0f64, |m, p| m.max(radius - euclidean(p, x))),
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Self::Box { lo, hi } => (lo.clone(), hi.clone()),
            Self::Neighborhood { points, radius } => {
                let (lo, hi) = crate::spatial::bounding_box(points);
                (lo.iter().map(|v| v - radius).collect(), hi.iter().map(|v| v + radius).collect())
            }
        }
    }

    /// Largest side of the bounding box.
    pub fn sup_diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.iter().zip(&hi).fold(0.0, |m, (l, h)| m.max(h - l))
    }

    /// Sufficient test that the open box `(lo, hi)` lies inside the element.
    pub fn contains_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        let farthest = |c: &[f64]| -> f64 {
            c.iter()
                .zip(lo.iter().zip(hi))
                .map(|(c, (l, h))| (c - l).abs().max((h - c).abs()).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        match self {
            Self::Ball { center, radius } => farthest(center) <= *radius,
            Self::Box { lo: a, hi: b } => lo.iter().zip(hi).zip(a.iter().zip(b)).all(|((l, h), (a, b))| a <= l && h <= b),
            Self::Neighborhood { points, radius } => {
                let mid: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
                Self::window(points, mid[0], *radius).iter().any(|p| farthest(p) <= *radius)
            }
        }
    }
}

/// A finite open cover with its characteristic element diameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub elements: Vec<CoverElement>,
    pub scale: f64,
}

impl Cover {
    pub fn new(elements: Vec<CoverElement>, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument { name: "scale", reason: format!("scale {scale} must be positive") });
        }
        let dims: Vec<usize> = elements.iter().map(CoverElement::dim).collect();
        if let Some(w) = dims.windows(2).find(|w| w[0] != w[1]) {
            return Err(Error::DimensionMismatch { expected: w[0], found: w[1] });
        }
        let elements = elements
            .into_iter()
            .map(|e| match e {
                CoverElement::Neighborhood { points, radius } => CoverElement::neighborhood(points, radius),
                other => other,
            })
            .collect();
        Ok(Self { elements, scale })
    }

    /// Axis boxes of side `scale` on a lattice of spacing `scale/2` anchored at
    /// `anchor` (default: the sample's lower corner); only boxes meeting the
    /// sample are kept. Every point lies in at most `2^k` boxes.
    pub fn mesh(samples: &[StateVector], scale: f64, anchor: Option<&[f64]>) -> Result<Self> {
        let pts = coords(samples)?;
        let half = scale / 2.0;
        let origin = match anchor {
            Some(a) => a.to_vec(),
            None => crate::spatial::bounding_box(&pts).0,
        };
        let k = origin.len();
        let mut keys: Vec<Vec<i64>> = Vec::new();
        for p in &pts {
            let cell: Vec<i64> = p.iter().zip(&origin).map(|(v, o)| ((v - o) / half).floor() as i64).collect();
            for corner in 0..(1usize << k) {
                keys.push((0..k).map(|j| cell[j] + ((corner >> j) & 1) as i64).collect());
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let elements: Vec<CoverElement> = keys
            .into_iter()
            .map(|key| {
                let lo: Vec<f64> = key.iter().zip(&origin).map(|(i, o)| o + (*i - 1) as f64 * half).collect();
                let hi: Vec<f64> = lo.iter().map(|l| l + scale).collect();
                CoverElement::cube(lo, hi)
            })
            .collect();
        let mut cover = Self::new(elements, scale)?;
        cover.retain_occupied(samples)?;
        Ok(cover)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Every element has sup-diameter at most the scale.
    pub fn at_scale(&self) -> bool {
        self.elements.iter().all(|e| e.sup_diameter() <= self.scale * (1.0 + 1e-9))
    }

    /// Drops elements that contain no sample.
    pub fn retain_occupied(&mut self, samples: &[StateVector]) -> Result<()> {
        let pts = coords(samples)?;
        let hit = occupancy(self, &pts);
        let mut i = 0;
        self.elements.retain(|_| {
            i += 1;
            hit[i - 1]
        });
        Ok(())
    }

    /// Sample-based refinement check: the samples inside each element of
    /// `self` all lie in one common element of `coarse`.
    pub fn is_refinement_of(&self, coarse: &Cover, samples: &[StateVector]) -> Result<bool> {
        let pts = coords(samples)?;
        let fine_idx = CoverIndex::new(self);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        for (i, p) in pts.iter().enumerate() {
            fine_idx.for_each_containing(p, |e| members[e].push(i));
        }
        let coarse_idx = CoverIndex::new(coarse);
        Ok(members.par_iter().all(|m| {
            let Some(&first) = m.first() else { return true };
            let mut found = false;
            coarse_idx.for_each_containing(&pts[first], |u| {
                if !found && m.iter().all(|&i| coarse.elements[u].contains(&pts[i])) {
                    found = true;
                }
            });
            found
        }))
    }
}

pub(crate) fn coords(samples: &[StateVector]) -> Result<Vec<Vec<f64>>> {
    let k = samples.first().map_or(0, StateVector::dim);
    samples
        .iter()
        .map(|s| {
            s.expect_dim(k)?;
            Ok(s.coords().to_vec())
        })
        .collect()
}

/// Bucketed element lookup keyed on element bounding boxes.
pub(crate) struct CoverIndex<'c> {
    cover: &'c Cover,
    cell: f64,
    buckets: Option<HashMap<Vec<i64>, Vec<usize>>>,
}

impl<'c> CoverIndex<'c> {
    pub fn new(cover: &'c Cover) -> Self {
        let k = cover.elements.first().map_or(0, CoverElement::dim);
        let cell = cover.elements.iter().map(CoverElement::sup_diameter).fold(0.0, f64::max);
        if k == 0 || k > 6 || !(cell > 0.0 && cell.is_finite()) {
            return Self { cover, cell: 1.0, buckets: None };
        }
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (e, el) in cover.elements.iter().enumerate() {
            let (lo, hi) = el.bounding_box();
            let a: Vec<i64> = lo.iter().map(|v| (v / cell).floor() as i64).collect();
            let b: Vec<i64> = hi.iter().map(|v| (v / cell).floor() as i64).collect();
            let mut cur = a.clone();
            loop {
                buckets.entry(cur.clone()).or_default().push(e);
                let mut j = 0;
                while j < k {
                    if cur[j] < b[j] {
                        cur[j] += 1;
                        break;
                    }
                    cur[j] = a[j];
                    j += 1;
                }
                if j == k {
                    break;
                }
            }
        }
        Self { cover, cell, buckets: Some(buckets) }
    }

    pub fn for_each_containing(&self, x: &[f64], mut f: impl FnMut(usize)) {
        match &self.buckets {
            None => {
                for (e, el) in self.cover.elements.iter().enumerate() {
                    if el.contains(x) {
                        f(e);
                    }
                }
            }
            Some(b) => {
                let key: Vec<i64> = x.iter().map(|v| (v / self.cell).floor() as i64).collect();
                if let Some(list) = b.get(&key) {
                    for &e in list {
                        if self.cover.elements[e].contains(x) {
                            f(e);
                        }
                    }
                }
            }
        }
    }

    pub fn count(&self, x: &[f64]) -> usize {
        let mut n = 0;
        self.for_each_containing(x, |_| n += 1);
        n
    }
}

fn occupancy(cover: &Cover, pts: &[Vec<f64>]) -> Vec<bool> {
    let idx = CoverIndex::new(cover);
    let mut hit = vec![false; cover.len()];
    for p in pts {
        idx.for_each_containing(p, |e| hit[e] = true);
    }
    hit
}

pub(crate) fn order_of(cover: &Cover, pts: &[Vec<f64>]) -> Result<i64> {
    if pts.is_empty() {
        return Ok(-1);
    }
    let idx = CoverIndex::new(cover);
    let counts: Vec<usize> = pts.par_iter().map(|p| idx.count(p)).collect();
    if let Some(index) = counts.iter().position(|c| *c == 0) {
        return Err(Error::Uncovered { index });
    }
    Ok(*counts.iter().max().expect("nonempty") as i64 - 1)
}

/// `-1 + max` over samples of the number of elements containing the sample.
pub fn cover_order(cover: &Cover, samples: &[StateVector]) -> Result<i64> {
    order_of(cover, &coords(samples)?)
}
