use std::collections::BTreeMap;

use super::cover::{coords, order_of, Cover, CoverElement, CoverIndex};
use crate::error::Result;
use crate::spatial::{bounding_box, components};
use crate::state::StateVector;

/// Brick side as a fraction of the cover scale.
const BRICK_FRACTION: f64 = 0.3;
/// Default brick enlargement as a fraction of the brick side.
const BRICK_GROW: f64 = 0.02;
/// Subdivision depth before falling back to per-sample balls.
const MAX_SPLIT_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    /// Number of refinement attempts.
    pub budget: usize,
    /// Smallest linking length used when splitting the sample into
    /// components; below the sample spacing a connected set falls apart.
    pub link_floor: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { budget: 4, link_floor: 0.0 }
    }
}

/// Recursively shifted brick tiling. In the plane it is the running-bond
/// wall (order 2); in three dimensions consecutive layers carry shifted
/// walls (order 3).
struct Bricks {
    side: f64,
    grow: f64,
    shift: Vec<f64>,
    layer: Vec<Vec<f64>>,
}

impl Bricks {
    fn new(k: usize, side: f64, grow: f64, attempt: usize) -> Self {
        const PLASTIC: f64 = 0.754_877_666_246_692_8;
        const GOLDEN: f64 = 0.618_033_988_749_894_8;
        let shift = (0..k)
            .map(|j| side * (0.5 + (attempt + 1) as f64 * PLASTIC * (j + 1) as f64).fract())
            .collect();
        let layer = (0..k)
            .map(|j| match j {
                0 => vec![],
                1 => vec![0.5 * side],
                2 => vec![0.25 * side, 0.5 * side],
                _ => (0..j).map(|i| side * ((i + 1) as f64 * GOLDEN + j as f64 * PLASTIC).fract()).collect(),
            })
            .collect();
        Self { side, grow, shift, layer }
    }

    fn offsets(&self, n: &[i64]) -> Vec<f64> {
        let mut offs = self.shift.clone();
        for j in (0..n.len()).rev() {
            if n[j].rem_euclid(2) == 1 {
                for i in 0..j {
                    offs[i] += self.layer[j][i];
                }
            }
        }
        offs
    }

    fn locate(&self, x: &[f64]) -> Vec<i64> {
        let k = x.len();
        let mut offs = self.shift.clone();
        let mut n = vec![0i64; k];
        for j in (0..k).rev() {
            n[j] = ((x[j] - offs[j]) / self.side).floor() as i64;
            if n[j].rem_euclid(2) == 1 {
                for i in 0..j {
                    offs[i] += self.layer[j][i];
                }
            }
        }
        n
    }

    /// Enlarged open box of brick `n`.
    fn bounds(&self, n: &[i64]) -> (Vec<f64>, Vec<f64>) {
        let offs = self.offsets(n);
        let lo: Vec<f64> = offs.iter().zip(n).map(|(o, i)| o + *i as f64 * self.side - self.grow).collect();
        let hi = lo.iter().map(|l| l + self.side + 2.0 * self.grow).collect();
        (lo, hi)
    }
}

fn inside(lo: &[f64], hi: &[f64], x: &[f64]) -> bool {
    x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l < v && v < h)
}

/// Places the open box inside the input cover. A box that no single input
/// element contains is clipped to input boxes holding its samples, then split,
/// and finally replaced by small balls around the remaining samples.
#[allow(clippy::too_many_arguments)]
fn place_box(
    input: &Cover,
    index: &CoverIndex,
    lo: Vec<f64>,
    hi: Vec<f64>,
    members: &[usize],
    pts: &[Vec<f64>],
    depth: usize,
    grow: f64,
    out: &mut Vec<CoverElement>,
) {
    let mid: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let mut fits = false;
    index.for_each_containing(&mid, |u| fits |= input.elements[u].contains_box(&lo, &hi));
    if fits {
        out.push(CoverElement::cube(lo, hi));
        return;
    }
    let mut clips: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut rest = Vec::new();
    for &i in members {
        let mut clip = None;
        index.for_each_containing(&pts[i], |u| {
            if let (None, CoverElement::Box { lo: a, hi: b }) = (&clip, &input.elements[u]) {
                let cl: Vec<f64> = lo.iter().zip(a).map(|(x, y)| x.max(*y)).collect();
                let ch: Vec<f64> = hi.iter().zip(b).map(|(x, y)| x.min(*y)).collect();
                clip = Some((cl, ch));
            }
        });
        match clip {
            Some(c) if !clips.contains(&c) => clips.push(c),
            Some(_) => {}
            None => rest.push(i),
        }
    }
    for (a, b) in clips {
        out.push(CoverElement::cube(a, b));
    }
    if rest.is_empty() {
        return;
    }
    if depth == MAX_SPLIT_DEPTH {
        for &i in &rest {
            let p = &pts[i];
            let mut best = 0.0f64;
            index.for_each_containing(p, |u| best = best.max(input.elements[u].depth(p)));
            out.push(CoverElement::ball(p.clone(), (0.5 * best).min(grow)));
        }
        return;
    }
    let k = lo.len();
    let pad = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(f64::INFINITY, f64::min) * 0.01;
    for corner in 0..(1usize << k) {
        let (mut a, mut b) = (lo.clone(), hi.clone());
        for j in 0..k {
            if (corner >> j) & 1 == 0 {
                b[j] = mid[j] + pad;
            } else {
                a[j] = mid[j] - pad;
            }
        }
        let sub: Vec<usize> = rest.iter().copied().filter(|&i| inside(&a, &b, &pts[i])).collect();
        if !sub.is_empty() {
            place_box(input, index, a, b, &sub, pts, depth + 1, grow, out);
        }
    }
}

fn sup_diameter(points: &[Vec<f64>]) -> f64 {
    let (lo, hi) = bounding_box(points);
    lo.iter().zip(&hi).fold(0.0, |m, (l, h)| m.max(h - l))
}

/// One refinement attempt: components of the `link`-graph that are small and
/// sit deep inside an input element become neighbourhood pieces, everything
/// else is covered by shifted bricks.
fn attempt(
    input: &Cover,
    index: &CoverIndex,
    pts: &[Vec<f64>],
    comps: &[Vec<usize>],
    link: f64,
    opts: &RefineOptions,
    round: usize,
) -> Vec<CoverElement> {
    let scale = input.scale;
    let eta = link / 3.0;
    let mut out = Vec::new();
    let mut leftovers = Vec::new();
    for comp in comps {
        let members: Vec<Vec<f64>> = comp.iter().map(|&i| pts[i].clone()).collect();
        let mut placed = false;
        if sup_diameter(&members) <= 0.5 * scale {
            index.for_each_containing(&members[0], |u| {
                if !placed && members.iter().all(|p| input.elements[u].depth(p) >= eta) {
                    placed = true;
                }
            });
        }
        if placed {
            out.push(if members.len() == 1 {
                CoverElement::ball(members[0].clone(), eta)
            } else {
                CoverElement::neighborhood(members, eta)
            });
        } else {
            leftovers.extend_from_slice(comp);
        }
    }
    if leftovers.is_empty() {
        return out;
    }
    let k = pts[0].len();
    let side = BRICK_FRACTION * scale;
    // enlarged bricks of adjacent layers must not reach across the shortest
    // offset between their seams
    let cap = if k <= 2 { 0.2 } else { 0.1 } * side;
    let grow = (BRICK_GROW * side).max(0.5 * opts.link_floor).min(cap);
    let bricks = Bricks::new(k, side, grow, round);
    let mut members: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    let stencil = 3usize.pow(k as u32);
    for &i in &leftovers {
        let x = &pts[i];
        let mut seen: Vec<Vec<i64>> = Vec::new();
        for code in 0..stencil {
            let mut c = code;
            let probe: Vec<f64> = x
                .iter()
                .map(|v| {
                    let e = (c % 3) as f64 - 1.0;
                    c /= 3;
                    v + e * grow
                })
                .collect();
            let id = bricks.locate(&probe);
            if seen.contains(&id) {
                continue;
            }
            let (lo, hi) = bricks.bounds(&id);
            if inside(&lo, &hi, x) {
                members.entry(id.clone()).or_default().push(i);
            }
            seen.push(id);
        }
    }
    for (id, m) in members {
        let (lo, hi) = bricks.bounds(&id);
        place_box(input, index, lo, hi, &m, pts, 0, grow, &mut out);
    }
    out
}

pub(crate) fn refine_points(cover: &Cover, pts: &[Vec<f64>], opts: &RefineOptions) -> Result<(Cover, i64)> {
    let input_order = order_of(cover, pts)?;
    if pts.is_empty() {
        return Ok((cover.clone(), input_order));
    }
    let index = CoverIndex::new(cover);
    let mut best: Option<(Cover, i64)> = cover.at_scale().then(|| (cover.clone(), input_order));
    let mut cached: Option<(f64, Vec<Vec<usize>>)> = None;
    for round in 0..opts.budget.max(1) {
        let link = (cover.scale / 2f64.powi(3 + round as i32)).max(opts.link_floor);
        if cached.as_ref().is_none_or(|(l, _)| *l != link) {
            cached = Some((link, components(pts, link)));
        }
        let comps = &cached.as_ref().expect("just set").1;
        let elements = attempt(cover, &index, pts, comps, link, opts, round);
        let cand = Cover::new(elements, cover.scale)?;
        let order = order_of(&cand, pts)?;
        if best.as_ref().is_none_or(|(_, o)| order < *o) {
            best = Some((cand, order));
        }
    }
    Ok(best.expect("budget >= 1"))
}

/// Heuristic search for a low-order refinement at the cover's scale. Every
/// output element lies inside an input element. When the input is itself at
/// scale it competes as a candidate, so the result never has higher order.
pub fn refine_order(cover: &Cover, samples: &[StateVector], opts: &RefineOptions) -> Result<(Cover, i64)> {
    refine_points(cover, &coords(samples)?, opts)
}
