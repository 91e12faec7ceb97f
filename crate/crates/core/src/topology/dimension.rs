use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cover::{coords, Cover};
use super::refine::{refine_points, RefineOptions};
use crate::error::{Error, Result};
use crate::spatial::{bounding_box, nearest_neighbor_distances};
use crate::state::StateVector;

/// A scale is usable for the covering estimate only if it exceeds this many
/// link floors.
const SCALE_PER_LINK_FLOOR: f64 = 8.0;
const MIN_BOX_SCALES: usize = 3;
const MIN_BOX_DECADES: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionMethod {
    BoxCounting,
    CoveringHeuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub method: DimensionMethod,
    pub value: f64,
    /// Scales that entered the estimate, in the order given.
    pub scales: Vec<f64>,
    /// Occupied boxes per scale, or achieved cover order per scale.
    pub counts: Vec<i64>,
    /// RMS residual of the log-log fit; zero for covering estimates.
    pub residual: f64,
    pub heuristic: bool,
    /// Scales rejected as finer than the sample resolves.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<f64>,
    /// All counts equal, so the slope carries no information.
    #[serde(default)]
    pub degenerate: bool,
}

/// `count` scales `largest, largest/2, largest/4, ...`.
pub fn geometric_scales(largest: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| largest / 2f64.powi(i as i32)).collect()
}

fn check_descending(scales: &[f64]) -> Result<()> {
    if scales.len() < 2 {
        return Err(Error::InsufficientScales(format!("need at least 2 scales, got {}", scales.len())));
    }
    if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InsufficientScales("scales must be positive and finite".into()));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InsufficientScales("scales must be strictly descending".into()));
    }
    Ok(())
}

fn distinct(pts: &[Vec<f64>]) -> usize {
    let set: HashSet<Vec<u64>> = pts.iter().map(|p| p.iter().map(|v| v.to_bits()).collect()).collect();
    set.len()
}

/// Largest minimal cover order over the usable scales: per scale a mesh cover
/// is refined by component splitting and shifted bricks. The result is an
/// upper bound for the order reachable at each scale, hence heuristic.
pub fn covering_dimension_estimate(samples: &[StateVector], scales: &[f64]) -> Result<DimensionEstimate> {
    check_descending(scales)?;
    let pts = coords(samples)?;
    let mut est = DimensionEstimate {
        method: DimensionMethod::CoveringHeuristic,
        value: -1.0,
        scales: Vec::new(),
        counts: Vec::new(),
        residual: 0.0,
        heuristic: true,
        dropped: Vec::new(),
        degenerate: false,
    };
    match distinct(&pts) {
        0 => return Ok(est),
        1 => {
            est.value = 0.0;
            est.scales = scales.to_vec();
            est.counts = vec![0; scales.len()];
            return Ok(est);
        }
        _ => {}
    }
    let link_floor = 2.0 * nearest_neighbor_distances(&pts).into_iter().filter(|d| d.is_finite()).fold(0.0, f64::max);
    let (kept, dropped): (Vec<f64>, Vec<f64>) =
        scales.iter().partition(|s| **s >= SCALE_PER_LINK_FLOOR * link_floor);
    if kept.is_empty() {
        return Err(Error::InsufficientSamples);
    }
    let opts = RefineOptions { budget: 4, link_floor };
    let orders: Vec<i64> = kept
        .par_iter()
        .map(|&s| {
            let mesh = Cover::mesh(samples, s, None)?;
            Ok(refine_points(&mesh, &pts, &opts)?.1)
        })
        .collect::<Result<_>>()?;
    est.value = *orders.iter().max().expect("nonempty") as f64;
    est.scales = kept;
    est.counts = orders;
    est.dropped = dropped;
    Ok(est)
}

/// Least-squares slope of `ln N(eps)` against `ln(1/eps)`, with the grid
/// anchored at the sample's lower corner.
pub fn box_counting(samples: &[StateVector], scales: &[f64]) -> Result<DimensionEstimate> {
    let pts = coords(samples)?;
    let anchor = bounding_box(&pts).0;
    box_counting_points(&pts, scales, &anchor)
}

/// As [`box_counting`] with an explicit grid anchor.
pub fn box_counting_anchored(samples: &[StateVector], scales: &[f64], anchor: &[f64]) -> Result<DimensionEstimate> {
    let pts = coords(samples)?;
    if let Some(p) = pts.first() {
        if p.len() != anchor.len() {
            return Err(Error::DimensionMismatch { expected: p.len(), found: anchor.len() });
        }
    }
    box_counting_points(&pts, scales, anchor)
}

fn box_counting_points(pts: &[Vec<f64>], scales: &[f64], anchor: &[f64]) -> Result<DimensionEstimate> {
    if scales.len() < MIN_BOX_SCALES {
        return Err(Error::InsufficientScales(format!(
            "need at least {MIN_BOX_SCALES} scales, got {}",
            scales.len()
        )));
    }
    if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InsufficientScales("scales must be positive and finite".into()));
    }
    let (lo, hi) = scales.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| (a.min(*s), b.max(*s)));
    if (hi / lo).log10() < MIN_BOX_DECADES - 1e-12 {
        return Err(Error::InsufficientScales(format!(
            "scales span {:.3} decades, need {MIN_BOX_DECADES}",
            (hi / lo).log10()
        )));
    }
    if pts.is_empty() {
        return Err(Error::EmptySamples);
    }
    let counts: Vec<i64> = scales
        .par_iter()
        .map(|&eps| {
            let cells: HashSet<Vec<i64>> = pts
                .iter()
                .map(|p| p.iter().zip(anchor).map(|(v, a)| ((v - a) / eps).floor() as i64).collect())
                .collect();
            cells.len() as i64
        })
        .collect();
    let xs: Vec<f64> = scales.iter().map(|s| (1.0 / s).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|n| (*n as f64).ln()).collect();
    let degenerate = counts.windows(2).all(|w| w[0] == w[1]);
    let (value, residual) = if degenerate { (0.0, 0.0) } else { fit(&xs, &ys) };
    Ok(DimensionEstimate {
        method: DimensionMethod::BoxCounting,
        value,
        scales: scales.to_vec(),
        counts,
        residual,
        heuristic: false,
        dropped: Vec::new(),
        degenerate,
    })
}

/// Slope and RMS residual of the least-squares line.
fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    (slope, (ss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_point() {
        let s = vec![sv(&[0.3, 0.3])];
        let b = box_counting(&s, &geometric_scales(0.5, 6)).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.degenerate);
        let c = covering_dimension_estimate(&s, &[0.5, 0.25]).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(c.heuristic);
    }

    #[test]
    fn empty_set_is_minus_one() {
        assert_eq!(covering_dimension_estimate(&[], &[0.5, 0.25]).unwrap().value, -1.0);
    }

    #[test]
    fn scale_checks() {
        let s = vec![sv(&[0.0])];
        assert!(covering_dimension_estimate(&s, &[0.5]).is_err());
        assert!(covering_dimension_estimate(&s, &[0.25, 0.5]).is_err());
        assert!(box_counting(&s, &[0.5, 0.25]).is_err());
        assert!(box_counting(&s, &[0.5, 0.25, 0.1]).is_err());
    }

    #[test]
    fn exact_line_slope() {
        // ln N = 1 + 2 ln(1/eps) exactly
        let xs = [0.0, 1.0, 2.0];
        let ys = [1.0, 3.0, 5.0];
        let (s, r) = fit(&xs, &ys);
        assert!((s - 2.0).abs() < 1e-14 && r < 1e-14);
    }

    #[test]
    fn uniform_interval_covering_one() {
        let s: Vec<StateVector> = (0..2000).map(|i| sv(&[i as f64 / 1999.0])).collect();
        let c = covering_dimension_estimate(&s, &[0.5, 0.25, 0.1]).unwrap();
        assert_eq!(c.value, 1.0);
    }

    #[test]
    fn json_field_names() {
        let s: Vec<StateVector> = (0..100).map(|i| sv(&[i as f64 / 99.0])).collect();
        let b = box_counting(&s, &geometric_scales(0.5, 6)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&b).unwrap();
        for key in ["method", "value", "scales", "counts", "residual", "heuristic"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["method"], "box_counting");
    }
}
