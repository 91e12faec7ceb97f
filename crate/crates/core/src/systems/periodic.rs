//! Periodic-point detection by seeded Newton refinement of `T^p x = x`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SystemKind, SystemSpec};
use crate::error::{Error, Result};
use crate::state::StateVector;

const MAX_NEWTON_ITERS: usize = 50;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub state: StateVector,
    /// Minimal period at the working tolerance.
    pub period: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `T^p x - x` in local coordinates; `None` when the orbit leaves the domain.
fn return_residual(sys: &SystemSpec, x: &[f64], p: usize) -> Option<Vec<f64>> {
    let s = StateVector::new(x.to_vec()).ok()?;
    let y = sys.step_n(&s, p).ok()?;
    Some(sys.difference(y.coords(), x))
}

fn field_residual(sys: &SystemSpec, x: &[f64]) -> Option<Vec<f64>> {
    let SystemKind::SampledFlow { field, .. } = &sys.kind else {
        return None;
    };
    let mut out = vec![0.0; x.len()];
    field.eval(x, &mut out);
    out.iter().all(|v| v.is_finite()).then_some(out)
}

fn fd_jacobian(
    sys: &SystemSpec,
    x: &[f64],
    f: &impl Fn(&[f64]) -> Option<Vec<f64>>,
) -> Option<DMatrix<f64>> {
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[j] += FD_STEP;
        minus[j] -= FD_STEP;
        let fp = f(&sys.normalize(plus))?;
        let fm = f(&sys.normalize(minus))?;
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * FD_STEP);
        }
    }
    Some(jac)
}

/// Damped Newton on `f(x) = 0`; returns the final iterate and its residual norm.
fn newton(
    sys: &SystemSpec,
    seed: &[f64],
    target: f64,
    f: impl Fn(&[f64]) -> Option<Vec<f64>>,
) -> Option<(Vec<f64>, f64)> {
    let mut x = sys.normalize(seed.to_vec());
    let mut g = f(&x)?;
    let mut gn = inf_norm(&g);
    for _ in 0..MAX_NEWTON_ITERS {
        if gn <= target {
            break;
        }
        let jac = fd_jacobian(sys, &x, &f)?;
        let rhs = -DVector::from_vec(g.clone());
        let dx = jac.lu().solve(&rhs)?;
        if dx.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + lambda * d).collect();
            let cand = sys.normalize(cand);
            if let Some(gc) = f(&cand) {
                let gcn = inf_norm(&gc);
                if gcn < gn {
                    x = cand;
                    g = gc;
                    gn = gcn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Some((x, gn))
}

/// Least `q <= n_max` with `dist(T^q x, x) <= tol`, or `None`.
pub fn minimal_period(sys: &SystemSpec, x: &StateVector, n_max: usize, tol: f64) -> Result<Option<usize>> {
    let mut cur = x.clone();
    for q in 1..=n_max {
        cur = sys.step(&cur)?;
        if sys.distance(&cur, x) <= tol {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

fn refine_seed(sys: &SystemSpec, seed: &StateVector, n_max: usize, tol: f64) -> Vec<PeriodicPoint> {
    let mut found = Vec::new();
    for p in 1..=n_max {
        let candidate = if sys.is_discrete() {
            Some(seed.clone())
        } else {
            newton(sys, seed.coords(), tol * 1e-3, |x| return_residual(sys, x, p))
                .and_then(|(x, _)| StateVector::new(x).ok())
        };
        let Some(x) = candidate else { continue };
        if !sys.contains(&x) {
            continue;
        }
        if let Ok(Some(q)) = minimal_period(sys, &x, p, tol) {
            found.push(PeriodicPoint { state: x, period: q });
        }
    }
    found
}

fn lexicographic(a: &StateVector, b: &StateVector) -> std::cmp::Ordering {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn merge(sys: &SystemSpec, mut points: Vec<PeriodicPoint>, tol: f64) -> Vec<PeriodicPoint> {
    points.sort_by(|a, b| lexicographic(&a.state, &b.state).then(a.period.cmp(&b.period)));
    let mut kept: Vec<PeriodicPoint> = Vec::new();
    for p in points {
        if let Some(k) = kept.iter_mut().find(|k| sys.distance(&k.state, &p.state) <= tol) {
            k.period = k.period.min(p.period);
        } else {
            kept.push(p);
        }
    }
    kept
}

/// Periodic points of period `<= n_max` reachable from `seeds`, each with its
/// minimal period; duplicates within `tol` merged.
pub fn find_periodic(
    sys: &SystemSpec,
    n_max: usize,
    tol: f64,
    seeds: &[StateVector],
) -> Result<Vec<PeriodicPoint>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument { name: "n_max", reason: "need n_max >= 1".into() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument { name: "tol", reason: "need tol > 0".into() });
    }
    let found: Vec<PeriodicPoint> = seeds
        .par_iter()
        .map(|s| refine_seed(sys, s, n_max, tol))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(merge(sys, found, tol))
}

/// Direct scan without refinement: seeds that return within `tol` after at
/// most `k_max` steps.
pub fn periodic_return_scan(
    sys: &SystemSpec,
    seeds: &[StateVector],
    k_max: usize,
    tol: f64,
) -> Result<Vec<PeriodicPoint>> {
    let hits: Result<Vec<Option<PeriodicPoint>>> = seeds
        .par_iter()
        .map(|s| {
            Ok(minimal_period(sys, s, k_max, tol)?
                .map(|period| PeriodicPoint { state: s.clone(), period }))
        })
        .collect();
    Ok(hits?.into_iter().flatten().collect())
}

/// Zeros of a sampled flow's vector field inside the domain.
pub fn equilibrium_scan(sys: &SystemSpec, seeds: &[StateVector], tol: f64) -> Result<Vec<StateVector>> {
    if !sys.is_flow() {
        return Err(Error::InvalidSystem(format!("{} has no vector field", sys.label())));
    }
    let found: Vec<PeriodicPoint> = seeds
        .par_iter()
        .filter_map(|s| {
            let (x, r) = newton(sys, s.coords(), tol * 1e-3, |x| field_residual(sys, x))?;
            let x = StateVector::new(x).ok()?;
            (r <= tol && sys.contains(&x)).then_some(PeriodicPoint { state: x, period: 1 })
        })
        .collect();
    Ok(merge(sys, found, tol).into_iter().map(|p| p.state).collect())
}

/// Dimension of the kernel of `D(T^p) - I` at `x`: zero at isolated periodic
/// points, the local dimension of the solution set where it is a manifold.
pub fn fixed_point_nullity(sys: &SystemSpec, x: &StateVector, p: usize) -> Result<usize> {
    if sys.is_discrete() {
        return Ok(0);
    }
    let jac = fd_jacobian(sys, x.coords(), &|y| return_residual(sys, y, p)).ok_or_else(|| {
        Error::OutOfDomain { system: sys.label(), state: x.coords().to_vec() }
    })?;
    let sv = jac.singular_values();
    let scale = sv.iter().fold(1.0f64, |m, s| m.max(*s));
    Ok(sv.iter().filter(|s| **s < 1e-6 * scale).count())
}
