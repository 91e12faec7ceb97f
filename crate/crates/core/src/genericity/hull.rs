use nalgebra::{DMatrix, DVector};

/// Above this many difference vectors the face enumeration is replaced by a
/// Frank-Wolfe separating-hyperplane bound.
const MAX_ENUMERATED: usize = 16;
const FW_ITERS: usize = 2000;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Norm of the closest point to the origin in the affine hull of `pts`,
/// when that point lies in the relative interior of their convex hull.
fn affine_min_norm(pts: &[&Vec<f64>]) -> Option<f64> {
    let n = pts.len();
    let mut kkt = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = dot(pts[i], pts[j]);
        }
        kkt[(i, n)] = 1.0;
        kkt[(n, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    let lambda: Vec<f64> = sol.iter().take(n).copied().collect();
    if lambda.iter().any(|l| !l.is_finite() || *l < -1e-12) {
        return None;
    }
    let k = pts[0].len();
    let p: Vec<f64> = (0..k).map(|c| pts.iter().zip(&lambda).map(|(v, l)| l * v[c]).sum()).collect();
    Some(dot(&p, &p).sqrt())
}

/// Lower bound on the distance from the origin to `conv(d)`: each iterate
/// `x` certifies `min_i <x, d_i> / |x|`.
fn frank_wolfe_bound(d: &[Vec<f64>]) -> f64 {
    let mut x = d[0].clone();
    let mut best = 0.0f64;
    for _ in 0..FW_ITERS {
        let xn = dot(&x, &x).sqrt();
        if xn == 0.0 {
            return 0.0;
        }
        let (s, smin) = d
            .iter()
            .map(|v| (v, dot(&x, v)))
            .fold((&d[0], f64::INFINITY), |(bv, bs), (v, s)| if s < bs { (v, s) } else { (bv, bs) });
        best = best.max(smin / xn);
        let dir: Vec<f64> = s.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dd = dot(&dir, &dir);
        if dd == 0.0 {
            break;
        }
        let step = (-dot(&x, &dir) / dd).clamp(0.0, 1.0);
        if step == 0.0 {
            break;
        }
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi += step * di;
        }
    }
    best.max(0.0)
}

/// Euclidean distance between `conv(a)` and `conv(b)`. Exact for up to 16
/// difference vectors (minimum over faces of the difference polytope),
/// otherwise a certified lower bound.
pub fn hull_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let diffs: Vec<Vec<f64>> = a
        .iter()
        .flat_map(|p| b.iter().map(move |q| p.iter().zip(q).map(|(x, y)| x - y).collect()))
        .collect();
    if diffs.len() > MAX_ENUMERATED {
        return frank_wolfe_bound(&diffs);
    }
    let k = diffs[0].len();
    let n = diffs.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size > k + 1 {
            continue;
        }
        let face: Vec<&Vec<f64>> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &diffs[i]).collect();
        if let Some(v) = affine_min_norm(&face) {
            best = best.min(v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_to_segment() {
        let a = vec![vec![0.0, 1.0]];
        let b = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        assert!((hull_distance(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_segments_touch() {
        let a = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        let b = vec![vec![0.0, -1.0], vec![0.0, 1.0]];
        assert!(hull_distance(&a, &b) < 1e-12);
    }

    #[test]
    fn skew_segments_in_space() {
        let a = vec![vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        let b = vec![vec![0.0, -1.0, 0.5], vec![0.0, 1.0, 0.5]];
        assert!((hull_distance(&a, &b) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn segment_endpoint_nearest() {
        let a = vec![vec![2.0, 1.0], vec![3.0, 1.0]];
        let b = vec![vec![0.0, 0.0]];
        assert!((hull_distance(&a, &b) - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bound_is_below_exact() {
        let a: Vec<Vec<f64>> = (0..4).map(|i| vec![1.0 + i as f64 * 0.1, (i as f64).sin()]).collect();
        let b: Vec<Vec<f64>> = (0..4).map(|i| vec![-(i as f64) * 0.2, (i as f64).cos()]).collect();
        let diffs: Vec<Vec<f64>> =
            a.iter().flat_map(|p| b.iter().map(move |q| vec![p[0] - q[0], p[1] - q[1]])).collect();
        let lower = frank_wolfe_bound(&diffs);
        let exact = hull_distance(&a, &b);
        assert!(lower <= exact + 1e-12);
        assert!(lower > 0.9 * exact);
    }
}
