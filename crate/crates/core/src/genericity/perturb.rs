use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hull::hull_distance;
use super::{compatibility_margin, Pair, PairSet, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::observable::{sup_distance, Anchor, ObservableSpec};
use crate::spatial::{components, nearest_neighbor_distances};
use crate::state::StateVector;
use crate::systems::{minimal_period, SystemSpec};
use crate::topology::{refine_points, Cover, CoverIndex, RefineOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbOptions {
    /// Margin that counts as separated.
    pub tolerance: f64,
    /// General-position retries per batch.
    pub max_rounds: usize,
    /// Covers are searched from scale `delta / (2 sqrt k)` down to
    /// `delta / scale_floor_ratio`.
    pub scale_floor_ratio: f64,
    /// Anchor noise amplitude as a fraction of the batch budget.
    pub noise_fraction: f64,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOLERANCE, max_rounds: 64, scale_floor_ratio: 64.0, noise_fraction: 0.45 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSummary {
    /// Orbit segment length minus one.
    pub t: usize,
    pub scale: f64,
    pub order: i64,
    pub elements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub base_points: usize,
    /// Sup-norm allowance of this batch.
    pub budget: f64,
    pub rounds: usize,
    pub covers: Vec<CoverSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbReport {
    pub margin: f64,
    /// Largest change on the orbit points of the pair set.
    pub sup_distance: f64,
    pub epsilon: f64,
    pub m: usize,
    pub base_points: usize,
    pub nodes: usize,
    /// Pairs whose two orbit segments share points; separated directly on
    /// the realized values instead of by disjoint constructions.
    pub overlapping_pairs: Vec<usize>,
    pub batches: Vec<BatchSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub observable: ObservableSpec,
    pub report: PerturbReport,
}

/// Orbit segments of the distinct pair members, merged into shared nodes.
struct Orbits {
    bases: Vec<StateVector>,
    /// `(x, y)` base indices per pair.
    pairs: Vec<(usize, usize)>,
    /// Segment length minus one per base.
    t: Vec<usize>,
    /// Node index of `T^k z`, `k = 0..=t`.
    node_of: Vec<Vec<usize>>,
    nodes: Vec<Vec<f64>>,
}

impl Orbits {
    fn build(k: &PairSet, sys: &SystemSpec, d: usize, tol: f64) -> Result<Self> {
        let m = 2 * d + 1;
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut bases = Vec::new();
        let mut id = |s: &StateVector, bases: &mut Vec<StateVector>| -> usize {
            let key: Vec<u64> = s.coords().iter().map(|v| v.to_bits()).collect();
            *index.entry(key).or_insert_with(|| {
                bases.push(s.clone());
                bases.len() - 1
            })
        };
        let pairs: Vec<(usize, usize)> = k.pairs.iter().map(|p| (id(&p.x, &mut bases), id(&p.y, &mut bases))).collect();
        let segments: Vec<(usize, Vec<StateVector>)> = bases
            .par_iter()
            .map(|z| {
                let t = match minimal_period(sys, z, m, tol)? {
                    Some(p) => (p - 1).min(2 * d),
                    None => 2 * d,
                };
                Ok((t, sys.iterate(z, t + 1)?.into_states()))
            })
            .collect::<Result<_>>()?;
        let mut flat: Vec<Vec<f64>> = Vec::new();
        let mut owner: Vec<(usize, usize)> = Vec::new();
        for (zi, (_, seg)) in segments.iter().enumerate() {
            for (kk, s) in seg.iter().enumerate() {
                flat.push(s.coords().to_vec());
                owner.push((zi, kk));
            }
        }
        let groups = components(&flat, tol);
        let mut node_of: Vec<Vec<usize>> = segments.iter().map(|(t, _)| vec![0; t + 1]).collect();
        let mut nodes = Vec::with_capacity(groups.len());
        for (n, g) in groups.iter().enumerate() {
            nodes.push(flat[g[0]].clone());
            for &i in g {
                let (zi, kk) = owner[i];
                node_of[zi][kk] = n;
            }
        }
        Ok(Self { bases, pairs, t: segments.iter().map(|(t, _)| *t).collect(), node_of, nodes })
    }

    fn node_set(&self, z: usize) -> HashSet<usize> {
        self.node_of[z].iter().copied().collect()
    }

    /// Delay vector of base `z` read off node values, periodic beyond `t`.
    fn realized(&self, z: usize, values: &[f64], m: usize) -> Vec<f64> {
        let seg = &self.node_of[z];
        (0..m).map(|k| values[seg[k % seg.len()]]).collect()
    }
}

/// Greedy first-fit split of the bases into groups with pairwise disjoint
/// orbit nodes.
fn batches(orbits: &Orbits) -> Vec<Vec<usize>> {
    let mut used: Vec<HashSet<usize>> = Vec::new();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for z in 0..orbits.bases.len() {
        let mine = orbits.node_set(z);
        match used.iter().position(|u| u.is_disjoint(&mine)) {
            Some(b) => {
                used[b].extend(&mine);
                out[b].push(z);
            }
            None => {
                used.push(mine);
                out.push(vec![z]);
            }
        }
    }
    out
}

/// Cover of one group of bases sharing a segment length, with its partition
/// of unity and anchor target vectors.
struct GroupCover {
    t: usize,
    members: Vec<usize>,
    /// `(element, weight)` per member.
    weights: Vec<Vec<(usize, f64)>>,
    targets: Vec<Vec<f64>>,
    summary: CoverSummary,
}

#[allow(clippy::too_many_arguments)]
fn cover_group(
    orbits: &Orbits,
    members: Vec<usize>,
    t: usize,
    values: &[f64],
    budget: f64,
    delta: f64,
    opts: &PerturbOptions,
) -> Result<GroupCover> {
    let pts: Vec<Vec<f64>> = members.iter().map(|&z| orbits.bases[z].coords().to_vec()).collect();
    let states: Vec<StateVector> = members.iter().map(|&z| orbits.bases[z].clone()).collect();
    let k = pts[0].len();
    let bound = (t + 1) as f64 / 2.0;
    let floor = delta / opts.scale_floor_ratio;
    let mut scale = delta / (2.0 * (k as f64).sqrt());
    let mut best_order = i64::MAX;
    let mut oscillation_failed = false;
    while scale >= floor * (1.0 - 1e-12) {
        let mesh = Cover::mesh(&states, scale, None)?;
        let (cover, order) = refine_points(&mesh, &pts, &RefineOptions::default())?;
        best_order = best_order.min(order);
        if (order as f64) < bound {
            let idx = CoverIndex::new(&cover);
            let mut weights = Vec::with_capacity(pts.len());
            let mut in_elem: Vec<Vec<usize>> = vec![Vec::new(); cover.len()];
            let mut depth_of: HashMap<(usize, usize), f64> = HashMap::new();
            for (i, p) in pts.iter().enumerate() {
                let mut w = Vec::new();
                idx.for_each_containing(p, |e| {
                    let dp = cover.elements[e].depth(p);
                    if dp > 0.0 {
                        w.push((e, dp));
                    }
                });
                w.sort_by_key(|(e, _)| *e);
                let total: f64 = w.iter().map(|(_, v)| v).sum();
                for (e, dp) in &w {
                    in_elem[*e].push(i);
                    depth_of.insert((*e, i), *dp);
                }
                weights.push(w.into_iter().map(|(e, v)| (e, v / total)).collect::<Vec<_>>());
            }
            let seg = |z: usize, kk: usize| values[orbits.node_of[z][kk]];
            let mut targets = vec![Vec::new(); cover.len()];
            let mut osc = 0.0f64;
            for (e, mem) in in_elem.iter().enumerate() {
                let Some(&q) = mem.iter().max_by(|a, b| depth_of[&(e, **a)].total_cmp(&depth_of[&(e, **b)]).then(b.cmp(a)))
                else {
                    continue;
                };
                let qz = members[q];
                targets[e] = (0..=t).map(|kk| seg(qz, kk)).collect();
                for &i in mem {
                    for kk in 0..=t {
                        osc = osc.max((seg(members[i], kk) - targets[e][kk]).abs());
                    }
                }
            }
            if osc < budget / 2.0 {
                let summary = CoverSummary { t, scale, order, elements: cover.len() };
                return Ok(GroupCover { t, members, weights, targets, summary });
            }
            oscillation_failed = true;
        }
        scale /= 2.0;
    }
    if oscillation_failed {
        Err(Error::OscillationBound { n: t + 1, bound: budget / 2.0 })
    } else {
        Err(Error::CoverOrderBound { n: t + 1, order: best_order, bound })
    }
}

fn extend(v: &[f64], m: usize) -> Vec<f64> {
    (0..m).map(|k| v[k % v.len()]).collect()
}

/// Perturbs `h` by less than `eps` so that the length-`(2d+1)` delay map
/// separates every pair of `k`, with the default options.
pub fn perturb_to_compatible(
    h: &ObservableSpec,
    eps: f64,
    k: &PairSet,
    sys: &SystemSpec,
    d: usize,
    seed: u64,
) -> Result<Perturbation> {
    perturb_with_options(h, eps, k, sys, d, seed, &PerturbOptions::default())
}

/// Bases are processed in batches with disjoint orbit nodes. In each batch a
/// cover of every segment-length group meeting the order bound
/// `ord < (t+1)/2` carries anchor target vectors; these are moved by random
/// noise into general position (certified by convex-hull distance), blended
/// by the partition of unity, and written onto the orbit nodes as one layer
/// of anchor bumps. Each batch stays within a third of the margin already
/// achieved, so earlier pairs remain separated. The result is re-verified.
#[allow(clippy::too_many_arguments)]
pub fn perturb_with_options(
    h: &ObservableSpec,
    eps: f64,
    k: &PairSet,
    sys: &SystemSpec,
    d: usize,
    seed: u64,
    opts: &PerturbOptions,
) -> Result<Perturbation> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument { name: "eps", reason: format!("{eps} must be positive") });
    }
    if k.is_empty() {
        return Err(Error::EmptyPairSet);
    }
    h.validate()?;
    sys.validate()?;
    let m = 2 * d + 1;
    let tol = sys.default_tol();
    let orbits = Orbits::build(k, sys, d, tol)?;
    let overlapping: Vec<usize> = orbits
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, (x, y))| !orbits.node_set(*x).is_disjoint(&orbits.node_set(*y)))
        .map(|(i, _)| i)
        .collect();
    let nn = nearest_neighbor_distances(&orbits.nodes).into_iter().fold(f64::INFINITY, f64::min);
    let radius = (0.45 * nn).min(k.delta / 4.0);
    let threshold = 10.0 * opts.tolerance * (m as f64).sqrt();

    let mut f = h.clone();
    let mut spent = 0.0;
    let mut processed = vec![false; orbits.bases.len()];
    let mut summaries = Vec::new();
    for (b, members) in batches(&orbits).into_iter().enumerate() {
        let completed: Vec<Pair> = orbits
            .pairs
            .iter()
            .zip(&k.pairs)
            .filter(|((x, y), _)| processed[*x] && processed[*y])
            .map(|(_, p)| p.clone())
            .collect();
        let mu = if completed.is_empty() {
            f64::INFINITY
        } else {
            compatibility_margin(&f, sys, &PairSet { pairs: completed, delta: k.delta, incomplete: false }, m)?.margin
        };
        let budget = ((eps - spent) / 2.0).min(mu / 3.0).min(0.49);
        if !(budget > 0.0) {
            return Err(Error::VerificationFailed(format!("no perturbation budget left at batch {b}")));
        }
        let values: Vec<f64> = orbits.nodes.par_iter().map(|p| f.eval(p)).collect::<Result<_>>()?;
        let mut by_t: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &z in &members {
            by_t.entry(orbits.t[z]).or_default().push(z);
        }
        let groups: Vec<GroupCover> = by_t
            .into_iter()
            .map(|(t, zs)| cover_group(&orbits, zs, t, &values, budget, k.delta, opts))
            .collect::<Result<_>>()?;
        let in_batch: HashSet<usize> = members.iter().copied().collect();
        let touched: Vec<(usize, usize)> = orbits
            .pairs
            .iter()
            .copied()
            .filter(|(x, y)| {
                (in_batch.contains(x) || in_batch.contains(y))
                    && (processed[*x] || in_batch.contains(x))
                    && (processed[*y] || in_batch.contains(y))
            })
            .collect();
        let noise = opts.noise_fraction * budget;
        let mut committed = None;
        for round in 0..opts.max_rounds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((b as u64) << 32) | round as u64);
            let anchors: Vec<Vec<Vec<f64>>> = groups
                .iter()
                .map(|g| {
                    g.targets
                        .iter()
                        .map(|v| v.iter().map(|x| (x + rng.gen_range(-noise..=noise)).clamp(0.0, 1.0)).collect())
                        .collect()
                })
                .collect();
            let mut offsets: BTreeMap<usize, f64> = BTreeMap::new();
            let mut sides: HashMap<usize, Vec<Vec<f64>>> = HashMap::new();
            for (g, gc) in groups.iter().enumerate() {
                for (i, &z) in gc.members.iter().enumerate() {
                    let mut fz = vec![0.0; gc.t + 1];
                    for (e, w) in &gc.weights[i] {
                        for (acc, v) in fz.iter_mut().zip(&anchors[g][*e]) {
                            *acc += w * v;
                        }
                    }
                    for (kk, v) in fz.iter().enumerate() {
                        let node = orbits.node_of[z][kk];
                        offsets.insert(node, v - values[node]);
                    }
                    sides.insert(z, gc.weights[i].iter().map(|(e, _)| extend(&anchors[g][*e], m)).collect());
                }
            }
            if offsets.values().any(|o| o.abs() >= budget) {
                continue;
            }
            let mut next = values.clone();
            for (n, o) in &offsets {
                next[*n] += o;
            }
            let side = |z: usize| -> Vec<Vec<f64>> {
                match sides.get(&z) {
                    Some(s) => s.clone(),
                    None => vec![orbits.realized(z, &next, m)],
                }
            };
            let separated = touched.par_iter().all(|&(x, y)| {
                let direct = {
                    let (a, b) = (orbits.realized(x, &next, m), orbits.realized(y, &next, m));
                    a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
                };
                direct > threshold && hull_distance(&side(x), &side(y)) > threshold
            });
            if separated {
                committed = Some((round, offsets));
                break;
            }
        }
        let Some((round, offsets)) = committed else {
            return Err(Error::GeneralPositionExhausted { batch: b, rounds: opts.max_rounds });
        };
        let layer: Vec<Anchor> = offsets
            .iter()
            .map(|(n, o)| Anchor { point: orbits.nodes[*n].clone(), value: 0.5 + o })
            .collect();
        spent += offsets.values().fold(0.0f64, |a, o| a.max(o.abs()));
        f = ObservableSpec::perturbed(
            f,
            ObservableSpec::PiecewiseAnchor { anchors: layer, radius, base: 0.5 },
            0.5,
            1.0,
        );
        for &z in &members {
            processed[z] = true;
        }
        summaries.push(BatchSummary {
            base_points: members.len(),
            budget,
            rounds: round + 1,
            covers: groups.into_iter().map(|g| g.summary).collect(),
        });
    }

    let report = compatibility_margin(&f, sys, k, m)?;
    if !(report.margin > opts.tolerance) {
        return Err(Error::VerificationFailed(format!(
            "margin {} at pair {} not above {}",
            report.margin, report.argmin, opts.tolerance
        )));
    }
    let orbit_points: Vec<StateVector> = orbits
        .bases
        .iter()
        .map(|z| Ok(sys.iterate(z, m)?.into_states()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let sup = sup_distance(&f, h, &orbit_points)?.value;
    if !(sup < eps) {
        return Err(Error::VerificationFailed(format!("sup-distance {sup} not below {eps}")));
    }
    Ok(Perturbation {
        observable: f,
        report: PerturbReport {
            margin: report.margin,
            sup_distance: sup,
            epsilon: eps,
            m,
            base_points: orbits.bases.len(),
            nodes: orbits.nodes.len(),
            overlapping_pairs: overlapping,
            batches: summaries,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genericity::{sample_pairs, PairClass, PeriodInfo};

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_pair_from_constant() {
        let sys = SystemSpec::circle_rotation(crate::systems::GOLDEN_ROTATION);
        let k = PairSet::new(vec![Pair { x: sv(&[0.1]), y: sv(&[0.5]), class: PairClass::C1 }], 0.1).unwrap();
        let h = ObservableSpec::constant(0.5);
        let p = perturb_to_compatible(&h, 0.1, &k, &sys, 1, 3).unwrap();
        let fx = p.observable.evaluate(&sv(&[0.1])).unwrap();
        let fy = p.observable.evaluate(&sv(&[0.5])).unwrap();
        assert!(p.report.sup_distance < 0.1);
        assert!(p.report.margin > 1e-6);
        assert!(fx != fy || p.report.margin > 0.0);
    }

    #[test]
    fn cat_map_fixed_point_partner() {
        let sys = SystemSpec::cat_map();
        let k = PairSet::new(
            vec![Pair { x: sv(&[0.3, 0.15]), y: sv(&[0.0, 0.0]), class: PairClass::C3 }],
            0.1,
        )
        .unwrap();
        let p = perturb_to_compatible(&ObservableSpec::constant(0.5), 0.05, &k, &sys, 1, 1).unwrap();
        // the fixed point's delay vector is constant; the partner's is not
        let dy = crate::delay::delay_vector(&p.observable, &sys, &sv(&[0.0, 0.0]), 3).unwrap();
        assert!(dy.values().windows(2).all(|w| w[0] == w[1]));
        let dx = crate::delay::delay_vector(&p.observable, &sys, &sv(&[0.3, 0.15]), 3).unwrap();
        assert!(dx.values().iter().any(|v| (v - dy.values()[0]).abs() > 1e-6));
        assert_eq!(p.report.batches[0].covers.iter().find(|c| c.t == 0).unwrap().order, 0);
    }

    #[test]
    fn overlapping_orbits_are_reported_and_separated() {
        let sys = SystemSpec::henon(1.4, 0.3);
        let x = sys.attractor_samples(1, 200, 5).unwrap().remove(0);
        let y = sys.step(&x).unwrap();
        let k = PairSet::new(vec![Pair { x, y, class: PairClass::C1 }], 1e-3).unwrap();
        let p = perturb_to_compatible(&ObservableSpec::constant(0.5), 0.05, &k, &sys, 1, 2).unwrap();
        assert_eq!(p.report.overlapping_pairs, vec![0]);
        assert_eq!(p.report.batches.len(), 2);
        assert!(p.report.margin > 1e-6);
    }

    #[test]
    fn identity_dense_fixed_points_fail() {
        let sys = SystemSpec::identity(1);
        let s: Vec<StateVector> = (0..=2000).map(|i| sv(&[i as f64 / 2000.0])).collect();
        let k = sample_pairs(&s, 0.05, 50, &sys, &PeriodInfo::direct(3, 1e-9), 1).unwrap();
        // a fixed-point chain denser than the cover floor cannot be separated
        let mut dense = k.clone();
        dense.pairs.extend(s.windows(2).map(|w| Pair { x: w[0].clone(), y: w[1].clone(), class: PairClass::C2 }));
        dense.delta = 0.05;
        let err = perturb_to_compatible(&ObservableSpec::constant(0.5), 0.05, &dense, &sys, 1, 1).unwrap_err();
        assert!(
            matches!(err, Error::CoverOrderBound { n: 1, .. } | Error::GeneralPositionExhausted { batch: 0, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let sys = SystemSpec::henon(1.4, 0.3);
        let s = sys.attractor_samples(60, 100, 1).unwrap();
        let k = sample_pairs(&s, 1e-2, 30, &sys, &PeriodInfo::direct(3, 1e-9), 1).unwrap();
        let a = perturb_to_compatible(&ObservableSpec::constant(0.5), 0.05, &k, &sys, 1, 7).unwrap();
        let b = perturb_to_compatible(&ObservableSpec::constant(0.5), 0.05, &k, &sys, 1, 7).unwrap();
        assert_eq!(a, b);
    }
}
