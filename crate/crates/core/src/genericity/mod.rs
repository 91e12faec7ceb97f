//! Pair sets bounded away from the diagonal, injectivity margins of the delay
//! map on them, and perturbations of observables that make the margin
//! positive.

mod hull;
mod perturb;

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delay::{delay_vector, max_gap};
use crate::error::{Error, Result};
use crate::observable::{ObservableSpec, TrigTerm};
use crate::state::StateVector;
use crate::systems::{minimal_period, PeriodicPoint, SystemSpec};

pub use hull::hull_distance;
pub use perturb::{perturb_to_compatible, perturb_with_options, BatchSummary, PerturbOptions, PerturbReport, Perturbation};

/// Margins at or below this value count as zero.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairClass {
    /// Both members aperiodic.
    C1,
    /// Both members periodic.
    C2,
    /// One periodic member.
    C3,
}

impl PairClass {
    pub fn of(x_periodic: bool, y_periodic: bool) -> Self {
        match (x_periodic, y_periodic) {
            (false, false) => PairClass::C1,
            (true, true) => PairClass::C2,
            _ => PairClass::C3,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            PairClass::C1 => "C1",
            PairClass::C2 => "C2",
            PairClass::C3 => "C3",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "C1" => Some(PairClass::C1),
            "C2" => Some(PairClass::C2),
            "C3" => Some(PairClass::C3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub x: StateVector,
    pub y: StateVector,
    pub class: PairClass,
}

/// Finite set of state pairs at separation at least `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub pairs: Vec<Pair>,
    pub delta: f64,
    /// Fewer pairs than requested could be realized.
    #[serde(default)]
    pub incomplete: bool,
}

impl PairSet {
    pub fn new(pairs: Vec<Pair>, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument { name: "delta", reason: format!("separation {delta} must be positive") });
        }
        Ok(Self { pairs, delta, incomplete: false })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks the separation invariant under the system's metric.
    pub fn check_separation(&self, sys: &SystemSpec) -> Result<()> {
        match self.pairs.iter().position(|p| sys.distance(&p.x, &p.y) < self.delta) {
            Some(i) => Err(Error::InvalidArgument {
                name: "pairs",
                reason: format!("pair {i} is closer than delta = {}", self.delta),
            }),
            None => Ok(()),
        }
    }

    /// CSV with columns `x0..x{k-1},y0..y{k-1},class`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let k = self.pairs.first().map_or(0, |p| p.x.dim());
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
        header.extend((0..k).map(|j| format!("y{j}")));
        header.push("class".into());
        w.write_record(&header)?;
        for p in &self.pairs {
            let mut row: Vec<String> = p.x.coords().iter().chain(p.y.coords()).map(|v| v.to_string()).collect();
            row.push(p.class.tag().into());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, delta: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let width = r.headers()?.len();
        if width < 3 || width % 2 == 0 {
            return Err(Error::Csv(format!("expected 2k coordinate columns plus class, found {width} columns")));
        }
        let k = (width - 1) / 2;
        let mut pairs = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let num = |j: usize| -> Result<f64> {
                rec[j].trim().parse().map_err(|_| Error::Csv(format!("row {}: bad number {:?}", line + 1, &rec[j])))
            };
            let x = StateVector::new((0..k).map(num).collect::<Result<_>>()?)?;
            let y = StateVector::new((k..2 * k).map(num).collect::<Result<_>>()?)?;
            let class = PairClass::parse(rec[2 * k].trim())
                .ok_or_else(|| Error::Csv(format!("row {}: bad class {:?}", line + 1, &rec[2 * k])))?;
            pairs.push(Pair { x, y, class });
        }
        PairSet::new(pairs, delta)
    }
}

/// Periodicity lookup used to tag pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodInfo {
    pub n_max: usize,
    pub tol: f64,
    /// Periodic points found beforehand, matched within `tol`.
    pub known: Vec<PeriodicPoint>,
}

impl PeriodInfo {
    /// Periods decided by direct return of each state.
    pub fn direct(n_max: usize, tol: f64) -> Self {
        Self { n_max, tol, known: Vec::new() }
    }

    pub fn from_detected(known: Vec<PeriodicPoint>, n_max: usize, tol: f64) -> Self {
        Self { n_max, tol, known }
    }

    pub fn period(&self, sys: &SystemSpec, x: &StateVector) -> Result<Option<usize>> {
        if let Some(p) = self.known.iter().find(|p| sys.distance(&p.state, x) <= self.tol) {
            return Ok(Some(p.period));
        }
        minimal_period(sys, x, self.n_max, self.tol)
    }
}

/// Uniformly drawn pairs of distinct samples at separation `>= delta`,
/// without repeats; `incomplete` is set when fewer than `count` exist or
/// could be found.
pub fn sample_pairs(
    samples: &[StateVector],
    delta: f64,
    count: usize,
    sys: &SystemSpec,
    info: &PeriodInfo,
    seed: u64,
) -> Result<PairSet> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument { name: "delta", reason: format!("separation {delta} must be positive") });
    }
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n * n.saturating_sub(1) / 2;
    let chosen: Vec<(usize, usize)> = if total <= 4 * count.max(1) {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| sys.distance(&samples[i], &samples[j]) >= delta)
            .collect();
        all.shuffle(&mut rng);
        all.truncate(count);
        all
    } else {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count && attempts < 100 * count + 1000 {
            attempts += 1;
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i == j || !seen.insert((i.min(j), i.max(j))) {
                continue;
            }
            if sys.distance(&samples[i], &samples[j]) >= delta {
                out.push((i, j));
            }
        }
        out
    };
    let periodic: Vec<Option<bool>> = {
        let mut memo = vec![None; n];
        for &(i, j) in &chosen {
            for k in [i, j] {
                if memo[k].is_none() {
                    memo[k] = Some(info.period(sys, &samples[k])?.is_some());
                }
            }
        }
        memo
    };
    let pairs: Vec<Pair> = chosen
        .iter()
        .map(|&(i, j)| Pair {
            x: samples[i].clone(),
            y: samples[j].clone(),
            class: PairClass::of(periodic[i] == Some(true), periodic[j] == Some(true)),
        })
        .collect();
    let incomplete = pairs.len() < count;
    Ok(PairSet { pairs, delta, incomplete })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    /// `min` over pairs of the largest delay-coordinate gap.
    pub margin: f64,
    /// First pair attaining the margin.
    pub argmin: usize,
    #[serde(skip)]
    pub gaps: Vec<f64>,
    pub m: usize,
    pub tolerance: f64,
}

impl CompatibilityReport {
    pub fn compatible(&self) -> bool {
        self.margin > self.tolerance
    }
}

/// Exact min-max margin of the length-`m` delay map over the pair set.
pub fn compatibility_margin(h: &ObservableSpec, sys: &SystemSpec, k: &PairSet, m: usize) -> Result<CompatibilityReport> {
    if k.is_empty() {
        return Err(Error::EmptyPairSet);
    }
    let gaps: Vec<f64> = k
        .pairs
        .par_iter()
        .map(|p| {
            let a = delay_vector(h, sys, &p.x, m)?;
            let b = delay_vector(h, sys, &p.y, m)?;
            Ok(max_gap(a.values(), b.values()))
        })
        .collect::<Result<_>>()?;
    let (argmin, margin) = gaps
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, g)| if *g < bv { (i, *g) } else { (bi, bv) });
    Ok(CompatibilityReport { margin, argmin, gaps, m, tolerance: DEFAULT_TOLERANCE })
}

/// Sup-distance below which every perturbation keeps a positive margin:
/// `margin / 3`.
pub fn openness_radius(report: &CompatibilityReport) -> Result<f64> {
    if report.margin > 0.0 {
        Ok(report.margin / 3.0)
    } else {
        Err(Error::ZeroMargin { argmin: report.argmin })
    }
}

/// Random trigonometric bump in `[0,1]` with integer frequencies `1..=5` in
/// absolute value.
pub fn random_trig_bump(dim: usize, rng: &mut impl Rng) -> ObservableSpec {
    let n_terms = rng.gen_range(1..=3);
    let terms = (0..n_terms)
        .map(|_| {
            let freq = (0..dim)
                .map(|_| {
                    let k = rng.gen_range(1..=5) as f64;
                    if rng.gen::<bool>() {
                        k
                    } else {
                        -k
                    }
                })
                .collect();
            TrigTerm { freq, cos: rng.gen_range(-1.0..1.0), sin: rng.gen_range(-1.0..1.0) }
        })
        .collect();
    ObservableSpec::TrigPolynomial { terms }
}

/// `h + amplitude * (bump - 1/2)` scaled so that the sup-distance to `h` is at
/// most `amplitude / 2`.
pub fn bumped(h: &ObservableSpec, bump: ObservableSpec, amplitude: f64) -> ObservableSpec {
    ObservableSpec::perturbed(h.clone(), bump, 0.5, amplitude)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub fraction: f64,
    pub compatible: usize,
    pub trials: usize,
    pub bump_scale: f64,
    pub tolerance: f64,
}

/// Fraction of random perturbations `h + bump`, `sup |bump| <= bump_scale`,
/// whose margin exceeds the tolerance. Trial `i` draws from its own stream.
pub fn genericity_monte_carlo(
    sys: &SystemSpec,
    k: &PairSet,
    m: usize,
    h: &ObservableSpec,
    trials: usize,
    bump_scale: f64,
    seed: u64,
) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument { name: "trials", reason: "need at least one trial".into() });
    }
    if !(bump_scale >= 0.0 && bump_scale.is_finite()) {
        return Err(Error::InvalidArgument { name: "bump_scale", reason: format!("{bump_scale} must be >= 0") });
    }
    let dim = sys.ambient_dim();
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let amp = 2.0 * bump_scale * rng.gen_range(0.5..=1.0);
            let f = bumped(h, random_trig_bump(dim, &mut rng), amp);
            Ok(compatibility_margin(&f, sys, k, m)?.compatible())
        })
        .collect::<Result<_>>()?;
    let compatible = hits.iter().filter(|b| **b).count();
    Ok(MonteCarloReport {
        fraction: compatible as f64 / trials as f64,
        compatible,
        trials,
        bump_scale,
        tolerance: DEFAULT_TOLERANCE,
    })
}
