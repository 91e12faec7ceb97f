//! Continuous observables `h: X -> [0,1]`.
//!
//! Every variant is range-normalized by construction, so evaluation of a
//! valid spec at an in-domain state lands in `[0,1]`. Each variant also has a
//! computable Lipschitz constant with respect to the Euclidean metric of the
//! ambient coordinates; the sup-distance estimate uses it as an upper-bound pad.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{euclidean, StateVector};

/// Largest slope of the radial bump `(1 - t^2)^2` on `[0,1]`, attained at
/// `t = 1/sqrt(3)`.
const BUMP_SLOPE: f64 = 1.539_600_717_839_002; // 8 / (3 sqrt 3)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    /// Frequency vector `k`; the term is `cos_coef cos(2 pi k.x) + sin_coef sin(2 pi k.x)`.
    pub freq: Vec<f64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl TrigTerm {
    fn amplitude(&self) -> f64 {
        self.cos.hypot(self.sin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    Constant {
        value: f64,
    },
    /// `(x[index] - lo) / (hi - lo)`; undefined outside `[lo, hi]`.
    Coordinate {
        index: usize,
        lo: f64,
        hi: f64,
    },
    /// `(1 + s(x)/A) / 2` where `s` is the trigonometric sum and `A` the sum
    /// of the term amplitudes.
    TrigPolynomial {
        terms: Vec<TrigTerm>,
    },
    /// Radial-bump blend of anchor values. Where the bump weights sum to at
    /// least one the value is their normalized convex combination; where they
    /// sum to `W < 1` the missing mass `1 - W` goes to `base`.
    PiecewiseAnchor {
        anchors: Vec<Anchor>,
        radius: f64,
        base: f64,
    },
    /// `clamp(base(x) + scale * (bump(x) - center), 0, 1)`.
    Sum {
        base: Box<ObservableSpec>,
        bump: Box<ObservableSpec>,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl ObservableSpec {
    pub fn constant(value: f64) -> Self {
        ObservableSpec::Constant { value }
    }

    pub fn coordinate(index: usize, lo: f64, hi: f64) -> Self {
        ObservableSpec::Coordinate { index, lo, hi }
    }

    /// `(1 + cos(2 pi k.x)) / 2`.
    pub fn cosine(freq: Vec<f64>) -> Self {
        ObservableSpec::TrigPolynomial { terms: vec![TrigTerm { freq, cos: 1.0, sin: 0.0 }] }
    }

    /// Additive shift `clamp(base + bump)`.
    pub fn shifted(base: ObservableSpec, bump: ObservableSpec) -> Self {
        ObservableSpec::Sum { base: Box::new(base), bump: Box::new(bump), center: 0.0, scale: 1.0 }
    }

    /// Signed perturbation `clamp(base + scale * (bump - center))`.
    pub fn perturbed(base: ObservableSpec, bump: ObservableSpec, center: f64, scale: f64) -> Self {
        ObservableSpec::Sum { base: Box::new(base), bump: Box::new(bump), center, scale }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidObservable(msg));
        match self {
            ObservableSpec::Constant { value } => {
                if !unit(*value) {
                    return bad(format!("constant {value} outside [0,1]"));
                }
            }
            ObservableSpec::Coordinate { lo, hi, .. } => {
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return bad(format!("coordinate rescale needs finite lo < hi, got [{lo}, {hi}]"));
                }
            }
            ObservableSpec::TrigPolynomial { terms } => {
                let Some(first) = terms.first() else {
                    return bad("trig polynomial without terms".into());
                };
                for t in terms {
                    if t.freq.len() != first.freq.len() {
                        return bad("trig terms disagree on dimension".into());
                    }
                    if !(t.cos.is_finite() && t.sin.is_finite())
                        || t.freq.iter().any(|f| !f.is_finite())
                    {
                        return bad("non-finite trig coefficient".into());
                    }
                }
            }
            ObservableSpec::PiecewiseAnchor { anchors, radius, base } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("anchor radius must be positive, got {radius}"));
                }
                if !unit(*base) {
                    return bad(format!("anchor base {base} outside [0,1]"));
                }
                if let Some(first) = anchors.first() {
                    for a in anchors {
                        if a.point.len() != first.point.len() {
                            return bad("anchor points disagree on dimension".into());
                        }
                        if !unit(a.value) || a.point.iter().any(|c| !c.is_finite()) {
                            return bad(format!("anchor value {} outside [0,1]", a.value));
                        }
                    }
                }
            }
            ObservableSpec::Sum { base, bump, center, scale } => {
                if !(center.is_finite() && scale.is_finite()) {
                    return bad("non-finite sum parameters".into());
                }
                base.validate()?;
                bump.validate()?;
                if let (Some(a), Some(b)) = (base.fixed_dim(), bump.fixed_dim()) {
                    if a != b {
                        return bad(format!("sum of observables over {a} and {b} coordinates"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Ambient dimension fixed by the observable, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            ObservableSpec::Constant { .. } | ObservableSpec::Coordinate { .. } => None,
            ObservableSpec::TrigPolynomial { terms } => terms.first().map(|t| t.freq.len()),
            ObservableSpec::PiecewiseAnchor { anchors, .. } => anchors.first().map(|a| a.point.len()),
            ObservableSpec::Sum { base, bump, .. } => base.fixed_dim().or_else(|| bump.fixed_dim()),
        }
    }

    pub fn evaluate(&self, x: &StateVector) -> Result<f64> {
        self.eval(x.coords())
    }

    pub(crate) fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            ObservableSpec::Constant { value } => Ok(*value),
            ObservableSpec::Coordinate { index, lo, hi } => {
                let Some(&c) = x.get(*index) else {
                    return Err(Error::DimensionMismatch { expected: index + 1, found: x.len() });
                };
                let v = (c - lo) / (hi - lo);
                if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                    return Err(Error::ObservableDomain {
                        state: x.to_vec(),
                        reason: format!("coordinate {index} = {c} outside [{lo}, {hi}]"),
                    });
                }
                Ok(v.clamp(0.0, 1.0))
            }
            ObservableSpec::TrigPolynomial { terms } => {
                let dim = terms[0].freq.len();
                if x.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
                }
                let total: f64 = terms.iter().map(TrigTerm::amplitude).sum();
                if total == 0.0 {
                    return Ok(0.5);
                }
                let s: f64 = terms
                    .iter()
                    .map(|t| {
                        let (c, s) = unit_phase(t.freq.iter().zip(x).map(|(k, xi)| k * xi).sum());
                        t.cos * c + t.sin * s
                    })
                    .sum();
                // |s| <= total up to rounding
                Ok((0.5 * (1.0 + s / total)).clamp(0.0, 1.0))
            }
            ObservableSpec::PiecewiseAnchor { anchors, radius, base } => {
                if let Some(a) = anchors.first() {
                    if a.point.len() != x.len() {
                        return Err(Error::DimensionMismatch {
                            expected: a.point.len(),
                            found: x.len(),
                        });
                    }
                }
                let (mut weight, mut acc) = (0.0, 0.0);
                for a in anchors {
                    let w = bump(euclidean(&a.point, x) / radius);
                    if w > 0.0 {
                        weight += w;
                        acc += w * a.value;
                    }
                }
                let v = if weight >= 1.0 {
                    acc / weight
                } else {
                    acc + (1.0 - weight) * base
                };
                Ok(v.clamp(0.0, 1.0))
            }
            ObservableSpec::Sum { base, bump, center, scale } => {
                let v = base.eval(x)? + scale * (bump.eval(x)? - center);
                Ok(v.clamp(0.0, 1.0))
            }
        }
    }

    /// Lipschitz constant with respect to the Euclidean ambient metric.
    pub fn lipschitz(&self) -> f64 {
        match self {
            ObservableSpec::Constant { .. } => 0.0,
            ObservableSpec::Coordinate { lo, hi, .. } => 1.0 / (hi - lo),
            ObservableSpec::TrigPolynomial { terms } => {
                let total: f64 = terms.iter().map(TrigTerm::amplitude).sum();
                if total == 0.0 {
                    return 0.0;
                }
                let slope: f64 = terms
                    .iter()
                    .map(|t| t.amplitude() * t.freq.iter().map(|k| k * k).sum::<f64>().sqrt())
                    .sum();
                PI * slope / total
            }
            ObservableSpec::PiecewiseAnchor { anchors, radius, base } => {
                if anchors.is_empty() {
                    return 0.0;
                }
                let (lo, hi) = anchors
                    .iter()
                    .map(|a| a.value)
                    .fold((*base, *base), |(lo, hi), v| (lo.min(v), hi.max(v)));
                // Any point sees only anchors inside one ball of the radius,
                // which are pairwise closer than two radii.
                let crowd = anchors
                    .iter()
                    .map(|a| {
                        anchors
                            .iter()
                            .filter(|b| euclidean(&a.point, &b.point) < 2.0 * radius)
                            .count()
                    })
                    .max()
                    .unwrap_or(0);
                crowd as f64 * BUMP_SLOPE / radius * (hi - lo)
            }
            ObservableSpec::Sum { base, bump, scale, .. } => {
                base.lipschitz() + scale.abs() * bump.lipschitz()
            }
        }
    }
}

/// Compactly supported radial bump on `[0,1)`.
pub(crate) fn bump(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        let u = 1.0 - t * t;
        u * u
    }
}

/// `(cos 2 pi p, sin 2 pi p)` reduced by the reflection symmetry of the circle,
/// so reflected phases `p` and `1 - p` give bitwise mirrored results.
fn unit_phase(p: f64) -> (f64, f64) {
    let r = p - p.floor();
    if r <= 0.5 {
        let a = 2.0 * PI * r;
        (a.cos(), a.sin())
    } else {
        let a = 2.0 * PI * (1.0 - r);
        (a.cos(), -a.sin())
    }
}

pub fn evaluate(obs: &ObservableSpec, x: &StateVector) -> Result<f64> {
    obs.evaluate(x)
}

/// Sampled sup-distance between two observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupDistance {
    /// `max |a(x) - b(x)|` over the samples; a lower bound on the true sup-norm.
    pub value: f64,
    pub argmax: usize,
    /// `L_a + L_b`, the Lipschitz constant of `a - b`.
    pub lipschitz: f64,
}

impl SupDistance {
    /// Upper bound on the sup-norm over any set whose points all lie within
    /// `fill_radius` of some sample.
    pub fn upper_bound(&self, fill_radius: f64) -> f64 {
        self.value + self.lipschitz * fill_radius
    }
}

pub fn sup_distance(
    a: &ObservableSpec,
    b: &ObservableSpec,
    samples: &[StateVector],
) -> Result<SupDistance> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut best = SupDistance { value: 0.0, argmax: 0, lipschitz: a.lipschitz() + b.lipschitz() };
    for (i, x) in samples.iter().enumerate() {
        let gap = (a.evaluate(x)? - b.evaluate(x)?).abs();
        if gap > best.value {
            best.value = gap;
            best.argmax = i;
        }
    }
    Ok(best)
}
