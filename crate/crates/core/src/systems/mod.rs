//! Built-in injective dynamical systems and the flow sampling bound.

mod periodic;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{StateVector, Trajectory};

pub use periodic::{
    equilibrium_scan, find_periodic, fixed_point_nullity, minimal_period, periodic_return_scan,
    PeriodicPoint,
};

/// Relative slack allowed on the domain box test.
const DOMAIN_SLACK: f64 = 1e-9;

/// Default refinement tolerance for periodic points of maps.
pub const MAP_TOL: f64 = 1e-9;
/// Default refinement tolerance for periodic points of sampled flows.
pub const FLOW_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum VectorField {
    /// `x' = omega y, y' = -omega x`; every nonzero orbit has period `2 pi / omega`.
    Harmonic {
        #[serde(default = "unit_omega")]
        omega: f64,
    },
    Lorenz {
        #[serde(default = "lorenz_sigma")]
        sigma: f64,
        #[serde(default = "lorenz_rho")]
        rho: f64,
        #[serde(default = "lorenz_beta")]
        beta: f64,
    },
}

fn unit_omega() -> f64 {
    1.0
}
fn lorenz_sigma() -> f64 {
    10.0
}
fn lorenz_rho() -> f64 {
    28.0
}
fn lorenz_beta() -> f64 {
    8.0 / 3.0
}
fn henon_a() -> f64 {
    1.4
}
fn henon_b() -> f64 {
    0.3
}

impl VectorField {
    pub fn dim(&self) -> usize {
        match self {
            VectorField::Harmonic { .. } => 2,
            VectorField::Lorenz { .. } => 3,
        }
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            VectorField::Harmonic { omega } => {
                out[0] = omega * x[1];
                out[1] = -omega * x[0];
            }
            VectorField::Lorenz { sigma, rho, beta } => {
                out[0] = sigma * (x[1] - x[0]);
                out[1] = x[0] * (rho - x[2]) - x[1];
                out[2] = x[0] * x[1] - beta * x[2];
            }
        }
    }

    fn default_domain(&self) -> Vec<[f64; 2]> {
        match self {
            VectorField::Harmonic { .. } => vec![[-2.0, 2.0]; 2],
            VectorField::Lorenz { .. } => vec![[-30.0, 30.0], [-30.0, 30.0], [0.0, 60.0]],
        }
    }

    /// Lipschitz constant of the field over `domain` (Frobenius bound of the
    /// Jacobian for Lorenz, exact for the oscillator).
    fn lipschitz(&self, domain: &[[f64; 2]]) -> f64 {
        match *self {
            VectorField::Harmonic { omega } => omega.abs(),
            VectorField::Lorenz { sigma, rho, beta } => {
                let amax = |r: [f64; 2]| r[0].abs().max(r[1].abs());
                let (x, y) = (amax(domain[0]), amax(domain[1]));
                let rz = (rho - domain[2][0]).abs().max((rho - domain[2][1]).abs());
                (2.0 * sigma * sigma + rz * rz + 1.0 + 2.0 * x * x + y * y + beta * beta).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemKind {
    Henon {
        #[serde(default = "henon_a")]
        a: f64,
        #[serde(default = "henon_b")]
        b: f64,
    },
    /// Arnold's cat map on the unit torus.
    CatMap,
    CircleRotation {
        alpha: f64,
    },
    /// Adding machine on `digits` digits in `base`, least significant first;
    /// each digit is stored as `digit / (base - 1)`.
    Odometer {
        base: u32,
        digits: usize,
    },
    /// Time-`t` map of a flow, advanced by RK4 with substeps no longer than
    /// `max_substep`.
    SampledFlow {
        field: VectorField,
        t: f64,
        max_substep: f64,
    },
    Identity {
        dim: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(flatten)]
    pub kind: SystemKind,
    /// Per-coordinate `[lo, hi]`; the kind's default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
}

/// Golden-ratio conjugate, the customary irrational rotation number.
pub const GOLDEN_ROTATION: f64 = 0.618_033_988_749_894_8;

impl SystemSpec {
    pub fn new(kind: SystemKind) -> Self {
        Self { kind, domain: None }
    }

    pub fn henon(a: f64, b: f64) -> Self {
        Self::new(SystemKind::Henon { a, b })
    }

    pub fn cat_map() -> Self {
        Self::new(SystemKind::CatMap)
    }

    pub fn circle_rotation(alpha: f64) -> Self {
        Self::new(SystemKind::CircleRotation { alpha })
    }

    pub fn odometer(base: u32, digits: usize) -> Self {
        Self::new(SystemKind::Odometer { base, digits })
    }

    pub fn sampled_flow(field: VectorField, t: f64, max_substep: f64) -> Self {
        Self::new(SystemKind::SampledFlow { field, t, max_substep })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(SystemKind::Identity { dim })
    }

    pub fn with_domain(mut self, domain: Vec<[f64; 2]>) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSystem(m));
        match &self.kind {
            SystemKind::Henon { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return bad("non-finite Henon parameter".into());
                }
            }
            SystemKind::CatMap => {}
            SystemKind::CircleRotation { alpha } => {
                if !alpha.is_finite() {
                    return bad("non-finite rotation number".into());
                }
            }
            SystemKind::Odometer { base, digits } => {
                if *base < 2 || *digits == 0 {
                    return bad(format!("odometer needs base >= 2 and digits >= 1, got {base}, {digits}"));
                }
            }
            SystemKind::SampledFlow { t, max_substep, .. } => {
                if !(*t > 0.0 && *max_substep > 0.0 && t.is_finite() && max_substep.is_finite()) {
                    return bad(format!("flow step t={t} and substep {max_substep} must be positive"));
                }
            }
            SystemKind::Identity { dim } => {
                if *dim == 0 {
                    return bad("identity needs dim >= 1".into());
                }
            }
        }
        if let Some(d) = &self.domain {
            if d.len() != self.ambient_dim() {
                return bad(format!("domain has {} intervals for dimension {}", d.len(), self.ambient_dim()));
            }
            if d.iter().any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
                return bad("domain intervals need finite lo < hi".into());
            }
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.kind {
            SystemKind::Henon { .. } | SystemKind::CatMap => 2,
            SystemKind::CircleRotation { .. } => 1,
            SystemKind::Odometer { digits, .. } => *digits,
            SystemKind::SampledFlow { field, .. } => field.dim(),
            SystemKind::Identity { dim } => *dim,
        }
    }

    pub fn is_injective(&self) -> bool {
        match &self.kind {
            SystemKind::Henon { b, .. } => *b != 0.0,
            _ => true,
        }
    }

    /// Ground-truth covering dimension of the phase space, where known.
    pub fn known_dim(&self) -> Option<usize> {
        match &self.kind {
            SystemKind::Henon { .. } => None,
            SystemKind::CatMap => Some(2),
            SystemKind::CircleRotation { .. } => Some(1),
            SystemKind::Odometer { .. } => Some(0),
            SystemKind::SampledFlow { field: VectorField::Harmonic { .. }, .. } => Some(2),
            SystemKind::SampledFlow { .. } => None,
            SystemKind::Identity { dim } => Some(*dim),
        }
    }

    /// Lipschitz constant of the generating vector field, for flows.
    pub fn lipschitz(&self) -> Option<f64> {
        match &self.kind {
            SystemKind::SampledFlow { field, .. } => Some(field.lipschitz(&self.domain())),
            _ => None,
        }
    }

    /// Coordinates live on the unit torus.
    pub fn is_torus(&self) -> bool {
        matches!(self.kind, SystemKind::CatMap | SystemKind::CircleRotation { .. })
    }

    /// Finite state space where refinement by Newton makes no sense.
    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, SystemKind::Odometer { .. })
    }

    pub fn is_flow(&self) -> bool {
        matches!(self.kind, SystemKind::SampledFlow { .. })
    }

    /// Tolerance default for periodic-point refinement.
    pub fn default_tol(&self) -> f64 {
        if self.is_flow() {
            FLOW_TOL
        } else {
            MAP_TOL
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            SystemKind::Henon { a, b } => format!("henon(a={a},b={b})"),
            SystemKind::CatMap => "cat_map".into(),
            SystemKind::CircleRotation { alpha } => format!("circle_rotation(alpha={alpha})"),
            SystemKind::Odometer { base, digits } => format!("odometer(base={base},digits={digits})"),
            SystemKind::SampledFlow { field, t, .. } => match field {
                VectorField::Harmonic { omega } => format!("harmonic(omega={omega},t={t})"),
                VectorField::Lorenz { .. } => format!("lorenz(t={t})"),
            },
            SystemKind::Identity { dim } => format!("identity(dim={dim})"),
        }
    }

    pub fn domain(&self) -> Vec<[f64; 2]> {
        if let Some(d) = &self.domain {
            return d.clone();
        }
        match &self.kind {
            SystemKind::Henon { .. } => vec![[-1.5, 1.5], [-0.45, 0.45]],
            SystemKind::CatMap => vec![[0.0, 1.0]; 2],
            SystemKind::CircleRotation { .. } => vec![[0.0, 1.0]],
            SystemKind::Odometer { digits, .. } => vec![[0.0, 1.0]; *digits],
            SystemKind::SampledFlow { field, .. } => field.default_domain(),
            SystemKind::Identity { dim } => vec![[0.0, 1.0]; *dim],
        }
    }

    pub fn contains(&self, x: &StateVector) -> bool {
        x.dim() == self.ambient_dim()
            && self.domain().iter().zip(x.coords()).all(|([lo, hi], c)| {
                let slack = DOMAIN_SLACK * (hi - lo);
                *c >= lo - slack && *c <= hi + slack
            })
    }

    fn check_domain(&self, x: &StateVector) -> Result<()> {
        x.expect_dim(self.ambient_dim())?;
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { system: self.label(), state: x.coords().to_vec() })
        }
    }

    /// Metric on the phase space: Euclidean, or the flat metric on the torus.
    pub fn distance(&self, a: &StateVector, b: &StateVector) -> f64 {
        if self.is_torus() {
            a.coords()
                .iter()
                .zip(b.coords())
                .map(|(x, y)| {
                    let d = wrap_signed(x - y);
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        } else {
            a.dist(b)
        }
    }

    /// `a - b` in local coordinates (wrapped into `(-1/2, 1/2]` on the torus).
    pub(crate) fn difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .map(|(x, y)| if self.is_torus() { wrap_signed(x - y) } else { x - y })
            .collect()
    }

    pub(crate) fn normalize(&self, mut x: Vec<f64>) -> Vec<f64> {
        if self.is_torus() {
            for c in &mut x {
                *c = wrap_unit(*c);
            }
        }
        x
    }

    /// One application of the map.
    pub fn step(&self, x: &StateVector) -> Result<StateVector> {
        self.check_domain(x)?;
        let c = x.coords();
        let next = match &self.kind {
            SystemKind::Henon { a, b } => vec![1.0 - a * c[0] * c[0] + c[1], b * c[0]],
            SystemKind::CatMap => vec![wrap_unit(c[0] + c[1]), wrap_unit(c[0] + 2.0 * c[1])],
            SystemKind::CircleRotation { alpha } => vec![wrap_unit(c[0] + alpha)],
            SystemKind::Odometer { base, .. } => self.odometer_step(c, *base)?,
            SystemKind::SampledFlow { field, t, max_substep } => {
                let substeps = (t / max_substep).ceil().max(1.0) as usize;
                rk4(field, c, *t, substeps)
            }
            SystemKind::Identity { .. } => c.to_vec(),
        };
        StateVector::new(next).map_err(|_| Error::OutOfDomain {
            system: self.label(),
            state: c.to_vec(),
        })
    }

    fn odometer_step(&self, c: &[f64], base: u32) -> Result<Vec<f64>> {
        let top = (base - 1) as f64;
        let mut digits = Vec::with_capacity(c.len());
        for &v in c {
            let d = (v * top).round();
            if (v * top - d).abs() > 1e-6 {
                return Err(Error::OutOfDomain { system: self.label(), state: c.to_vec() });
            }
            digits.push(d as u32);
        }
        for d in digits.iter_mut() {
            if *d + 1 < base {
                *d += 1;
                break;
            }
            *d = 0;
        }
        Ok(digits.into_iter().map(|d| d as f64 / top).collect())
    }

    /// `T^n x` by repeated stepping.
    pub fn step_n(&self, x: &StateVector, n: usize) -> Result<StateVector> {
        let mut cur = x.clone();
        for _ in 0..n {
            cur = self.step(&cur)?;
        }
        Ok(cur)
    }

    /// Orbit segment of `n` states starting at `x0`.
    pub fn iterate(&self, x0: &StateVector, n: usize) -> Result<Trajectory> {
        if n == 0 {
            return Err(Error::InvalidArgument { name: "n", reason: "need n >= 1".into() });
        }
        self.check_domain(x0)?;
        let mut states = Vec::with_capacity(n);
        states.push(x0.clone());
        for i in 1..n {
            let next = self.step(&states[i - 1])?;
            states.push(next);
        }
        Trajectory::new(states, self.label())
    }

    /// Cell-centred grid over the domain box with at least `n` points
    /// (lattice states in order for the odometer).
    pub fn grid(&self, n: usize) -> Vec<StateVector> {
        if let SystemKind::Odometer { base, digits } = self.kind {
            let top = (base - 1) as f64;
            let total = (base as u128).saturating_pow(digits as u32).min(n as u128) as usize;
            return (0..total)
                .map(|mut i| {
                    let coords = (0..digits)
                        .map(|_| {
                            let d = i % base as usize;
                            i /= base as usize;
                            d as f64 / top
                        })
                        .collect();
                    StateVector::from_finite(coords)
                })
                .collect();
        }
        let domain = self.domain();
        let k = domain.len();
        let per = (n as f64).powf(1.0 / k as f64).ceil().max(1.0) as usize;
        let total = per.pow(k as u32);
        (0..total)
            .map(|mut idx| {
                let coords = domain
                    .iter()
                    .map(|[lo, hi]| {
                        let i = idx % per;
                        idx /= per;
                        lo + (hi - lo) * (i as f64 + 0.5) / per as f64
                    })
                    .collect();
                StateVector::from_finite(coords)
            })
            .collect()
    }

    /// Uniform random state of the domain box (uniform lattice state for the
    /// odometer).
    pub fn random_state(&self, rng: &mut impl Rng) -> StateVector {
        if let SystemKind::Odometer { base, digits } = self.kind {
            let top = (base - 1) as f64;
            return StateVector::from_finite(
                (0..digits).map(|_| rng.gen_range(0..base) as f64 / top).collect(),
            );
        }
        StateVector::from_finite(
            self.domain().iter().map(|[lo, hi]| rng.gen_range(*lo..*hi)).collect(),
        )
    }

    /// Independent points near the attractor: each sample is the endpoint of
    /// a separate orbit of `burn_in` steps from a random start. Starts whose
    /// orbits leave the domain are redrawn.
    pub fn attractor_samples(&self, count: usize, burn_in: usize, seed: u64) -> Result<Vec<StateVector>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start_box = self.start_box();
        let mut out = Vec::with_capacity(count);
        let mut failures = 0usize;
        while out.len() < count {
            let x0 = StateVector::from_finite(
                start_box.iter().map(|[lo, hi]| rng.gen_range(*lo..*hi)).collect(),
            );
            let x0 = if self.is_discrete() { self.random_state(&mut rng) } else { x0 };
            match self.step_n(&x0, burn_in) {
                Ok(x) if self.contains(&x) => out.push(x),
                _ => {
                    failures += 1;
                    if failures > 100 * count + 1000 {
                        return Err(Error::InvalidArgument {
                            name: "burn_in",
                            reason: format!("orbits keep leaving the domain of {}", self.label()),
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    fn start_box(&self) -> Vec<[f64; 2]> {
        match &self.kind {
            // inside the basin of the attractor
            SystemKind::Henon { .. } => vec![[-0.1, 0.1]; 2],
            SystemKind::SampledFlow { field: VectorField::Lorenz { .. }, .. } => {
                vec![[-5.0, 5.0], [-5.0, 5.0], [20.0, 30.0]]
            }
            _ => self.domain(),
        }
    }

    /// Default starting state for simulations.
    pub fn default_initial_state(&self) -> StateVector {
        match &self.kind {
            SystemKind::Henon { .. } => StateVector::from_finite(vec![0.0, 0.0]),
            SystemKind::SampledFlow { field: VectorField::Lorenz { .. }, .. } => {
                StateVector::from_finite(vec![1.0, 1.0, 25.0])
            }
            SystemKind::SampledFlow { .. } => StateVector::from_finite(vec![1.0, 0.0]),
            SystemKind::CircleRotation { .. } => StateVector::from_finite(vec![0.0]),
            SystemKind::CatMap => StateVector::from_finite(vec![0.1, 0.2]),
            _ => StateVector::from_finite(vec![0.0; self.ambient_dim()]),
        }
    }
}

pub fn step(sys: &SystemSpec, x: &StateVector) -> Result<StateVector> {
    sys.step(x)
}

pub fn iterate(sys: &SystemSpec, x0: &StateVector, n: usize) -> Result<Trajectory> {
    sys.iterate(x0, n)
}

/// Wrap into `[0, 1)`.
pub(crate) fn wrap_unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    // rem_euclid rounds tiny negatives up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Wrap into `(-1/2, 1/2]`.
pub(crate) fn wrap_signed(v: f64) -> f64 {
    let r = wrap_unit(v);
    if r > 0.5 {
        r - 1.0
    } else {
        r
    }
}

pub(crate) fn rk4(field: &VectorField, x: &[f64], t: f64, substeps: usize) -> Vec<f64> {
    let n = x.len();
    let h = t / substeps as f64;
    let mut y = x.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for _ in 0..substeps {
        field.eval(&y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        field.eval(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        field.eval(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        field.eval(&tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Largest sampling step `pi / (L d)` below which the time-`t` map of an
/// `L`-Lipschitz flow has no periodic points of order `<= 2d`.
pub fn yorke_threshold(lipschitz: f64, d: usize) -> Result<f64> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "L",
            reason: format!("Lipschitz constant must be positive, got {lipschitz}"),
        });
    }
    if d == 0 {
        return Err(Error::InvalidArgument { name: "d", reason: "need d >= 1".into() });
    }
    Ok(PI / (lipschitz * d as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YorkeCertificate {
    pub lipschitz: f64,
    pub d: usize,
    pub threshold: f64,
    pub step: f64,
    /// `step < threshold`: no non-stationary periodic points of order `<= 2d`.
    pub certified: bool,
    /// Stationary points of the field inside the domain; fixed by every
    /// time-`t` map and therefore period-1 points that the bound does not
    /// exclude.
    pub equilibria: Vec<StateVector>,
    /// Nullity of `DT - I` at each equilibrium; zero means isolated.
    pub equilibrium_nullity: Vec<usize>,
}

impl YorkeCertificate {
    /// Certified, with every equilibrium isolated: then `P_n` for
    /// `n <= 2d` is a finite set of stationary points.
    pub fn hypothesis_holds(&self) -> bool {
        self.certified && self.equilibrium_nullity.iter().all(|n| *n == 0)
    }
}

/// Certify a sampled flow against the sampling bound. `lipschitz` overrides
/// the field's own bound when given.
pub fn certify_sampling(
    sys: &SystemSpec,
    d: usize,
    lipschitz: Option<f64>,
    equilibrium_seeds: usize,
) -> Result<YorkeCertificate> {
    let SystemKind::SampledFlow { t, .. } = &sys.kind else {
        return Err(Error::InvalidSystem(format!("{} is not a sampled flow", sys.label())));
    };
    let l = match lipschitz {
        Some(l) => l,
        None => sys.lipschitz().expect("flows carry a Lipschitz bound"),
    };
    let threshold = yorke_threshold(l, d)?;
    let seeds = sys.grid(equilibrium_seeds.max(1));
    let equilibria = equilibrium_scan(sys, &seeds, FLOW_TOL)?;
    let equilibrium_nullity = equilibria.iter().map(|e| fixed_point_nullity(sys, e, 1)).collect::<Result<_>>()?;
    Ok(YorkeCertificate {
        lipschitz: l,
        d,
        threshold,
        step: *t,
        certified: *t < threshold,
        equilibria,
        equilibrium_nullity,
    })
}
