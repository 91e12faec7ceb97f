use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{find_periodic, fixed_point_nullity, SystemSpec};

/// Seeds per axis below which detection is flagged as low confidence.
const SPARSE_SEEDS_PER_AXIS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicDimension {
    pub n: usize,
    /// Number of distinct periodic points of period `<= n` found.
    pub detected: usize,
    /// Dimension of the detected set: -1 if empty, 0 if every point is
    /// isolated, else the largest local solution-set dimension.
    pub detected_dimension: i64,
    /// `n / 2`.
    pub bound: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub ok: bool,
    pub d: usize,
    pub per_n: Vec<PeriodicDimension>,
    /// First `n` whose detected set is too large.
    pub witness: Option<usize>,
    pub seeds: usize,
    pub low_confidence: bool,
}

impl HypothesisReport {
    /// One line per `n`, e.g. `n=1: dim 1 ≥ 0.5`.
    pub fn lines(&self) -> Vec<String> {
        self.per_n
            .iter()
            .map(|p| {
                let rel = if p.passes { "<" } else { "≥" };
                format!("n={}: dim {} {} {}", p.n, p.detected_dimension, rel, p.bound)
            })
            .collect()
    }

    /// The witness line when the check fails, else a pass line.
    pub fn summary(&self) -> String {
        match self.witness {
            Some(n) => self.lines()[n - 1].clone(),
            None => format!("ok: dim(P_n) < n/2 for all n <= {}", 2 * self.d),
        }
    }
}

/// Checks `dim(P_n) < n/2` for `n = 1..=2d` on the periodic points found
/// from a grid of `n_seeds` seeds. Only the detected set is measured.
pub fn hypothesis_check(sys: &SystemSpec, d: usize, n_seeds: usize, tol: f64) -> Result<HypothesisReport> {
    sys.validate()?;
    if n_seeds == 0 {
        return Err(Error::InvalidArgument { name: "n_seeds", reason: "need at least one seed".into() });
    }
    let seeds = sys.grid(n_seeds);
    let per_axis = (seeds.len() as f64).powf(1.0 / sys.ambient_dim() as f64);
    let n_max = 2 * d;
    let found = if n_max == 0 { Vec::new() } else { find_periodic(sys, n_max, tol, &seeds)? };
    let nullity: Vec<usize> = found
        .iter()
        .map(|p| fixed_point_nullity(sys, &p.state, p.period))
        .collect::<Result<_>>()?;
    let per_n: Vec<PeriodicDimension> = (1..=n_max)
        .map(|n| {
            let members: Vec<usize> = (0..found.len()).filter(|&i| found[i].period <= n).collect();
            let detected_dimension = if members.is_empty() {
                -1
            } else {
                members.iter().map(|&i| nullity[i] as i64).max().unwrap_or(0)
            };
            let bound = n as f64 / 2.0;
            PeriodicDimension {
                n,
                detected: members.len(),
                detected_dimension,
                bound,
                passes: (detected_dimension as f64) < bound,
            }
        })
        .collect();
    let witness = per_n.iter().find(|p| !p.passes).map(|p| p.n);
    Ok(HypothesisReport {
        ok: witness.is_none(),
        d,
        per_n,
        witness,
        seeds: seeds.len(),
        low_confidence: per_axis < SPARSE_SEEDS_PER_AXIS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::GOLDEN_ROTATION;

    #[test]
    fn irrational_rotation_passes_empty() {
        let r = hypothesis_check(&SystemSpec::circle_rotation(GOLDEN_ROTATION), 1, 200, 1e-9).unwrap();
        assert!(r.ok);
        assert!(r.per_n.iter().all(|p| p.detected_dimension == -1));
    }

    #[test]
    fn identity_fails_at_one() {
        let r = hypothesis_check(&SystemSpec::identity(1), 1, 50, 1e-9).unwrap();
        assert!(!r.ok);
        assert_eq!(r.witness, Some(1));
        assert_eq!(r.summary(), "n=1: dim 1 ≥ 0.5");
    }

    #[test]
    fn d_zero_is_vacuous() {
        let r = hypothesis_check(&SystemSpec::identity(2), 0, 4, 1e-9).unwrap();
        assert!(r.ok && r.per_n.is_empty());
    }

    #[test]
    fn sparse_seeds_flagged() {
        let r = hypothesis_check(&SystemSpec::cat_map(), 1, 16, 1e-9).unwrap();
        assert!(r.low_confidence);
    }
}
