//! The delay observation map `x -> (h(x), h(Tx), ..., h(T^{m-1}x))`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observable::ObservableSpec;
use crate::state::{StateVector, Trajectory};
use crate::systems::SystemSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayVector(Vec<f64>);

impl DelayVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument { name: "values", reason: "empty delay vector".into() });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument {
                name: "values",
                reason: format!("delay coordinate {v} outside [0,1]"),
            });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }

    /// Largest per-coordinate gap to `other`.
    pub fn max_gap(&self, other: &DelayVector) -> f64 {
        max_gap(&self.0, &other.0)
    }

    pub fn extend_periodically(&self, target: usize) -> DelayVector {
        PeriodicExtension { base: self.clone(), target }.extend()
    }
}

pub(crate) fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Repetition of a length-`t+1` delay vector out to `target` entries: entry
/// `k` is `base[k mod (t+1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicExtension {
    pub base: DelayVector,
    pub target: usize,
}

impl PeriodicExtension {
    pub fn extend(&self) -> DelayVector {
        let b = self.base.values();
        DelayVector((0..self.target).map(|k| b[k % b.len()]).collect())
    }
}

/// Theorem-backed delay count `2d + 1` for covering dimension `d`.
pub fn delay_count_for(d: i64) -> Result<usize> {
    if d < 0 {
        return Err(Error::InvalidArgument { name: "d", reason: format!("negative dimension {d}") });
    }
    Ok(2 * d as usize + 1)
}

pub fn delay_vector(h: &ObservableSpec, sys: &SystemSpec, x: &StateVector, m: usize) -> Result<DelayVector> {
    if m == 0 {
        return Err(Error::InvalidArgument { name: "m", reason: "need m >= 1".into() });
    }
    let traj = sys.iterate(x, m)?;
    let values = traj.states().iter().map(|s| h.evaluate(s)).collect::<Result<Vec<_>>>()?;
    Ok(DelayVector(values))
}

/// Sliding-window delay vectors along a trajectory: row `i` holds
/// `h(state i), ..., h(state i+m-1)`. Each state is evaluated once.
pub fn delay_matrix(h: &ObservableSpec, traj: &Trajectory, m: usize) -> Result<Vec<DelayVector>> {
    if m == 0 {
        return Err(Error::InvalidArgument { name: "m", reason: "need m >= 1".into() });
    }
    if traj.len() < m {
        return Err(Error::TrajectoryTooShort { len: traj.len(), m });
    }
    let series: Vec<f64> = traj
        .states()
        .par_iter()
        .map(|s| h.evaluate(s))
        .collect::<Result<_>>()?;
    Ok(series.windows(m).map(|w| DelayVector(w.to_vec())).collect())
}

/// CSV with header `k0,...,k{m-1}`, one row per delay vector.
pub fn write_delay_csv<W: Write>(rows: &[DelayVector], out: W) -> Result<()> {
    let m = rows.first().map_or(0, DelayVector::m);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record((0..m).map(|k| format!("k{k}")))?;
    for r in rows {
        w.write_record(r.values().iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::GOLDEN_ROTATION;
    use std::f64::consts::PI;

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn constant_observable_repeats() {
        let sys = SystemSpec::henon(1.4, 0.3);
        let v = delay_vector(&ObservableSpec::constant(0.3), &sys, &sv(&[0.1, 0.1]), 5).unwrap();
        assert_eq!(v.values(), &[0.3; 5]);
    }

    #[test]
    fn fixed_point_repeats() {
        let sys = SystemSpec::cat_map();
        let h = ObservableSpec::cosine(vec![1.0, 2.0]);
        let h0 = h.evaluate(&sv(&[0.0, 0.0])).unwrap();
        let v = delay_vector(&h, &sys, &sv(&[0.0, 0.0]), 5).unwrap();
        assert_eq!(v.values(), &[h0; 5]);
    }

    #[test]
    fn rotation_closed_form() {
        let a = GOLDEN_ROTATION;
        let sys = SystemSpec::circle_rotation(a);
        let h = ObservableSpec::cosine(vec![1.0]);
        let v = delay_vector(&h, &sys, &sv(&[0.0]), 3).unwrap();
        // direct evaluation oracle
        let expect = [1.0, (1.0 + (2.0 * PI * a).cos()) / 2.0, (1.0 + (4.0 * PI * a).cos()) / 2.0];
        for (got, want) in v.values().iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn delay_count() {
        assert_eq!(delay_count_for(0).unwrap(), 1);
        assert_eq!(delay_count_for(1).unwrap(), 3);
        assert_eq!(delay_count_for(2).unwrap(), 5);
        assert!(delay_count_for(-1).is_err());
    }

    #[test]
    fn matrix_shape_and_errors() {
        let sys = SystemSpec::circle_rotation(0.1);
        let traj = sys.iterate(&sv(&[0.0]), 4).unwrap();
        let h = ObservableSpec::cosine(vec![1.0]);
        assert_eq!(delay_matrix(&h, &traj, 4).unwrap().len(), 1);
        assert!(matches!(
            delay_matrix(&h, &traj, 5),
            Err(Error::TrajectoryTooShort { len: 4, m: 5 })
        ));
        let rows = delay_matrix(&ObservableSpec::constant(0.2), &traj, 2).unwrap();
        assert!(rows.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn periodic_extension() {
        let base = DelayVector::new(vec![0.1, 0.2]).unwrap();
        assert_eq!(base.extend_periodically(5).values(), &[0.1, 0.2, 0.1, 0.2, 0.1]);
        assert_eq!(base.extend_periodically(2), base);
    }

    #[test]
    fn csv_layout() {
        let rows = vec![DelayVector::new(vec![0.5, 1.0]).unwrap(), DelayVector::new(vec![0.25, 0.0]).unwrap()];
        let mut buf = Vec::new();
        write_delay_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k0,k1\n0.5,1\n0.25,0\n");
    }
}
