//! Phase-space points and finite orbit segments.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the phase space, stored in ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(coords))
    }

    /// Caller guarantees finiteness.
    pub(crate) fn from_finite(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean distance in the ambient representation.
    pub fn dist(&self, other: &StateVector) -> f64 {
        euclidean(&self.0, &other.0)
    }

    pub fn sup_dist(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn expect_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found: self.dim() })
        }
    }
}

impl TryFrom<Vec<f64>> for StateVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        StateVector::new(v)
    }
}

impl From<StateVector> for Vec<f64> {
    fn from(s: StateVector) -> Self {
        s.0
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Forward orbit segment `x, Tx, ..., T^{n-1}x` of one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    states: Vec<StateVector>,
    system_id: String,
}

impl Trajectory {
    pub fn new(states: Vec<StateVector>, system_id: impl Into<String>) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::InvalidArgument {
                name: "states",
                reason: "a trajectory must be nonempty".into(),
            });
        };
        let dim = first.dim();
        for s in &states {
            s.expect_dim(dim)?;
        }
        Ok(Self { states, system_id: system_id.into() })
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn system_id(&self) -> &str {
        &self.system_id
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn into_states(self) -> Vec<StateVector> {
        self.states
    }

    /// CSV with header `x0,...,x{k-1}`, one row per state.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record((0..self.dim()).map(|j| format!("x{j}")))?;
        for s in &self.states {
            w.write_record(s.coords().iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Numeric CSV with a header row; every column is a coordinate.
    pub fn read_csv<R: Read>(input: R, system_id: impl Into<String>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let width = r.headers()?.len();
        let mut states = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != width {
                return Err(Error::Csv(format!("row {}: {} fields, expected {width}", line + 1, rec.len())));
            }
            let coords = rec
                .iter()
                .map(|f| f.trim().parse().map_err(|_| Error::Csv(format!("row {}: bad number {f:?}", line + 1))))
                .collect::<Result<Vec<f64>>>()?;
            states.push(StateVector::new(coords)?);
        }
        Self::new(states, system_id)
    }
}
