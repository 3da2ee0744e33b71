use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observation (δ, δX, Y). `x` is `Some` exactly when `delta` is true.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub delta: bool,
    pub x: Option<f64>,
    pub y: f64,
}

impl Record {
    pub fn complete(x: f64, y: f64) -> Self {
        Self { delta: true, x: Some(x), y }
    }

    pub fn missing(y: f64) -> Self {
        Self { delta: false, x: None, y }
    }
}

/// A sample with covariates missing at random; the response is always observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSample {
    records: Vec<Record>,
    n_complete: usize,
}

impl ObservedSample {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        let mut n_complete = 0;
        for (i, r) in records.iter().enumerate() {
            if r.delta != r.x.is_some() {
                return Err(Error::Precondition(format!(
                    "record {i}: covariate must be present exactly when delta = 1"
                )));
            }
            if !r.y.is_finite() || r.x.is_some_and(|x| !x.is_finite()) {
                return Err(Error::Precondition(format!("record {i}: non-finite value")));
            }
            n_complete += usize::from(r.delta);
        }
        if n_complete == 0 {
            return Err(Error::Precondition("sample has no complete cases".into()));
        }
        Ok(Self { records, n_complete })
    }

    /// Builds a sample from parallel columns; `x` entries for missing rows are ignored.
    pub fn from_columns(delta: &[bool], x: &[f64], y: &[f64]) -> Result<Self> {
        if delta.len() != x.len() || x.len() != y.len() {
            return Err(Error::Precondition("column lengths differ".into()));
        }
        let records = delta
            .iter()
            .zip(x)
            .zip(y)
            .map(|((&d, &xi), &yi)| if d { Record::complete(xi, yi) } else { Record::missing(yi) })
            .collect();
        Self::new(records)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    /// Δₙ, the number of complete cases.
    pub fn n_complete(&self) -> usize {
        self.n_complete
    }

    /// rₙ = Δₙ / n.
    pub fn r_n(&self) -> f64 {
        self.n_complete as f64 / self.n() as f64
    }

    pub fn y(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.y).collect()
    }

    pub fn delta(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.delta).collect()
    }

    /// (x, y) pairs of the complete cases in record order.
    pub fn complete_pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.records.iter().filter_map(|r| r.x.map(|x| (x, r.y)))
    }

    pub fn complete_x(&self) -> Vec<f64> {
        self.complete_pairs().map(|p| p.0).collect()
    }

    /// The complete cases alone, treated as a fully observed sample.
    pub fn complete_cases(&self) -> ObservedSample {
        let records: Vec<Record> = self.records.iter().copied().filter(|r| r.delta).collect();
        let n_complete = records.len();
        ObservedSample { records, n_complete }
    }
}
