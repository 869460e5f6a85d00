//! JSON form of a solved design.
//!
//! ```json
//! {"n": 100, "m": 4, "phi": -21.3, "certificate": 1.0000004, "status": "CONVERGED",
//!  "support": [{"index": 0, "weight": 0.25, "point": [..]}, ..], "iterations": 13}
//! ```
//!
//! Only nonzero weights are stored; `index` is zero-based into the space.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{DesignResult, SupportPoint, TerminationStatus};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub n: usize,
    pub m: usize,
    pub phi: f64,
    pub certificate: f64,
    pub status: TerminationStatus,
    pub support: Vec<SupportPoint>,
    pub iterations: usize,
}

/// The minimal shape accepted when reading weights back: `n` plus `(index, weight)` pairs.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct WeightsDocument {
    pub n: usize,
    pub support: Vec<WeightEntry>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct WeightEntry {
    pub index: usize,
    pub weight: f64,
}

impl ResultDocument {
    pub fn from_result(result: &DesignResult, m: usize) -> Self {
        Self {
            n: result.weights.len(),
            m,
            phi: result.log_det,
            certificate: result.certificate,
            status: result.status(),
            support: result.support.clone(),
            iterations: result.iterations(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}

impl WeightsDocument {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Dense weight vector of length `n`.
    pub fn dense(&self) -> Result<Vec<f64>> {
        let mut w = vec![0.0; self.n];
        for e in &self.support {
            let slot = w.get_mut(e.index).ok_or_else(|| {
                Error::InvalidWeights(format!("index {} out of range for n = {}", e.index, self.n))
            })?;
            *slot += e.weight;
        }
        Ok(w)
    }
}
