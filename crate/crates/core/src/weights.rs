use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accepted deviation of `sum(w)` from one for caller-supplied weights.
/// Accepted vectors are renormalized on construction.
pub const INPUT_SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over the candidate points.
///
/// Entries are nonnegative and sum to one. A candidate is a support point
/// iff its weight is strictly positive; weights removed by an exchange are
/// stored as literal zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignWeights(Vec<f64>);

impl DesignWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some(i) = w.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "entry {i} is {} (must be finite and nonnegative)",
                w[i]
            )));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > INPUT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        Ok(Self::normalized(w))
    }

    /// Uniform weights `1/n` on every candidate.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Uniform weights over `support`, zero elsewhere.
    pub fn uniform_on(n: usize, support: &[usize]) -> Self {
        let mut w = vec![0.0; n];
        let mass = 1.0 / support.len() as f64;
        for &i in support {
            w[i] = mass;
        }
        Self(w)
    }

    /// Divides by the sum. The caller guarantees finite nonnegative entries with positive sum.
    pub(crate) fn normalized(mut w: Vec<f64>) -> Self {
        let total: f64 = w.iter().sum();
        if total != 1.0 {
            w.iter_mut().for_each(|v| *v /= total);
        }
        Self(w)
    }

    /// Wraps entries the caller has already normalized.
    pub(crate) fn from_normalized(w: Vec<f64>) -> Self {
        Self(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn is_support(&self, i: usize) -> bool {
        self.0[i] > 0.0
    }

    /// Indices with strictly positive weight, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.support_iter().collect()
    }

    pub fn support_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|w| **w > 0.0).count()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &DesignWeights) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl AsRef<[f64]> for DesignWeights {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
