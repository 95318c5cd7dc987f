//! Outcome probability vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A probability distribution over the (ordered) outcomes of one circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbDist(Vec<f64>);

impl ProbDist {
    /// Wraps a vector without checking normalization.
    pub fn new_unchecked(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    /// Validates nonnegativity and normalization (within `1e-9`).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput(format!(
                "distribution has negative or non-finite entries: {probs:?}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "distribution sums to {total}, not 1"
            )));
        }
        Ok(Self(probs))
    }

    /// Clips entries below zero and renormalizes. Returns the distribution
    /// and the most negative raw entry.
    pub fn clipped(raw: &[f64]) -> (Self, f64) {
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let mut probs: Vec<f64> = raw.iter().map(|p| p.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            probs.iter_mut().for_each(|p| *p /= total);
        } else {
            let n = probs.len() as f64;
            probs.iter_mut().for_each(|p| *p = 1.0 / n);
        }
        (Self(probs), min)
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
}

impl std::ops::Index<usize> for ProbDist {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for ProbDist {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
