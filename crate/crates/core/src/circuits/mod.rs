//! Circuits, the single-qubit Clifford group, and experiment designs.
//!
//! A [`Circuit`] is an ordered list of gate labels; state preparation and
//! measurement are implicit. Its canonical text form joins the labels with
//! `;` (`"Gx;Gy;Gx"`), and the empty circuit is written `{}`.

mod clifford;
mod gst;
mod rb;

pub use clifford::{CliffordGroup, CLIFFORD_COUNT};
pub use gst::{default_fiducials, depth_ladder, GstDesign, GstEntry};
pub use rb::{rb_design, sample_rb_circuit, sample_rb_circuit_with, RbDesign};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Text form of the empty circuit.
pub const EMPTY_CIRCUIT: &str = "{}";

/// An ordered sequence of gate labels, applied left to right in time.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Circuit {
    layers: Vec<String>,
}

fn validate_label(label: &str) -> Result<()> {
    if label.is_empty()
        || label
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ';' | '{' | '}' | '"' | '\\'))
    {
        return Err(Error::Parse(format!("invalid gate label `{label}`")));
    }
    Ok(())
}

impl Circuit {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let layers: Vec<String> = labels.into_iter().map(Into::into).collect();
        for l in &layers {
            validate_label(l)?;
        }
        Ok(Self { layers })
    }

    /// Number of gate layers, d_C.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[String] {
        &self.layers
    }

    /// Occurrence count of `label`, n_g(C).
    pub fn count(&self, label: &str) -> usize {
        self.layers.iter().filter(|l| l.as_str() == label).count()
    }

    /// Occurrence counts of every label present.
    pub fn gate_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for l in &self.layers {
            *counts.entry(l.as_str()).or_insert(0) += 1;
        }
        counts
    }

    pub fn concat(&self, other: &Circuit) -> Circuit {
        let mut layers = self.layers.clone();
        layers.extend(other.layers.iter().cloned());
        Circuit { layers }
    }

    pub fn repeat(&self, k: usize) -> Circuit {
        let mut layers = Vec::with_capacity(self.layers.len() * k);
        for _ in 0..k {
            layers.extend(self.layers.iter().cloned());
        }
        Circuit { layers }
    }

    pub fn push(&mut self, label: impl Into<String>) -> Result<()> {
        let label = label.into();
        validate_label(&label)?;
        self.layers.push(label);
        Ok(())
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.layers.is_empty() {
            f.write_str(EMPTY_CIRCUIT)
        } else {
            f.write_str(&self.layers.join(";"))
        }
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == EMPTY_CIRCUIT {
            return Ok(Circuit::empty());
        }
        Circuit::new(s.split(';'))
    }
}

impl Serialize for Circuit {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
