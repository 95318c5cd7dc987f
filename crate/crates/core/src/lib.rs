//! Wildcard error models: per-gate TVD budgets that reconcile an error model
//! with data it fails to describe, plus the simulation, fitting and
//! statistics machinery around them.

pub mod circuits;
pub mod data;
pub mod diamond;
pub mod dist;
pub mod error;
pub mod fit;
pub mod noise;
pub mod quantum;
pub mod scenarios;
pub mod serde_f64;
pub mod stats;
pub mod wildcard;

pub use circuits::Circuit;
pub use data::{DataSet, OutcomeCounts};
pub use dist::ProbDist;
pub use error::{Error, Result};
pub use noise::ErrorModel;
