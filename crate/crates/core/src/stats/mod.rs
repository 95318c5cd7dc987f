//! Distances, likelihood-ratio statistics and the two-branch consistency
//! test between predicted distributions (or TVD balls around them) and data.

mod ball;
mod chi2;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ball::{
    min_llr_binary, min_llr_in_ball, min_llr_kkt, min_llr_slope, min_tvd_budget, BallOptimum,
    BUDGET_TOL,
};
pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf, gamma_p, gamma_q, ln_gamma};

use crate::circuits::Circuit;
use crate::data::DataSet;
use crate::dist::ProbDist;
use crate::error::{Error, Result};
use crate::noise::ErrorModel;

/// Default significance level; each branch of the test runs at `1 − α/2`.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// `½ Σ |p_k − q_k|` over equal-length slices.
pub fn tvd_slices(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Total variation distance between two distributions over the same outcomes.
pub fn tvd(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::OutcomeMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(tvd_slices(p.as_slice(), q.as_slice()).min(1.0))
}

/// `2N Σ f_k ln(f_k/q_k)` with `0 ln 0 = 0`; `+∞` when some `q_k = 0 < f_k`.
pub fn llr_value(f: &[f64], q: &[f64], n: f64) -> f64 {
    let mut s = 0.0;
    for (&fk, &qk) in f.iter().zip(q) {
        if fk > 0.0 {
            if qk <= 0.0 {
                return f64::INFINITY;
            }
            s += fk * (fk / qk).ln();
        }
    }
    // Rounding can push a true zero slightly negative.
    (2.0 * n * s).max(0.0)
}

/// Log-likelihood-ratio statistic of frequencies against a prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlrStat {
    pub lambda: f64,
    pub dof: usize,
}

impl LlrStat {
    /// True when the prediction assigns zero probability to an observed outcome.
    pub fn is_infinite(&self) -> bool {
        self.lambda.is_infinite()
    }
}

pub fn llr(f: &ProbDist, q: &ProbDist, n: f64) -> Result<LlrStat> {
    if f.len() != q.len() {
        return Err(Error::OutcomeMismatch {
            left: f.len(),
            right: q.len(),
        });
    }
    Ok(LlrStat {
        lambda: llr_value(f.as_slice(), q.as_slice(), n),
        dof: f.len().saturating_sub(1),
    })
}

/// A circuit's observed frequencies next to its predicted distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitData {
    pub circuit: Circuit,
    pub shots: f64,
    pub f: Vec<f64>,
    pub p: Vec<f64>,
}

impl CircuitData {
    pub fn outcomes(&self) -> usize {
        self.f.len()
    }

    pub fn tvd(&self) -> f64 {
        tvd_slices(&self.f, &self.p)
    }

    pub fn llr(&self) -> f64 {
        llr_value(&self.f, &self.p, self.shots)
    }

    /// `λ*` for a ball of radius `t` (clamped to `[0, 1]`).
    pub fn min_llr(&self, t: f64) -> f64 {
        min_llr_in_ball(&self.f, &self.p, t.clamp(0.0, 1.0), self.shots)
    }
}

/// Pairs every dataset record with `predict(circuit)`, ordering outcomes by
/// `labels`.
pub fn align_with<F>(data: &DataSet, labels: &[String], predict: F) -> Result<Vec<CircuitData>>
where
    F: Fn(&Circuit) -> Result<ProbDist> + Sync,
{
    data.records()
        .par_iter()
        .map(|rec| {
            let counts = data.counts_for(rec, labels)?;
            let n: u64 = counts.iter().sum();
            if n == 0 {
                return Err(Error::NoCounts);
            }
            let p = predict(&rec.circuit)?;
            if p.len() != labels.len() {
                return Err(Error::OutcomeMismatch {
                    left: p.len(),
                    right: labels.len(),
                });
            }
            Ok(CircuitData {
                circuit: rec.circuit.clone(),
                shots: n as f64,
                f: counts.iter().map(|&c| c as f64 / n as f64).collect(),
                p: p.into_vec(),
            })
        })
        .collect()
}

/// Pairs every dataset record with the model's prediction.
pub fn align(model: &ErrorModel, data: &DataSet) -> Result<Vec<CircuitData>> {
    let labels = model.outcome_labels();
    align_with(data, &labels, |c| {
        model
            .predict(c)
            .map_err(|e| match e {
                Error::UnknownGate(g) => {
                    Error::MissingPrediction(format!("{c} (unknown gate `{g}`)"))
                }
                other => other,
            })
    })
}

/// Acceptance thresholds for both branches of the consistency test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub alpha: f64,
    /// Per-circuit thresholds with the Bonferroni correction over `|S|`.
    pub per_circuit: Vec<f64>,
    /// Threshold on the summed statistic.
    pub aggregate: f64,
}

impl Thresholds {
    /// `χ²(m_C−1)` quantile at `1 − (α/2)/|S|` per circuit and
    /// `χ²(Σ(m_C−1))` at `1 − α/2` for the sum.
    pub fn new(dofs: &[usize], alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::OutOfRange {
                what: "alpha",
                value: alpha,
                range: "(0, 1)",
            });
        }
        let s = dofs.len().max(1) as f64;
        let per_conf = 1.0 - 0.5 * alpha / s;
        let mut cache: Vec<(usize, f64)> = Vec::new();
        let mut per_circuit = Vec::with_capacity(dofs.len());
        for &k in dofs {
            let thr = match cache.iter().find(|(d, _)| *d == k) {
                Some(&(_, v)) => v,
                None => {
                    let v = if k == 0 { 0.0 } else { chi2_quantile(k, per_conf)? };
                    cache.push((k, v));
                    v
                }
            };
            per_circuit.push(thr);
        }
        let total: usize = dofs.iter().sum();
        let aggregate = if total == 0 {
            0.0
        } else {
            chi2_quantile(total, 1.0 - 0.5 * alpha)?
        };
        Ok(Self {
            alpha,
            per_circuit,
            aggregate,
        })
    }

    pub fn for_data(data: &[CircuitData], alpha: f64) -> Result<Self> {
        let dofs: Vec<usize> = data.iter().map(|d| d.outcomes().saturating_sub(1)).collect();
        Self::new(&dofs, alpha)
    }
}

/// One circuit's line in a [`ConsistencyReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub circuit: Circuit,
    pub shots: f64,
    /// `λ(f, p)` at the point prediction.
    #[serde(with = "crate::serde_f64")]
    pub llr: f64,
    /// Smallest radius that would pass this circuit's own threshold.
    #[serde(with = "crate::serde_f64")]
    pub budget: f64,
    /// Radius of the prediction region actually tested.
    pub radius: f64,
    /// `λ*` at `radius`.
    #[serde(with = "crate::serde_f64")]
    pub llr_star: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Outcome of both branches of the consistency test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub alpha: f64,
    pub rows: Vec<ReportRow>,
    #[serde(with = "crate::serde_f64")]
    pub aggregate: f64,
    pub aggregate_threshold: f64,
    pub per_circuit_pass: bool,
    pub aggregate_pass: bool,
    pub pass: bool,
}

impl ConsistencyReport {
    pub fn failing_circuits(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    /// Tab-separated table with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("circuit\tN\tllr\tt_C\tradius\tllr_star\tthreshold\tverdict\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{}",
                r.circuit,
                r.shots,
                r.llr,
                r.budget,
                r.radius,
                r.llr_star,
                r.threshold,
                if r.pass { "pass" } else { "fail" }
            );
        }
        let _ = writeln!(
            out,
            "# aggregate\t{:.10e}\tthreshold\t{:.10e}\t{}",
            self.aggregate,
            self.aggregate_threshold,
            if self.aggregate_pass { "pass" } else { "fail" }
        );
        out
    }
}

/// Tests data against prediction regions of the given radii (point
/// predictions when every radius is zero).
pub fn consistency_test(data: &[CircuitData], radii: &[f64], alpha: f64) -> Result<ConsistencyReport> {
    if data.len() != radii.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: radii.len(),
        });
    }
    let thr = Thresholds::for_data(data, alpha)?;
    let rows: Vec<ReportRow> = data
        .par_iter()
        .zip(radii.par_iter())
        .zip(thr.per_circuit.par_iter())
        .map(|((d, &radius), &threshold)| {
            let radius = radius.clamp(0.0, 1.0);
            let llr_star = d.min_llr(radius);
            ReportRow {
                circuit: d.circuit.clone(),
                shots: d.shots,
                llr: d.llr(),
                budget: min_tvd_budget(&d.f, &d.p, d.shots, threshold),
                radius,
                llr_star,
                threshold,
                pass: llr_star <= threshold,
            }
        })
        .collect();
    let aggregate: f64 = rows.iter().map(|r| r.llr_star).sum();
    let per_circuit_pass = rows.iter().all(|r| r.pass);
    let aggregate_pass = aggregate <= thr.aggregate;
    Ok(ConsistencyReport {
        alpha,
        rows,
        aggregate,
        aggregate_threshold: thr.aggregate,
        per_circuit_pass,
        aggregate_pass,
        pass: per_circuit_pass && aggregate_pass,
    })
}
