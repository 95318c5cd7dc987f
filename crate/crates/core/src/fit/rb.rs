//! Exponential decay fit for randomized benchmarking survival data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuits::RbDesign;
use crate::data::DataSet;
use crate::error::{Error, Result};

/// Least-squares fit of `A + B·η^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbFit {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    /// Error rate per gate, `(1 − η)/2`.
    pub r: f64,
    #[serde(with = "crate::serde_f64::vec")]
    pub residuals: Vec<f64>,
    #[serde(with = "crate::serde_f64")]
    pub rss: f64,
    /// False when the optimum sits on the boundary of `η ∈ [0, 1]`.
    pub converged: bool,
}

/// Weighted linear least squares for `A, B` at fixed `η`.
fn linear_part(d: &[f64], y: &[f64], w: &[f64], eta: f64) -> Option<(f64, f64, f64)> {
    let (mut s0, mut s1, mut s11, mut sy, mut s1y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&di, &yi), &wi) in d.iter().zip(y).zip(w) {
        let x = eta.powf(di);
        s0 += wi;
        s1 += wi * x;
        s11 += wi * x * x;
        sy += wi * yi;
        s1y += wi * x * yi;
    }
    let det = s0 * s11 - s1 * s1;
    if det.abs() <= 1e-300 {
        return None;
    }
    let a = (s11 * sy - s1 * s1y) / det;
    let b = (s0 * s1y - s1 * sy) / det;
    let rss = d
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&di, &yi), &wi)| wi * (yi - a - b * eta.powf(di)).powi(2))
        .sum();
    Some((a, b, rss))
}

/// Fits `A + B·η^d` to mean survival `means` at `depths`, with `η ∈ [0, 1]`.
///
/// `A` and `B` are eliminated in closed form; the one-dimensional profile in
/// `η` is scanned on a grid and refined by golden-section search.
pub fn fit_rb_decay(depths: &[f64], means: &[f64], weights: Option<&[f64]>) -> Result<RbFit> {
    if depths.len() != means.len() {
        return Err(Error::DimensionMismatch {
            expected: depths.len(),
            found: means.len(),
        });
    }
    let mut distinct: Vec<f64> = depths.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidInput("RB fit needs at least 3 distinct depths".into()));
    }
    let ones = vec![1.0; depths.len()];
    let w = weights.unwrap_or(&ones);
    if w.len() != depths.len() {
        return Err(Error::DimensionMismatch {
            expected: depths.len(),
            found: w.len(),
        });
    }
    let profile = |eta: f64| linear_part(depths, means, w, eta).map_or(f64::INFINITY, |(_, _, r)| r);

    const GRID: usize = 4000;
    let (mut best_k, mut best) = (0, f64::INFINITY);
    for k in 0..=GRID {
        let v = profile(k as f64 / GRID as f64);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let mut lo = best_k.saturating_sub(1) as f64 / GRID as f64;
    let mut hi = (best_k + 1).min(GRID) as f64 / GRID as f64;
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (profile(x1), profile(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = profile(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = profile(x2);
        }
    }
    let mut eta = 0.5 * (lo + hi);
    for cand in [lo, hi, x1, x2, best_k as f64 / GRID as f64] {
        if profile(cand) < profile(eta) {
            eta = cand;
        }
    }
    let (a, b, rss) = linear_part(depths, means, w, eta).ok_or_else(|| Error::NonConvergence {
        what: "RB fit",
        detail: format!("singular normal equations at eta = {eta}"),
    })?;
    let residuals = depths
        .iter()
        .zip(means)
        .map(|(&d, &y)| y - a - b * eta.powf(d))
        .collect();
    Ok(RbFit {
        a,
        b,
        eta,
        r: (1.0 - eta) / 2.0,
        residuals,
        rss,
        converged: eta > 0.0 && eta < 1.0,
    })
}

/// Mean frequency of outcome "0" over each depth's circuits, as
/// `(depths, means)`.
pub fn rb_survival(data: &DataSet, design: &RbDesign) -> Result<(Vec<f64>, Vec<f64>)> {
    let zero = data
        .outcome_labels()
        .iter()
        .position(|l| l == "0")
        .ok_or_else(|| Error::InvalidInput("dataset has no outcome \"0\"".into()))?;
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (i, c) in design.circuits.iter().enumerate() {
        let depth = design.depths[i / design.per_depth];
        let rec = data
            .get(c)
            .ok_or_else(|| Error::MissingPrediction(format!("no data for RB circuit {c}")))?;
        let n = rec.total();
        if n == 0 {
            return Err(Error::NoCounts);
        }
        let e = sums.entry(depth).or_insert((0.0, 0));
        e.0 += rec.counts[zero] as f64 / n as f64;
        e.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(d, (s, k))| (d as f64, s / k as f64))
        .unzip())
}
