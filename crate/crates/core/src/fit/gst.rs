//! Maximum-likelihood fit of single-qubit trace-preserving process matrices
//! and SPAM to two-outcome data.
//!
//! Each gate contributes the 12 entries below the fixed first row of its
//! PTM; the prepared state contributes its three Bloch coefficients and the
//! effect for outcome "0" its four coefficients (the "1" effect is the
//! complement). The optimizer is Levenberg–Marquardt-damped Fisher scoring:
//! exact gradient of the log-likelihood, curvature from the Fisher
//! information `Σ N ∇p ∇pᵀ / (p(1−p))`.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::quantum::{Basis, Effect, GateSet, StateVec, SuperOp};

/// Parameters of the qubit TP gauge group, removed from the model's count
/// of free parameters.
const TP_GAUGE_PARAMS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GstOptions {
    pub max_iter: usize,
    /// Below this probability the log-likelihood is continued by its
    /// second-order Taylor expansion, keeping the objective finite.
    pub min_prob: f64,
    /// Stop when the predicted decrease of the objective falls below this.
    pub tol: f64,
}

impl Default for GstOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            min_prob: 1e-7,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GstDiagnostics {
    #[serde(with = "crate::serde_f64")]
    pub loglikelihood: f64,
    #[serde(with = "crate::serde_f64")]
    pub initial_loglikelihood: f64,
    /// `2 Σ_C N Σ_k f ln(f/p)` at the fit.
    #[serde(with = "crate::serde_f64")]
    pub llr_total: f64,
    pub dof: f64,
    pub n_params: usize,
    /// `(llr_total − dof) / √(2·dof)`.
    #[serde(with = "crate::serde_f64")]
    pub sigma: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Smoothed log-likelihood after each accepted step.
    #[serde(with = "crate::serde_f64::vec")]
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GstFitResult {
    pub gateset: GateSet,
    pub diagnostics: GstDiagnostics,
}

struct Problem {
    labels: Vec<String>,
    seqs: Vec<Vec<usize>>,
    counts: Vec<[f64; 2]>,
}

impl Problem {
    fn n_params(&self) -> usize {
        12 * self.labels.len() + 3 + 4
    }

    fn unpack(&self, x: &[f64]) -> (Vec<Matrix4<f64>>, Vector4<f64>, Vector4<f64>) {
        let gates = (0..self.labels.len())
            .map(|g| {
                let mut m = Matrix4::zeros();
                m[(0, 0)] = 1.0;
                for r in 1..4 {
                    for c in 0..4 {
                        m[(r, c)] = x[12 * g + 4 * (r - 1) + c];
                    }
                }
                m
            })
            .collect();
        let o = 12 * self.labels.len();
        let prep = Vector4::new(1.0, x[o], x[o + 1], x[o + 2]);
        let e0 = Vector4::new(x[o + 3], x[o + 4], x[o + 5], x[o + 6]);
        (gates, prep, e0)
    }
}

fn pack(labels: &[String], gs: &GateSet) -> Result<Vec<f64>> {
    let mut x = Vec::new();
    for l in labels {
        let m = gs.gate(l)?.matrix();
        for r in 1..4 {
            for c in 0..4 {
                x.push(m[(r, c)]);
            }
        }
    }
    x.extend(gs.prep().coeffs().iter().skip(1));
    x.extend(gs.povm()[0].1.coeffs().iter());
    Ok(x)
}

/// `p("0")` of one circuit and, optionally, its gradient.
fn prob_and_grad(
    seq: &[usize],
    gates: &[Matrix4<f64>],
    prep: &Vector4<f64>,
    e0: &Vector4<f64>,
    n_params: usize,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let mut states = Vec::with_capacity(seq.len() + 1);
    states.push(*prep);
    for &g in seq {
        let next = gates[g] * states.last().expect("nonempty");
        states.push(next);
    }
    let last = states.last().expect("nonempty");
    let p = e0.dot(last);
    if !want_grad {
        return (p, None);
    }
    let mut grad = vec![0.0; n_params];
    let mut v = *e0;
    for (i, &g) in seq.iter().enumerate().rev() {
        let s = &states[i];
        for r in 1..4 {
            for c in 0..4 {
                grad[12 * g + 4 * (r - 1) + c] += v[r] * s[c];
            }
        }
        v = gates[g].transpose() * v;
    }
    let o = n_params - 7;
    grad[o] += v[1];
    grad[o + 1] += v[2];
    grad[o + 2] += v[3];
    for k in 0..4 {
        grad[o + 3 + k] += last[k];
    }
    (p, Some(grad))
}

/// `−c ln p` continued below `eps` by its second-order expansion; value and
/// derivative in `p`. Outcomes with no counts instead pay `n·p²/(2eps²)` for
/// negative `p`, which keeps the other outcome from exceeding one.
fn neg_log_term(c: f64, n: f64, p: f64, eps: f64) -> (f64, f64) {
    if c == 0.0 {
        return if p < 0.0 {
            (n * p * p / (2.0 * eps * eps), n * p / (eps * eps))
        } else {
            (0.0, 0.0)
        };
    }
    if p >= eps {
        (-c * p.ln(), -c / p)
    } else {
        let d = p - eps;
        (
            c * (-eps.ln() - d / eps + d * d / (2.0 * eps * eps)),
            c * (-1.0 / eps + d / (eps * eps)),
        )
    }
}

/// Second derivative in `p` of [`neg_log_term`].
fn log_curvature(c: f64, n: f64, p: f64, eps: f64) -> f64 {
    if c == 0.0 {
        if p < 0.0 { n / (eps * eps) } else { 0.0 }
    } else {
        c / p.max(eps).powi(2)
    }
}

fn xlogx(c: f64, n: f64) -> f64 {
    if c > 0.0 {
        c * (c / n).ln()
    } else {
        0.0
    }
}

/// Objective `Σ_C Σ_k c_k ln(f_k/p_k)` (half the total LLR), its gradient
/// and a Gauss-Newton curvature matrix.
fn evaluate(prob: &Problem, x: &[f64], eps: f64, want_derivs: bool) -> (f64, Vec<f64>, DMatrix<f64>) {
    let np = prob.n_params();
    let (gates, prep, e0) = prob.unpack(x);
    let m = if want_derivs { np } else { 0 };
    // Fixed-size chunks summed in order keep the result independent of
    // thread scheduling.
    let items: Vec<(&Vec<usize>, &[f64; 2])> = prob.seqs.iter().zip(prob.counts.iter()).collect();
    let partials: Vec<(f64, Vec<f64>, DMatrix<f64>)> = items
        .par_chunks(32)
        .map(|chunk| {
            let mut f = 0.0;
            let mut g = vec![0.0; m];
            let mut h = DMatrix::zeros(m, m);
            for &(seq, &[c0, c1]) in chunk {
                let (p0, grad) = prob_and_grad(seq, &gates, &prep, &e0, np, want_derivs);
                let n = c0 + c1;
                let (v0, d0) = neg_log_term(c0, n, p0, eps);
                let (v1, d1) = neg_log_term(c1, n, 1.0 - p0, eps);
                f += v0 + v1 + xlogx(c0, n) + xlogx(c1, n);
                if let Some(grad) = grad {
                    let dp = d0 - d1;
                    for (gi, di) in g.iter_mut().zip(&grad) {
                        *gi += dp * di;
                    }
                    let w = log_curvature(c0, n, p0, eps) + log_curvature(c1, n, 1.0 - p0, eps);
                    let gv = DVector::from_column_slice(&grad);
                    h.ger(w, &gv, &gv, 1.0);
                }
            }
            (f, g, h)
        })
        .collect();
    let mut f = 0.0;
    let mut g = vec![0.0; m];
    let mut h = DMatrix::zeros(m, m);
    for (pf, pg, ph) in partials {
        f += pf;
        g.iter_mut().zip(&pg).for_each(|(a, b)| *a += b);
        h += ph;
    }
    (f, g, h)
}

/// Fits `init`'s gates and SPAM to `data` on `circuits` by maximum likelihood.
pub fn mle_fit_gst(circuits: &[Circuit], data: &DataSet, init: &GateSet, opts: &GstOptions) -> Result<GstFitResult> {
    if init.basis() != Basis::Pauli || init.povm().len() != 2 {
        return Err(Error::InvalidInput("GST fit supports two-outcome single-qubit gate sets".into()));
    }
    let labels: Vec<String> = init.labels().map(str::to_string).collect();
    let outcome_labels = init.outcome_labels();
    let mut seqs = Vec::with_capacity(circuits.len());
    let mut counts = Vec::with_capacity(circuits.len());
    for c in circuits {
        init.covers(c)?;
        let rec = data
            .get(c)
            .ok_or_else(|| Error::MissingPrediction(format!("no data for circuit {c}")))?;
        let k = data.counts_for(rec, &outcome_labels)?;
        if k[0] + k[1] == 0 {
            return Err(Error::NoCounts);
        }
        counts.push([k[0] as f64, k[1] as f64]);
        seqs.push(
            c.layers()
                .iter()
                .map(|l| labels.iter().position(|x| x == l).expect("covered"))
                .collect(),
        );
    }
    let prob = Problem { labels, seqs, counts };
    let np = prob.n_params();
    let mut x = pack(&prob.labels, init)?;
    let initial_loglikelihood = exact_loglikelihood(&prob, &x);

    let (mut f, mut g, mut h) = evaluate(&prob, &x, opts.min_prob, true);
    let mut trace = vec![-f];
    let mut mu = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let max_diag = (0..np).map(|i| h[(i, i)]).fold(0.0, f64::max).max(1e-300);
        let mut step = None;
        for _ in 0..40 {
            let mut a = h.clone();
            for i in 0..np {
                a[(i, i)] += mu * max_diag;
            }
            let rhs = -DVector::from_column_slice(&g);
            let Some(chol) = a.cholesky() else {
                mu *= 4.0;
                continue;
            };
            let delta = chol.solve(&rhs);
            let xn: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let (fn_, _, _) = evaluate(&prob, &xn, opts.min_prob, false);
            let predicted = -delta.dot(&DVector::from_column_slice(&g));
            if fn_.is_finite() && fn_ <= f {
                step = Some((xn, fn_, predicted));
                break;
            }
            mu *= 4.0;
        }
        let Some((xn, fn_, predicted)) = step else {
            converged = predicted_decrease_small(&g, opts.tol, f);
            break;
        };
        iterations += 1;
        let improvement = f - fn_;
        x = xn;
        let (f2, g2, h2) = evaluate(&prob, &x, opts.min_prob, true);
        f = f2;
        g = g2;
        h = h2;
        trace.push(-f);
        mu = (mu / 3.0).max(1e-12);
        let scale = f.abs().max(1.0);
        if predicted.abs() < opts.tol * scale || improvement < opts.tol * 1e-3 * scale {
            converged = true;
            break;
        }
    }

    let gateset = unpack_gateset(&prob, init, &x)?;
    let loglikelihood = exact_loglikelihood(&prob, &x);
    let llr_total = 2.0
        * prob
            .counts
            .iter()
            .zip(&prob.seqs)
            .map(|(&[c0, c1], seq)| {
                let (gates, prep, e0) = prob.unpack(&x);
                let p0 = prob_and_grad(seq, &gates, &prep, &e0, np, false).0.clamp(0.0, 1.0);
                let n = c0 + c1;
                let term = |c: f64, p: f64| if c > 0.0 { c * (c / n / p).ln() } else { 0.0 };
                term(c0, p0) + term(c1, 1.0 - p0)
            })
            .sum::<f64>();
    let free = np.saturating_sub(TP_GAUGE_PARAMS) as f64;
    let dof = (prob.counts.len() as f64 - free).max(1.0);
    let grad_norm = g.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(GstFitResult {
        gateset,
        diagnostics: GstDiagnostics {
            loglikelihood,
            initial_loglikelihood,
            llr_total,
            dof,
            n_params: np,
            sigma: (llr_total - dof) / (2.0 * dof).sqrt(),
            iterations,
            grad_norm,
            converged,
            trace,
        },
    })
}

fn predicted_decrease_small(g: &[f64], tol: f64, f: f64) -> bool {
    g.iter().fold(0.0, |m: f64, v| m.max(v.abs())) <= tol.sqrt() * f.abs().max(1.0)
}

/// `Σ_C Σ_k c_k ln p_k` with the probabilities clipped to `[0, 1]`.
fn exact_loglikelihood(prob: &Problem, x: &[f64]) -> f64 {
    let (gates, prep, e0) = prob.unpack(x);
    let np = prob.n_params();
    prob.seqs
        .iter()
        .zip(&prob.counts)
        .map(|(seq, &[c0, c1])| {
            let p0 = prob_and_grad(seq, &gates, &prep, &e0, np, false).0.clamp(0.0, 1.0);
            let t = |c: f64, p: f64| if c > 0.0 { c * p.ln() } else { 0.0 };
            t(c0, p0) + t(c1, 1.0 - p0)
        })
        .sum()
}

fn unpack_gateset(prob: &Problem, init: &GateSet, x: &[f64]) -> Result<GateSet> {
    let (gates, prep, e0) = prob.unpack(x);
    let mut gs = init.clone();
    for (l, m) in prob.labels.iter().zip(&gates) {
        let dm = DMatrix::from_fn(4, 4, |r, c| m[(r, c)]);
        gs.set_gate(l.clone(), SuperOp::from_matrix(Basis::Pauli, dm)?)?;
    }
    gs.set_prep(StateVec::from_coeffs(Basis::Pauli, prep.iter().copied().collect())?)?;
    let e1: Vec<f64> = (0..4).map(|k| if k == 0 { 1.0 } else { 0.0 } - e0[k]).collect();
    gs.set_effect(0, Effect::from_coeffs(Basis::Pauli, e0.iter().copied().collect())?)?;
    gs.set_effect(1, Effect::from_coeffs(Basis::Pauli, e1)?)?;
    Ok(gs)
}
