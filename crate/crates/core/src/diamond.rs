//! Diamond distance between channels and average gate fidelity.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{CMatrix, SuperOp};
use crate::stats::tvd_slices;

const SIMPLEX_TOL: f64 = 1e-9;

/// `ε◇` between two Pauli channels given by their Pauli error
/// probabilities `(p_I, p_X, p_Y, p_Z)`: the TVD of the two vectors.
pub fn pauli_diamond(a: &[f64], b: &[f64]) -> Result<f64> {
    for v in [a, b] {
        if v.len() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: v.len(),
            });
        }
        if v.iter().any(|&x| x < -SIMPLEX_TOL) || (v.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidInput(format!("{v:?} is not a probability vector")));
        }
    }
    Ok(tvd_slices(a, b))
}

/// Pauli error probabilities of a qubit channel with diagonal PTM
/// `diag(1, λx, λy, λz)`.
pub fn pauli_probabilities(channel: &SuperOp) -> Result<[f64; 4]> {
    if channel.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: channel.dim(),
        });
    }
    let m = channel.matrix();
    let off = (0..4)
        .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
        .fold(0.0, |acc: f64, (i, j)| acc.max(m[(i, j)].abs()));
    if off > 1e-12 {
        return Err(Error::InvalidInput("channel is not a Pauli channel".into()));
    }
    let (x, y, z) = (m[(1, 1)], m[(2, 2)], m[(3, 3)]);
    Ok([
        (1.0 + x + y + z) / 4.0,
        (1.0 + x - y - z) / 4.0,
        (1.0 - x + y - z) / 4.0,
        (1.0 - x - y + z) / 4.0,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiamondOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for DiamondOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iter: 2000,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiamondResult {
    /// `½‖Φ1 − Φ2‖◇` (best value found).
    pub epsilon: f64,
    /// Value from the maximally entangled input alone.
    pub entangled: f64,
    pub restarts: usize,
    /// Best input `|ψ⟩ = Σ ψ_ij |i⟩|j⟩` as `(re, im)` pairs, row-major in `(i, j)`.
    pub best_input: Vec<(f64, f64)>,
    /// All restarts reached a fixed point within the iteration budget.
    pub converged: bool,
}

struct Difference {
    d: usize,
    /// `Δ(|i⟩⟨k|)` indexed by `i·d + k`.
    images: Vec<CMatrix>,
}

impl Difference {
    fn new(a: &SuperOp, b: &SuperOp) -> Result<Self> {
        let delta = a.sub(b)?;
        let d = a.dim();
        let mut images = Vec::with_capacity(d * d);
        for i in 0..d {
            for k in 0..d {
                let mut e = CMatrix::zeros(d, d);
                e[(i, k)] = Complex64::new(1.0, 0.0);
                images.push(delta.apply_operator(&e));
            }
        }
        Ok(Self { d, images })
    }

    /// `(Δ ⊗ id)(|ψ⟩⟨ψ|)`.
    fn output(&self, psi: &[Complex64]) -> CMatrix {
        let d = self.d;
        let mut x = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for k in 0..d {
                let img = &self.images[i * d + k];
                for j in 0..d {
                    for l in 0..d {
                        let coef = psi[i * d + j] * psi[k * d + l].conj();
                        if coef == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for a in 0..d {
                            for b in 0..d {
                                x[(a * d + j, b * d + l)] += coef * img[(a, b)];
                            }
                        }
                    }
                }
            }
        }
        hermitize(x)
    }

    /// Operator `Q` with `⟨ψ|Q|ψ⟩ = Tr(S (Δ ⊗ id)(|ψ⟩⟨ψ|))`.
    fn adjoint(&self, s: &CMatrix) -> CMatrix {
        let d = self.d;
        let mut q = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for k in 0..d {
                let img = &self.images[i * d + k];
                for j in 0..d {
                    for l in 0..d {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for a in 0..d {
                            for b in 0..d {
                                acc += s[(b * d + l, a * d + j)] * img[(a, b)];
                            }
                        }
                        q[(k * d + l, i * d + j)] = acc;
                    }
                }
            }
        }
        hermitize(q)
    }
}

fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Trace norm and sign operator of a Hermitian matrix.
fn trace_norm_and_sign(x: CMatrix) -> (f64, CMatrix) {
    let n = x.nrows();
    let eig = SymmetricEigen::new(x);
    let mut s = CMatrix::zeros(n, n);
    let mut norm = 0.0;
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        norm += lam.abs();
        let v = eig.eigenvectors.column(k);
        let sign = if lam >= 0.0 { 1.0 } else { -1.0 };
        s += (v * v.adjoint()) * Complex64::new(sign, 0.0);
    }
    (norm, s)
}

fn top_eigenvector(q: CMatrix) -> Vec<Complex64> {
    let eig = SymmetricEigen::new(q);
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    eig.eigenvectors.column(k).iter().copied().collect()
}

/// Alternating maximization of `Tr(S X(ψ))` over sign operators `S` and
/// unit inputs `ψ`; never decreases `‖X(ψ)‖_tr`.
fn ascend(diff: &Difference, mut psi: Vec<Complex64>, max_iter: usize) -> (f64, Vec<Complex64>, bool) {
    let (mut value, mut sign) = trace_norm_and_sign(diff.output(&psi));
    for _ in 0..max_iter {
        let next = top_eigenvector(diff.adjoint(&sign));
        let (v, s) = trace_norm_and_sign(diff.output(&next));
        if v <= value + 1e-15 * value.max(1.0) {
            if v > value {
                value = v;
                psi = next;
            }
            return (value, psi, true);
        }
        value = v;
        sign = s;
        psi = next;
    }
    (value, psi, false)
}

/// `ε◇ = ½‖E1 − E2‖◇` by multistart local maximization over pure inputs on
/// the system plus an equal-dimension reference.
pub fn diamond_numeric(e1: &SuperOp, e2: &SuperOp, opts: &DiamondOptions) -> Result<DiamondResult> {
    if e1.basis() != e2.basis() {
        return Err(Error::DimensionMismatch {
            expected: e1.dim(),
            found: e2.dim(),
        });
    }
    for e in [e1, e2] {
        if !e.is_trace_preserving(1e-9) {
            return Err(Error::InvalidInput(format!(
                "channel is not trace preserving (violation {:.3e})",
                e.tp_violation()
            )));
        }
    }
    let diff = Difference::new(e1, e2)?;
    let d = diff.d;
    let mut entangled_input = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        entangled_input[i * d + i] = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    let entangled = 0.5 * trace_norm_and_sign(diff.output(&entangled_input)).0;

    let runs: Vec<(f64, Vec<Complex64>, bool)> = (0..=opts.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                entangled_input.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
                let mut v: Vec<Complex64> = (0..d * d)
                    .map(|_| {
                        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
                    })
                    .collect();
                let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                v.iter_mut().for_each(|z| *z /= n);
                v
            };
            ascend(&diff, start, opts.max_iter)
        })
        .collect();
    let converged = runs.iter().all(|r| r.2);
    let best = runs
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one run");
    Ok(DiamondResult {
        epsilon: (0.5 * best.0).clamp(0.0, 1.0),
        entangled,
        restarts: opts.restarts,
        best_input: best.1.iter().map(|z| (z.re, z.im)).collect(),
        converged,
    })
}

/// Average gate fidelity of `e` to the ideal `u`:
/// `(d·F_pro + 1)/(d + 1)` with `F_pro = Tr(R_uᵀ R_e)/d²`.
pub fn avg_gate_fidelity(e: &SuperOp, u: &SuperOp) -> Result<f64> {
    if e.basis() != u.basis() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: e.dim(),
        });
    }
    let d = e.dim() as f64;
    let f_pro = (u.matrix().transpose() * e.matrix()).trace() / (d * d);
    Ok((d * f_pro + 1.0) / (d + 1.0))
}

/// Process fidelity in PTM form, `Tr(R_uᵀ R_e)/d²`.
pub fn process_fidelity(e: &SuperOp, u: &SuperOp) -> Result<f64> {
    let d = e.dim() as f64;
    Ok((avg_gate_fidelity(e, u)? * (d + 1.0) - 1.0) / d)
}
