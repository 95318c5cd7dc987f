//! Standard single-qubit channels, gates, and the qutrit leakage embedding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::{Basis, CMatrix};
use super::superop::SuperOp;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// The (unnormalized) Pauli matrix for this axis.
    pub fn pauli(self) -> CMatrix {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Axis::X => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Axis::Y => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            Axis::Z => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }
}

fn check_range(what: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if !(lo..=hi).contains(&value) {
        return Err(Error::OutOfRange { what, value, range });
    }
    Ok(())
}

fn diagonal(entries: [f64; 4]) -> SuperOp {
    SuperOp::from_matrix(Basis::Pauli, DMatrix::from_diagonal(&DVector::from_row_slice(&entries)))
        .expect("4x4 Pauli transfer matrix")
}

/// `ρ ↦ (1−q)ρ + q·I/2`; PTM `diag(1, 1−q, 1−q, 1−q)`.
pub fn depolarizing(q: f64) -> Result<SuperOp> {
    check_range("depolarizing strength", q, 0.0, 4.0 / 3.0, "[0, 4/3]")?;
    let e = 1.0 - q;
    Ok(diagonal([1.0, e, e, e]))
}

/// Z-basis dephasing `ρ ↦ (1−p)ρ + p ZρZ`; PTM `diag(1, 1−2p, 1−2p, 1)`.
pub fn dephasing(p: f64) -> Result<SuperOp> {
    check_range("dephasing probability", p, 0.0, 1.0, "[0, 1]")?;
    let e = 1.0 - 2.0 * p;
    Ok(diagonal([1.0, e, e, 1.0]))
}

/// Pauli channel with probabilities `(p_I, p_X, p_Y, p_Z)`.
pub fn pauli_channel(probs: [f64; 4]) -> Result<SuperOp> {
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "Pauli probabilities {probs:?} are not on the simplex"
        )));
    }
    let [pi, px, py, pz] = probs;
    Ok(diagonal([
        1.0,
        pi + px - py - pz,
        pi - px + py - pz,
        pi - px - py + pz,
    ]))
}

/// The unitary `exp(−iθP/2)`.
pub fn rotation_unitary(axis: Axis, angle: f64) -> CMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    CMatrix::identity(2, 2) * Complex64::new(c, 0.0) - axis.pauli() * Complex64::new(0.0, s)
}

/// PTM of `exp(−iθP/2)`: a rotation of the Bloch sphere by `θ` about `P`.
pub fn rotation(axis: Axis, angle: f64) -> SuperOp {
    SuperOp::from_unitary(Basis::Pauli, &rotation_unitary(axis, angle)).expect("2x2 unitary")
}

/// Ideal superoperator for one of the standard labels `Gi`, `Gx`, `Gy`, `Gz`
/// (the latter three are π/2 rotations).
pub fn standard_gate(label: &str) -> Option<SuperOp> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    match label {
        "Gi" => Some(SuperOp::identity(Basis::Pauli)),
        "Gx" => Some(rotation(Axis::X, half_pi)),
        "Gy" => Some(rotation(Axis::Y, half_pi)),
        "Gz" => Some(rotation(Axis::Z, half_pi)),
        _ => None,
    }
}

/// Rotation axis of a standard gate label (`None` for the idle).
pub fn standard_gate_axis(label: &str) -> Option<Axis> {
    match label {
        "Gx" => Some(Axis::X),
        "Gy" => Some(Axis::Y),
        "Gz" => Some(Axis::Z),
        _ => None,
    }
}

/// Irreversible incoherent leakage on a qutrit:
/// `ρ ↦ (1−ℓ)PρP + [ℓ·tr(PρP) + ⟨2|ρ|2⟩]·|2⟩⟨2|`, with `P` the projector
/// onto the `{|0⟩, |1⟩}` block. Block coherences are discarded.
pub fn leakage_channel(rate: f64) -> Result<SuperOp> {
    embed_leakage(&SuperOp::identity(Basis::Pauli), rate)
}

/// Lifts a qubit map to a qutrit: the qubit action on the computational
/// block followed by [`leakage_channel`].
pub fn embed_leakage(gate: &SuperOp, rate: f64) -> Result<SuperOp> {
    if gate.basis() != Basis::Pauli {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: gate.dim(),
        });
    }
    check_range("leakage rate", rate, 0.0, 1.0, "[0, 1]")?;
    Ok(SuperOp::from_linear_map(Basis::GellMann, |rho| {
        let block = rho.view((0, 0), (2, 2)).into_owned();
        let image = gate.apply_operator(&block);
        let mut out = CMatrix::zeros(3, 3);
        out.view_mut((0, 0), (2, 2))
            .copy_from(&(image.clone() * Complex64::new(1.0 - rate, 0.0)));
        out[(2, 2)] = image.trace() * rate + rho[(2, 2)];
        out
    }))
}
