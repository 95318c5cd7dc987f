use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::basis::{Basis, CMatrix};
use crate::error::{Error, Result};

/// Snaps the first row of a numerically trace-preserving map to exactly
/// `(1, 0, …, 0)`.
fn snap_tp_row(m: &mut DMatrix<f64>) {
    let n = m.ncols();
    let close = (0..n).all(|j| {
        let want = if j == 0 { 1.0 } else { 0.0 };
        (m[(0, j)] - want).abs() < 1e-12
    });
    if close {
        for j in 0..n {
            m[(0, j)] = if j == 0 { 1.0 } else { 0.0 };
        }
    }
}

/// A density operator in coefficient form.
///
/// Coefficients are `s_i = √d · Tr(B_i ρ)`, so the trace coefficient `s_0`
/// equals `Tr ρ = 1` for normalized states.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVec {
    basis: Basis,
    coeffs: DVector<f64>,
}

impl StateVec {
    pub fn from_coeffs(basis: Basis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.size() {
            return Err(Error::DimensionMismatch {
                expected: basis.size(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            basis,
            coeffs: DVector::from_vec(coeffs),
        })
    }

    pub fn from_density(basis: Basis, rho: &CMatrix) -> Result<Self> {
        if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: rho.nrows(),
            });
        }
        let scale = (basis.dim() as f64).sqrt();
        let coeffs = basis.coordinates(rho).iter().map(|z| z.re * scale).collect();
        Self::from_coeffs(basis, coeffs)
    }

    /// The pure computational-basis state `|k⟩⟨k|`.
    pub fn basis_state(basis: Basis, k: usize) -> Self {
        let d = basis.dim();
        let mut rho = CMatrix::zeros(d, d);
        rho[(k, k)] = Complex64::new(1.0, 0.0);
        Self::from_density(basis, &rho).expect("dimensions agree")
    }

    pub fn density(&self) -> CMatrix {
        let scale = 1.0 / (self.basis.dim() as f64).sqrt();
        let coords: Vec<Complex64> = self
            .coeffs
            .iter()
            .map(|x| Complex64::new(x * scale, 0.0))
            .collect();
        self.basis.operator(&coords)
    }

    /// Smallest eigenvalue of the reconstructed density operator.
    pub fn min_eigenvalue(&self) -> f64 {
        self.density()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

}

/// A POVM element in coefficient form, `e_i = Tr(B_i E) / √d`, so that
/// `Tr(E ρ) = e · s` and the identity has coefficients `(1, 0, …, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect {
    basis: Basis,
    coeffs: DVector<f64>,
}

impl Effect {
    pub fn from_coeffs(basis: Basis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.size() {
            return Err(Error::DimensionMismatch {
                expected: basis.size(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            basis,
            coeffs: DVector::from_vec(coeffs),
        })
    }

    pub fn from_operator(basis: Basis, op: &CMatrix) -> Result<Self> {
        if op.nrows() != basis.dim() || op.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: op.nrows(),
            });
        }
        let scale = 1.0 / (basis.dim() as f64).sqrt();
        let coeffs = basis.coordinates(op).iter().map(|z| z.re * scale).collect();
        Self::from_coeffs(basis, coeffs)
    }

    /// Projector onto the listed computational-basis levels.
    pub fn projector(basis: Basis, levels: &[usize]) -> Self {
        let d = basis.dim();
        let mut op = CMatrix::zeros(d, d);
        for &k in levels {
            op[(k, k)] = Complex64::new(1.0, 0.0);
        }
        Self::from_operator(basis, &op).expect("dimensions agree")
    }

    pub fn operator(&self) -> CMatrix {
        let scale = (self.basis.dim() as f64).sqrt();
        let coords: Vec<Complex64> = self
            .coeffs
            .iter()
            .map(|x| Complex64::new(x * scale, 0.0))
            .collect();
        self.basis.operator(&coords)
    }

    /// `Tr(E ρ)`.
    pub fn prob(&self, state: &StateVec) -> f64 {
        self.coeffs.dot(state.coeffs())
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

}

/// A linear map on operators, stored as the real matrix
/// `S_ij = Tr(B_i Φ(B_j))` in an orthonormal Hermitian basis (the Pauli
/// transfer matrix for a qubit).
///
/// Composition follows time order: `a.then(&b)` (equivalently
/// [`compose`]`(a, b)`) is the map "apply `a`, then `b`", whose matrix is
/// `B · A`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp {
    basis: Basis,
    matrix: DMatrix<f64>,
}

impl SuperOp {
    pub fn identity(basis: Basis) -> Self {
        Self {
            basis,
            matrix: DMatrix::identity(basis.size(), basis.size()),
        }
    }

    pub fn from_matrix(basis: Basis, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != basis.size() || matrix.ncols() != basis.size() {
            return Err(Error::DimensionMismatch {
                expected: basis.size(),
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { basis, matrix })
    }

    /// Builds the matrix of an arbitrary Hermiticity-preserving linear map.
    pub fn from_linear_map(basis: Basis, map: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let els = basis.elements();
        let n = basis.size();
        let mut matrix = DMatrix::zeros(n, n);
        for (j, bj) in els.iter().enumerate() {
            let image = map(bj);
            for (i, bi) in els.iter().enumerate() {
                matrix[(i, j)] = (bi * &image).trace().re;
            }
        }
        snap_tp_row(&mut matrix);
        Self { basis, matrix }
    }

    /// `ρ ↦ Σ_k K_k ρ K_k†`.
    pub fn from_kraus(basis: Basis, kraus: &[CMatrix]) -> Result<Self> {
        let d = basis.dim();
        if let Some(k) = kraus.iter().find(|k| k.nrows() != d || k.ncols() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k.nrows(),
            });
        }
        Ok(Self::from_linear_map(basis, |rho| {
            kraus
                .iter()
                .fold(CMatrix::zeros(d, d), |acc, k| acc + k * rho * k.adjoint())
        }))
    }

    pub fn from_unitary(basis: Basis, u: &CMatrix) -> Result<Self> {
        Self::from_kraus(basis, std::slice::from_ref(u))
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }


    /// "Apply `self`, then `next`".
    pub fn then(&self, next: &SuperOp) -> Result<SuperOp> {
        if self.basis != next.basis {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: next.dim(),
            });
        }
        Ok(SuperOp {
            basis: self.basis,
            matrix: &next.matrix * &self.matrix,
        })
    }

    pub fn apply(&self, state: &StateVec) -> Result<StateVec> {
        if state.basis() != self.basis {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.basis().dim(),
            });
        }
        Ok(StateVec {
            basis: self.basis,
            coeffs: &self.matrix * state.coeffs(),
        })
    }

    /// Applies the complex-linear extension of the map to any operator.
    pub fn apply_operator(&self, m: &CMatrix) -> CMatrix {
        let coords = self.basis.coordinates(m);
        let n = self.basis.size();
        let out: Vec<Complex64> = (0..n)
            .map(|i| (0..n).map(|j| coords[j] * self.matrix[(i, j)]).sum())
            .collect();
        self.basis.operator(&out)
    }

    /// Largest deviation of the first row from `(1, 0, …, 0)`.
    pub fn tp_violation(&self) -> f64 {
        (0..self.matrix.ncols())
            .map(|j| {
                let want = if j == 0 { 1.0 } else { 0.0 };
                (self.matrix[(0, j)] - want).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.tp_violation() <= tol
    }

    pub fn sub(&self, other: &SuperOp) -> Result<SuperOp> {
        if self.basis != other.basis {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(SuperOp {
            basis: self.basis,
            matrix: &self.matrix - &other.matrix,
        })
    }
}

/// The map "apply `a`, then `b`".
pub fn compose(a: &SuperOp, b: &SuperOp) -> Result<SuperOp> {
    a.then(b)
}
