use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Orthonormal Hermitian operator basis, `Tr(B_i B_j) = δ_ij`, with
/// `B_0 = I/√d`. Normalized Paulis for a qubit, normalized Gell-Mann
/// matrices for a qutrit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    Pauli,
    GellMann,
}

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Basis {
    pub fn for_dim(dim: usize) -> Result<Self> {
        match dim {
            2 => Ok(Basis::Pauli),
            3 => Ok(Basis::GellMann),
            other => Err(Error::InvalidInput(format!(
                "no operator basis for Hilbert dimension {other}"
            ))),
        }
    }

    /// Hilbert-space dimension.
    pub fn dim(self) -> usize {
        match self {
            Basis::Pauli => 2,
            Basis::GellMann => 3,
        }
    }

    /// Number of basis elements (`dim²`), the side of a superoperator.
    pub fn size(self) -> usize {
        self.dim() * self.dim()
    }

    pub fn elements(self) -> &'static [CMatrix] {
        static PAULI: OnceLock<Vec<CMatrix>> = OnceLock::new();
        static GELL_MANN: OnceLock<Vec<CMatrix>> = OnceLock::new();
        match self {
            Basis::Pauli => PAULI.get_or_init(pauli_elements),
            Basis::GellMann => GELL_MANN.get_or_init(gell_mann_elements),
        }
    }

    /// Coordinates `Tr(B_i M)` of an arbitrary (possibly non-Hermitian) operator.
    pub fn coordinates(self, m: &CMatrix) -> Vec<Complex64> {
        self.elements()
            .iter()
            .map(|b| (b * m).trace())
            .collect()
    }

    /// Inverse of [`Basis::coordinates`].
    pub fn operator(self, coords: &[Complex64]) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (b, x) in self.elements().iter().zip(coords) {
            m += b * *x;
        }
        m
    }
}

fn pauli_elements() -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let i = CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)]);
    let x = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(s, 0.), c(s, 0.), c(0., 0.)]);
    let y = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -s), c(0., s), c(0., 0.)]);
    let z = CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(0., 0.), c(0., 0.), c(-s, 0.)]);
    vec![i, x, y, z]
}

fn gell_mann_elements() -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let unit = |entries: &[(usize, usize, Complex64)]| {
        let mut m = CMatrix::zeros(3, 3);
        for &(r, col, v) in entries {
            m[(r, col)] = v;
        }
        m
    };
    let sym = |a: usize, b: usize| unit(&[(a, b, c(s, 0.)), (b, a, c(s, 0.))]);
    let asym = |a: usize, b: usize| unit(&[(a, b, c(0., -s)), (b, a, c(0., s))]);
    let t = 1.0 / 3f64.sqrt();
    let h = 1.0 / 6f64.sqrt();
    vec![
        unit(&[(0, 0, c(t, 0.)), (1, 1, c(t, 0.)), (2, 2, c(t, 0.))]),
        sym(0, 1),
        asym(0, 1),
        unit(&[(0, 0, c(s, 0.)), (1, 1, c(-s, 0.))]),
        sym(0, 2),
        asym(0, 2),
        sym(1, 2),
        asym(1, 2),
        unit(&[(0, 0, c(h, 0.)), (1, 1, c(h, 0.)), (2, 2, c(-2. * h, 0.))]),
    ]
}
