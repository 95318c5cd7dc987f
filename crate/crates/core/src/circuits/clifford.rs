use std::collections::btree_map::{BTreeMap, Entry};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quantum::{rotation, Axis, Basis, GateSet, SuperOp};

pub const CLIFFORD_COUNT: usize = 24;

/// The single-qubit Clifford group (modulo phase) as signed-permutation
/// transfer matrices, with composition and inverse tables.
///
/// Elements are labelled `C0`..`C23`; `C0` is the identity.
#[derive(Clone, Debug)]
pub struct CliffordGroup {
    elements: Vec<SuperOp>,
    /// `compose[a][b]` is the index of "apply `a`, then `b`".
    compose: Vec<Vec<usize>>,
    inverse: Vec<usize>,
}

fn rounded(op: &SuperOp) -> SuperOp {
    let m = op.matrix().map(|x| x.round());
    SuperOp::from_matrix(Basis::Pauli, m).expect("4x4")
}

fn key(m: &DMatrix<f64>) -> Vec<i8> {
    m.iter().map(|x| x.round() as i8).collect()
}

impl CliffordGroup {
    pub fn new() -> Self {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let generators = [rounded(&rotation(Axis::X, half_pi)), rounded(&rotation(Axis::Z, half_pi))];
        let mut elements = vec![SuperOp::identity(Basis::Pauli)];
        let mut index: BTreeMap<Vec<i8>, usize> = BTreeMap::new();
        index.insert(key(elements[0].matrix()), 0);
        let mut frontier = 0;
        while frontier < elements.len() {
            let current = elements[frontier].clone();
            for g in &generators {
                let next = current.then(g).expect("same basis");
                let k = key(next.matrix());
                if let Entry::Vacant(e) = index.entry(k) {
                    e.insert(elements.len());
                    elements.push(next);
                }
            }
            frontier += 1;
        }
        assert_eq!(elements.len(), CLIFFORD_COUNT, "Clifford closure");
        let lookup = |op: &SuperOp| index[&key(op.matrix())];
        let compose: Vec<Vec<usize>> = elements
            .iter()
            .map(|a| elements.iter().map(|b| lookup(&a.then(b).unwrap())).collect())
            .collect();
        let inverse = (0..CLIFFORD_COUNT)
            .map(|a| compose[a].iter().position(|&c| c == 0).expect("group inverse"))
            .collect();
        Self {
            elements,
            compose,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &SuperOp {
        &self.elements[i]
    }

    /// Index of "apply `a`, then `b`".
    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.compose[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn label(i: usize) -> String {
        format!("C{i}")
    }

    pub fn index_of(label: &str) -> Result<usize> {
        label
            .strip_prefix('C')
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&i| i < CLIFFORD_COUNT)
            .ok_or_else(|| Error::UnknownGate(label.to_string()))
    }

    /// Locates a transfer matrix in the group (entries rounded).
    pub fn find(&self, op: &SuperOp) -> Option<usize> {
        let k = key(op.matrix());
        self.elements.iter().position(|e| key(e.matrix()) == k)
    }

    /// Ideal gate set over the labels `C0`..`C23`.
    pub fn ideal_gateset(&self) -> GateSet {
        let gates = self
            .elements
            .iter()
            .enumerate()
            .map(|(i, g)| (Self::label(i), g.clone()))
            .collect();
        GateSet::qubit_with_gates(gates).expect("qubit gates")
    }
}

impl Default for CliffordGroup {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_structure() {
        let g = CliffordGroup::new();
        assert_eq!(g.len(), 24);
        assert_eq!(g.element(0), &SuperOp::identity(Basis::Pauli));
        for a in 0..24 {
            assert_eq!(g.compose(a, g.inverse(a)), 0);
            assert_eq!(g.compose(g.inverse(a), a), 0);
            assert_eq!(g.compose(0, a), a);
        }
    }

    #[test]
    fn closure_over_all_pairs() {
        // Exhaustive: each of the 576 products is again one of the elements,
        // and the table agrees with direct matrix multiplication.
        let g = CliffordGroup::new();
        let mut products = 0;
        for a in 0..24 {
            for b in 0..24 {
                let direct = g.element(a).then(g.element(b)).unwrap();
                let found = g.find(&direct).expect("closed under composition");
                assert_eq!(found, g.compose(a, b));
                assert!((direct.matrix() - g.element(found).matrix()).abs().max() < 1e-12);
                products += 1;
            }
        }
        assert_eq!(products, 576);
    }

    #[test]
    fn elements_are_distinct_signed_permutations() {
        let g = CliffordGroup::new();
        for i in 0..24 {
            let m = g.element(i).matrix();
            for r in 0..4 {
                let nonzero: Vec<f64> = m.row(r).iter().copied().filter(|x| *x != 0.0).collect();
                assert_eq!(nonzero.len(), 1);
                assert_eq!(nonzero[0].abs(), 1.0);
            }
            for j in 0..i {
                assert_ne!(g.element(i), g.element(j));
            }
        }
    }

    #[test]
    fn labels() {
        assert_eq!(CliffordGroup::index_of("C17").unwrap(), 17);
        assert!(CliffordGroup::index_of("C24").is_err());
        assert!(CliffordGroup::index_of("Gx").is_err());
        assert_eq!(CliffordGroup::label(3), "C3");
    }
}
