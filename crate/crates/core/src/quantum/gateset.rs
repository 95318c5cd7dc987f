use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::Basis;
use super::channels::standard_gate;
use super::superop::{Effect, StateVec, SuperOp};
use crate::circuits::Circuit;
use crate::dist::ProbDist;
use crate::error::{Error, Result};

/// Tolerance below which negative probabilities are clipped silently.
pub const NEGATIVE_PROB_TOL: f64 = 1e-12;

/// Labelled gates plus a state preparation and a POVM, all in one basis.
///
/// Outcomes are ordered as listed in `povm`.
#[derive(Clone, Debug, PartialEq)]
pub struct GateSet {
    basis: Basis,
    prep: StateVec,
    povm: Vec<(String, Effect)>,
    gates: BTreeMap<String, SuperOp>,
}

impl GateSet {
    pub fn new(
        basis: Basis,
        prep: StateVec,
        povm: Vec<(String, Effect)>,
        gates: BTreeMap<String, SuperOp>,
    ) -> Result<Self> {
        let mismatch = |found: Basis| Error::DimensionMismatch {
            expected: basis.dim(),
            found: found.dim(),
        };
        if prep.basis() != basis {
            return Err(mismatch(prep.basis()));
        }
        if povm.is_empty() {
            return Err(Error::InvalidInput("POVM has no effects".into()));
        }
        for (label, e) in &povm {
            if e.basis() != basis {
                return Err(mismatch(e.basis()));
            }
            if povm.iter().filter(|(l, _)| l == label).count() > 1 {
                return Err(Error::InvalidInput(format!("duplicate outcome `{label}`")));
            }
        }
        for g in gates.values() {
            if g.basis() != basis {
                return Err(mismatch(g.basis()));
            }
        }
        Ok(Self {
            basis,
            prep,
            povm,
            gates,
        })
    }

    /// Ideal single-qubit gate set: prep `|0⟩`, Z-basis readout with
    /// outcomes `"0"`, `"1"`, and the given standard gates.
    pub fn qubit_target(labels: &[&str]) -> Result<Self> {
        let gates = labels
            .iter()
            .map(|l| {
                standard_gate(l)
                    .map(|g| (l.to_string(), g))
                    .ok_or_else(|| Error::UnknownGate(l.to_string()))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::qubit_with_gates(gates)
    }

    /// Prep `|0⟩` and Z-basis readout around arbitrary qubit gates.
    pub fn qubit_with_gates(gates: BTreeMap<String, SuperOp>) -> Result<Self> {
        let b = Basis::Pauli;
        Self::new(
            b,
            StateVec::basis_state(b, 0),
            vec![
                ("0".into(), Effect::projector(b, &[0])),
                ("1".into(), Effect::projector(b, &[1])),
            ],
            gates,
        )
    }

    /// Qutrit gate set with prep `|0⟩`; the leaked level `|2⟩` reads out as `"0"`.
    pub fn qutrit_with_gates(gates: BTreeMap<String, SuperOp>) -> Result<Self> {
        let b = Basis::GellMann;
        Self::new(
            b,
            StateVec::basis_state(b, 0),
            vec![
                ("0".into(), Effect::projector(b, &[0, 2])),
                ("1".into(), Effect::projector(b, &[1])),
            ],
            gates,
        )
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn prep(&self) -> &StateVec {
        &self.prep
    }

    pub fn povm(&self) -> &[(String, Effect)] {
        &self.povm
    }

    pub fn outcome_labels(&self) -> Vec<String> {
        self.povm.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn gates(&self) -> &BTreeMap<String, SuperOp> {
        &self.gates
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.gates.keys().map(String::as_str)
    }

    pub fn gate(&self, label: &str) -> Result<&SuperOp> {
        self.gates
            .get(label)
            .ok_or_else(|| Error::UnknownGate(label.to_string()))
    }

    pub fn set_gate(&mut self, label: impl Into<String>, gate: SuperOp) -> Result<()> {
        if gate.basis() != self.basis {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: gate.dim(),
            });
        }
        self.gates.insert(label.into(), gate);
        Ok(())
    }

    pub fn set_prep(&mut self, prep: StateVec) -> Result<()> {
        if prep.basis() != self.basis {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: prep.basis().dim(),
            });
        }
        self.prep = prep;
        Ok(())
    }

    pub fn set_effect(&mut self, index: usize, effect: Effect) -> Result<()> {
        if effect.basis() != self.basis {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: effect.basis().dim(),
            });
        }
        self.povm[index].1 = effect;
        Ok(())
    }

    pub(crate) fn gates_mut(&mut self) -> &mut BTreeMap<String, SuperOp> {
        &mut self.gates
    }



    /// Checks that every label in `circuit` resolves.
    pub fn covers(&self, circuit: &Circuit) -> Result<()> {
        match circuit.layers().iter().find(|l| !self.gates.contains_key(*l)) {
            Some(l) => Err(Error::UnknownGate(l.clone())),
            None => Ok(()),
        }
    }

    /// Net superoperator of a circuit.
    pub fn circuit_superop(&self, circuit: &Circuit) -> Result<SuperOp> {
        let mut acc = SuperOp::identity(self.basis);
        for l in circuit.layers() {
            acc = acc.then(self.gate(l)?)?;
        }
        Ok(acc)
    }

    /// Final state coefficients after running `circuit` on the prep.
    pub fn final_state(&self, circuit: &Circuit) -> Result<DVector<f64>> {
        let mut state = self.prep.coeffs().clone();
        let mut scratch = DVector::zeros(state.len());
        for l in circuit.layers() {
            scratch.gemv(1.0, self.gate(l)?.matrix(), &state, 0.0);
            std::mem::swap(&mut state, &mut scratch);
        }
        Ok(state)
    }

    /// Unclipped outcome probabilities `e_k · s`.
    pub fn raw_probs(&self, circuit: &Circuit) -> Result<Vec<f64>> {
        let state = self.final_state(circuit)?;
        Ok(self.povm.iter().map(|(_, e)| e.coeffs().dot(&state)).collect())
    }

    /// Outcome distribution of `circuit`.
    ///
    /// Negative entries are clipped to zero and the vector renormalized;
    /// violations larger than [`NEGATIVE_PROB_TOL`] are logged as
    /// model-physicality warnings.
    pub fn circuit_probs(&self, circuit: &Circuit) -> Result<ProbDist> {
        let raw = self.raw_probs(circuit)?;
        let (dist, min) = ProbDist::clipped(&raw);
        if min < -NEGATIVE_PROB_TOL {
            log::warn!("non-physical prediction for `{circuit}`: min probability {min:e}");
        }
        Ok(dist)
    }

    pub fn to_doc(&self) -> GateSetDoc {
        let row_major = |m: &DMatrix<f64>| {
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect()
        };
        GateSetDoc {
            basis: self.basis,
            dim: self.dim(),
            prep: self.prep.coeffs().iter().copied().collect(),
            povm: self
                .povm
                .iter()
                .map(|(l, e)| (l.clone(), e.coeffs().iter().copied().collect()))
                .collect(),
            gates: self
                .gates
                .iter()
                .map(|(l, g)| (l.clone(), row_major(g.matrix())))
                .collect(),
        }
    }

    pub fn from_doc(doc: &GateSetDoc) -> Result<Self> {
        let basis = doc.basis;
        if basis.dim() != doc.dim {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: doc.dim,
            });
        }
        let n = basis.size();
        let prep = StateVec::from_coeffs(basis, doc.prep.clone())?;
        let povm = doc
            .povm
            .iter()
            .map(|(l, c)| Ok((l.clone(), Effect::from_coeffs(basis, c.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        let gates = doc
            .gates
            .iter()
            .map(|(l, rows)| {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Parse(format!("gate `{l}` is not a {n}x{n} matrix")));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Ok((
                    l.clone(),
                    SuperOp::from_matrix(basis, DMatrix::from_row_slice(n, n, &flat))?,
                ))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::new(basis, prep, povm, gates)
    }
}

/// Serialized gate set: coefficient vectors for prep and POVM, and row-major
/// superoperator matrices per gate label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSetDoc {
    pub basis: Basis,
    pub dim: usize,
    pub prep: Vec<f64>,
    pub povm: BTreeMap<String, Vec<f64>>,
    pub gates: BTreeMap<String, Vec<Vec<f64>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::channels::{depolarizing, embed_leakage, rotation, Axis};
    use proptest::prelude::*;

    fn c(text: &str) -> Circuit {
        text.parse().unwrap()
    }

    #[test]
    fn ideal_circuit_probabilities() {
        let gs = GateSet::qubit_target(&["Gi", "Gx", "Gy", "Gz"]).unwrap();
        let p = gs.circuit_probs(&Circuit::empty()).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0]);
        let p = gs.circuit_probs(&c("Gx")).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let p = gs.circuit_probs(&c("Gx;Gx")).unwrap();
        assert!(p[0].abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        let p = gs.circuit_probs(&c("Gx;Gx;Gx;Gx")).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_label_is_an_error() {
        let gs = GateSet::qubit_target(&["Gx"]).unwrap();
        assert!(matches!(gs.circuit_probs(&c("Gx;Gq")), Err(Error::UnknownGate(l)) if l == "Gq"));
        assert!(GateSet::qubit_target(&["Gfoo"]).is_err());
    }

    #[test]
    fn leaked_population_reads_as_zero() {
        let mut gates = BTreeMap::new();
        gates.insert("Gi".to_string(), embed_leakage(&SuperOp::identity(Basis::Pauli), 1e-4).unwrap());
        gates.insert(
            "Gx".to_string(),
            embed_leakage(&rotation(Axis::X, std::f64::consts::PI), 0.0).unwrap(),
        );
        let gs = GateSet::qutrit_with_gates(gates).unwrap();
        let idles = Circuit::new(vec!["Gi"; 1000]).unwrap();
        let p = gs.circuit_probs(&idles).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        // Flip after leaking: only the unleaked part moves to "1".
        let flipped = idles.concat(&c("Gx"));
        let p = gs.circuit_probs(&flipped).unwrap();
        let leaked = 1.0 - (1.0 - 1e-4f64).powi(1000);
        assert!((p[0] - leaked).abs() < 1e-12);
    }

    #[test]
    fn document_round_trip() {
        let mut gs = GateSet::qubit_target(&["Gx", "Gy"]).unwrap();
        let noisy = gs.gate("Gx").unwrap().then(&depolarizing(0.01).unwrap()).unwrap();
        gs.set_gate("Gx", noisy).unwrap();
        let json = serde_json::to_string(&gs.to_doc()).unwrap();
        let back = GateSet::from_doc(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, gs);
    }

    fn arb_gate() -> impl Strategy<Value = SuperOp> {
        (0usize..3, -3.2f64..3.2, 0.0f64..0.3).prop_map(|(axis, angle, q)| {
            let axis = [Axis::X, Axis::Y, Axis::Z][axis];
            rotation(axis, angle).then(&depolarizing(q).unwrap()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn probabilities_normalized_and_composition_consistent(
            g1 in arb_gate(), g2 in arb_gate(), reps in 0usize..20
        ) {
            let mut gates = BTreeMap::new();
            gates.insert("Ga".to_string(), g1.clone());
            gates.insert("Gb".to_string(), g2.clone());
            gates.insert("Gab".to_string(), g1.then(&g2).unwrap());
            let gs = GateSet::qubit_with_gates(gates).unwrap();
            let long = c("Ga;Gb").repeat(reps);
            let raw = gs.raw_probs(&long).unwrap();
            prop_assert!((raw.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(raw.iter().all(|p| *p >= -1e-12));
            let fused = gs.circuit_probs(&c("Gab").repeat(reps)).unwrap();
            let split = gs.circuit_probs(&long).unwrap();
            for k in 0..2 {
                prop_assert!((fused[k] - split[k]).abs() < 1e-12);
            }
        }
    }
}
