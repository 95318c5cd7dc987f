//! Error models: maps from circuits to predicted outcome distributions.

use std::collections::{BTreeMap, HashMap};
use std::sync::RwLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::dist::ProbDist;
use crate::error::{Error, Result};
use crate::quantum::{
    channels::standard_gate_axis, dephasing, depolarizing, embed_leakage, rotation, Axis, Basis,
    Effect, GateSet, GateSetDoc, StateVec, SuperOp,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Target,
    Depolarizing,
    ProcessMatrix,
    Leakage,
}

/// A gate-set-backed error model with a per-circuit prediction cache.
#[derive(Debug)]
pub struct ErrorModel {
    kind: ModelKind,
    gateset: GateSet,
    metadata: BTreeMap<String, serde_json::Value>,
    cache: RwLock<HashMap<String, ProbDist>>,
}

impl Clone for ErrorModel {
    fn clone(&self) -> Self {
        Self::new(self.kind, self.gateset.clone(), self.metadata.clone())
    }
}

impl PartialEq for ErrorModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.gateset == other.gateset && self.metadata == other.metadata
    }
}

impl ErrorModel {
    pub fn new(
        kind: ModelKind,
        gateset: GateSet,
        metadata: BTreeMap<String, serde_json::Value>,
    ) -> Self {
        Self {
            kind,
            gateset,
            metadata,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// Ideal standard qubit gates.
    pub fn target(labels: &[&str]) -> Result<Self> {
        Ok(Self::new(
            ModelKind::Target,
            GateSet::qubit_target(labels)?,
            BTreeMap::new(),
        ))
    }

    pub fn with_metadata(mut self, key: &str, value: impl Serialize) -> Self {
        let value = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn gateset(&self) -> &GateSet {
        &self.gateset
    }

    pub fn metadata(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.metadata
    }

    pub fn outcome_labels(&self) -> Vec<String> {
        self.gateset.outcome_labels()
    }

    /// Predicted distribution `M(C)`; cached by canonical circuit text.
    pub fn predict(&self, circuit: &Circuit) -> Result<ProbDist> {
        let key = circuit.to_string();
        if let Some(p) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(p.clone());
        }
        let p = self.gateset.circuit_probs(circuit)?;
        self.cache
            .write()
            .expect("cache lock")
            .insert(key, p.clone());
        Ok(p)
    }

    pub fn to_doc(&self) -> ErrorModelDoc {
        ErrorModelDoc {
            kind: self.kind,
            metadata: self.metadata.clone(),
            gateset: self.gateset.to_doc(),
        }
    }

    pub fn from_doc(doc: &ErrorModelDoc) -> Result<Self> {
        Ok(Self::new(
            doc.kind,
            GateSet::from_doc(&doc.gateset)?,
            doc.metadata.clone(),
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(text)?)
    }
}

/// Serialized error model: the gate-set document plus `kind` and metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModelDoc {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
    #[serde(flatten)]
    pub gateset: GateSetDoc,
}

/// Every gate of `ideal` followed by uniform depolarization with RB error
/// rate `r`, i.e. PTM `diag(1, η, η, η)` with `η = 1 − 2r`.
pub fn build_depolarizing_model(ideal: &GateSet, r: f64) -> Result<ErrorModel> {
    if !(0.0..=0.5).contains(&r) {
        return Err(Error::OutOfRange {
            what: "RB error rate",
            value: r,
            range: "[0, 1/2]",
        });
    }
    if ideal.basis() != Basis::Pauli {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: ideal.dim(),
        });
    }
    let depol = depolarizing(2.0 * r)?;
    let mut gs = ideal.clone();
    for g in gs.gates_mut().values_mut() {
        *g = g.then(&depol)?;
    }
    Ok(ErrorModel::new(ModelKind::Depolarizing, gs, BTreeMap::new()).with_metadata("r", r))
}

/// Depolarizing model whose readout reproduces the RB curve `A + B·η^d` on
/// identity-compiling sequences: `E_0 = A·𝟙 + B·Z` in coefficient form.
pub fn depolarizing_model_with_spam(ideal: &GateSet, r: f64, a: f64, b: f64) -> Result<ErrorModel> {
    let mut model = build_depolarizing_model(ideal, r)?;
    let basis = Basis::Pauli;
    let e0 = Effect::from_coeffs(basis, vec![a, 0.0, 0.0, b])?;
    let e1 = Effect::from_coeffs(basis, vec![1.0 - a, 0.0, 0.0, -b])?;
    model.gateset.set_effect(0, e0)?;
    model.gateset.set_effect(1, e1)?;
    Ok(model.with_metadata("A", a).with_metadata("B", b))
}

/// Error parameters of one gate. The noisy gate is the ideal gate, then an
/// over-rotation about its own axis (Z for the idle), then dephasing, then
/// depolarization, then leakage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateErrors {
    pub depolarizing: f64,
    pub rotation_angle: f64,
    pub dephasing: f64,
    pub leakage: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub gates: BTreeMap<String, GateErrors>,
    /// Depolarization applied to the prepared state.
    pub prep_depolarizing: f64,
    /// Depolarization applied before the readout.
    pub meas_depolarizing: f64,
}

fn check(what: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if !(lo..=hi).contains(&value) {
        return Err(Error::OutOfRange { what, value, range });
    }
    Ok(())
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        for e in self.gates.values() {
            check("depolarizing strength", e.depolarizing, 0.0, 4.0 / 3.0, "[0, 4/3]")?;
            check("dephasing probability", e.dephasing, 0.0, 1.0, "[0, 1]")?;
            check("leakage rate", e.leakage, 0.0, 1.0, "[0, 1]")?;
            if !e.rotation_angle.is_finite() {
                return Err(Error::InvalidInput("non-finite rotation angle".into()));
            }
        }
        check("prep depolarizing", self.prep_depolarizing, 0.0, 1.0, "[0, 1]")?;
        check("meas depolarizing", self.meas_depolarizing, 0.0, 1.0, "[0, 1]")?;
        Ok(())
    }

    pub fn has_leakage(&self) -> bool {
        self.gates.values().any(|e| e.leakage > 0.0)
    }

    /// Noisy single-qubit version of one standard gate (leakage excluded).
    pub fn qubit_gate(label: &str, errors: &GateErrors) -> Result<SuperOp> {
        let ideal = standard_gate(label)?;
        let axis = standard_gate_axis(label).unwrap_or(Axis::Z);
        ideal
            .then(&rotation(axis, errors.rotation_angle))?
            .then(&dephasing(errors.dephasing)?)?
            .then(&depolarizing(errors.depolarizing)?)
    }

    /// Builds the model: a qutrit leakage model if any gate leaks, otherwise
    /// a single-qubit process-matrix model.
    pub fn build(&self) -> Result<ErrorModel> {
        self.validate()?;
        let qubit_gates = self
            .gates
            .iter()
            .map(|(l, e)| Ok((l.clone(), Self::qubit_gate(l, e)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let prep_depol = depolarizing(self.prep_depolarizing)?;
        let meas_depol = depolarizing(self.meas_depolarizing)?;
        let (kind, gs) = if self.has_leakage() {
            let gates = qubit_gates
                .iter()
                .map(|(l, g)| Ok((l.clone(), embed_leakage(g, self.gates[l].leakage)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let mut gs = GateSet::qutrit_with_gates(gates)?;
            let prep = embed_leakage(&prep_depol, 0.0)?.apply(gs.prep())?;
            gs.set_prep(prep)?;
            let meas = embed_leakage(&meas_depol, 0.0)?;
            heisenberg(&mut gs, &meas)?;
            (ModelKind::Leakage, gs)
        } else {
            let mut gs = GateSet::qubit_with_gates(qubit_gates)?;
            let prep = prep_depol.apply(gs.prep())?;
            gs.set_prep(prep)?;
            heisenberg(&mut gs, &meas_depol)?;
            (ModelKind::ProcessMatrix, gs)
        };
        Ok(ErrorModel::new(kind, gs, BTreeMap::new()).with_metadata("spec", self))
    }
}

fn standard_gate(label: &str) -> Result<SuperOp> {
    crate::quantum::standard_gate(label).ok_or_else(|| Error::UnknownGate(label.to_string()))
}

/// Folds a pre-measurement channel into the POVM effects.
fn heisenberg(gs: &mut GateSet, channel: &SuperOp) -> Result<()> {
    let basis = gs.basis();
    for k in 0..gs.povm().len() {
        let coeffs = channel.matrix().transpose() * gs.povm()[k].1.coeffs();
        gs.set_effect(k, Effect::from_coeffs(basis, coeffs.iter().copied().collect())?)?;
    }
    Ok(())
}

/// Sampling ranges for [`random_error_modelspec`]. Each range is `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorRanges {
    pub depolarizing: [f64; 2],
    pub rotation_angle: [f64; 2],
    pub spam_depolarizing: [f64; 2],
}

impl Default for ErrorRanges {
    fn default() -> Self {
        Self {
            depolarizing: [0.0, 0.02],
            rotation_angle: [-0.05, 0.05],
            spam_depolarizing: [0.0, 0.0],
        }
    }
}

fn draw<R: Rng>(rng: &mut R, range: [f64; 2]) -> Result<f64> {
    let [lo, hi] = range;
    if !(lo <= hi) {
        return Err(Error::InvalidInput(format!("empty range [{lo}, {hi}]")));
    }
    Ok(if lo == hi { lo } else { rng.random_range(lo..=hi) })
}

/// Independent uniform error parameters for each gate, reproducible under
/// `seed`.
pub fn random_error_modelspec(seed: u64, labels: &[&str], ranges: &ErrorRanges) -> Result<ModelSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = BTreeMap::new();
    for l in labels {
        let depol = draw(&mut rng, ranges.depolarizing)?;
        let angle = draw(&mut rng, ranges.rotation_angle)?;
        gates.insert(
            l.to_string(),
            GateErrors {
                depolarizing: depol,
                rotation_angle: angle,
                ..GateErrors::default()
            },
        );
    }
    let spec = ModelSpec {
        gates,
        prep_depolarizing: draw(&mut rng, ranges.spam_depolarizing)?,
        meas_depolarizing: draw(&mut rng, ranges.spam_depolarizing)?,
    };
    spec.validate()?;
    Ok(spec)
}

/// Prep state `|0⟩` depolarized by `q`.
pub fn depolarized_zero(q: f64) -> Result<StateVec> {
    depolarizing(q)?.apply(&StateVec::basis_state(Basis::Pauli, 0))
}
