//! Ready-made simulate → fit → wildcard pipelines: randomized benchmarking
//! under dephasing, total error against the target model, and GST with
//! leakage. Every default that the pipelines rely on lives here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuits::{depth_ladder, rb_design, Circuit, CliffordGroup, GstDesign, RbDesign};
use crate::data::DataSet;
use crate::diamond::{diamond_numeric, pauli_diamond, pauli_probabilities, DiamondOptions};
use crate::error::{Error, Result};
use crate::fit::{fit_rb_decay, gauge_fix, mle_fit_gst, rb_survival, GstDiagnostics, GstOptions, RbFit};
use crate::noise::{
    build_depolarizing_model, depolarizing_model_with_spam, random_error_modelspec, ErrorModel, ErrorRanges, GateErrors, ModelKind,
    ModelSpec,
};
use crate::quantum::{dephasing, GateSet};
use crate::stats::{align, consistency_test, ConsistencyReport, DEFAULT_ALPHA};
use crate::wildcard::{
    solve_min_wildcard, Objective, SolveOptions, WildcardFamily, WildcardProblem, WildcardReport,
    WildcardSolution,
};

/// Seed offset separating circuit sampling from shot sampling.
const DATA_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

fn data_seed(seed: u64) -> u64 {
    seed ^ DATA_SEED_OFFSET
}

/// Wildcard solve plus consistency reports before and after augmentation.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub problem: WildcardProblem,
    pub solution: WildcardSolution,
    pub report: WildcardReport,
    pub pre: ConsistencyReport,
    pub post: ConsistencyReport,
}

/// Augments `model` with the minimal wildcard model of `family` for `data`.
pub fn analyze(
    model: &ErrorModel,
    data: &DataSet,
    family: WildcardFamily,
    objective: &Objective,
    alpha: f64,
) -> Result<Analysis> {
    let cd = align(model, data)?;
    let pre = consistency_test(&cd, &vec![0.0; cd.len()], alpha)?;
    let problem = WildcardProblem::new(cd, family, alpha)?;
    let solution = solve_min_wildcard(&problem, objective, &SolveOptions::default())?;
    let post = consistency_test(problem.data(), &problem.radii(&solution.w), alpha)?;
    let report = WildcardReport::build(&problem, objective, &solution)?;
    Ok(Analysis {
        problem,
        solution,
        report,
        pre,
        post,
    })
}

/// RB on single-qubit Cliffords, each followed by Z dephasing, analysed
/// with a fitted depolarizing model and a `(w_SPAM, w_gate)` family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbScenario {
    pub dephasing: f64,
    pub depths: Vec<usize>,
    pub per_depth: usize,
    pub shots: u64,
    pub alpha: f64,
    pub seed: u64,
    pub spam: RbSpamModel,
}

/// How state preparation and measurement enter the fitted depolarizing model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RbSpamModel {
    /// Perfect preparation and readout: success `½ + ½·η^d`.
    #[default]
    Ideal,
    /// Readout tuned to reproduce the fitted curve `A + B·η^d`.
    Fitted,
}

impl Default for RbScenario {
    fn default() -> Self {
        Self {
            dephasing: 0.02,
            depths: depth_ladder(512),
            per_depth: 60,
            shots: 100_000,
            alpha: DEFAULT_ALPHA,
            seed: 1,
            spam: RbSpamModel::Ideal,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RbOutcome {
    pub design: RbDesign,
    pub truth: ErrorModel,
    pub data: DataSet,
    pub survival: (Vec<f64>, Vec<f64>),
    pub fit: RbFit,
    pub model: ErrorModel,
    pub analysis: Analysis,
    /// `ε◇` between the dephasing and fitted depolarizing error channels.
    pub epsilon_diamond: f64,
}

impl RbScenario {
    pub fn truth(&self, group: &CliffordGroup) -> Result<ErrorModel> {
        let ideal = group.ideal_gateset();
        let deph = dephasing(self.dephasing)?;
        let gates = ideal
            .gates()
            .iter()
            .map(|(l, g)| Ok((l.clone(), g.then(&deph)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(ErrorModel::new(ModelKind::ProcessMatrix, GateSet::qubit_with_gates(gates)?, BTreeMap::new())
            .with_metadata("dephasing", self.dephasing))
    }

    pub fn design(&self, group: &CliffordGroup) -> Result<RbDesign> {
        rb_design(group, &self.depths, self.per_depth, self.seed)
    }

    pub fn simulate(&self, group: &CliffordGroup) -> Result<(RbDesign, ErrorModel, DataSet)> {
        let design = self.design(group)?;
        let truth = self.truth(group)?;
        let data = DataSet::simulate(&truth, &design.circuits, self.shots, data_seed(self.seed))?;
        Ok((design, truth, data))
    }

    /// RB decay fit and the depolarizing model built from it.
    pub fn fit(&self, design: &RbDesign, data: &DataSet) -> Result<(RbFit, (Vec<f64>, Vec<f64>), ErrorModel)> {
        let ideal = CliffordGroup::new().ideal_gateset();
        let survival = rb_survival(data, design)?;
        let fit = fit_rb_decay(&survival.0, &survival.1, None)?;
        let model = match self.spam {
            RbSpamModel::Ideal => build_depolarizing_model(&ideal, fit.r)?,
            RbSpamModel::Fitted => depolarizing_model_with_spam(&ideal, fit.r, fit.a, fit.b)?,
        };
        Ok((fit, survival, model))
    }

    /// `(w_SPAM, w_gate)` shared by all 24 Cliffords.
    pub fn family(&self) -> Result<WildcardFamily> {
        let labels: Vec<String> = (0..CliffordGroup::new().len()).map(CliffordGroup::label).collect();
        WildcardFamily::tied(&labels)
    }

    /// `ε◇` between the dephasing channel and depolarization at the fitted rate.
    pub fn epsilon_diamond(&self, fit: &RbFit) -> Result<f64> {
        let truth_err = pauli_probabilities(&dephasing(self.dephasing)?)?;
        let model_err = pauli_probabilities(&crate::quantum::depolarizing(2.0 * fit.r)?)?;
        pauli_diamond(&truth_err, &model_err)
    }

    pub fn run(&self) -> Result<RbOutcome> {
        let group = CliffordGroup::new();
        let (design, truth, data) = self.simulate(&group)?;
        let (fit, survival, model) = self.fit(&design, &data)?;
        let analysis = analyze(&model, &data, self.family()?, &Objective::L1, self.alpha)?;
        let epsilon_diamond = self.epsilon_diamond(&fit)?;
        Ok(RbOutcome {
            design,
            truth,
            data,
            survival,
            fit,
            model,
            analysis,
            epsilon_diamond,
        })
    }
}

/// GST-lite fit of the ideal `labels` gates to `data`, rotated into the gauge
/// closest to the targets.
pub fn fit_gst_model(labels: &[String], design: &GstDesign, data: &DataSet) -> Result<(ErrorModel, GstDiagnostics)> {
    let names: Vec<&str> = labels.iter().map(String::as_str).collect();
    let target = GateSet::qubit_target(&names)?;
    let fit = mle_fit_gst(&design.circuits(), data, &target, &GstOptions::default())?;
    let fixed = gauge_fix(&fit.gateset, &target)?;
    let model = ErrorModel::new(ModelKind::ProcessMatrix, fixed, BTreeMap::new()).with_metadata("fit", &fit.diagnostics);
    Ok((model, fit.diagnostics))
}

/// Per-gate `ε◇` between `model`'s gates and the ideal ones.
pub fn gate_diamond_distances(model: &GateSet, labels: &[String]) -> Result<BTreeMap<String, f64>> {
    let names: Vec<&str> = labels.iter().map(String::as_str).collect();
    let target = GateSet::qubit_target(&names)?;
    labels
        .iter()
        .map(|l| {
            let e = diamond_numeric(model.gate(l)?, target.gate(l)?, &DiamondOptions::default())?;
            Ok((l.clone(), e.epsilon))
        })
        .collect()
}

/// GST-style circuits simulated from random gate errors and analysed
/// against the ideal target gates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TotalErrorScenario {
    pub gates: Vec<String>,
    pub germs: Vec<Circuit>,
    pub max_depth: usize,
    pub shots: u64,
    pub ranges: ErrorRanges,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for TotalErrorScenario {
    fn default() -> Self {
        Self {
            gates: vec!["Gx".into(), "Gy".into()],
            germs: ["Gx", "Gy", "Gx;Gy", "Gx;Gx;Gy"]
                .iter()
                .map(|s| s.parse().expect("valid germ"))
                .collect(),
            max_depth: 64,
            shots: 1000,
            ranges: ErrorRanges::default(),
            alpha: DEFAULT_ALPHA,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TotalErrorOutcome {
    pub spec: ModelSpec,
    pub design: GstDesign,
    pub truth: ErrorModel,
    pub data: DataSet,
    pub target: ErrorModel,
    pub analysis: Analysis,
    /// Per-gate `ε◇` between the true and ideal gates.
    pub epsilon_diamond: BTreeMap<String, f64>,
}

impl TotalErrorScenario {
    fn labels(&self) -> Vec<&str> {
        self.gates.iter().map(String::as_str).collect()
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        random_error_modelspec(self.seed, &self.labels(), &self.ranges)
    }

    pub fn design(&self) -> Result<GstDesign> {
        GstDesign::standard(self.germs.clone(), self.max_depth)
    }

    pub fn simulate(&self) -> Result<(ModelSpec, GstDesign, ErrorModel, DataSet)> {
        let spec = self.spec()?;
        let design = self.design()?;
        let truth = spec.build()?;
        let data = DataSet::simulate(&truth, &design.circuits(), self.shots, data_seed(self.seed))?;
        Ok((spec, design, truth, data))
    }

    pub fn target(&self) -> Result<ErrorModel> {
        ErrorModel::target(&self.labels())
    }

    /// One rate per gate plus `w_SPAM`.
    pub fn family(&self) -> Result<WildcardFamily> {
        WildcardFamily::per_gate(&self.gates, true)
    }

    pub fn run(&self) -> Result<TotalErrorOutcome> {
        let (spec, design, truth, data) = self.simulate()?;
        let target = self.target()?;
        let analysis = analyze(&target, &data, self.family()?, &Objective::L1, self.alpha)?;
        let epsilon_diamond = gate_diamond_distances(truth.gateset(), &self.gates)?;
        Ok(TotalErrorOutcome {
            spec,
            design,
            truth,
            data,
            target,
            analysis,
            epsilon_diamond,
        })
    }
}

/// GST on `Gi, Gx, Gy, Gz` where `Gi` and `Gz` also leak into a level read
/// out as "0"; analysed with a GST-lite Markovian fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeakageScenario {
    pub gates: Vec<String>,
    pub leakage: BTreeMap<String, f64>,
    pub depolarizing: f64,
    pub rotation_angle: f64,
    pub germs: Vec<Circuit>,
    pub max_depth: usize,
    pub shots: u64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for LeakageScenario {
    fn default() -> Self {
        Self {
            gates: ["Gi", "Gx", "Gy", "Gz"].iter().map(|s| s.to_string()).collect(),
            leakage: [("Gi".to_string(), 1e-4), ("Gz".to_string(), 3e-4)].into_iter().collect(),
            depolarizing: 1e-3,
            rotation_angle: 1e-2,
            germs: ["Gi", "Gx", "Gy", "Gz"].iter().map(|s| s.parse().expect("valid germ")).collect(),
            max_depth: 256,
            shots: 10_000,
            alpha: DEFAULT_ALPHA,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LeakageOutcome {
    pub spec: ModelSpec,
    pub design: GstDesign,
    pub truth: ErrorModel,
    pub data: DataSet,
    pub fit: ErrorModel,
    pub diagnostics: GstDiagnostics,
    pub analysis: Analysis,
    /// Per-gate `ε◇` between the gauge-fixed fit and the ideal gates.
    pub epsilon_diamond: BTreeMap<String, f64>,
}

impl LeakageScenario {
    pub fn spec(&self) -> Result<ModelSpec> {
        if let Some(bad) = self.leakage.keys().find(|k| !self.gates.contains(k)) {
            return Err(Error::UnknownGate(bad.clone()));
        }
        let gates = self
            .gates
            .iter()
            .map(|l| {
                (
                    l.clone(),
                    GateErrors {
                        depolarizing: self.depolarizing,
                        rotation_angle: self.rotation_angle,
                        dephasing: 0.0,
                        leakage: self.leakage.get(l).copied().unwrap_or(0.0),
                    },
                )
            })
            .collect();
        let spec = ModelSpec {
            gates,
            ..ModelSpec::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn design(&self) -> Result<GstDesign> {
        GstDesign::standard(self.germs.clone(), self.max_depth)
    }

    pub fn simulate(&self) -> Result<(ModelSpec, GstDesign, ErrorModel, DataSet)> {
        let spec = self.spec()?;
        let design = self.design()?;
        let truth = spec.build()?;
        let data = DataSet::simulate(&truth, &design.circuits(), self.shots, data_seed(self.seed))?;
        Ok((spec, design, truth, data))
    }

    /// GST-lite fit, gauge-fixed to the targets.
    pub fn fit(&self, design: &GstDesign, data: &DataSet) -> Result<(ErrorModel, GstDiagnostics)> {
        fit_gst_model(&self.gates, design, data)
    }

    /// One rate per gate plus `w_SPAM`.
    pub fn family(&self) -> Result<WildcardFamily> {
        WildcardFamily::per_gate(&self.gates, true)
    }

    pub fn run(&self) -> Result<LeakageOutcome> {
        let (spec, design, truth, data) = self.simulate()?;
        let (fit, diagnostics) = self.fit(&design, &data)?;
        let analysis = analyze(&fit, &data, self.family()?, &Objective::L1, self.alpha)?;
        let epsilon_diamond = gate_diamond_distances(fit.gateset(), &self.gates)?;
        Ok(LeakageOutcome {
            spec,
            design,
            truth,
            data,
            fit,
            diagnostics,
            analysis,
            epsilon_diamond,
        })
    }
}
