//! Per-gate wildcard error budgets.
//!
//! A wildcard vector `w` assigns each circuit the TVD budget
//! `w_C = n(C)·w`, where `n(C)` counts gate occurrences (plus one for state
//! preparation and measurement). The feasible set of vectors whose
//! prediction balls pass both branches of the consistency test is convex;
//! the solver picks a point of it minimizing a linear objective.

pub mod lp;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::stats::{consistency_test, min_llr_slope, min_tvd_budget, CircuitData, ConsistencyReport, Thresholds};
use lp::Constraint;

/// Parameter label used for the state-preparation-and-measurement rate.
pub const SPAM: &str = "SPAM";

/// Maps each circuit to its count vector `n(C)` over the wildcard parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WildcardFamily {
    params: Vec<String>,
    assignment: BTreeMap<String, usize>,
    spam: Option<usize>,
}

impl WildcardFamily {
    /// `assignment` sends each gate label to a parameter index; `spam`, when
    /// present, is counted once per circuit.
    pub fn new(params: Vec<String>, assignment: BTreeMap<String, usize>, spam: Option<usize>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidInput("wildcard family has no parameters".into()));
        }
        let n = params.len();
        if let Some(&bad) = assignment.values().chain(spam.iter()).find(|&&i| i >= n) {
            return Err(Error::InvalidInput(format!("parameter index {bad} out of range")));
        }
        Ok(Self {
            params,
            assignment,
            spam,
        })
    }

    /// One rate per gate label, preceded by a SPAM rate when `with_spam`.
    pub fn per_gate<S: AsRef<str>>(labels: &[S], with_spam: bool) -> Result<Self> {
        let offset = usize::from(with_spam);
        let mut params: Vec<String> = Vec::new();
        if with_spam {
            params.push(SPAM.to_string());
        }
        let mut assignment = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            params.push(l.as_ref().to_string());
            assignment.insert(l.as_ref().to_string(), i + offset);
        }
        Self::new(params, assignment, with_spam.then_some(0))
    }

    /// `(w_SPAM, w_gate)` with every gate sharing one rate, so that
    /// `w_C = w_SPAM + d_C·w_gate`.
    pub fn tied<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let assignment = labels.iter().map(|l| (l.as_ref().to_string(), 1)).collect();
        Self::new(vec![SPAM.to_string(), "gate".to_string()], assignment, Some(0))
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn spam_index(&self) -> Option<usize> {
        self.spam
    }

    pub fn index_of(&self, param: &str) -> Option<usize> {
        self.params.iter().position(|p| p == param)
    }

    /// `n(C)`: occurrences of each parameter's gates, plus one SPAM count.
    pub fn gate_counts(&self, circuit: &Circuit) -> Result<Vec<f64>> {
        let mut n = vec![0.0; self.params.len()];
        if let Some(s) = self.spam {
            n[s] += 1.0;
        }
        for g in circuit.layers() {
            let &i = self
                .assignment
                .get(g)
                .ok_or_else(|| Error::UnknownGate(g.clone()))?;
            n[i] += 1.0;
        }
        Ok(n)
    }
}

/// Linear objective `c·w` with `c ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    L1,
    Weighted(Vec<f64>),
}

impl Objective {
    pub fn weights(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Objective::L1 => Ok(vec![1.0; n]),
            Objective::Weighted(c) => {
                if c.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: c.len(),
                    });
                }
                if c.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidInput("objective weights must be finite and nonnegative".into()));
                }
                Ok(c.clone())
            }
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    /// `l1` or `weighted:<c1>,<c2>,…`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "l1" {
            return Ok(Objective::L1);
        }
        let rest = s
            .strip_prefix("weighted:")
            .ok_or_else(|| Error::Parse(format!("unknown objective `{s}`")))?;
        let c = rest
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("weight `{x}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Objective::Weighted(c))
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Objective::L1 => f.write_str("l1"),
            Objective::Weighted(c) => {
                let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                write!(f, "weighted:{}", parts.join(","))
            }
        }
    }
}

/// Data, predictions, thresholds and per-circuit budgets for one wildcard fit.
#[derive(Clone, Debug)]
pub struct WildcardProblem {
    data: Vec<CircuitData>,
    family: WildcardFamily,
    counts: Vec<Vec<f64>>,
    thresholds: Thresholds,
    budgets: Vec<f64>,
}

impl WildcardProblem {
    pub fn new(data: Vec<CircuitData>, family: WildcardFamily, alpha: f64) -> Result<Self> {
        let counts = data
            .iter()
            .map(|d| family.gate_counts(&d.circuit))
            .collect::<Result<Vec<_>>>()?;
        let thresholds = Thresholds::for_data(&data, alpha)?;
        let budgets = data
            .par_iter()
            .zip(thresholds.per_circuit.par_iter())
            .map(|(d, &thr)| min_tvd_budget(&d.f, &d.p, d.shots, thr))
            .collect();
        Ok(Self {
            data,
            family,
            counts,
            thresholds,
            budgets,
        })
    }

    pub fn data(&self) -> &[CircuitData] {
        &self.data
    }

    pub fn family(&self) -> &WildcardFamily {
        &self.family
    }

    pub fn counts(&self) -> &[Vec<f64>] {
        &self.counts
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    /// Smallest per-circuit radii `t_C` passing each circuit's own test.
    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn alpha(&self) -> f64 {
        self.thresholds.alpha
    }

    fn check_len(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.family.len() {
            return Err(Error::DimensionMismatch {
                expected: self.family.len(),
                found: w.len(),
            });
        }
        if w.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidInput("wildcard rates must be nonnegative".into()));
        }
        Ok(())
    }

    /// Region radii `min(n(C)·w, 1)`.
    pub fn radii(&self, w: &[f64]) -> Vec<f64> {
        self.counts
            .iter()
            .map(|n| n.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().min(1.0))
            .collect()
    }

    /// Per-circuit `λ*_C(n(C)·w)`.
    pub fn llr_stars(&self, w: &[f64]) -> Vec<f64> {
        let radii = self.radii(w);
        self.data
            .par_iter()
            .zip(radii.par_iter())
            .map(|(d, &t)| d.min_llr(t))
            .collect()
    }

    /// `A(w) = Σ_C λ*_C(n(C)·w)`.
    pub fn aggregate(&self, w: &[f64]) -> f64 {
        self.llr_stars(w).iter().sum()
    }

    /// Finite-difference gradient of `A` (central differences, step `h` in `t`).
    pub fn aggregate_gradient(&self, w: &[f64], h: f64) -> Vec<f64> {
        let radii = self.radii(w);
        let slopes: Vec<f64> = self
            .data
            .par_iter()
            .zip(radii.par_iter())
            .map(|(d, &t)| if t >= 1.0 { 0.0 } else { min_llr_slope(&d.f, &d.p, t, d.shots, h) })
            .collect();
        let mut g = vec![0.0; w.len()];
        for (n, s) in self.counts.iter().zip(&slopes) {
            for (gi, ni) in g.iter_mut().zip(n) {
                *gi += s * ni;
            }
        }
        g
    }

    /// Both branches of the consistency test at `w`.
    pub fn is_feasible(&self, w: &[f64]) -> Result<bool> {
        self.check_len(w)?;
        let stars = self.llr_stars(w);
        let per = stars
            .iter()
            .zip(&self.thresholds.per_circuit)
            .all(|(s, t)| s <= t);
        Ok(per && stars.iter().sum::<f64>() <= self.thresholds.aggregate)
    }

    /// Full consistency report for the regions of radius `n(C)·w`.
    pub fn feasible(&self, w: &[f64]) -> Result<(bool, ConsistencyReport)> {
        self.check_len(w)?;
        let rep = consistency_test(&self.data, &self.radii(w), self.alpha())?;
        Ok((rep.pass, rep))
    }
}

/// Convenience wrapper around [`WildcardProblem::feasible`].
pub fn feasible(
    w: &[f64],
    data: Vec<CircuitData>,
    family: WildcardFamily,
    alpha: f64,
) -> Result<(bool, ConsistencyReport)> {
    WildcardProblem::new(data, family, alpha)?.feasible(w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Among optima of the main objective, prefer the smallest SPAM rate.
    pub prefer_zero_spam: bool,
    /// Relative tolerance on the aggregate constraint.
    pub aggregate_tol: f64,
    /// Finite-difference step in `t` for aggregate subgradients.
    pub fd_step: f64,
    pub max_cuts: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            prefer_zero_spam: true,
            aggregate_tol: 1e-9,
            fd_step: 1e-7,
            max_cuts: 2000,
        }
    }
}

/// One cutting-plane iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutStep {
    pub w: Vec<f64>,
    pub objective: f64,
    #[serde(with = "crate::serde_f64")]
    pub aggregate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WildcardSolution {
    pub params: Vec<String>,
    pub w: Vec<f64>,
    pub weights: Vec<f64>,
    pub objective: f64,
    /// Circuits whose linear budget constraint is active at the solution.
    pub active: Vec<Circuit>,
    /// Whether the aggregate constraint needed cutting planes.
    pub aggregate_active: bool,
    #[serde(with = "crate::serde_f64")]
    pub aggregate: f64,
    pub aggregate_threshold: f64,
    pub trace: Vec<CutStep>,
}

impl WildcardSolution {
    pub fn get(&self, param: &str) -> Option<f64> {
        self.params.iter().position(|p| p == param).map(|i| self.w[i])
    }
}

/// Minimizes `c·w` over the feasible set.
///
/// The per-circuit branch is the linear system `n(C)·w ≥ t_C`; the
/// aggregate branch is handled by Kelley cutting planes on the convex
/// function `A(w)`.
pub fn solve_min_wildcard(problem: &WildcardProblem, objective: &Objective, opts: &SolveOptions) -> Result<WildcardSolution> {
    let k = problem.family.len();
    let c = objective.weights(k)?;
    let mut objectives = vec![c.clone()];
    if opts.prefer_zero_spam {
        if let Some(s) = problem.family.spam_index() {
            let mut e = vec![0.0; k];
            e[s] = 1.0;
            objectives.push(e);
        }
    }
    if c.contains(&0.0) {
        objectives.push(vec![1.0; k]);
    }

    // Circuits whose budget is zero impose no linear constraint.
    let linear: Vec<(usize, Constraint)> = problem
        .budgets
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0.0)
        .map(|(i, &t)| {
            (
                i,
                Constraint {
                    a: problem.counts[i].clone(),
                    b: t,
                },
            )
        })
        .collect();
    let mut cons: Vec<Constraint> = linear.iter().map(|(_, c)| c.clone()).collect();
    let n_linear = cons.len();
    let limit = problem.thresholds.aggregate;
    let mut trace = Vec::new();

    let (mut sol, mut agg) = loop {
        let sol = lp::solve_lexicographic(&objectives, &cons)?;
        let agg = problem.aggregate(&sol.w);
        trace.push(CutStep {
            w: sol.w.clone(),
            objective: sol.objective,
            aggregate: agg,
        });
        if agg <= limit * (1.0 + opts.aggregate_tol) {
            break (sol, agg);
        }
        if trace.len() > opts.max_cuts {
            return Err(Error::NonConvergence {
                what: "cutting planes",
                detail: format!(
                    "aggregate {agg} > {limit} after {} cuts; last iterate {:?}",
                    trace.len() - 1,
                    sol.w
                ),
            });
        }
        // A(w0) + g·(w − w0) ≤ T, with g ≤ 0 componentwise.
        let g = problem.aggregate_gradient(&sol.w, opts.fd_step);
        if g.iter().all(|&x| x >= 0.0) {
            return Err(Error::NonConvergence {
                what: "cutting planes",
                detail: format!("zero subgradient at {:?} with aggregate {agg} > {limit}", sol.w),
            });
        }
        let gw: f64 = g.iter().zip(&sol.w).map(|(a, b)| a * b).sum();
        cons.push(Constraint {
            a: g.iter().map(|x| (-x).max(0.0)).collect(),
            b: agg - gw - limit,
        });
    };

    // Drop simplex round-off, then nudge outward until both branches hold.
    let top = sol.w.iter().cloned().fold(0.0, f64::max);
    for x in &mut sol.w {
        if *x <= 1e-10 * top {
            *x = 0.0;
        }
    }
    let mut scale = 1e-12;
    while !problem.is_feasible(&sol.w)? {
        if sol.w.iter().all(|&x| x == 0.0) || scale > 1e-3 {
            return Err(Error::NonConvergence {
                what: "wildcard solve",
                detail: format!("solution {:?} is not feasible (aggregate {agg})", sol.w),
            });
        }
        sol.w = sol.w.iter().map(|x| x * (1.0 + scale)).collect();
        scale *= 4.0;
        agg = problem.aggregate(&sol.w);
    }

    let radii = problem.radii(&sol.w);
    let active = linear
        .iter()
        .filter(|(i, con)| radii[*i] <= con.b * (1.0 + 1e-9) + 1e-15)
        .map(|(i, _)| problem.data[*i].circuit.clone())
        .collect();
    let objective = c.iter().zip(&sol.w).map(|(a, b)| a * b).sum();
    Ok(WildcardSolution {
        params: problem.family.params.clone(),
        w: sol.w,
        weights: c,
        objective,
        active,
        aggregate_active: cons.len() > n_linear,
        aggregate: agg,
        aggregate_threshold: limit,
        trace,
    })
}

/// Default relative shrink used by [`certify_minimal`].
pub const CERTIFY_DELTA: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityCertificate {
    pub delta: f64,
    /// For each component: shrinking it alone by `delta` breaks feasibility
    /// (vacuously true for zero components).
    pub shrink_infeasible: Vec<bool>,
    pub certified: bool,
}

/// Checks that no positive component can be reduced by a relative `delta`
/// with the others fixed.
pub fn certify_minimal(problem: &WildcardProblem, w: &[f64], delta: f64) -> Result<MinimalityCertificate> {
    if !problem.is_feasible(w)? {
        return Err(Error::InvalidInput("cannot certify an infeasible wildcard vector".into()));
    }
    let shrink_infeasible = (0..w.len())
        .map(|j| {
            if w[j] == 0.0 {
                return Ok(true);
            }
            let mut v = w.to_vec();
            v[j] *= 1.0 - delta;
            Ok(!problem.is_feasible(&v)?)
        })
        .collect::<Result<Vec<bool>>>()?;
    let certified = shrink_infeasible.iter().all(|&b| b);
    Ok(MinimalityCertificate {
        delta,
        shrink_infeasible,
        certified,
    })
}

/// Rectangular grid on which the feasibility indicator is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_max: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub params: [String; 2],
    /// Distinct minimal models sorted by the first coordinate.
    pub points: Vec<[f64; 2]>,
    /// Weight angle that produced each point.
    pub angles: Vec<f64>,
    /// `(x, y, feasible)` samples.
    pub grid: Vec<(f64, f64, bool)>,
}

impl Frontier {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("kind\t{}\t{}\tvalue\n", self.params[0], self.params[1]);
        for (p, th) in self.points.iter().zip(&self.angles) {
            let _ = writeln!(out, "frontier\t{:.10e}\t{:.10e}\t{:.6}", p[0], p[1], th);
        }
        for (x, y, f) in &self.grid {
            let _ = writeln!(out, "grid\t{:.10e}\t{:.10e}\t{}", x, y, u8::from(*f));
        }
        out
    }
}

/// Traces the minimal boundary of a two-parameter feasible set by sweeping
/// objective weights `(cos θ, sin θ)` over `angles` values of `θ ∈ (0, π/2)`.
pub fn frontier_2d(problem: &WildcardProblem, angles: usize, grid: Option<GridSpec>) -> Result<Frontier> {
    if problem.family.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "frontier needs exactly 2 parameters, family has {}",
            problem.family.len()
        )));
    }
    let opts = SolveOptions {
        prefer_zero_spam: false,
        ..SolveOptions::default()
    };
    let mut found: Vec<([f64; 2], f64)> = Vec::new();
    for i in 0..angles.max(1) {
        let theta = (i as f64 + 0.5) / angles.max(1) as f64 * std::f64::consts::FRAC_PI_2;
        let obj = Objective::Weighted(vec![theta.cos(), theta.sin()]);
        let sol = solve_min_wildcard(problem, &obj, &opts)?;
        let p = [sol.w[0], sol.w[1]];
        let dup = found
            .iter()
            .any(|(q, _)| (q[0] - p[0]).abs() <= 1e-9 * (1.0 + q[0]) && (q[1] - p[1]).abs() <= 1e-9 * (1.0 + q[1]));
        if !dup {
            found.push((p, theta));
        }
    }
    found.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(b.0[1].total_cmp(&a.0[1])));
    let grid = match grid {
        None => Vec::new(),
        Some(g) => {
            let pts: Vec<(f64, f64)> = (0..g.ny.max(1))
                .flat_map(|j| {
                    (0..g.nx.max(1)).map(move |i| {
                        let x = if g.nx > 1 { g.x_max * i as f64 / (g.nx - 1) as f64 } else { 0.0 };
                        let y = if g.ny > 1 { g.y_max * j as f64 / (g.ny - 1) as f64 } else { 0.0 };
                        (x, y)
                    })
                })
                .collect();
            pts.into_iter()
                .map(|(x, y)| Ok((x, y, problem.is_feasible(&[x, y])?)))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(Frontier {
        params: [problem.family.params[0].clone(), problem.family.params[1].clone()],
        points: found.iter().map(|(p, _)| *p).collect(),
        angles: found.iter().map(|(_, t)| *t).collect(),
        grid,
    })
}

/// One circuit's line in a [`WildcardReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitBudget {
    pub circuit: Circuit,
    #[serde(with = "crate::serde_f64")]
    pub budget: f64,
    pub radius: f64,
    pub tvd: f64,
    #[serde(with = "crate::serde_f64")]
    pub llr_star: f64,
    pub threshold: f64,
}

/// Everything written out for a solved wildcard problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WildcardReport {
    pub params: Vec<String>,
    pub w: Vec<f64>,
    pub objective: String,
    pub objective_value: f64,
    pub alpha: f64,
    pub certified_minimal: bool,
    pub certificate: MinimalityCertificate,
    pub active_constraints: Vec<Circuit>,
    pub aggregate_active: bool,
    #[serde(with = "crate::serde_f64")]
    pub aggregate: f64,
    pub aggregate_threshold: f64,
    pub pre_pass: bool,
    pub post_pass: bool,
    pub circuits: Vec<CircuitBudget>,
}

impl WildcardReport {
    pub fn build(problem: &WildcardProblem, objective: &Objective, sol: &WildcardSolution) -> Result<Self> {
        let certificate = certify_minimal(problem, &sol.w, CERTIFY_DELTA)?;
        let (pre_pass, _) = problem.feasible(&vec![0.0; sol.w.len()])?;
        let (post_pass, _) = problem.feasible(&sol.w)?;
        let radii = problem.radii(&sol.w);
        let stars = problem.llr_stars(&sol.w);
        let circuits = problem
            .data
            .iter()
            .enumerate()
            .map(|(i, d)| CircuitBudget {
                circuit: d.circuit.clone(),
                budget: problem.budgets[i],
                radius: radii[i],
                tvd: d.tvd(),
                llr_star: stars[i],
                threshold: problem.thresholds.per_circuit[i],
            })
            .collect();
        Ok(Self {
            params: sol.params.clone(),
            w: sol.w.clone(),
            objective: objective.to_string(),
            objective_value: sol.objective,
            alpha: problem.alpha(),
            certified_minimal: certificate.certified,
            certificate,
            active_constraints: sol.active.clone(),
            aggregate_active: sol.aggregate_active,
            aggregate: sol.aggregate,
            aggregate_threshold: sol.aggregate_threshold,
            pre_pass,
            post_pass,
            circuits,
        })
    }

    pub fn circuits_tsv(&self) -> String {
        let mut out = String::from("circuit\tt_C\tw_C\ttvd\tllr_star\tthreshold\n");
        for c in &self.circuits {
            let _ = writeln!(
                out,
                "{}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}",
                c.circuit, c.budget, c.radius, c.tvd, c.llr_star, c.threshold
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circuit(s: &str) -> Circuit {
        s.parse().unwrap()
    }

    fn cd(c: &str, shots: f64, f0: f64, p0: f64) -> CircuitData {
        CircuitData {
            circuit: circuit(c),
            shots,
            f: vec![f0, 1.0 - f0],
            p: vec![p0, 1.0 - p0],
        }
    }

    #[test]
    fn gate_count_vectors() {
        let fam = WildcardFamily::per_gate(&["Gx", "Gy"], true).unwrap();
        assert_eq!(fam.gate_counts(&circuit("Gx;Gy;Gx")).unwrap(), vec![1.0, 2.0, 1.0]);
        assert_eq!(fam.gate_counts(&Circuit::empty()).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(matches!(fam.gate_counts(&circuit("Gz")), Err(Error::UnknownGate(_))));
        let tied = WildcardFamily::tied(&["Gx", "Gy"]).unwrap();
        let c = circuit(&["Gx"; 10].join(";"));
        assert_eq!(tied.gate_counts(&c).unwrap(), vec![1.0, 10.0]);
    }

    #[test]
    fn objective_parsing() {
        assert_eq!("l1".parse::<Objective>().unwrap(), Objective::L1);
        assert_eq!(
            "weighted:1,0.5".parse::<Objective>().unwrap(),
            Objective::Weighted(vec![1.0, 0.5])
        );
        assert!("l2".parse::<Objective>().is_err());
        assert!(Objective::Weighted(vec![-1.0]).weights(1).is_err());
        assert_eq!(Objective::Weighted(vec![1.0, 0.5]).to_string(), "weighted:1,0.5");
    }

    #[test]
    fn consistent_data_gives_zero() {
        let data = vec![cd("Gx", 1000.0, 0.5, 0.5), cd("Gx;Gx", 1000.0, 0.01, 0.0)];
        // The second circuit has an observed outcome of probability zero.
        let fam = WildcardFamily::tied(&["Gx"]).unwrap();
        let prob = WildcardProblem::new(data[..1].to_vec(), fam.clone(), 0.05).unwrap();
        let sol = solve_min_wildcard(&prob, &Objective::L1, &SolveOptions::default()).unwrap();
        assert_eq!(sol.w, vec![0.0, 0.0]);
        assert!(certify_minimal(&prob, &sol.w, CERTIFY_DELTA).unwrap().certified);
        let prob = WildcardProblem::new(data, fam, 0.05).unwrap();
        let sol = solve_min_wildcard(&prob, &Objective::L1, &SolveOptions::default()).unwrap();
        assert!(sol.w[1] > 0.0);
    }

    #[test]
    fn single_circuit_hand_lp() {
        // A depth-10 circuit with t_C ≈ 0.065 at a single-circuit threshold.
        let c = ["Gx"; 10].join(";");
        let data = vec![cd(&c, 1000.0, 0.6, 0.5)];
        let prob = WildcardProblem::new(data, WildcardFamily::tied(&["Gx"]).unwrap(), 0.05).unwrap();
        let t = prob.budgets()[0];
        assert!((t - 0.065).abs() < 5e-4, "{t}");
        let sol = solve_min_wildcard(&prob, &Objective::L1, &SolveOptions::default()).unwrap();
        assert_eq!(sol.w[0], 0.0);
        assert!((sol.w[1] - t / 10.0).abs() < 1e-12 * t);
        assert_eq!(sol.active.len(), 1);
        let cert = certify_minimal(&prob, &sol.w, CERTIFY_DELTA).unwrap();
        assert!(cert.certified);
        let inflated: Vec<f64> = sol.w.iter().map(|x| 1.5 * x).collect();
        assert!(!certify_minimal(&prob, &inflated, CERTIFY_DELTA).unwrap().certified);
    }

    #[test]
    fn aggregate_branch_uses_cutting_planes() {
        // Many mildly off circuits: each passes alone but the sum does not.
        let data: Vec<CircuitData> = (0..200)
            .map(|i| {
                let c = vec!["Gx"; 1 + i % 7].join(";");
                let c = format!("{c};{}", ["Gy"; 1].repeat(i / 7 + 1).join(";"));
                cd(&c, 1000.0, 0.53, 0.5)
            })
            .collect();
        let prob = WildcardProblem::new(data, WildcardFamily::per_gate(&["Gx", "Gy"], true).unwrap(), 0.05).unwrap();
        assert!(prob.budgets().iter().all(|&t| t == 0.0));
        assert!(!prob.is_feasible(&[0.0, 0.0, 0.0]).unwrap());
        let sol = solve_min_wildcard(&prob, &Objective::L1, &SolveOptions::default()).unwrap();
        assert!(sol.aggregate_active);
        assert!(prob.is_feasible(&sol.w).unwrap());
        assert!(sol.aggregate <= sol.aggregate_threshold);
        assert!(sol.aggregate >= sol.aggregate_threshold * (1.0 - 1e-6));
        let cert = certify_minimal(&prob, &sol.w, CERTIFY_DELTA).unwrap();
        assert!(cert.certified, "{:?} {:?} {} {}", sol.w, cert, sol.aggregate, sol.trace.len());
        let (pass, rep) = prob.feasible(&sol.w).unwrap();
        assert!(pass && rep.pass);
    }

    #[test]
    fn frontier_of_consistent_data_is_origin() {
        let data = vec![cd("Gx", 1000.0, 0.5, 0.5)];
        let prob = WildcardProblem::new(data, WildcardFamily::tied(&["Gx"]).unwrap(), 0.05).unwrap();
        let fr = frontier_2d(&prob, 8, None).unwrap();
        assert_eq!(fr.points, vec![[0.0, 0.0]]);
    }

    #[test]
    fn frontier_is_monotone() {
        let data = vec![
            cd("Gx", 1000.0, 0.56, 0.5),
            cd(&["Gx"; 20].join(";"), 1000.0, 0.75, 0.5),
        ];
        let prob = WildcardProblem::new(data, WildcardFamily::tied(&["Gx"]).unwrap(), 0.05).unwrap();
        let fr = frontier_2d(
            &prob,
            32,
            Some(GridSpec {
                x_max: 0.1,
                y_max: 0.02,
                nx: 5,
                ny: 5,
            }),
        )
        .unwrap();
        assert!(fr.points.len() >= 2);
        for w in fr.points.windows(2) {
            assert!(w[0][0] < w[1][0] && w[0][1] >= w[1][1]);
        }
        assert_eq!(fr.grid.len(), 25);
        assert!(fr.to_tsv().lines().count() > 25);
    }
}
