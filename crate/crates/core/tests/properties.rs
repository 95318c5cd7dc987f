//! Structural properties of the wildcard feasible set, the gauge and the
//! diamond distance, checked on random instances.

use std::collections::BTreeMap;

use approx::abs_diff_eq;
use nalgebra::{DMatrix, Rotation3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wildcard_core::circuits::Circuit;
use wildcard_core::diamond::{diamond_numeric, DiamondOptions};
use wildcard_core::fit::{apply_rotation_gauge, gauge_fix};
use wildcard_core::quantum::{compose, pauli_channel, rotation, Axis, Basis, GateSet, SuperOp};
use wildcard_core::stats::CircuitData;
use wildcard_core::wildcard::{solve_min_wildcard, Objective, SolveOptions, WildcardFamily, WildcardProblem};

const ALPHA: f64 = 0.05;

/// Binary-outcome data over `labels`, with frequencies pushed off the
/// predictions so that some wildcard is needed.
fn random_data(seed: u64, labels: &[&str], circuits: usize) -> Vec<CircuitData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates: Vec<f64> = labels.iter().map(|_| rng.random_range(0.0..0.01)).collect();
    let mut out: Vec<CircuitData> = Vec::new();
    while out.len() < circuits {
        let len = rng.random_range(1..=5);
        let picks: Vec<usize> = (0..len).map(|_| rng.random_range(0..labels.len())).collect();
        let c = Circuit::new(picks.iter().map(|&k| labels[k])).unwrap();
        if out.iter().any(|d| d.circuit == c) {
            continue;
        }
        let push: f64 = picks.iter().map(|&k| rates[k]).sum::<f64>() * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let p0 = rng.random_range(0.1..0.9);
        let shots = rng.random_range(200..4000) as f64;
        let f0 = ((p0 + push).clamp(0.0, 1.0) * shots).round() / shots;
        out.push(CircuitData {
            circuit: c,
            shots,
            f: vec![f0, 1.0 - f0],
            p: vec![p0, 1.0 - p0],
        });
    }
    out
}

fn problem(seed: u64) -> WildcardProblem {
    let data = random_data(seed, &["Ga", "Gb"], 20);
    WildcardProblem::new(data, WildcardFamily::per_gate(&["Ga", "Gb"], true).unwrap(), ALPHA).unwrap()
}

fn random_channel(rng: &mut ChaCha8Rng) -> SuperOp {
    let e: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
    let scale = rng.random_range(0.0..0.2);
    let mut probs = [1.0, e[1] * scale, e[2] * scale, e[3] * scale];
    probs[0] = 1.0 - probs[1] - probs[2] - probs[3];
    let axis = [Axis::X, Axis::Y, Axis::Z][rng.random_range(0..3)];
    compose(&pauli_channel(probs).unwrap(), &rotation(axis, rng.random_range(-1.0..1.0))).unwrap()
}

fn conjugate(op: &SuperOp, r: &Rotation3<f64>) -> SuperOp {
    let mut t = DMatrix::identity(4, 4);
    t.view_mut((1, 1), (3, 3)).copy_from(r.matrix());
    SuperOp::from_matrix(Basis::Pauli, &t * op.matrix() * t.transpose()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn feasibility_is_monotone(seed in any::<u64>(), a in 0.0..0.02f64, b in 0.0..0.02f64, s in 0.0..0.005f64, da in 0.0..0.01f64, db in 0.0..0.01f64) {
        let p = problem(seed);
        let w = [a, b, s];
        if p.is_feasible(&w).unwrap() {
            prop_assert!(p.is_feasible(&[a + da, b + db, s]).unwrap());
        }
    }

    #[test]
    fn feasible_set_is_convex(seed in any::<u64>(), u in prop::array::uniform3(0.0..0.03f64), v in prop::array::uniform3(0.0..0.03f64), t in 0.0..1.0f64) {
        let p = problem(seed);
        if p.is_feasible(&u).unwrap() && p.is_feasible(&v).unwrap() {
            let mid: Vec<f64> = u.iter().zip(&v).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            prop_assert!(p.is_feasible(&mid).unwrap());
        }
    }

    #[test]
    fn tying_two_gates_matches_a_relabelled_problem(seed in any::<u64>()) {
        let data = random_data(seed, &["Ga", "Gb", "Gc"], 18);
        let tied = WildcardFamily::new(
            vec!["ab".into(), "c".into()],
            BTreeMap::from([("Ga".into(), 0), ("Gb".into(), 0), ("Gc".into(), 1)]),
            None,
        ).unwrap();
        let relabelled: Vec<CircuitData> = data
            .iter()
            .map(|d| CircuitData {
                circuit: Circuit::new(d.circuit.layers().iter().map(|l| if l == "Gb" { "Ga" } else { l.as_str() })).unwrap(),
                ..d.clone()
            })
            .collect();
        let merged = WildcardFamily::per_gate(&["Ga", "Gc"], false).unwrap();
        let opts = SolveOptions::default();
        let a = solve_min_wildcard(&WildcardProblem::new(data, tied, ALPHA).unwrap(), &Objective::L1, &opts).unwrap();
        let b = solve_min_wildcard(&WildcardProblem::new(relabelled, merged, ALPHA).unwrap(), &Objective::L1, &opts).unwrap();
        for (x, y) in a.w.iter().zip(&b.w) {
            prop_assert!(abs_diff_eq!(x, y, epsilon = 1e-9), "{:?} vs {:?}", a.w, b.w);
        }
    }

    #[test]
    fn diamond_distance_obeys_the_triangle_inequality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_channel(&mut rng), random_channel(&mut rng), random_channel(&mut rng));
        let opts = DiamondOptions::default();
        let d = |x: &SuperOp, y: &SuperOp| diamond_numeric(x, y, &opts).unwrap().epsilon;
        let (ab, bc, ac) = (d(&a, &b), d(&b, &c), d(&a, &c));
        prop_assert!(ac <= ab + bc + 1e-9, "{ac} > {ab} + {bc}");
        prop_assert!(abs_diff_eq!(ab, d(&b, &a), epsilon = 1e-9));
    }

    #[test]
    fn diamond_distance_is_unitarily_invariant(seed in any::<u64>(), roll in -3.0..3.0f64, pitch in -1.5..1.5f64, yaw in -3.0..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_channel(&mut rng), random_channel(&mut rng));
        let r = Rotation3::from_euler_angles(roll, pitch, yaw);
        let opts = DiamondOptions::default();
        let before = diamond_numeric(&a, &b, &opts).unwrap().epsilon;
        let after = diamond_numeric(&conjugate(&a, &r), &conjugate(&b, &r), &opts).unwrap().epsilon;
        prop_assert!(abs_diff_eq!(before, after, epsilon = 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gauge_transformations_leave_predictions_and_fixed_distances_unchanged(seed in any::<u64>(), roll in -0.3..0.3f64, pitch in -0.3..0.3f64, yaw in -0.3..0.3f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = GateSet::qubit_target(&["Gx", "Gy"]).unwrap();
        let mut noisy = target.clone();
        for g in ["Gx", "Gy"] {
            let gate = compose(target.gate(g).unwrap(), &random_channel(&mut rng)).unwrap();
            noisy.set_gate(g, gate).unwrap();
        }
        let r = Rotation3::from_euler_angles(roll, pitch, yaw);
        let moved = apply_rotation_gauge(&noisy, r.matrix()).unwrap();
        for text in ["{}", "Gx", "Gy;Gx", "Gx;Gx;Gy", "Gy;Gy;Gy;Gx;Gx"] {
            let c: Circuit = text.parse().unwrap();
            let (p, q) = (noisy.raw_probs(&c).unwrap(), moved.raw_probs(&c).unwrap());
            for (x, y) in p.iter().zip(&q) {
                prop_assert!(abs_diff_eq!(x, y, epsilon = 1e-12));
            }
        }
        let opts = DiamondOptions::default();
        let (fa, fb) = (gauge_fix(&noisy, &target).unwrap(), gauge_fix(&moved, &target).unwrap());
        for g in ["Gx", "Gy"] {
            let t = target.gate(g).unwrap();
            let ea = diamond_numeric(fa.gate(g).unwrap(), t, &opts).unwrap().epsilon;
            let eb = diamond_numeric(fb.gate(g).unwrap(), t, &opts).unwrap().epsilon;
            prop_assert!(abs_diff_eq!(ea, eb, epsilon = 1e-6), "{g}: {ea} vs {eb}");
        }
    }
}
