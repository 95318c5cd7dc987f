//! Acceptance criteria, each at its stated tolerance. Run with
//! `cargo test --test acceptance -- --nocapture` to see one line per
//! criterion.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use wildcard_core::circuits::Circuit;
use wildcard_core::data::DataSet;
use wildcard_core::diamond::{diamond_numeric, DiamondOptions};
use wildcard_core::noise::{random_error_modelspec, ErrorRanges};
use wildcard_core::quantum::{pauli_channel, rotation, standard_gate, Axis};
use wildcard_core::scenarios::{LeakageOutcome, LeakageScenario, RbOutcome, RbScenario, TotalErrorOutcome, TotalErrorScenario};
use wildcard_core::stats::{align, chi2_quantile, consistency_test, min_llr_in_ball, min_llr_kkt, CircuitData};
use wildcard_core::wildcard::{
    certify_minimal, solve_min_wildcard, Objective, SolveOptions, WildcardFamily, WildcardProblem,
};

const ALPHA: f64 = 0.05;

/// Solver outputs gathered for the minimality criterion.
struct Solved {
    label: String,
    problem: WildcardProblem,
    w: Vec<f64>,
}

#[derive(Default)]
struct Shared {
    rb: Vec<RbOutcome>,
    total: Vec<TotalErrorOutcome>,
    leakage: Vec<LeakageOutcome>,
    solved: Vec<Solved>,
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// `ε◇` between Z dephasing `p` and the depolarizing channel with the same
/// twirled fidelity, from the Pauli error probabilities directly.
fn rb_target(p: f64) -> f64 {
    // Dephasing: Pauli probabilities (1−p, 0, 0, p); PTM diagonal (1, 1−2p, 1−2p, 1).
    let eta = (2.0 * (1.0 - 2.0 * p) + 1.0) / 3.0;
    let deph = [1.0 - p, 0.0, 0.0, p];
    let depol = [(1.0 + 3.0 * eta) / 4.0, (1.0 - eta) / 4.0, (1.0 - eta) / 4.0, (1.0 - eta) / 4.0];
    0.5 * deph.iter().zip(&depol).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn criterion_1(sh: &mut Shared) -> Verdict {
    let target = rb_target(0.02);
    let start = Instant::now();
    for seed in 1..=10 {
        let s = RbScenario {
            dephasing: 0.02,
            per_depth: 60,
            shots: 100_000,
            seed,
            ..RbScenario::default()
        };
        assert_eq!(s.depths.first().copied(), Some(1));
        assert_eq!(s.depths.last().copied(), Some(512));
        let o = s.run().expect("RB scenario runs");
        sh.solved.push(Solved {
            label: format!("rb seed {seed}"),
            problem: o.analysis.problem.clone(),
            w: o.analysis.solution.w.clone(),
        });
        sh.rb.push(o);
    }
    let elapsed = start.elapsed();
    let w: Vec<f64> = sh.rb.iter().map(|o| o.analysis.solution.get("gate").unwrap()).collect();
    let (lo, hi) = (0.0107, 0.0160);
    let all_in = w.iter().all(|x| (lo..=hi).contains(x));
    let med = median(&w);
    let med_ok = (med - target).abs() <= 0.1 * target;
    let fast = elapsed.as_secs_f64() < 300.0;
    let (wmin, wmax) = (w.iter().cloned().fold(f64::MAX, f64::min), w.iter().cloned().fold(0.0, f64::max));
    verdict(
        all_in && med_ok && fast,
        format!(
            "target {target:.5}, w_gate in [{wmin:.5}, {wmax:.5}] (window [{lo:.4}, {hi:.4}]), median {med:.5} ({:+.1}%), {:.1}s for 10 seeds",
            100.0 * (med / target - 1.0),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(sh: &mut Shared) -> Verdict {
    for seed in 1..=10 {
        let o = LeakageScenario { seed, ..LeakageScenario::default() }.run().expect("leakage scenario runs");
        sh.solved.push(Solved {
            label: format!("leakage seed {seed}"),
            problem: o.analysis.problem.clone(),
            w: o.analysis.solution.w.clone(),
        });
        sh.leakage.push(o);
    }
    let mut details = Vec::new();
    let mut pass = true;
    let mut tally = |name: &str, pairs: Vec<(bool, bool)>| {
        let ok = pairs.iter().filter(|(pre, post)| !pre && *post).count();
        pass &= ok == pairs.len() && pairs.len() == 10;
        details.push(format!("{name} {ok}/{}", pairs.len()));
    };
    tally("rb-dephasing", sh.rb.iter().map(|o| (o.analysis.pre.pass, o.analysis.post.pass)).collect());
    tally(
        "total-error",
        sh.total.iter().take(10).map(|o| (o.analysis.pre.pass, o.analysis.post.pass)).collect(),
    );
    tally("gst-leakage", sh.leakage.iter().map(|o| (o.analysis.pre.pass, o.analysis.post.pass)).collect());
    verdict(pass, format!("pre fails and post passes: {}", details.join(", ")))
}

fn criterion_3(sh: &Shared) -> Verdict {
    let mut failures = Vec::new();
    let mut components = 0;
    for s in &sh.solved {
        let cert = certify_minimal(&s.problem, &s.w, 1e-3).expect("certificate");
        // Independent check through the consistency test itself.
        let mut breaks = true;
        for k in 0..s.w.len() {
            if s.w[k] <= 0.0 {
                continue;
            }
            components += 1;
            let mut shrunk = s.w.clone();
            shrunk[k] *= 1.0 - 1e-3;
            let radii: Vec<f64> = s
                .problem
                .counts()
                .iter()
                .map(|n| n.iter().zip(&shrunk).map(|(a, b)| a * b).sum::<f64>().min(1.0))
                .collect();
            let report = consistency_test(s.problem.data(), &radii, s.problem.alpha()).expect("test runs");
            breaks &= !report.pass;
        }
        let feasible = s.problem.is_feasible(&s.w).expect("feasibility");
        if !(cert.certified && breaks && feasible) {
            failures.push(s.label.clone());
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{} solver outputs, {components} positive components each break feasibility at -0.1%{}",
            sh.solved.len(),
            if failures.is_empty() { String::new() } else { format!("; failed: {failures:?}") }
        ),
    )
}

/// Random two-rate problem: circuits over `Ga`, `Gb` whose frequencies are
/// pushed away from the predictions by hidden per-gate rates.
fn random_problem(rng: &mut ChaCha8Rng) -> Vec<CircuitData> {
    let (ra, rb) = (rng.random_range(0.001..0.01), rng.random_range(0.001..0.01));
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while out.len() < 30 {
        let len = rng.random_range(1..=6);
        let labels: Vec<&str> = (0..len).map(|_| if rng.random_bool(0.5) { "Ga" } else { "Gb" }).collect();
        let c = Circuit::new(labels).unwrap();
        if !seen.insert(c.clone()) {
            continue;
        }
        let na = c.count("Ga") as f64;
        let nb = c.count("Gb") as f64;
        let p0: f64 = rng.random_range(0.1..0.9);
        let push = (na * ra + nb * rb) * rng.random_range(0.0..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let shots = rng.random_range(500..5000) as f64;
        let f0 = (((p0 + push).clamp(0.0, 1.0)) * shots).round() / shots;
        out.push(CircuitData {
            circuit: c,
            shots,
            f: vec![f0, 1.0 - f0],
            p: vec![p0, 1.0 - p0],
        });
    }
    out
}

fn grid_feasible(data: &[CircuitData], counts: &[[f64; 2]], w: [f64; 2]) -> bool {
    let radii: Vec<f64> = counts.iter().map(|n| (n[0] * w[0] + n[1] * w[1]).min(1.0)).collect();
    consistency_test(data, &radii, ALPHA).unwrap().pass
}

/// Smallest `s` with `(s, s)` feasible.
fn diagonal_intercept(data: &[CircuitData], counts: &[[f64; 2]]) -> f64 {
    let at = |v: f64| grid_feasible(data, counts, [v, v]);
    let mut hi = 1e-4;
    while !at(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn criterion_4(sh: &mut Shared) -> Verdict {
    const STEP: f64 = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0ac1e);
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for i in 0..25 {
        let data = random_problem(&mut rng);
        let counts: Vec<[f64; 2]> = data
            .iter()
            .map(|d| [d.circuit.count("Ga") as f64, d.circuit.count("Gb") as f64])
            .collect();
        let c = [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)];
        let family = WildcardFamily::per_gate(&["Ga", "Gb"], false).unwrap();
        let problem = WildcardProblem::new(data.clone(), family, ALPHA).unwrap();
        let sol = solve_min_wildcard(&problem, &Objective::Weighted(c.to_vec()), &SolveOptions::default()).unwrap();

        // Brute force: step along the coordinate whose boundary slope at the
        // optimum is at most one, and locate the boundary in the other
        // coordinate by bisection. The objective along the boundary is
        // convex, so the best grid point sits within one step of the optimum.
        let (gx, gy) = if c[0] <= c[1] { (0, 1) } else { (1, 0) };
        let top = diagonal_intercept(&data, &counts) * (c[0] + c[1]) / c[0].min(c[1]);
        let point = |u: f64, v: f64| {
            let mut w = [0.0; 2];
            w[gx] = u;
            w[gy] = v;
            w
        };
        let feasible = |u: f64, v: f64| grid_feasible(&data, &counts, point(u, v));
        let m = (top / STEP).ceil() as usize;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for iu in 0..=m {
            let u = iu as f64 * STEP;
            if !feasible(u, top) {
                continue;
            }
            let v = if feasible(u, 0.0) {
                0.0
            } else {
                let (mut lo, mut hi) = (0.0, top);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if feasible(u, mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            };
            let w = point(u, v);
            let obj = c[0] * w[0] + c[1] * w[1];
            if obj < best.0 {
                best = (obj, w);
            }
        }
        let err = (sol.w[0] - best.1[0]).abs().max((sol.w[1] - best.1[1]).abs());
        worst = worst.max(err);
        if err > 2e-4 {
            bad += 1;
            eprintln!("criterion 4 problem {i}: solver {:?} vs grid {:?}", sol.w, best.1);
        }
        sh.solved.push(Solved {
            label: format!("grid problem {i}"),
            problem,
            w: sol.w,
        });
    }
    verdict(bad == 0, format!("25 problems, worst coordinate gap {worst:.2e} (tolerance 2e-4)"))
}

fn criterion_5() -> Verdict {
    let mut passes = 0;
    let ranges = ErrorRanges::default();
    for seed in 0..500u64 {
        let truth = random_error_modelspec(seed, &["Gx", "Gy"], &ranges).unwrap().build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut circuits: Vec<Circuit> = Vec::new();
        while circuits.len() < 100 {
            let len = rng.random_range(1..=32);
            let c = Circuit::new((0..len).map(|_| if rng.random_bool(0.5) { "Gx" } else { "Gy" })).unwrap();
            if !circuits.contains(&c) {
                circuits.push(c);
            }
        }
        let data = DataSet::simulate(&truth, &circuits, 1000, seed.wrapping_mul(7919)).unwrap();
        let cd = align(&truth, &data).unwrap();
        if consistency_test(&cd, &vec![0.0; cd.len()], ALPHA).unwrap().pass {
            passes += 1;
        }
    }
    let rate = passes as f64 / 500.0;
    verdict(rate >= 0.93, format!("w = 0 feasible in {passes}/500 = {:.1}% (need >= 93%, nominal 95%)", 100.0 * rate))
}

/// Spearman correlation with average ranks for ties.
fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut e = k;
            while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[k]] {
                e += 1;
            }
            let avg = (k + e) as f64 / 2.0 + 1.0;
            for &i in &idx[k..=e] {
                r[i] = avg;
            }
            k = e + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn criterion_6(sh: &mut Shared) -> Verdict {
    let mut w = Vec::new();
    let mut eps = Vec::new();
    for seed in 1..=50 {
        let o = TotalErrorScenario { seed, ..TotalErrorScenario::default() }.run().expect("total-error scenario runs");
        for g in ["Gx", "Gy"] {
            w.push(o.analysis.solution.get(g).unwrap());
            eps.push(o.epsilon_diamond[g]);
        }
        sh.solved.push(Solved {
            label: format!("total-error seed {seed}"),
            problem: o.analysis.problem.clone(),
            w: o.analysis.solution.w.clone(),
        });
        sh.total.push(o);
    }
    let rho = spearman(&w, &eps);
    let below = w.iter().zip(&eps).filter(|(w, e)| **w <= 1.1 * **e).count();
    let ratio: Vec<f64> = w.iter().zip(&eps).map(|(w, e)| w / e).collect();
    verdict(
        rho >= 0.8 && below as f64 >= 0.9 * w.len() as f64,
        format!(
            "100 gates: Spearman rho = {rho:.3} (need >= 0.8), w <= 1.1 eps for {below}/100 (need >= 90), median w/eps = {:.2}",
            median(&ratio)
        ),
    )
}

fn criterion_7(sh: &Shared) -> Verdict {
    let rates = |o: &LeakageOutcome| {
        let g = |p: &str| o.analysis.solution.get(p).unwrap();
        (g("Gi"), g("Gx"), g("Gy"), g("Gz"), g("SPAM"))
    };
    let holds = |o: &LeakageOutcome| {
        let (wi, wx, wy, wz, _) = rates(o);
        wx < 1e-5 && wy < 1e-5 && wi > 0.0 && (2.0..=15.0).contains(&(wz / wi)) && o.analysis.post.pass
    };
    let default_seed = LeakageScenario::default().seed;
    // Criterion 2 ran seeds 1..=10 in order.
    let o = &sh.leakage[(default_seed - 1) as usize];
    let (wi, wx, wy, wz, ws) = rates(o);
    // Order of magnitude relative to w_i = 1.1e-5 and w_z = 1.1e-4.
    let magnitude = (1.1e-6..=1.1e-4).contains(&wi) && (1.1e-5..=1.1e-3).contains(&wz);
    let others = sh.leakage.iter().filter(|o| holds(o)).count();
    verdict(
        holds(o) && magnitude,
        format!(
            "seed {default_seed}: w_i = {wi:.2e}, w_z = {wz:.2e} (ratio {:.2}), w_x = {wx:.1e}, w_y = {wy:.1e}, w_SPAM = {ws:.1e}, post {}; all conditions hold on {others}/10 seeds",
            wz / wi,
            if o.analysis.post.pass { "pass" } else { "fail" }
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1a);
    let simplex = |rng: &mut ChaCha8Rng| {
        let e: Vec<f64> = (0..4).map(|_| -rng.random_range(1e-12f64..1.0).ln()).collect();
        let s: f64 = e.iter().sum();
        [e[0] / s, e[1] / s, e[2] / s, e[3] / s]
    };
    let opts = DiamondOptions::default();
    let mut worst_pauli: f64 = 0.0;
    for _ in 0..20 {
        let (a, b) = (simplex(&mut rng), simplex(&mut rng));
        let tvd = 0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>();
        let num = diamond_numeric(&pauli_channel(a).unwrap(), &pauli_channel(b).unwrap(), &opts).unwrap();
        worst_pauli = worst_pauli.max((num.epsilon - tvd).abs());
    }
    let id = standard_gate("Gi").unwrap();
    let mut worst_rot: f64 = 0.0;
    for _ in 0..10 {
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        let num = diamond_numeric(&rotation(Axis::Z, theta), &id, &opts).unwrap();
        worst_rot = worst_rot.max((num.epsilon - (theta / 2.0).sin()).abs());
    }
    verdict(
        worst_pauli <= 1e-6 && worst_rot <= 1e-6,
        format!("max |numeric - TVD| = {worst_pauli:.1e} over 20 Pauli pairs, max |numeric - sin(theta/2)| = {worst_rot:.1e} over 10 angles"),
    )
}

/// χ² quantile by bisection on the regularized incomplete gamma.
fn chi2_oracle(dof: usize, confidence: f64) -> f64 {
    let a = dof as f64 / 2.0;
    let tail = 1.0 - confidence;
    let excess = |x: f64| {
        if confidence > 0.5 {
            tail - gamma_ur(a, x / 2.0)
        } else {
            gamma_lr(a, x / 2.0) - confidence
        }
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while excess(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9);
    let mut worst_ball: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(10.0..1e5);
        let f0 = (rng.random_range(0.0f64..=1.0) * n).round() / n;
        let p0: f64 = if rng.random_bool(0.05) { 0.0 } else { rng.random_range(0.0..1.0) };
        let t = rng.random_range(0.0..0.5);
        let (f, p) = ([f0, 1.0 - f0], [p0, 1.0 - p0]);
        let closed = min_llr_in_ball(&f, &p, t, n);
        let generic = min_llr_kkt(&f, &p, t, n).llr;
        let gap = if closed.is_infinite() && generic.is_infinite() {
            0.0
        } else {
            (closed - generic).abs() / generic.abs().max(1.0)
        };
        worst_ball = worst_ball.max(gap);
    }
    let levels = [
        0.5,
        0.9,
        0.95,
        0.975,
        0.99,
        1.0 - 0.025 / 100.0,
        1.0 - 0.025 / 1000.0,
        1.0 - 0.025 / 10_000.0,
        1.0 - 1e-7,
    ];
    let mut worst_chi: f64 = 0.0;
    for dof in 1..=200 {
        for &q in &levels {
            let got = chi2_quantile(dof, q).unwrap();
            let want = chi2_oracle(dof, q);
            worst_chi = worst_chi.max((got - want).abs() / want);
        }
    }
    verdict(
        worst_ball <= 1e-9 && worst_chi <= 1e-8,
        format!("binary vs generic ball minimum: max gap {worst_ball:.1e} (1000 instances); chi2 quantile vs incomplete-gamma bisection: max rel. error {worst_chi:.1e} (dof 1..200)"),
    )
}

#[test]
fn acceptance_criteria() {
    let mut sh = Shared::default();
    // Order matters: criterion 2 reuses the runs of criteria 1 and 6.
    let mut lines: Vec<(usize, &str, Option<Verdict>)> = vec![
        (1, "RB wildcard converges to the diamond distance", Some(criterion_1(&mut sh))),
        (6, "total-error wildcard tracks per-gate diamond distance", Some(criterion_6(&mut sh))),
        (2, "reconciliation: pre fails, post passes", Some(criterion_2(&mut sh))),
        (7, "leakage wildcard lands on Gi and Gz", Some(criterion_7(&sh))),
        (4, "solver matches brute-force grid", Some(criterion_4(&mut sh))),
        (3, "minimality of every solver output", Some(criterion_3(&sh))),
        (5, "statistical calibration", Some(criterion_5())),
        (8, "diamond distance correctness", Some(criterion_8())),
        (9, "statistics kernels", Some(criterion_9())),
    ];
    lines.sort_by_key(|l| l.0);
    let covered = lines.iter().filter(|l| (2..=5).contains(&l.0)).all(|l| l.2.as_ref().is_some_and(|v| v.pass));
    lines.push((10, "trapped-ion datasets", None));

    let mut failed = Vec::new();
    for (n, name, v) in &lines {
        match v {
            Some(v) => {
                println!("criterion {n:>2} [{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
                if !v.pass {
                    failed.push(*n);
                }
            }
            None => println!(
                "criterion {n:>2} [N/A ] {name}: not reproducible, experimental data unavailable; covered by criteria 2-5 on synthetic analogues ({})",
                if covered { "all pass" } else { "not all pass" }
            ),
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
