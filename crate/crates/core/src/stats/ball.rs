//! Minimum log-likelihood ratio over a TVD ball, and the smallest ball
//! radius that passes an LLR threshold.

use super::{llr_value, tvd_slices};

/// Solution of `min { λ(f, q) : q ∈ Δ, δ_TVD(q, p) ≤ t }`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallOptimum {
    /// Minimizing distribution.
    pub q: Vec<f64>,
    /// `λ* = 2N Σ f ln(f/q*)`.
    pub llr: f64,
    /// Duality gap `λ* − (dual lower bound)`; zero up to rounding when the
    /// KKT solution is exact.
    pub gap: f64,
}

/// Two-outcome closed form: `q*_0 = f_0` clamped to `[p_0 − t, p_0 + t]`.
pub fn min_llr_binary(f: &[f64], p: &[f64], t: f64, n: f64) -> f64 {
    debug_assert_eq!(f.len(), 2);
    let lo = (p[0] - t).max(0.0);
    let hi = (p[0] + t).min(1.0);
    let q0 = f[0].clamp(lo, hi);
    llr_value(f, &[q0, 1.0 - q0], n)
}

/// General `m`-outcome solver from the KKT conditions.
///
/// At the optimum, outcomes whose ratio `f_k/p_k` exceeds a level `a > 1`
/// are raised to `q_k = f_k/a`, those with ratio below `b < 1` are lowered
/// to `q_k = f_k/b`, and the rest stay at `p_k`; `a` and `b` are fixed by
/// moving exactly `t` of probability mass each way. Both levels are found
/// exactly by sorting. A Lagrangian dual bound at multipliers
/// `μ = (a+b)/2`, `ν = (a−b)/2` certifies the result.
pub fn min_llr_kkt(f: &[f64], p: &[f64], t: f64, n: f64) -> BallOptimum {
    let m = f.len();
    if t >= tvd_slices(f, p) || t >= 1.0 {
        return BallOptimum {
            q: f.to_vec(),
            llr: 0.0,
            gap: 0.0,
        };
    }
    if t <= 0.0 {
        return BallOptimum {
            q: p.to_vec(),
            llr: llr_value(f, p, n),
            gap: 0.0,
        };
    }
    let ratio = |k: usize| {
        if p[k] > 0.0 {
            f[k] / p[k]
        } else if f[k] > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    };

    // Raise level a: I(a) = Σ_{r_k > a} (f_k/a − p_k) = t.
    let mut up: Vec<usize> = (0..m).filter(|&k| f[k] > 0.0 && ratio(k) > 1.0).collect();
    up.sort_by(|&x, &y| ratio(y).total_cmp(&ratio(x)));
    let (mut fs, mut ps) = (0.0, 0.0);
    let mut a = 1.0;
    for (j, &k) in up.iter().enumerate() {
        fs += f[k];
        ps += p[k];
        a = fs / (t + ps);
        let next = up.get(j + 1).map_or(1.0, |&k2| ratio(k2));
        if a >= next {
            break;
        }
    }

    // Lower level b: D(b) = Σ_{r_k < b} (p_k − f_k/b) = t.
    let zero_mass: f64 = (0..m).filter(|&k| f[k] == 0.0).map(|k| p[k]).sum();
    let mut q = p.to_vec();
    let b;
    if zero_mass >= t {
        // Draining unobserved outcomes alone suffices; the objective does not
        // depend on how the drain is split among them.
        b = 0.0;
        for k in (0..m).filter(|&k| f[k] == 0.0) {
            q[k] = p[k] * (1.0 - t / zero_mass);
        }
    } else {
        let mut down: Vec<usize> = (0..m).filter(|&k| p[k] > 0.0 && ratio(k) < 1.0).collect();
        down.sort_by(|&x, &y| ratio(x).total_cmp(&ratio(y)));
        let (mut fs, mut ps) = (0.0, 0.0);
        let mut level = 1.0;
        for (j, &k) in down.iter().enumerate() {
            fs += f[k];
            ps += p[k];
            if fs == 0.0 || ps <= t {
                continue;
            }
            level = fs / (ps - t);
            let next = down.get(j + 1).map_or(1.0, |&k2| ratio(k2));
            if level <= next {
                break;
            }
        }
        b = level;
        for &k in &down {
            if ratio(k) < b {
                q[k] = f[k] / b;
            }
        }
    }
    for &k in &up {
        if ratio(k) > a {
            q[k] = f[k] / a;
        }
    }

    let llr = llr_value(f, &q, n);
    let gap = llr - dual_bound(f, p, t, n, a, b);
    BallOptimum { q, llr, gap }
}

/// Lower bound on `λ*` from the Lagrangian dual at levels `a ≥ b ≥ 0`.
fn dual_bound(f: &[f64], p: &[f64], t: f64, n: f64, a: f64, b: f64) -> f64 {
    let mu = 0.5 * (a + b);
    let nu = 0.5 * (a - b);
    let piece = |fk: f64, pk: f64, q: f64| {
        let log_term = if fk > 0.0 { fk * q.ln() } else { 0.0 };
        log_term - mu * q - nu * (q - pk).abs()
    };
    let mut dual = mu + 2.0 * nu * t;
    for (&fk, &pk) in f.iter().zip(p) {
        let mut candidates = vec![pk];
        if fk > 0.0 {
            if a > 0.0 && fk / a > pk {
                candidates.push(fk / a);
            }
            if b > 0.0 && fk / b < pk {
                candidates.push(fk / b);
            }
        } else {
            candidates.push(0.0);
        }
        let best = candidates
            .into_iter()
            .filter(|q| *q > 0.0 || fk == 0.0)
            .map(|q| piece(fk, pk, q))
            .fold(f64::NEG_INFINITY, f64::max);
        dual += best;
    }
    let entropy_term: f64 = f.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
    2.0 * n * (entropy_term - dual)
}

/// `λ*(t) = min { λ(f, q) : δ_TVD(q, p) ≤ t }`: closed form for two
/// outcomes, [`min_llr_kkt`] otherwise.
pub fn min_llr_in_ball(f: &[f64], p: &[f64], t: f64, n: f64) -> f64 {
    if f.len() == 2 {
        min_llr_binary(f, p, t, n)
    } else {
        min_llr_kkt(f, p, t, n).llr
    }
}

/// Central-difference slope of `λ*` in `t` (one-sided at `t = 0`).
pub fn min_llr_slope(f: &[f64], p: &[f64], t: f64, n: f64, step: f64) -> f64 {
    if t > step {
        (min_llr_in_ball(f, p, t + step, n) - min_llr_in_ball(f, p, t - step, n)) / (2.0 * step)
    } else {
        (min_llr_in_ball(f, p, t + step, n) - min_llr_in_ball(f, p, t, n)) / step
    }
}

/// Bisection tolerance for [`min_tvd_budget`].
pub const BUDGET_TOL: f64 = 1e-10;

/// Smallest radius `t_C` whose ball passes `λ* ≤ threshold`.
///
/// Zero when the point prediction already passes; `δ_TVD(f, p)` when the
/// threshold is zero. Otherwise bisection to [`BUDGET_TOL`], returning the
/// upper end so that `λ*(t_C) ≤ threshold` always holds.
pub fn min_tvd_budget(f: &[f64], p: &[f64], n: f64, threshold: f64) -> f64 {
    if llr_value(f, p, n) <= threshold {
        return 0.0;
    }
    let dist = tvd_slices(f, p);
    if threshold <= 0.0 {
        return dist;
    }
    let (mut lo, mut hi) = (0.0, dist);
    while hi - lo > BUDGET_TOL {
        let mid = 0.5 * (lo + hi);
        if min_llr_in_ball(f, p, mid, n) <= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ball_examples() {
        let f = [0.6, 0.4];
        let p = [0.5, 0.5];
        assert_eq!(min_llr_in_ball(&f, &p, 0.1, 1000.0), 0.0);
        assert_eq!(min_llr_in_ball(&f, &p, 0.2, 1000.0), 0.0);
        assert_eq!(min_llr_in_ball(&f, &p, 0.0, 1000.0), llr_value(&f, &p, 1000.0));
        let lam = min_llr_in_ball(&f, &p, 0.05, 1000.0);
        let want = 2000.0 * (0.6 * (0.6f64 / 0.55).ln() + 0.4 * (0.4f64 / 0.45).ln());
        assert!((lam - want).abs() < 1e-10);
        assert!((lam - 10.19).abs() < 0.005);
        let kkt = min_llr_kkt(&f, &p, 0.05, 1000.0);
        assert!((kkt.q[0] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn budget_examples() {
        let f = [0.6, 0.4];
        let p = [0.5, 0.5];
        assert_eq!(min_tvd_budget(&[0.51, 0.49], &p, 1000.0, 5.024), 0.0);
        let t = min_tvd_budget(&f, &p, 1000.0, 5.024);
        assert!((t - 0.065).abs() < 5e-4, "{t}");
        assert_eq!(min_tvd_budget(&f, &p, 1000.0, 0.0), tvd_slices(&f, &p));
    }

    #[test]
    fn budget_bisection_brackets_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let m = rng.random_range(2..5);
            let f = random_simplex(&mut rng, m);
            let p = random_simplex(&mut rng, m);
            let n = 10f64.powf(rng.random_range(1.0..5.0));
            let thr = rng.random_range(0.5..20.0);
            let t = min_tvd_budget(&f, &p, n, thr);
            if t > 0.0 {
                assert!(min_llr_in_ball(&f, &p, t + 1e-8, n) <= thr);
                assert!(min_llr_in_ball(&f, &p, t - 1e-8, n) > thr);
            } else {
                assert!(llr_value(&f, &p, n) <= thr);
            }
        }
    }

    #[test]
    fn large_n_recovers_tvd() {
        let f = [0.62, 0.38];
        let p = [0.5, 0.5];
        let thr = 5.024;
        let t = min_tvd_budget(&f, &p, 1e9, thr);
        assert!((t - 0.12).abs() < 1e-4, "{t}");
        let f3 = [0.2, 0.5, 0.3];
        let p3 = [0.3, 0.3, 0.4];
        let t3 = min_tvd_budget(&f3, &p3, 1e9, thr);
        assert!((t3 - tvd_slices(&f3, &p3)).abs() < 1e-4);
    }

    #[test]
    fn infinite_llr_forces_positive_budget() {
        let f = [0.7, 0.3];
        let p = [1.0, 0.0];
        assert!(min_llr_in_ball(&f, &p, 0.0, 100.0).is_infinite());
        let t = min_tvd_budget(&f, &p, 100.0, 3.84);
        assert!(t > 0.0 && t < 0.3);
        let kkt = min_llr_kkt(&[0.2, 0.5, 0.3], &[0.5, 0.5, 0.0], 0.1, 100.0);
        assert!(kkt.llr.is_finite() && kkt.gap.abs() < 1e-9);
    }

    #[test]
    fn unobserved_outcomes_drain_first() {
        let f = [0.5, 0.5, 0.0];
        let p = [0.3, 0.3, 0.4];
        let sol = min_llr_kkt(&f, &p, 0.1, 100.0);
        assert!((sol.q.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((tvd_slices(&sol.q, &p) - 0.1).abs() < 1e-14);
        assert!(sol.gap.abs() < 1e-9);
    }

    fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random_bool(0.1) {
                    0.0
                } else {
                    rng.random_range(0.0..1.0f64)
                }
            })
            .collect();
        let s: f64 = raw.iter().sum();
        if s == 0.0 {
            let mut v = vec![0.0; m];
            v[0] = 1.0;
            v
        } else {
            raw.iter().map(|x| x / s).collect()
        }
    }

    /// Projected-gradient style brute force: random feasible points never
    /// beat the KKT solution.
    #[test]
    fn kkt_beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let m = rng.random_range(3..6);
            let f = random_simplex(&mut rng, m);
            let p = random_simplex(&mut rng, m);
            let t = rng.random_range(0.0..0.5);
            let sol = min_llr_kkt(&f, &p, t, 100.0);
            assert!(tvd_slices(&sol.q, &p) <= t + 1e-12);
            assert!((sol.q.iter().sum::<f64>() - 1.0).abs() < 1e-12, "{f:?} {p:?} {t} {:?}", sol.q);
            if sol.llr.is_finite() {
                assert!(sol.gap.abs() <= 1e-9 * sol.llr.max(1.0), "gap {}", sol.gap);
            }
            for _ in 0..50 {
                let r = random_simplex(&mut rng, m);
                let d = tvd_slices(&r, &p);
                let s = if d > t { t / d } else { 1.0 };
                let q: Vec<f64> = p.iter().zip(&r).map(|(a, b)| a + s * (b - a)).collect();
                assert!(llr_value(&f, &q, 100.0) >= sol.llr - 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn llr_star_is_nonincreasing_and_convex(
            f0 in 0.0f64..1.0, p0 in 0.0f64..1.0, n in 10.0f64..1e5
        ) {
            let f = [f0, 1.0 - f0];
            let p = [p0, 1.0 - p0];
            let h = 1e-3;
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let t = i as f64 * h;
                let (a, b, c) = (
                    min_llr_in_ball(&f, &p, t - h, n),
                    min_llr_in_ball(&f, &p, t, n),
                    min_llr_in_ball(&f, &p, t + h, n),
                );
                prop_assert!(b <= prev + 1e-12);
                prev = b;
                if a.is_finite() {
                    prop_assert!(a - 2.0 * b + c >= -1e-8 * (1.0 + a.abs()));
                }
            }
        }

        #[test]
        fn binary_closed_form_matches_kkt(
            f0 in 0.0f64..1.0, p0 in 0.0f64..1.0, t in 0.0f64..0.6, n in 1.0f64..1e6
        ) {
            let f = [f0, 1.0 - f0];
            let p = [p0, 1.0 - p0];
            let a = min_llr_binary(&f, &p, t, n);
            let b = min_llr_kkt(&f, &p, t, n).llr;
            if a.is_finite() {
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            } else {
                prop_assert!(b.is_infinite());
            }
        }
    }
}
