//! Small dense linear programs of the covering form
//! `min c·w  s.t.  A w ≥ b, w ≥ 0` with `c ≥ 0`.
//!
//! The solver runs the primal simplex method on the dual
//! `max b·y  s.t.  Aᵀy ≤ c, y ≥ 0`, whose slack basis is feasible because
//! `c ≥ 0`. The tableau has one row per primal variable, so thousands of
//! constraints over a handful of variables stay cheap. Bland's rule rules
//! out cycling. Primal values are read off the reduced costs of the slacks.

use crate::error::{Error, Result};

/// One primal constraint `a·w ≥ b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub w: Vec<f64>,
    pub objective: f64,
    /// Dual values, one per constraint; positive entries mark active constraints.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 1_000_000;

/// Solves `min c·w` over `constraints` and `w ≥ 0`.
pub fn solve(c: &[f64], constraints: &[Constraint]) -> Result<LpSolution> {
    let n = c.len();
    if c.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidInput("objective weights must be nonnegative".into()));
    }
    for con in constraints {
        if con.a.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: con.a.len(),
            });
        }
    }
    let m = constraints.len();
    let cols = m + n;
    // Rows: Aᵀ y + s = c. Row-major, width cols + 1 (rhs last).
    let width = cols + 1;
    let mut tab = vec![0.0; n * width];
    for (j, con) in constraints.iter().enumerate() {
        for i in 0..n {
            tab[i * width + j] = con.a[i];
        }
    }
    for i in 0..n {
        tab[i * width + m + i] = 1.0;
        tab[i * width + cols] = c[i];
    }
    // Reduced profits of max b·y: d_j = b_j − (c_B B⁻¹ A)_j; starts at b.
    let mut profit: Vec<f64> = constraints.iter().map(|k| k.b).collect();
    profit.extend(std::iter::repeat_n(0.0, n));
    let mut basis: Vec<usize> = (m..cols).collect();
    let mut pivots = 0;

    while let Some(enter) = (0..cols).find(|&j| profit[j] > PIVOT_TOL * (1.0 + profit[j].abs().min(1.0))) {
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = tab[i * width + enter];
            if a > PIVOT_TOL {
                let ratio = tab[i * width + cols] / a;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            // The dual is unbounded, so the primal constraints are infeasible.
            return Err(Error::InvalidInput("linear constraints are infeasible".into()));
        };
        let piv = tab[r * width + enter];
        for k in 0..width {
            tab[r * width + k] /= piv;
        }
        for i in 0..n {
            if i != r {
                let f = tab[i * width + enter];
                if f != 0.0 {
                    for k in 0..width {
                        tab[i * width + k] -= f * tab[r * width + k];
                    }
                }
            }
        }
        let f = profit[enter];
        for k in 0..cols {
            profit[k] -= f * tab[r * width + k];
        }
        basis[r] = enter;
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::NonConvergence {
                what: "simplex",
                detail: format!("{pivots} pivots without reaching optimality"),
            });
        }
    }

    let w: Vec<f64> = (0..n).map(|i| (-profit[m + i]).max(0.0)).collect();
    let mut duals = vec![0.0; m];
    for (i, &bj) in basis.iter().enumerate() {
        if bj < m {
            duals[bj] = tab[i * width + cols];
        }
    }
    let objective = c.iter().zip(&w).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        w,
        objective,
        duals,
        pivots,
    })
}

/// Lexicographic minimization: each objective is minimized over the optimal
/// face of the previous ones (relaxed by a relative tolerance of `1e-12`).
pub fn solve_lexicographic(objectives: &[Vec<f64>], constraints: &[Constraint]) -> Result<LpSolution> {
    let mut cons = constraints.to_vec();
    let mut last = None;
    for (k, c) in objectives.iter().enumerate() {
        let sol = solve(c, &cons)?;
        if k + 1 < objectives.len() {
            let z = sol.objective;
            cons.push(Constraint {
                a: c.iter().map(|x| -x).collect(),
                b: -(z + 1e-12 * z.abs().max(1e-12)),
            });
        }
        last = Some(sol);
    }
    let mut sol = last.ok_or_else(|| Error::InvalidInput("no objective".into()))?;
    sol.duals.truncate(constraints.len());
    sol.objective = objectives[0].iter().zip(&sol.w).map(|(a, b)| a * b).sum();
    Ok(sol)
}
