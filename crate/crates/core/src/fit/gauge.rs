//! Unitary gauge fixing of single-qubit gate sets.
//!
//! A unitary gauge transformation rotates the Bloch block of every PTM,
//! state and effect by the same `R ∈ SO(3)`; circuit probabilities are
//! unchanged. The rotation is chosen to bring a fitted gate set closest to
//! its targets in summed squared Frobenius distance.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optim::{minimize, numeric_gradient, LbfgsOptions};
use crate::error::{Error, Result};
use crate::quantum::{Basis, Effect, GateSet, StateVec, SuperOp};

fn embed(r: &Matrix3<f64>) -> DMatrix<f64> {
    let mut t = DMatrix::identity(4, 4);
    for i in 0..3 {
        for j in 0..3 {
            t[(i + 1, j + 1)] = r[(i, j)];
        }
    }
    t
}

/// Applies `G → T G Tᵀ`, `s → T s`, `e → T e` with `T = 1 ⊕ R`.
pub fn apply_rotation_gauge(gs: &GateSet, r: &Matrix3<f64>) -> Result<GateSet> {
    if gs.basis() != Basis::Pauli {
        return Err(Error::InvalidInput("unitary gauge fixing supports qubit gate sets".into()));
    }
    let t = embed(r);
    let mut out = gs.clone();
    let labels: Vec<String> = gs.labels().map(str::to_string).collect();
    for l in labels {
        let m = &t * gs.gate(&l)?.matrix() * t.transpose();
        out.set_gate(l, SuperOp::from_matrix(Basis::Pauli, m)?)?;
    }
    let s: DVector<f64> = &t * gs.prep().coeffs();
    out.set_prep(StateVec::from_coeffs(Basis::Pauli, s.iter().copied().collect())?)?;
    for k in 0..gs.povm().len() {
        let e: DVector<f64> = &t * gs.povm()[k].1.coeffs();
        out.set_effect(k, Effect::from_coeffs(Basis::Pauli, e.iter().copied().collect())?)?;
    }
    Ok(out)
}

fn distance(a: &GateSet, b: &GateSet) -> Result<f64> {
    let mut d = 0.0;
    for l in a.labels() {
        d += (a.gate(l)?.matrix() - b.gate(l)?.matrix()).norm_squared();
    }
    d += (a.prep().coeffs() - b.prep().coeffs()).norm_squared();
    for (x, y) in a.povm().iter().zip(b.povm()) {
        d += (x.1.coeffs() - y.1.coeffs()).norm_squared();
    }
    Ok(d)
}

/// The rotation gauge minimizing the distance from `fit` to `targets`,
/// searched by local optimization from several starting rotations.
pub fn gauge_fix(fit: &GateSet, targets: &GateSet) -> Result<GateSet> {
    Ok(gauge_fix_with_rotation(fit, targets)?.0)
}

pub fn gauge_fix_with_rotation(fit: &GateSet, targets: &GateSet) -> Result<(GateSet, Matrix3<f64>)> {
    if fit.basis() != targets.basis() || fit.povm().len() != targets.povm().len() {
        return Err(Error::DimensionMismatch {
            expected: targets.dim(),
            found: fit.dim(),
        });
    }
    for l in fit.labels() {
        targets.gate(l)?;
    }
    let rot = |w: &[f64], base: &Matrix3<f64>| Rotation3::new(Vector3::new(w[0], w[1], w[2])).into_inner() * base;
    let cost = |r: &Matrix3<f64>| -> f64 {
        apply_rotation_gauge(fit, r)
            .and_then(|g| distance(&g, targets))
            .unwrap_or(f64::INFINITY)
    };

    let mut starts = vec![Matrix3::identity()];
    for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
        for k in 1..4 {
            starts.push(Rotation3::new(axis * (k as f64) * std::f64::consts::FRAC_PI_2).into_inner());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a75);
    for _ in 0..8 {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        starts.push(Rotation3::new(v * std::f64::consts::PI).into_inner());
    }

    let opts = LbfgsOptions {
        grad_tol: 1e-13,
        ..LbfgsOptions::default()
    };
    let mut best = (cost(&Matrix3::identity()), Matrix3::identity());
    for base in starts {
        let f = |w: &[f64]| cost(&rot(w, &base));
        let m = minimize(|w| (f(w), numeric_gradient(&f, w, 1e-7)), vec![0.0; 3], &opts);
        // Re-centre once so the final polish runs at a small rotation.
        let base2 = rot(&m.x, &base);
        let f2 = |w: &[f64]| cost(&rot(w, &base2));
        let m2 = minimize(|w| (f2(w), numeric_gradient(&f2, w, 1e-8)), vec![0.0; 3], &opts);
        let r = rot(&m2.x, &base2);
        let v = cost(&r);
        if v < best.0 {
            best = (v, r);
        }
    }
    Ok((apply_rotation_gauge(fit, &best.1)?, best.1))
}
