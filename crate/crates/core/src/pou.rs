//! Smooth cutoff and the Whitney partition of unity.
//!
//! The 1-D profile is the standard smooth step
//! `s(t) = B(3/4 − |t|) / (B(3/4 − |t|) + B(|t| − 1/2))`, `B(u) = exp(−1/u)`
//! for `u > 0` and `0` otherwise. On the plateau and outside the support the
//! series is emitted exactly; in the transition band it is computed in
//! univariate Taylor arithmetic.

use crate::decomp::{DecompError, Decomposition, WhitneyCube};
use crate::multiindex::IndexSpace;
use crate::taylor::TaylorValue;

const PLATEAU: f64 = 0.5;
const SUPPORT: f64 = 0.75;
// exp overflows past this exponent; the step is then exactly 0 or 1 in f64
const EXP_LIMIT: f64 = 745.0;

/// The fixed profile `s` and the cutoff `ψ(x) = Π s(xᵢ)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BumpProfile;

impl BumpProfile {
    /// Taylor coefficients `s^{(r)}(t0)/r!`, `r = 0..=k`.
    pub fn series(t0: f64, k: u32) -> Vec<f64> {
        let len = k as usize + 1;
        let a = t0.abs();
        if a <= PLATEAU {
            let mut out = vec![0.0; len];
            out[0] = 1.0;
            return out;
        }
        if a >= SUPPORT || !a.is_finite() {
            return vec![0.0; len];
        }
        let sigma = t0.signum();
        let t = TaylorValue::seed_variable(&[t0], 0, k).unwrap();
        let st = t.scale(sigma);
        let u1 = &st.constant_like(SUPPORT) - &st;
        let u2 = &st - &st.constant_like(PLATEAU);
        // both constant terms are strictly positive inside the band
        let e = &u1.recip().unwrap() - &u2.recip().unwrap();
        let e0 = e.value();
        if e0 > EXP_LIMIT {
            return vec![0.0; len];
        }
        if e0 < -EXP_LIMIT {
            let mut out = vec![0.0; len];
            out[0] = 1.0;
            return out;
        }
        let one = e.constant_like(1.0);
        let s = if e0 > 0.0 {
            let w = (-&e).exp();
            w.div(&(&one + &w)).unwrap()
        } else {
            one.div(&(&one + &e.exp())).unwrap()
        };
        s.coefficients().to_vec()
    }

    pub fn value(t: f64) -> f64 {
        Self::series(t, 0)[0]
    }

    /// `ψ` expanded at `x` to order `k`.
    pub fn psi(x: &[f64], k: u32) -> TaylorValue {
        scaled_product(x, &vec![0.0; x.len()], 1.0, k)
    }
}

/// `Π s((xᵢ − cᵢ)/l)` expanded at `x`; coefficient `r` of each axis picks up `l^{-r}`.
fn scaled_product(x: &[f64], center: &[f64], side: f64, k: u32) -> TaylorValue {
    let n = x.len();
    let mut acc = TaylorValue::constant(n, k, 1.0);
    for i in 0..n {
        let mut series = BumpProfile::series((x[i] - center[i]) / side, k);
        if series.iter().all(|&c| c == 0.0) {
            return TaylorValue::zero(n, k);
        }
        if series[1..].iter().all(|&c| c == 0.0) && series[0] == 1.0 {
            continue;
        }
        let mut f = 1.0;
        for c in series.iter_mut().skip(1) {
            f /= side;
            *c *= f;
        }
        acc = &acc * &TaylorValue::from_axis_series(n, k, i, &series);
    }
    acc
}

/// `ψ_C(x) = ψ((x − y_C)/l_C)` expanded at `x`.
pub fn psi_cube(c: &WhitneyCube, x: &[f64], k: u32) -> TaylorValue {
    scaled_product(x, &c.center(), c.side(), k)
}

/// All nonzero partition functions at `x`: `(C, φ_C)` for every supporting cube.
///
/// The denominator sums `ψ_{C'}` over the supporting cubes only. Every other
/// cube has `x ∉ D_{C'}`, where its series is exactly zero (the profile is
/// flat at the edge of its support).
pub fn partition_at(
    decomp: &Decomposition,
    x: &[f64],
    k: u32,
) -> Result<Vec<(WhitneyCube, TaylorValue)>, DecompError> {
    let cubes = decomp.supporting_cubes(x)?;
    let psis: Vec<TaylorValue> = cubes.iter().map(|c| psi_cube(c, x, k)).collect();
    let mut total = TaylorValue::zero(x.len(), k);
    for p in &psis {
        total += p;
    }
    // x lies on the plateau of its own cube, so the constant term is >= 1
    let inv = total.recip().expect("partition denominator vanished");
    Ok(cubes
        .into_iter()
        .zip(psis)
        .map(|(c, p)| (c, &p * &inv))
        .collect())
}

/// `φ_C` expanded at `x`.
pub fn phi_cube(
    decomp: &Decomposition,
    c: &WhitneyCube,
    x: &[f64],
    k: u32,
) -> Result<TaylorValue, DecompError> {
    if !c.enlarged_contains(x) {
        decomp.locate(x)?;
        return Ok(TaylorValue::zero(x.len(), k));
    }
    Ok(partition_at(decomp, x, k)?
        .into_iter()
        .find(|(d, _)| d == c)
        .map(|(_, p)| p)
        .unwrap_or_else(|| TaylorValue::zero(x.len(), k)))
}

/// Empirical derivative bound: for each order `r ≤ k`, the maximum over the
/// samples and their supporting cubes of `|∂^α φ_C(y)| · d(y, A)^r`.
/// Samples on `A` or with `d(y, A) ≥ 4√n` are skipped.
pub fn estimate_derivative_bounds(
    decomp: &Decomposition,
    samples: &[Vec<f64>],
    k: u32,
) -> Result<Vec<f64>, DecompError> {
    let n = decomp.dim();
    let space = IndexSpace::get(n, k);
    let far = 4.0 * (n as f64).sqrt();
    let mut bounds = vec![0.0f64; k as usize + 1];
    for y in samples {
        let d = decomp.set().distance_to_set(y);
        if d == 0.0 || d >= far {
            continue;
        }
        for (_, phi) in partition_at(decomp, y, k)? {
            for (pos, alpha) in space.indices().iter().enumerate() {
                let r = alpha.order();
                let v = phi.coefficients()[pos].abs() * space.factorial_of(pos) * d.powi(r as i32);
                let slot = &mut bounds[r as usize];
                *slot = slot.max(v);
            }
        }
    }
    Ok(bounds)
}
