//! Automaton norms `‖A‖_{p,q}`, ℓp norms of rational functions and the
//! Kronecker criterion for square summability.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    kron_square_sum, max_abs_column_sum, max_abs_row_sum, solve_resolvent, spectral_norm, spectral_radius,
};
use crate::wfa::{count_words, WeightedAutomaton};

/// Cutoff used by [`l2_norm_squared`] when the Kronecker criterion fails.
pub const L2_FALLBACK_TRUNCATION: usize = 64;

/// Default enumeration guard for truncated norms.
pub const DEFAULT_ENUMERATION_GUARD: u128 = 20_000_000;

/// Norm index restricted to the values for which induced matrix norms are
/// computable in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NormIndex {
    One,
    Two,
    Infinity,
}

impl NormIndex {
    /// Hölder conjugate.
    pub fn conjugate(self) -> NormIndex {
        match self {
            NormIndex::One => NormIndex::Infinity,
            NormIndex::Two => NormIndex::Two,
            NormIndex::Infinity => NormIndex::One,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            NormIndex::One => 1.0,
            NormIndex::Two => 2.0,
            NormIndex::Infinity => f64::INFINITY,
        }
    }

    pub fn from_value(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(NormIndex::One)
        } else if p == 2.0 {
            Ok(NormIndex::Two)
        } else if p == f64::INFINITY {
            Ok(NormIndex::Infinity)
        } else {
            Err(Error::domain(format!("norm index {p} unsupported; use 1, 2 or inf")))
        }
    }
}

impl FromStr for NormIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(NormIndex::One),
            "2" => Ok(NormIndex::Two),
            "inf" | "infinity" | "∞" => Ok(NormIndex::Infinity),
            other => Err(Error::domain(format!("norm index {other:?} unsupported; use 1, 2 or inf"))),
        }
    }
}

impl fmt::Display for NormIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormIndex::One => "1",
            NormIndex::Two => "2",
            NormIndex::Infinity => "inf",
        })
    }
}

/// Hölder conjugate pair `(p, q)` with `1/p + 1/q = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HolderPair {
    pub p: NormIndex,
    pub q: NormIndex,
}

impl HolderPair {
    pub fn from_p(p: NormIndex) -> Self {
        HolderPair { p, q: p.conjugate() }
    }

    pub const ALL: [HolderPair; 3] = [
        HolderPair { p: NormIndex::One, q: NormIndex::Infinity },
        HolderPair { p: NormIndex::Two, q: NormIndex::Two },
        HolderPair { p: NormIndex::Infinity, q: NormIndex::One },
    ];
}

pub fn vector_norm(v: &DVector<f64>, p: NormIndex) -> f64 {
    match p {
        NormIndex::One => v.iter().map(|x| x.abs()).sum(),
        NormIndex::Two => v.norm(),
        NormIndex::Infinity => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
    }
}

/// Matrix norm induced by the vector `q`-norm: max column sum (q = 1),
/// largest singular value (q = 2), max row sum (q = ∞).
pub fn induced_matrix_norm(m: &DMatrix<f64>, q: NormIndex) -> f64 {
    match q {
        NormIndex::One => max_abs_column_sum(m),
        NormIndex::Two => spectral_norm(m),
        NormIndex::Infinity => max_abs_row_sum(m),
    }
}

/// `‖A‖_{p,q} = max{‖α‖_p, ‖β‖_q, max_a ‖A_a‖_q}`.
pub fn wfa_norm(a: &WeightedAutomaton, hp: HolderPair) -> f64 {
    a.transitions()
        .iter()
        .map(|m| induced_matrix_norm(m, hp.q))
        .fold(vector_norm(a.alpha(), hp.p).max(vector_norm(a.beta(), hp.q)), f64::max)
}

/// Membership in the ball `A_{n,p,r}` with `n` taken as `a.states()`.
pub fn in_weight_ball(a: &WeightedAutomaton, hp: HolderPair, r: f64) -> bool {
    wfa_norm(a, hp) <= r
}

/// Whether a norm value is exact or a partial sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormStatus {
    Exact,
    TruncatedLowerBound,
}

/// Value of an ℓp-type norm of a rational function.
///
/// `tail_bound`, when present, bounds what the truncation left out: the
/// remainder `Σ_{|x|>L} |f(x)|^p` of the p-th power sum for finite `p`, or
/// `sup_{|x|>L} |f(x)|` for `p = ∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionNormResult {
    pub value: f64,
    pub status: NormStatus,
    pub truncation: Option<usize>,
    pub tail_bound: Option<f64>,
    /// `ρ(Σ_a A_a ⊗ A_a)` when it was computed.
    pub kronecker_radius: Option<f64>,
}

/// Squared ℓ2 norm `‖f_A‖₂² = Σ_x f_A(x)²`.
///
/// With `M = Σ_a A_a ⊗ A_a`, `Σ_{|x|=t} f(x)² = (α⊗α)ᵀ Mᵗ (β⊗β)`. When
/// `ρ(M) < 1` the series is summed exactly as `(α⊗α)ᵀ (I − M)⁻¹ (β⊗β)`.
/// Otherwise the partial sum up to [`L2_FALLBACK_TRUNCATION`] is returned
/// as a lower bound: the criterion is sufficient only, since cancellation in
/// non-minimal automata can keep the norm finite with `ρ(M) ≥ 1`.
pub fn l2_norm_squared(a: &WeightedAutomaton) -> Result<FunctionNormResult> {
    let m = kron_square_sum(a);
    let rho = spectral_radius(&m);
    let aa = a.alpha().kronecker(a.alpha());
    let bb = a.beta().kronecker(a.beta());
    if rho < 1.0 {
        let y = solve_resolvent(&m, &bb)?;
        Ok(FunctionNormResult {
            value: aa.dot(&y).max(0.0),
            status: NormStatus::Exact,
            truncation: None,
            tail_bound: None,
            kronecker_radius: Some(rho),
        })
    } else {
        let mut w = bb;
        let mut total = 0.0;
        for t in 0..=L2_FALLBACK_TRUNCATION {
            if t > 0 {
                w = &m * &w;
            }
            total += aa.dot(&w);
            if !total.is_finite() {
                break;
            }
        }
        Ok(FunctionNormResult {
            value: total,
            status: NormStatus::TruncatedLowerBound,
            truncation: Some(L2_FALLBACK_TRUNCATION),
            tail_bound: None,
            kronecker_radius: Some(rho),
        })
    }
}

/// Remainder `Σ_{|x|>L} f(x)²` of the ℓ2 series, computed as
/// `(α⊗α)ᵀ M^{L+1} (I − M)⁻¹ (β⊗β)`. Requires `ρ(M) < 1`.
pub fn l2_tail(a: &WeightedAutomaton, cutoff: usize) -> Result<f64> {
    let m = kron_square_sum(a);
    let rho = spectral_radius(&m);
    if rho >= 1.0 {
        return Err(Error::domain(format!("ℓ2 tail needs ρ(Σ A_a⊗A_a) < 1, got {rho}")));
    }
    let mut y = solve_resolvent(&m, &a.beta().kronecker(a.beta()))?;
    for _ in 0..=cutoff {
        y = &m * &y;
    }
    Ok(a.alpha().kronecker(a.alpha()).dot(&y).max(0.0))
}

/// Smallest `‖A‖_{p,q}` over the supported Hölder pairs; any of them gives
/// `|f(x)| ≤ r^{|x|+2}`.
pub fn growth_radius(a: &WeightedAutomaton) -> f64 {
    HolderPair::ALL.iter().map(|&hp| wfa_norm(a, hp)).fold(f64::INFINITY, f64::min)
}

/// Truncated ℓp norm over all strings of length ≤ `cutoff`; `p` may be any
/// value in `[1, ∞]`.
pub fn lp_norm_truncated(a: &WeightedAutomaton, p: f64, cutoff: usize, guard: u128) -> Result<FunctionNormResult> {
    if !(p >= 1.0) {
        return Err(Error::domain(format!("p must lie in [1, ∞], got {p}")));
    }
    let k = a.alphabet().size();
    let count = count_words(k, cutoff);
    if count > guard {
        return Err(Error::resource(format!(
            "enumerating {count} strings up to length {cutoff} exceeds guard {guard}"
        )));
    }
    // depth-first over forward vectors, one level at a time
    let mut acc = 0.0f64;
    let mut level = vec![a.alpha().clone()];
    for t in 0..=cutoff {
        for v in &level {
            let f = v.dot(a.beta()).abs();
            if p.is_infinite() {
                acc = acc.max(f);
            } else {
                acc += f.powf(p);
            }
        }
        if t < cutoff {
            level = level.iter().flat_map(|v| a.transitions().iter().map(move |m| m.tr_mul(v))).collect();
        }
    }
    let value = if p.is_infinite() { acc } else { acc.powf(1.0 / p) };

    let r = growth_radius(a);
    let tail_bound = if r < 1.0 {
        if p.is_infinite() {
            Some(r.powi(cutoff as i32 + 3))
        } else {
            let ratio = k as f64 * r.powf(p);
            (ratio < 1.0).then(|| r.powf(2.0 * p) * ratio.powi(cutoff as i32 + 1) / (1.0 - ratio))
        }
    } else if r == 0.0 {
        Some(0.0)
    } else {
        None
    };
    Ok(FunctionNormResult {
        value,
        status: NormStatus::TruncatedLowerBound,
        truncation: Some(cutoff),
        tail_bound,
        kronecker_radius: None,
    })
}

/// Certificate for boundedness of the Hankel operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HankelBoundedness {
    pub bounded: bool,
    /// `ρ(Σ_a A_a ⊗ A_a)`.
    pub kronecker_radius: f64,
}

/// The Hankel operator of a rational function is bounded iff the function
/// is square summable; decided here with the Kronecker criterion of
/// [`l2_norm_squared`].
pub fn hankel_bounded(a: &WeightedAutomaton) -> HankelBoundedness {
    let rho = spectral_radius(&kron_square_sum(a));
    HankelBoundedness { bounded: rho < 1.0, kronecker_radius: rho }
}
