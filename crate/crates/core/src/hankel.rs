//! Hankel singular values of rational functions.
//!
//! For a WFA with bounded Hankel operator, `H = F·B` where `F` has rows
//! `αᵀA_u` and `B` has columns `A_vβ`. The Gramians
//! `Q = FᵀF = Σ_u A_uᵀααᵀA_u` and `P = BBᵀ = Σ_v A_vββᵀA_vᵀ` are the fixed
//! points of
//!
//! ```text
//! P = ββᵀ + Σ_a A_a P A_aᵀ        Q = ααᵀ + Σ_a A_aᵀ Q A_a
//! ```
//!
//! and the nonzero singular values of `H` are `√λ_i(PQ)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{kron_square_sum, solve_resolvent, spectral_radius, symmetrize, unvec};
use crate::wfa::{count_words, enumerate_words, WeightedAutomaton, Word};

/// Largest `n²` solved directly; above this the Gramians are found by
/// fixed-point iteration.
pub const DIRECT_SOLVE_LIMIT: usize = 400;
/// Relative residual accepted for the Gramian fixed-point equations.
pub const GRAMIAN_RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Default ceiling on the number of entries of a truncated Hankel block.
pub const DEFAULT_HANKEL_GUARD: u128 = 16_000_000;

const FIXED_POINT_MAX_ITERATIONS: usize = 1_000_000;

/// Reachability and observability Gramians with their fixed-point residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Gramians {
    /// `P = Σ_v A_v β βᵀ A_vᵀ`.
    pub reach: DMatrix<f64>,
    /// `Q = Σ_u A_uᵀ α αᵀ A_u`.
    pub observe: DMatrix<f64>,
    /// Max-entry residual of the `P` equation.
    pub reach_residual: f64,
    /// Max-entry residual of the `Q` equation.
    pub observe_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HankelSpectrum {
    /// Nonincreasing, nonnegative; one value per state.
    pub singular_values: Vec<f64>,
    pub gramians: Gramians,
    /// Number of singular values above `RANK_TOLERANCE · s_1`.
    pub numerical_rank: usize,
}

fn reach_map(a: &WeightedAutomaton, p: &DMatrix<f64>) -> DMatrix<f64> {
    a.transitions().iter().fold(DMatrix::zeros(p.nrows(), p.ncols()), |acc, m| acc + m * p * m.transpose())
}

fn observe_map(a: &WeightedAutomaton, q: &DMatrix<f64>) -> DMatrix<f64> {
    a.transitions().iter().fold(DMatrix::zeros(q.nrows(), q.ncols()), |acc, m| acc + m.transpose() * q * m)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

fn fixed_point<F>(seed: &DMatrix<f64>, rho: f64, step: F) -> Result<DMatrix<f64>>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let mut x = seed.clone();
    for _ in 0..FIXED_POINT_MAX_ITERATIONS {
        let next = seed + step(&x);
        let delta = max_abs(&(&next - &x));
        x = next;
        // geometric convergence: remaining error ≲ δ·ρ/(1−ρ)
        if delta * rho / (1.0 - rho) <= 1e-3 * GRAMIAN_RESIDUAL_TOLERANCE * max_abs(&x).max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::numeric("Gramian fixed-point iteration did not converge"))
}

/// Solves both Gramian fixed-point equations. Requires a bounded Hankel
/// operator, i.e. `ρ(Σ_a A_a ⊗ A_a) < 1`.
pub fn gramians(a: &WeightedAutomaton) -> Result<Gramians> {
    let n = a.states();
    let m = kron_square_sum(a);
    let rho = spectral_radius(&m);
    if rho >= 1.0 {
        return Err(Error::domain(format!(
            "Hankel operator is unbounded: the function is not square summable (ρ(Σ A_a⊗A_a) = {rho})"
        )));
    }
    let bb = a.beta() * a.beta().transpose();
    let aa = a.alpha() * a.alpha().transpose();
    let (reach, observe) = if n * n <= DIRECT_SOLVE_LIMIT {
        // vec(A P Aᵀ) = (A⊗A) vec(P); vec(Aᵀ Q A) = (Aᵀ⊗Aᵀ) vec(Q)
        let p = solve_resolvent(&m, &DVector::from_column_slice(bb.as_slice()))?;
        let q = solve_resolvent(&m.transpose(), &DVector::from_column_slice(aa.as_slice()))?;
        (symmetrize(&unvec(&p, n)), symmetrize(&unvec(&q, n)))
    } else {
        let p = fixed_point(&bb, rho, |x| reach_map(a, x))?;
        let q = fixed_point(&aa, rho, |x| observe_map(a, x))?;
        (symmetrize(&p), symmetrize(&q))
    };
    let reach_residual = max_abs(&(&bb + reach_map(a, &reach) - &reach));
    let observe_residual = max_abs(&(&aa + observe_map(a, &observe) - &observe));
    let ok = |res: f64, x: &DMatrix<f64>| res <= GRAMIAN_RESIDUAL_TOLERANCE * max_abs(x).max(1.0);
    if !ok(reach_residual, &reach) || !ok(observe_residual, &observe) {
        return Err(Error::numeric(format!("Gramian residuals too large ({reach_residual:e}, {observe_residual:e})")));
    }
    Ok(Gramians { reach, observe, reach_residual, observe_residual })
}

/// Hankel singular values `s_i = √λ_i(PQ)`, computed through the symmetric
/// form `Lᵀ Q L` with `P = L Lᵀ` so that rounding cannot produce complex or
/// negative eigenvalues.
pub fn hankel_singular_values(a: &WeightedAutomaton) -> Result<HankelSpectrum> {
    let g = gramians(a)?;
    let eig = SymmetricEigen::new(g.reach.clone());
    let sqrt_d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let l = &eig.eigenvectors * sqrt_d;
    let core = symmetrize(&(l.transpose() * &g.observe * &l));
    let mut values: Vec<f64> = SymmetricEigen::new(core).eigenvalues.iter().map(|&v| v.max(0.0).sqrt()).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    let top = values.first().copied().unwrap_or(0.0);
    let numerical_rank = values.iter().filter(|&&s| top > 0.0 && s > RANK_TOLERANCE * top).count();
    Ok(HankelSpectrum { singular_values: values, gramians: g, numerical_rank })
}

/// ℓp norm of a vector of singular values, `p ∈ [1, ∞]`.
pub fn schatten_norm(values: &[f64], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::domain(format!("Schatten index must lie in [1, ∞], got {p}")));
    }
    if p.is_infinite() {
        return Ok(values.iter().copied().fold(0.0, f64::max));
    }
    Ok(values.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Schatten–Hankel norm `‖f_A‖_{H,p}`.
pub fn schatten_hankel_norm(a: &WeightedAutomaton, p: f64) -> Result<f64> {
    schatten_norm(&hankel_singular_values(a)?.singular_values, p)
}

/// Finite block of the Hankel matrix: rows are all prefixes of length
/// ≤ `prefix_len`, columns all suffixes of length ≤ `suffix_len`, both in
/// length-then-lexicographic order.
#[derive(Debug, Clone)]
pub struct TruncatedHankel {
    pub prefixes: Vec<Word>,
    pub suffixes: Vec<Word>,
    pub matrix: DMatrix<f64>,
}

impl TruncatedHankel {
    pub fn build(a: &WeightedAutomaton, prefix_len: usize, suffix_len: usize, guard: u128) -> Result<Self> {
        let k = a.alphabet().size();
        let rows = count_words(k, prefix_len);
        let cols = count_words(k, suffix_len);
        if rows.saturating_mul(cols) > guard {
            return Err(Error::resource(format!("Hankel block of {rows}x{cols} entries exceeds guard {guard}")));
        }
        let prefixes = enumerate_words(k, prefix_len, guard)?;
        let suffixes = enumerate_words(k, suffix_len, guard)?;
        let data: Vec<Vec<f64>> = prefixes
            .par_iter()
            .map(|u| suffixes.iter().map(|v| a.evaluate_unchecked(u.concat(v).symbols())).collect())
            .collect();
        let matrix = DMatrix::from_fn(prefixes.len(), suffixes.len(), |i, j| data[i][j]);
        Ok(TruncatedHankel { prefixes, suffixes, matrix })
    }

    /// Singular values in nonincreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.matrix.singular_values().iter().copied().collect();
        s.sort_by(|x, y| y.total_cmp(x));
        s
    }
}

/// Singular values of the explicit Hankel block; by the rank identity at
/// most `n` of them are nonzero.
pub fn truncated_hankel_svd(
    a: &WeightedAutomaton,
    prefix_len: usize,
    suffix_len: usize,
    guard: u128,
) -> Result<Vec<f64>> {
    Ok(TruncatedHankel::build(a, prefix_len, suffix_len, guard)?.singular_values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{geometric, random_contractive, three_state};
    use crate::wfa::Alphabet;
    use rand::SeedableRng;

    #[test]
    fn geometric_gramians() {
        let g = gramians(&geometric(0.5)).unwrap();
        assert!((g.reach[(0, 0)] - 4.0 / 3.0).abs() < 1e-15);
        assert!((g.observe[(0, 0)] - 4.0 / 3.0).abs() < 1e-15);
        let s = hankel_singular_values(&geometric(0.5)).unwrap();
        assert!((s.singular_values[0] - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(s.numerical_rank, 1);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((schatten_hankel_norm(&geometric(0.5), p).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_automaton_spectrum() {
        let z = WeightedAutomaton::zero(Alphabet::letters(2).unwrap(), 2).unwrap();
        let s = hankel_singular_values(&z).unwrap();
        assert_eq!(s.singular_values, vec![0.0, 0.0]);
        assert_eq!(s.numerical_rank, 0);
        assert_eq!(schatten_hankel_norm(&z, 1.0).unwrap(), 0.0);
        assert!(truncated_hankel_svd(&z, 3, 3, 1 << 20).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unbounded_is_domain_error() {
        assert!(matches!(gramians(&three_state()), Err(Error::Domain(_))));
    }

    #[test]
    fn random_residuals_and_rank() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_contractive(&mut rng, 2, 2, 0.4);
            let s = hankel_singular_values(&a).unwrap();
            assert!(s.gramians.reach_residual <= 1e-10);
            assert!(s.gramians.observe_residual <= 1e-10);
            let t = truncated_hankel_svd(&a, 5, 5, 1 << 24).unwrap();
            assert!(t[2] <= 1e-8 * t[0].max(1.0), "third value {}", t[2]);
            let s1 = schatten_norm(&s.singular_values, f64::INFINITY).unwrap();
            let s2 = schatten_norm(&s.singular_values, 2.0).unwrap();
            let s3 = schatten_norm(&s.singular_values, 1.0).unwrap();
            assert!(s1 <= s2 + 1e-15 && s2 <= s3 + 1e-15);
        }
    }

    #[test]
    fn fixed_point_path_matches_direct_solve() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a = random_contractive(&mut rng, 3, 2, 0.6);
        let direct = gramians(&a).unwrap();
        let m = kron_square_sum(&a);
        let rho = spectral_radius(&m);
        let bb = a.beta() * a.beta().transpose();
        let p = fixed_point(&bb, rho, |x| reach_map(&a, x)).unwrap();
        assert!(max_abs(&(p - &direct.reach)) <= 1e-9 * max_abs(&direct.reach).max(1.0));
    }

    #[test]
    fn geometric_truncation() {
        let t = truncated_hankel_svd(&geometric(0.5), 20, 20, 1 << 20).unwrap();
        assert!((t[0] - 4.0 / 3.0).abs() < 1e-6);
        assert!(t[1..].iter().all(|&v| v <= 1e-9));
    }

    #[test]
    fn hankel_block_guard() {
        assert!(matches!(truncated_hankel_svd(&three_state(), 20, 20, 1 << 20), Err(Error::Resource(_))));
    }
}
