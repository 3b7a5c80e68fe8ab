//! Empirical Rademacher complexities of the three WFA classes.
//!
//! * `R_{p,r}` (ℓp ball of rational functions): the dual-norm identity
//!   `R̂_S = (r/m) E‖Σ σ_i e_{x_i}‖_q` is computed exactly.
//! * `H_{p,r}` (Schatten–Hankel ball): `(r/m) E‖Σ σ_i e_{u_i} e_{v_i}ᵀ‖_{S,q}`
//!   for a split of the sample, an upper bound.
//! * `A_{n,p,r}` (weight ball): a lower bound from projected gradient ascent
//!   on the supremum for each sign vector.
//!
//! The vector `Σ σ_i e_{x_i}` is sparse: its entry at a distinct string `x`
//! is the sum of the `s_x` signs of its occurrences, distributed as
//! `s_x − 2·Bin(s_x, 1/2)` independently across strings. Exact mode uses
//! that independence; enumeration mode walks all sign vectors.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{induced_matrix_norm, vector_norm, HolderPair, NormIndex};
use crate::rng;
use crate::sample::StringSample;
use crate::stats::SplitAssignment;
use crate::wfa::Word;

/// Largest `m` accepted for explicit enumeration of sign vectors.
pub const ENUMERATION_LIMIT: usize = 24;
/// Largest `m` for which the operator-norm bound is enumerated.
pub const OPERATOR_ENUMERATION_LIMIT: usize = 20;
/// Largest `m` for which the weight-ball ascent enumerates sign vectors.
pub const ASCENT_ENUMERATION_LIMIT: usize = 16;

/// How the expectation over sign vectors is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Closed-form expectation using independence across distinct keys.
    Exact,
    /// Average over all `2^m` sign vectors.
    Enumerate,
    /// Average over `draws` independent sign vectors.
    MonteCarlo { draws: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    ExactConvolution,
    ExactEnumeration,
    MonteCarlo,
}

/// Relation of an estimate to the true empirical Rademacher complexity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Equals,
    UpperBound,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RademacherEstimate {
    pub value: f64,
    pub mode: EstimateMode,
    /// Sign vectors averaged (`2^m`, saturating, for exact modes).
    pub draws: u64,
    /// Zero for exact modes.
    pub standard_error: f64,
    pub direction: Direction,
    pub seed: Option<u64>,
}

/// A vector of independent Rademacher signs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignDraw(Vec<i8>);

impl SignDraw {
    pub fn random<R: Rng>(rng: &mut R, m: usize) -> Self {
        SignDraw((0..m).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }
}

fn all_draws(m: usize) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        1u64 << m
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("radius must be finite and nonnegative, got {r}")));
    }
    Ok(())
}

/// Assigns each item of a sequence the index of its distinct value.
fn group_indices<T: std::hash::Hash + Eq + Clone>(items: &[T]) -> (Vec<usize>, Vec<usize>) {
    let mut ids: HashMap<T, usize> = HashMap::new();
    let mut mult = Vec::new();
    let group = items
        .iter()
        .map(|it| {
            let next = ids.len();
            let id = *ids.entry(it.clone()).or_insert(next);
            if id == mult.len() {
                mult.push(0);
            }
            mult[id] += 1;
            id
        })
        .collect();
    (group, mult)
}

/// `ln C(s, b)` for all `b ∈ 0..=s`.
fn log_binomials(s: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(s + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for b in 0..s {
        acc += ((s - b) as f64).ln() - ((b + 1) as f64).ln();
        out.push(acc);
    }
    out
}

/// Distribution of `|s − 2B|` for `B ~ Bin(s, 1/2)`, indexed by value.
fn abs_sign_sum_pmf(s: usize) -> Vec<f64> {
    let lb = log_binomials(s);
    let ln2s = s as f64 * std::f64::consts::LN_2;
    let mut pmf = vec![0.0; s + 1];
    for (b, l) in lb.iter().enumerate() {
        let z = (s as i64 - 2 * b as i64).unsigned_abs() as usize;
        pmf[z] += (l - ln2s).exp();
    }
    pmf
}

/// `E‖Z‖_q` for independent `Z_j = s_j − 2·Bin(s_j, 1/2)`.
pub fn expected_sign_sum_norm(multiplicities: &[usize], q: NormIndex) -> f64 {
    let pmfs: Vec<Vec<f64>> = multiplicities.iter().map(|&s| abs_sign_sum_pmf(s)).collect();
    match q {
        NormIndex::One => pmfs.iter().map(|p| p.iter().enumerate().map(|(z, w)| z as f64 * w).sum::<f64>()).sum(),
        NormIndex::Two => {
            // distribution of Σ Z_j² over its integer support
            let mut dist = vec![1.0];
            for p in &pmfs {
                let top = (p.len() - 1) * (p.len() - 1);
                let mut next = vec![0.0; dist.len() + top];
                for (t, &w) in dist.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    for (z, &pz) in p.iter().enumerate() {
                        if pz != 0.0 {
                            next[t + z * z] += w * pz;
                        }
                    }
                }
                dist = next;
            }
            dist.iter().enumerate().map(|(t, w)| w * (t as f64).sqrt()).sum()
        }
        NormIndex::Infinity => {
            // E max = Σ_{t≥1} P(max ≥ t) = Σ_t (1 − Π_j P(|Z_j| < t))
            let top = multiplicities.iter().copied().max().unwrap_or(0);
            let cdfs: Vec<Vec<f64>> = pmfs
                .iter()
                .map(|p| {
                    let mut acc = 0.0;
                    p.iter()
                        .map(|w| {
                            acc += w;
                            acc
                        })
                        .collect()
                })
                .collect();
            (1..=top)
                .map(|t| {
                    let below: f64 = cdfs.iter().map(|c| c.get(t - 1).copied().unwrap_or(1.0).min(1.0)).product();
                    1.0 - below
                })
                .sum()
        }
    }
}

/// Integer statistic of an integer vector whose q-norm is a function of it:
/// `Σ|z|` (q = 1), `Σz²` (q = 2), `max|z|` (q = ∞).
fn integer_stat(z: &[i64], q: NormIndex) -> u64 {
    match q {
        NormIndex::One => z.iter().map(|v| v.unsigned_abs()).sum(),
        NormIndex::Two => z.iter().map(|v| (v * v) as u64).sum(),
        NormIndex::Infinity => z.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0),
    }
}

fn stat_to_norm(stat: u64, q: NormIndex) -> f64 {
    match q {
        NormIndex::Two => (stat as f64).sqrt(),
        _ => stat as f64,
    }
}

/// `E‖Z‖_q` by walking all sign vectors with `σ_1 = +1` (the norm is even)
/// in Gray-code order and histogramming the integer statistic exactly.
pub fn enumerate_sign_sum_norm(groups: &[usize], distinct: usize, q: NormIndex) -> Result<f64> {
    let m = groups.len();
    if m > ENUMERATION_LIMIT {
        return Err(Error::resource(format!("enumerating 2^{m} sign vectors exceeds the limit 2^{ENUMERATION_LIMIT}")));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let mut z = vec![0i64; distinct];
    let mut sigma = vec![1i8; m];
    for &g in groups {
        z[g] += 1;
    }
    let mut hist: HashMap<u64, u64> = HashMap::new();
    let free = m - 1;
    let total = 1u64 << free;
    for step in 0..total {
        if step > 0 {
            // flip the sign of 1 + trailing_zeros(step)
            let i = 1 + step.trailing_zeros() as usize;
            sigma[i] = -sigma[i];
            z[groups[i]] += 2 * sigma[i] as i64;
        }
        *hist.entry(integer_stat(&z, q)).or_insert(0) += 1;
    }
    let mut keys: Vec<u64> = hist.keys().copied().collect();
    keys.sort_unstable();
    let sum: f64 = keys.iter().map(|k| hist[k] as f64 * stat_to_norm(*k, q)).sum();
    Ok(sum / total as f64)
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn monte_carlo<F>(m: usize, draws: usize, seed: u64, norm: F) -> Result<(f64, f64)>
where
    F: Fn(&SignDraw) -> f64 + Sync,
{
    if draws == 0 {
        return Err(Error::domain("Monte-Carlo mode needs at least one draw"));
    }
    let values: Vec<f64> =
        (0..draws).into_par_iter().map(|d| norm(&SignDraw::random(&mut rng::stream(seed, d as u64), m))).collect();
    Ok(mean_and_se(&values))
}

fn sparse_sign_sum(groups: &[usize], distinct: usize, sigma: &SignDraw) -> Vec<i64> {
    let mut z = vec![0i64; distinct];
    for (&g, &s) in groups.iter().zip(sigma.signs()) {
        z[g] += s as i64;
    }
    z
}

#[allow(clippy::too_many_arguments)]
fn finish(
    r: f64,
    m: usize,
    expectation: f64,
    se: f64,
    mode: EstimateMode,
    draws: u64,
    direction: Direction,
    seed: Option<u64>,
) -> RademacherEstimate {
    RademacherEstimate {
        value: r * expectation / m as f64,
        mode,
        draws,
        standard_error: r * se / m as f64,
        direction,
        seed,
    }
}

/// `R̂_S(R_{p,r}) = (r/m) E‖Σ σ_i e_{x_i}‖_q` with `1/p + 1/q = 1`.
pub fn rademacher_rpr(s: &StringSample, r: f64, p: NormIndex, mode: Mode, seed: u64) -> Result<RademacherEstimate> {
    check_radius(r)?;
    let q = p.conjugate();
    let m = s.len();
    let (groups, mult) = group_indices(s.strings());
    match mode {
        Mode::Exact => {
            let e = expected_sign_sum_norm(&mult, q);
            Ok(finish(r, m, e, 0.0, EstimateMode::ExactConvolution, all_draws(m), Direction::Equals, None))
        }
        Mode::Enumerate => {
            let e = enumerate_sign_sum_norm(&groups, mult.len(), q)?;
            Ok(finish(r, m, e, 0.0, EstimateMode::ExactEnumeration, all_draws(m), Direction::Equals, None))
        }
        Mode::MonteCarlo { draws } => {
            let (mean, se) = monte_carlo(m, draws, seed, |sig| {
                let z = sparse_sign_sum(&groups, mult.len(), sig);
                stat_to_norm(integer_stat(&z, q), q)
            })?;
            Ok(finish(r, m, mean, se, EstimateMode::MonteCarlo, draws as u64, Direction::Equals, Some(seed)))
        }
    }
}

/// Sign matrix `Σ σ_i e_{u_i} e_{v_i}ᵀ` over distinct prefixes × suffixes.
fn sign_matrix(cells: &[(usize, usize)], rows: usize, cols: usize, sigma: &[i8]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for (&(i, j), &s) in cells.iter().zip(sigma) {
        m[(i, j)] += s as f64;
    }
    m
}

fn operator_norm(m: &DMatrix<f64>) -> f64 {
    crate::linalg::spectral_norm(m)
}

/// Upper bound `(r/m) E‖Σ σ_i e_{u_i} e_{v_i}ᵀ‖_{S,q}` on `R̂_S(H_{p,r})`
/// for the given split; `p = 2` uses the Frobenius norm, `p = 1` the
/// operator norm.
pub fn rademacher_hpr_bound(
    s: &StringSample,
    split: &SplitAssignment,
    r: f64,
    p: NormIndex,
    mode: Mode,
    seed: u64,
) -> Result<RademacherEstimate> {
    check_radius(r)?;
    if !split.is_split_of(s) {
        return Err(Error::domain("split does not decompose the sample"));
    }
    let m = s.len();
    let prefixes: Vec<&Word> = split.pairs.iter().map(|p| &p.0).collect();
    let suffixes: Vec<&Word> = split.pairs.iter().map(|p| &p.1).collect();
    let (row, row_mult) = group_indices(&prefixes);
    let (col, col_mult) = group_indices(&suffixes);
    let cells: Vec<(usize, usize)> = row.iter().copied().zip(col.iter().copied()).collect();
    let (cell_groups, cell_mult) = group_indices(&cells);
    let (rows, cols) = (row_mult.len(), col_mult.len());
    match (p, mode) {
        (NormIndex::Two, Mode::Exact) => {
            let e = expected_sign_sum_norm(&cell_mult, NormIndex::Two);
            Ok(finish(r, m, e, 0.0, EstimateMode::ExactConvolution, all_draws(m), Direction::UpperBound, None))
        }
        (NormIndex::Two, Mode::Enumerate) => {
            let e = enumerate_sign_sum_norm(&cell_groups, cell_mult.len(), NormIndex::Two)?;
            Ok(finish(r, m, e, 0.0, EstimateMode::ExactEnumeration, all_draws(m), Direction::UpperBound, None))
        }
        (NormIndex::Two, Mode::MonteCarlo { draws }) => {
            let (mean, se) = monte_carlo(m, draws, seed, |sig| {
                let z = sparse_sign_sum(&cell_groups, cell_mult.len(), sig);
                (integer_stat(&z, NormIndex::Two) as f64).sqrt()
            })?;
            Ok(finish(r, m, mean, se, EstimateMode::MonteCarlo, draws as u64, Direction::UpperBound, Some(seed)))
        }
        (NormIndex::One, Mode::Exact | Mode::Enumerate) => {
            if m > OPERATOR_ENUMERATION_LIMIT {
                return Err(Error::resource(format!(
                    "exact operator-norm expectation enumerates 2^{m} sign matrices; limit is m ≤ {OPERATOR_ENUMERATION_LIMIT}"
                )));
            }
            // ‖R‖ is even in σ: fix σ_1 = +1
            let free = m - 1;
            let total = 1u64 << free;
            let norms: Vec<f64> = (0..total)
                .into_par_iter()
                .map(|bits| {
                    let sigma: Vec<i8> =
                        (0..m).map(|i| if i > 0 && (bits >> (i - 1)) & 1 == 1 { -1 } else { 1 }).collect();
                    operator_norm(&sign_matrix(&cells, rows, cols, &sigma))
                })
                .collect();
            let e = norms.iter().sum::<f64>() / total as f64;
            Ok(finish(r, m, e, 0.0, EstimateMode::ExactEnumeration, all_draws(m), Direction::UpperBound, None))
        }
        (NormIndex::One, Mode::MonteCarlo { draws }) => {
            let (mean, se) =
                monte_carlo(m, draws, seed, |sig| operator_norm(&sign_matrix(&cells, rows, cols, sig.signs())))?;
            Ok(finish(r, m, mean, se, EstimateMode::MonteCarlo, draws as u64, Direction::UpperBound, Some(seed)))
        }
        (NormIndex::Infinity, _) => Err(Error::domain("the Schatten–Hankel bound supports p = 1 or p = 2")),
    }
}

/// Settings of the multi-start projected gradient ascent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AscentConfig {
    pub restarts: usize,
    pub steps: usize,
    pub step_size: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig { restarts: 50, steps: 200, step_size: 0.1 }
    }
}

#[derive(Clone)]
struct Params {
    alpha: DVector<f64>,
    beta: DVector<f64>,
    trans: Vec<DMatrix<f64>>,
}

impl Params {
    fn axpy(&self, step: f64, g: &Params) -> Params {
        Params {
            alpha: &self.alpha + &g.alpha * step,
            beta: &self.beta + &g.beta * step,
            trans: self.trans.iter().zip(&g.trans).map(|(a, b)| a + b * step).collect(),
        }
    }

    /// Rescales every block into its norm ball of radius `r`.
    fn project(&mut self, hp: HolderPair, r: f64) {
        fn shrink<T>(x: &mut T, norm: f64, r: f64)
        where
            T: std::ops::MulAssign<f64>,
        {
            if norm > r {
                *x *= r / norm;
            }
        }
        let na = vector_norm(&self.alpha, hp.p);
        shrink(&mut self.alpha, na, r);
        let nb = vector_norm(&self.beta, hp.q);
        shrink(&mut self.beta, nb, r);
        for m in &mut self.trans {
            let nm = induced_matrix_norm(m, hp.q);
            shrink(m, nm, r);
        }
    }

    fn random<R: Rng>(rng: &mut R, n: usize, k: usize, hp: HolderPair, r: f64) -> Params {
        let mut u = || rng.random_range(-1.0..=1.0);
        let mut p = Params {
            alpha: DVector::from_fn(n, |_, _| u()),
            beta: DVector::from_fn(n, |_, _| u()),
            trans: (0..k).map(|_| DMatrix::from_fn(n, n, |_, _| u())).collect(),
        };
        // scale each block to a uniformly random fraction of the radius
        let mut place = |norm: f64| if norm > 0.0 { r * rng.random::<f64>() / norm } else { 0.0 };
        p.alpha *= place(vector_norm(&p.alpha, hp.p));
        p.beta *= place(vector_norm(&p.beta, hp.q));
        for m in &mut p.trans {
            *m *= place(induced_matrix_norm(m, hp.q));
        }
        p
    }
}

/// Objective `Σ_x c_x f(x)` and its gradient for integer coefficients.
fn objective_and_gradient(p: &Params, terms: &[(&[usize], f64)]) -> (f64, Params) {
    let n = p.alpha.len();
    let mut g =
        Params { alpha: DVector::zeros(n), beta: DVector::zeros(n), trans: vec![DMatrix::zeros(n, n); p.trans.len()] };
    let mut value = 0.0;
    for &(x, c) in terms {
        let mut fwd = Vec::with_capacity(x.len() + 1);
        fwd.push(p.alpha.clone());
        for &a in x {
            let next = p.trans[a].tr_mul(fwd.last().unwrap());
            fwd.push(next);
        }
        value += c * fwd[x.len()].dot(&p.beta);
        g.beta += &fwd[x.len()] * c;
        let mut back = p.beta.clone();
        for s in (0..x.len()).rev() {
            // d/dA_{x_s} of f_{s}ᵀ A b = f_s bᵀ
            g.trans[x[s]] += &fwd[s] * back.transpose() * c;
            back = &p.trans[x[s]] * back;
        }
        g.alpha += back * c;
    }
    (value, g)
}

fn objective(p: &Params, terms: &[(&[usize], f64)]) -> f64 {
    terms
        .iter()
        .map(|&(x, c)| {
            let mut v = p.alpha.clone();
            for &a in x {
                v = p.trans[a].tr_mul(&v);
            }
            c * v.dot(&p.beta)
        })
        .sum()
}

/// Best objective found by multi-start projected ascent for one sign vector.
fn ascend<R: Rng>(
    rng: &mut R,
    terms: &[(&[usize], f64)],
    n: usize,
    k: usize,
    hp: HolderPair,
    r: f64,
    cfg: AscentConfig,
) -> Result<f64> {
    let mut best = 0.0f64; // the zero automaton is always feasible
    for _ in 0..cfg.restarts {
        let mut x = Params::random(rng, n, k, hp, r);
        let mut fx = objective(&x, terms);
        let mut step = cfg.step_size;
        for _ in 0..cfg.steps {
            let (_, g) = objective_and_gradient(&x, terms);
            let mut cand = x.axpy(step, &g);
            cand.project(hp, r);
            let fc = objective(&cand, terms);
            if !fc.is_finite() {
                return Err(Error::numeric("objective overflowed during ascent; use r ≤ 1 or shorter strings"));
            }
            if fc > fx {
                x = cand;
                fx = fc;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        best = best.max(fx);
    }
    Ok(best)
}

/// Lower-bound estimate of `R̂_S(A_{n,p,r})`: for each sign vector the
/// supremum over the weight ball is approached by projected gradient ascent,
/// and any value found is below the true supremum.
pub fn rademacher_anpr_lower(
    s: &StringSample,
    n: usize,
    hp: HolderPair,
    r: f64,
    mode: Mode,
    seed: u64,
    cfg: AscentConfig,
) -> Result<RademacherEstimate> {
    check_radius(r)?;
    if n == 0 {
        return Err(Error::domain("state count must be at least 1"));
    }
    let m = s.len();
    let k = s.alphabet().size();
    let (groups, mult) = group_indices(s.strings());
    let mut reps: Vec<&[usize]> = vec![&[]; mult.len()];
    for (x, &g) in s.strings().iter().zip(&groups) {
        reps[g] = x.symbols();
    }
    let per_draw = |index: u64, sigma: &[i8]| -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        let mut coef = vec![0i64; mult.len()];
        for (&g, &sg) in groups.iter().zip(sigma) {
            coef[g] += sg as i64;
        }
        let terms: Vec<(&[usize], f64)> =
            reps.iter().zip(&coef).filter(|(_, &c)| c != 0).map(|(x, &c)| (*x, c as f64 / m as f64)).collect();
        if terms.is_empty() {
            return Ok(0.0);
        }
        ascend(&mut rng::stream(seed, index), &terms, n, k, hp, r, cfg)
    };
    match mode {
        Mode::Exact | Mode::Enumerate => {
            if m > ASCENT_ENUMERATION_LIMIT {
                return Err(Error::resource(format!(
                    "enumerating sign vectors for the ascent needs m ≤ {ASCENT_ENUMERATION_LIMIT}"
                )));
            }
            // the ball is symmetric under α ↦ −α, so the supremum is even in σ
            let total = 1u64 << (m - 1);
            let values = (0..total)
                .into_par_iter()
                .map(|bits| {
                    let sigma: Vec<i8> =
                        (0..m).map(|i| if i > 0 && (bits >> (i - 1)) & 1 == 1 { -1 } else { 1 }).collect();
                    per_draw(bits, &sigma)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = values.iter().sum::<f64>() / total as f64;
            Ok(RademacherEstimate {
                value: mean,
                mode: EstimateMode::ExactEnumeration,
                draws: all_draws(m),
                standard_error: 0.0,
                direction: Direction::LowerBound,
                seed: Some(seed),
            })
        }
        Mode::MonteCarlo { draws } => {
            if draws == 0 {
                return Err(Error::domain("Monte-Carlo mode needs at least one draw"));
            }
            let values = (0..draws)
                .into_par_iter()
                .map(|d| {
                    let sig = SignDraw::random(&mut rng::stream(seed ^ 0x5167_4e5f_0000_0001, d as u64), m);
                    per_draw(d as u64, sig.signs())
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, se) = mean_and_se(&values);
            Ok(RademacherEstimate {
                value: mean,
                mode: EstimateMode::MonteCarlo,
                draws: draws as u64,
                standard_error: se,
                direction: Direction::LowerBound,
                seed: Some(seed),
            })
        }
    }
}
