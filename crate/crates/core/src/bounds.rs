//! Closed-form Rademacher and generalization bounds.
//!
//! All logarithms are natural. Every bound is returned as a [`BoundReport`]
//! whose `value` is the sum of its named terms.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::format_number;
use crate::norms::NormIndex;
use crate::pfa::{continuation_radius, sample_pfa, validate_pfa};
use crate::rng;
use crate::stats::{collision_stat, ws_auto, DEFAULT_RESTARTS};
use crate::wfa::{count_words, WeightedAutomaton, Word};

/// Lower end of the search range for the covering scale `η`.
pub const ETA_MIN: f64 = 1e-12;
/// Upper end of the search range for `η`.
pub const ETA_MAX: f64 = 1e12;
/// Points of the log-spaced grid scanned before the golden-section search.
pub const ETA_GRID: usize = 100;
/// Relative tolerance of the golden-section search on `log η`.
pub const ETA_TOLERANCE: f64 = 1e-9;
/// Default enumeration guard for [`dist_params`].
pub const DEFAULT_DIST_GUARD: u128 = 4_000_000;

/// `(2/3)(1 + 4/log 2)`, the linear coefficient of the matrix moment bound.
pub fn tropp_linear_constant() -> f64 {
    2.0 / 3.0 * (1.0 + 4.0 / LN_2)
}

/// `1 + 4/√(2 log 2)`, the square-root coefficient of the moment bound.
pub fn tropp_root_constant() -> f64 {
    1.0 + 4.0 / (2.0 * LN_2).sqrt()
}

/// Number of real parameters of an `n`-state WFA over `k` symbols.
pub fn parameter_count(n: usize, k: usize) -> f64 {
    n as f64 * (k as f64 * n as f64 + 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTerm {
    pub name: String,
    pub value: f64,
    /// The result the term comes from.
    pub anchor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound: String,
    pub value: f64,
    /// Lower end, for bounds that come as a sandwich.
    pub lower: Option<f64>,
    pub terms: Vec<BoundTerm>,
    pub inputs: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

impl BoundReport {
    fn new(bound: &str) -> Self {
        BoundReport {
            bound: bound.to_string(),
            value: 0.0,
            lower: None,
            terms: Vec::new(),
            inputs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn input(mut self, name: &str, value: f64) -> Self {
        self.inputs.push((name.to_string(), value));
        self
    }

    fn term(mut self, name: &str, value: f64, anchor: &str) -> Self {
        self.terms.push(BoundTerm { name: name.to_string(), value, anchor: anchor.to_string() });
        self.value = self.terms.iter().map(|t| t.value).sum();
        self
    }

    fn warn(mut self, text: impl Into<String>) -> Self {
        self.warnings.push(text.into());
        self
    }

    /// Line-oriented text record.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "bound {}", self.bound);
        if let Some(lower) = self.lower {
            let _ = writeln!(out, "lower {}", format_number(lower));
            let _ = writeln!(out, "upper {}", format_number(self.value));
        }
        let _ = writeln!(out, "value {}", format_number(self.value));
        for t in &self.terms {
            let _ = writeln!(out, "term {} {} ({})", t.name, format_number(t.value), t.anchor);
        }
        for (name, v) in &self.inputs {
            let _ = writeln!(out, "input {} {}", name, format_number(*v));
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning {w}");
        }
        out
    }

    pub const CSV_HEADER: &'static str = "bound,value,lower,terms,warnings";

    /// One CSV row matching [`BoundReport::CSV_HEADER`]; terms are
    /// `name=value` pairs joined by `;`.
    pub fn to_csv_row(&self) -> String {
        let terms: Vec<String> = self.terms.iter().map(|t| format!("{}={}", t.name, format_number(t.value))).collect();
        format!(
            "{},{},{},{},{}",
            self.bound,
            format_number(self.value),
            self.lower.map(format_number).unwrap_or_default(),
            terms.join(";"),
            self.warnings.len()
        )
    }
}

fn check_count(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::domain(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("{name} must be finite and nonnegative, got {v}")));
    }
    Ok(())
}

/// `log(e^a + e^b)` without overflow.
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log of the covering-number bound `r^d (2 + r^{L+1}(L+2)/η)^d`,
/// `d = n(kn+2)`, for `ℓ1` covers at scale `η` of the weight ball on
/// samples of strings of length at most `L`.
pub fn log_covering_number(eta: f64, n: usize, k: usize, r: f64, l: usize) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::domain(format!("η must be positive, got {eta}")));
    }
    check_nonneg("r", r)?;
    let d = parameter_count(n, k);
    let lr = r.ln();
    let inner = log_add_exp(2f64.ln(), (l as f64 + 1.0) * lr + ((l + 2) as f64).ln() - eta.ln());
    Ok(d * (lr + inner))
}

/// Objective `g(η) = η + r^{L+2} √(2d·log(2r + r^{L+2}(L+2)/η)/m)` with
/// `log r^{L+2} = lr`. The log term is clamped at 0 since a cover has at
/// least one element.
fn covering_objective(log_eta: f64, lr: f64, r: f64, l: usize, d: f64, m: usize) -> f64 {
    let eta = log_eta.exp();
    let log_cover = log_add_exp((2.0 * r).ln(), lr + ((l + 2) as f64).ln() - log_eta).max(0.0);
    eta + (lr + 0.5 * (2.0 * d * log_cover / m as f64).ln()).exp()
}

/// Covering-number bound on `R̂_S(A_{n,p,r})` for a sample of `m` strings
/// with maximum length `L_S`, minimized over `η`.
pub fn bound_ranr(m: usize, n: usize, k: usize, r: f64, l_s: usize) -> Result<BoundReport> {
    check_count("m", m)?;
    check_count("n", n)?;
    check_count("k", k)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("r must be positive, got {r}")));
    }
    let d = parameter_count(n, k);
    let report = BoundReport::new("RAnr")
        .input("m", m as f64)
        .input("n", n as f64)
        .input("k", k as f64)
        .input("r", r)
        .input("L_S", l_s as f64);
    let report = if r < 1.0 && l_s > 0 {
        // |A(x)| ≤ r^{|x|+2} peaks at the shortest string when r < 1
        report.warn(format!(
            "r = {r} < 1: the envelope r^(L_S+2) undercounts short strings, value may fall below R_S(A_n,p,r)"
        ))
    } else {
        report
    };
    let lr = (l_s as f64 + 2.0) * r.ln();
    if lr > f64::MAX.ln() {
        return Ok(report
            .term("eta", 0.0, "covering scale")
            .term("massart", f64::INFINITY, "covering-number bound with Massart's lemma")
            .warn(format!("r^(L_S+2) overflows for r = {r}, L_S = {l_s}; bound reported as +inf")));
    }
    let g = |u: f64| covering_objective(u, lr, r, l_s, d, m);
    let (lo, hi) = (ETA_MIN.ln(), ETA_MAX.ln());
    let grid: Vec<f64> = (0..ETA_GRID).map(|i| lo + (hi - lo) * i as f64 / (ETA_GRID - 1) as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&u| g(u)).collect();
    let best = (0..ETA_GRID).fold(0, |b, i| if values[i] < values[b] { i } else { b });
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(ETA_GRID - 1)]);
    // golden section on log η inside the best grid bracket
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut gc, mut ge) = (g(c), g(e));
    while (b - a).abs() > ETA_TOLERANCE * (1.0 + a.abs().max(b.abs())) {
        if gc < ge {
            b = e;
            e = c;
            ge = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = e;
            gc = ge;
            e = a + inv_phi * (b - a);
            ge = g(e);
        }
    }
    let (mut u, mut gu) = if gc < ge { (c, gc) } else { (e, ge) };
    if values[best] < gu {
        u = grid[best];
        gu = values[best];
    }
    let eta = u.exp();
    Ok(report.term("eta", eta, "covering scale").term(
        "massart",
        gu - eta,
        "covering-number bound with Massart's lemma",
    ))
}

/// `√(2d log(m+2)/m) + (L+2)/m`, the `r = 1` instance of [`bound_ranr`] at
/// `η = (L+2)/m`; `L` is `L_S` or the expected maximum length `L_m`.
pub fn bound_an1(m: usize, n: usize, k: usize, l: f64) -> Result<BoundReport> {
    check_count("m", m)?;
    check_count("n", n)?;
    check_count("k", k)?;
    check_nonneg("L", l)?;
    let d = parameter_count(n, k);
    let mf = m as f64;
    Ok(BoundReport::new("An1")
        .input("m", mf)
        .input("n", n as f64)
        .input("k", k as f64)
        .input("L", l)
        .term("complexity", (2.0 * d * (mf + 2.0).ln() / mf).sqrt(), "covering bound at r = 1")
        .term("length", (l + 2.0) / mf, "covering bound at r = 1"))
}

/// `r √(2 C log(2m)) / m` for `R_{1,r}`.
pub fn bound_r1r(m: usize, r: f64, c: usize) -> Result<BoundReport> {
    check_count("m", m)?;
    check_nonneg("r", r)?;
    if c < 1 || c > m {
        return Err(Error::domain(format!("C must lie in [1, m] = [1, {m}], got {c}")));
    }
    let mf = m as f64;
    Ok(BoundReport::new("R1r").input("m", mf).input("r", r).input("C", c as f64).term(
        "massart",
        r * (2.0 * c as f64 * (2.0 * mf).ln()).sqrt() / mf,
        "dual-norm identity with Massart's lemma",
    ))
}

/// `r/√(2m) ≤ R̂_S(R_{2,r}) ≤ r/√m`; `value` is the upper end.
pub fn bound_r2r(m: usize, r: f64) -> Result<BoundReport> {
    check_count("m", m)?;
    check_nonneg("r", r)?;
    let mf = m as f64;
    let mut rep = BoundReport::new("R2r").input("m", mf).input("r", r).term(
        "jensen",
        r / mf.sqrt(),
        "dual-norm identity with Jensen's inequality",
    );
    rep.lower = Some(r / (2.0 * mf).sqrt());
    Ok(rep)
}

/// Matrix moment bound
/// `C₁ M log(d+1) + C₂ √(2ν log(d+1))` for `E‖Σ M_i‖_op`.
pub fn tropp_moment_bound(m_op: f64, nu: f64, d: f64) -> Result<f64> {
    check_nonneg("M", m_op)?;
    check_nonneg("ν", nu)?;
    if !(d >= 1.0) {
        return Err(Error::domain(format!("d must be at least 1, got {d}")));
    }
    let l = (d + 1.0).ln();
    Ok(tropp_linear_constant() * m_op * l + tropp_root_constant() * (2.0 * nu * l).sqrt())
}

/// `(r/m)[C₁ log(2m+1) + C₂ √(2W log(2m+1))]` for `H_{1,r}`.
pub fn bound_h1r(m: usize, r: f64, w: usize) -> Result<BoundReport> {
    check_count("m", m)?;
    check_nonneg("r", r)?;
    if w < 1 || w > m {
        return Err(Error::domain(format!("W must lie in [1, m] = [1, {m}], got {w}")));
    }
    let mf = m as f64;
    let l = (2.0 * mf + 1.0).ln();
    Ok(BoundReport::new("H1r")
        .input("m", mf)
        .input("r", r)
        .input("W", w as f64)
        .term("linear", r / mf * tropp_linear_constant() * l, "matrix moment bound")
        .term("variance", r / mf * tropp_root_constant() * (2.0 * w as f64 * l).sqrt(), "matrix moment bound"))
}

/// `r/√m` for `H_{2,r}`.
pub fn bound_h2r(m: usize, r: f64) -> Result<BoundReport> {
    check_count("m", m)?;
    check_nonneg("r", r)?;
    let mf = m as f64;
    Ok(BoundReport::new("H2r").input("m", mf).input("r", r).term(
        "frobenius",
        r / mf.sqrt(),
        "Frobenius norm with Jensen's inequality",
    ))
}

fn kappa_warning(kappa: f64) -> String {
    if kappa == 0.0 {
        "kappa = 0: the unspecified O(sqrt(1/m)) term is dropped, so the value is not a guaranteed upper bound".into()
    } else {
        format!("kappa = {} is a user-supplied stand-in for an unspecified constant", format_number(kappa))
    }
}

/// `(r/√m) √(2 (D_max + κ/√m) log(2m))` for `R_{1,r}` under a distribution.
pub fn bound_dist_r1r(m: usize, r: f64, d_max: f64, kappa: f64) -> Result<BoundReport> {
    check_count("m", m)?;
    check_nonneg("r", r)?;
    check_nonneg("D_max", d_max)?;
    check_nonneg("kappa", kappa)?;
    let mf = m as f64;
    let inner = d_max + kappa / mf.sqrt();
    Ok(BoundReport::new("dist-R1r")
        .input("m", mf)
        .input("r", r)
        .input("D_max", d_max)
        .input("kappa", kappa)
        .term(
            "collision",
            r / mf.sqrt() * (2.0 * inner * (2.0 * mf).ln()).sqrt(),
            "collision bound with Jensen's inequality",
        )
        .warn(kappa_warning(kappa)))
}

/// `C₁ r log(2m+1)/m + √2 C₂ (r/√m) √((D_max^∨ + κ/√m) log(2m+1))` for
/// `H_{1,r}` under a distribution.
pub fn bound_dist_h1r(m: usize, r: f64, d_vee: f64, kappa: f64) -> Result<BoundReport> {
    check_count("m", m)?;
    check_nonneg("r", r)?;
    check_nonneg("D_max^v", d_vee)?;
    check_nonneg("kappa", kappa)?;
    let mf = m as f64;
    let l = (2.0 * mf + 1.0).ln();
    let inner = d_vee + kappa / mf.sqrt();
    Ok(BoundReport::new("dist-H1r")
        .input("m", mf)
        .input("r", r)
        .input("D_max^v", d_vee)
        .input("kappa", kappa)
        .term("linear", tropp_linear_constant() * r * l / mf, "matrix moment bound")
        .term(
            "variance",
            2f64.sqrt() * tropp_root_constant() * r / mf.sqrt() * (inner * l).sqrt(),
            "matrix moment bound with the split lemma",
        )
        .warn(kappa_warning(kappa)))
}

/// Distribution parameters of a PFA computed from all strings of length
/// at most `truncation`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistParams {
    pub truncation: usize,
    /// `max_{|x| ≤ L} f(x)`.
    pub d_max: f64,
    pub d_max_witness: Word,
    /// True when the unenumerated mass is at most `d_max`, so no longer
    /// string can beat it.
    pub d_max_exact: bool,
    /// `1 − Σ_{|x| ≤ L} f(x)`.
    pub tail_mass: f64,
    /// Discounted prefix/suffix mass over enumerated strings; a lower bound.
    pub d_vee_lower: f64,
    pub d_vee_witness: Word,
    /// `tail_mass / (L + 2)`; `d_vee_lower + d_vee_residual` is an upper bound.
    pub d_vee_residual: f64,
}

/// `D_max` and `D_max^∨` of a halting PFA, by enumerating strings of length
/// at most `truncation`.
pub fn dist_params(a: &WeightedAutomaton, truncation: usize, guard: u128) -> Result<DistParams> {
    validate_pfa(a)?;
    let rho = continuation_radius(a);
    if rho >= 1.0 {
        return Err(Error::domain(format!("PFA does not halt with probability one (radius {rho})")));
    }
    let k = a.alphabet().size();
    let count = count_words(k, truncation);
    if count > guard {
        return Err(Error::resource(format!(
            "enumerating {count} strings up to length {truncation} exceeds guard {guard}"
        )));
    }
    // probs[t][j]: probability of the j-th string of length t in
    // lexicographic order, first symbol most significant
    let mut probs: Vec<Vec<f64>> = Vec::with_capacity(truncation + 1);
    let mut level = vec![a.alpha().clone()];
    for t in 0..=truncation {
        probs.push(level.par_iter().map(|v| v.dot(a.beta())).collect());
        if t < truncation {
            level = level.iter().flat_map(|v| a.transitions().iter().map(move |m| m.tr_mul(v))).collect();
        }
    }
    let mut pre: Vec<Vec<f64>> = probs.iter().map(|p| vec![0.0; p.len()]).collect();
    let mut suf = pre.clone();
    let mut mass = 0.0;
    let (mut d_max, mut d_max_at) = (f64::NEG_INFINITY, (0, 0));
    for (t, level) in probs.iter().enumerate() {
        for (j, &p) in level.iter().enumerate() {
            mass += p;
            if p > d_max {
                d_max = p;
                d_max_at = (t, j);
            }
            let w = p / (t + 1) as f64;
            for s in 0..=t {
                let shift = (k as u128).pow((t - s) as u32);
                pre[s][(j as u128 / shift) as usize] += w;
                let modulus = (k as u128).pow(s as u32);
                suf[s][(j as u128 % modulus) as usize] += w;
            }
        }
    }
    let (mut d_vee, mut d_vee_at) = (0.0, (0, 0));
    for t in 0..=truncation {
        for j in 0..pre[t].len() {
            let v = pre[t][j].max(suf[t][j]);
            if v > d_vee {
                d_vee = v;
                d_vee_at = (t, j);
            }
        }
    }
    let word_at = |(t, j): (usize, usize)| {
        let mut sym = vec![0; t];
        let mut rest = j;
        for slot in sym.iter_mut().rev() {
            *slot = rest % k;
            rest /= k;
        }
        Word::from(sym)
    };
    let tail = (1.0 - mass).max(0.0);
    Ok(DistParams {
        truncation,
        d_max,
        d_max_witness: word_at(d_max_at),
        d_max_exact: tail <= d_max,
        tail_mass: tail,
        d_vee_lower: d_vee,
        d_vee_witness: word_at(d_vee_at),
        d_vee_residual: tail / (truncation + 2) as f64,
    })
}

/// Monte-Carlo check of `m D_max ≤ C_m` and of the growth of the residuals
/// `(C_m − m D_max)/√m` and `(W_m − m D_max^∨)/√m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionCheck {
    pub m: usize,
    pub trials: usize,
    pub c_mean: f64,
    pub c_standard_error: f64,
    /// Mean of the `W_S` values found; exhaustive when feasible, local
    /// search otherwise, so an upper estimate of `W_m`.
    pub w_mean: f64,
    pub w_standard_error: f64,
    pub m_d_max: f64,
    pub m_d_vee: f64,
    /// `c_mean ≥ m D_max − 3·c_standard_error`.
    pub lower_holds: bool,
    pub c_residual: f64,
    pub w_residual: f64,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Samples `trials` sets of `m` strings from the PFA; trial `t` uses the
/// seed derived from `(seed, t)`.
pub fn cm_wm_check(
    a: &WeightedAutomaton,
    m: usize,
    trials: usize,
    seed: u64,
    params: &DistParams,
    max_len: usize,
    split_guard: u128,
) -> Result<CollisionCheck> {
    check_count("m", m)?;
    check_count("trials", trials)?;
    let stats = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = rng::derive_seed(seed, t as u64);
            let s = sample_pfa(a, m, trial_seed, max_len)?;
            let w = ws_auto(&s, split_guard, trial_seed, DEFAULT_RESTARTS)?;
            Ok((collision_stat(&s) as f64, w.value as f64))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let cs: Vec<f64> = stats.iter().map(|p| p.0).collect();
    let ws: Vec<f64> = stats.iter().map(|p| p.1).collect();
    let (c_mean, c_se) = mean_se(&cs);
    let (w_mean, w_se) = mean_se(&ws);
    let mf = m as f64;
    let m_d_max = mf * params.d_max;
    let m_d_vee = mf * params.d_vee_lower;
    Ok(CollisionCheck {
        m,
        trials,
        c_mean,
        c_standard_error: c_se,
        w_mean,
        w_standard_error: w_se,
        m_d_max,
        m_d_vee,
        lower_holds: c_mean >= m_d_max - 3.0 * c_se,
        c_residual: (c_mean - m_d_max) / mf.sqrt(),
        w_residual: (w_mean - m_d_vee) / mf.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundClass {
    /// Weight ball `A_{n,p,1}`.
    Anp1,
    R1r,
    R2r,
    H1r,
    H2r,
}

impl std::str::FromStr for BoundClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "An1" | "Anp1" | "A" => Ok(BoundClass::Anp1),
            "R1r" => Ok(BoundClass::R1r),
            "R2r" => Ok(BoundClass::R2r),
            "H1r" => Ok(BoundClass::H1r),
            "H2r" => Ok(BoundClass::H2r),
            other => Err(Error::parse(format!("unknown class {other:?}; expected An1, R1r, R2r, H1r or H2r"))),
        }
    }
}

/// Statistics of the observed sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SampleStats {
    pub l_s: Option<usize>,
    pub c_s: Option<usize>,
    pub w_s: Option<usize>,
}

/// Statistics of the sampling distribution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DistributionStats {
    /// Expected maximum length `L_m`.
    pub l_m: Option<f64>,
    pub d_max: Option<f64>,
    pub d_vee: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundQuery {
    pub class: BoundClass,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub r: f64,
    pub p: NormIndex,
    /// Lipschitz constant of the loss in its first argument.
    pub mu: f64,
    /// Bound on the loss.
    pub loss_bound: f64,
    pub delta: f64,
    /// Stand-in for unspecified `O(√(1/m))` constants.
    pub kappa: f64,
    pub sample: Option<SampleStats>,
    pub distribution: Option<DistributionStats>,
}

fn required<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::domain(format!("this bound needs the statistic {name}")))
}

/// The additive slack `L_D(f) − L̂_S(f) ≤ value` that holds with
/// probability at least `1 − δ` uniformly over the class.
pub fn generalization_bound(q: &BoundQuery) -> Result<BoundReport> {
    check_count("m", q.m)?;
    check_nonneg("r", q.r)?;
    check_nonneg("mu", q.mu)?;
    check_nonneg("M", q.loss_bound)?;
    check_nonneg("kappa", q.kappa)?;
    if !(q.delta > 0.0 && q.delta < 1.0) {
        return Err(Error::domain(format!("δ must lie in (0, 1), got {}", q.delta)));
    }
    let empirical = match (&q.sample, &q.distribution) {
        (Some(_), None) => true,
        (None, Some(_)) => false,
        _ => return Err(Error::domain("supply exactly one of sample statistics or distribution statistics")),
    };
    let mf = q.m as f64;
    let (mu, r) = (q.mu, q.r);
    let conf_dist = q.loss_bound * ((1.0 / q.delta).ln() / (2.0 * mf)).sqrt();
    let conf_emp = 3.0 * q.loss_bound * ((2.0 / q.delta).ln() / (2.0 * mf)).sqrt();
    let rep = BoundReport::new(&format!(
        "generalization-{:?}-{}",
        q.class,
        if empirical { "sample" } else { "distribution" }
    ))
    .input("m", mf)
    .input("r", r)
    .input("mu", mu)
    .input("M", q.loss_bound)
    .input("delta", q.delta);
    let c1 = tropp_linear_constant();
    let c2 = tropp_root_constant();
    let l2m1 = (2.0 * mf + 1.0).ln();
    let sample = q.sample.unwrap_or_default();
    let dist = q.distribution.unwrap_or_default();
    let rep = match q.class {
        BoundClass::Anp1 => {
            check_count("n", q.n)?;
            check_count("k", q.k)?;
            if r != 1.0 {
                return Err(Error::domain("the generalization bound for the weight class is stated for r = 1"));
            }
            let d = parameter_count(q.n, q.k);
            let (l, name) = if empirical {
                (required(sample.l_s, "L_S")? as f64, "L_S")
            } else {
                (required(dist.l_m, "L_m")?, "L_m")
            };
            rep.input("n", q.n as f64)
                .input("k", q.k as f64)
                .input("p", q.p.value())
                .input(name, l)
                .term(
                    "complexity",
                    (8.0 * mu * mu * d * (mf + 2.0).ln() / mf).sqrt(),
                    "weight-ball Rademacher bound with contraction",
                )
                .term("length", 2.0 * mu * (l + 2.0) / mf, "weight-ball Rademacher bound with contraction")
        }
        BoundClass::R2r => {
            rep.term("complexity", 2.0 * mu * r / mf.sqrt(), "l2-ball Rademacher bound with contraction")
        }
        BoundClass::H2r => {
            rep.term("complexity", 2.0 * mu * r / mf.sqrt(), "Frobenius Rademacher bound with contraction")
        }
        BoundClass::R1r if empirical => {
            let c = required(sample.c_s, "C_S")?;
            if c < 1 || c > q.m {
                return Err(Error::domain(format!("C_S must lie in [1, m], got {c}")));
            }
            rep.input("C_S", c as f64).term(
                "complexity",
                2.0 * mu * r * (2.0 * c as f64 * (2.0 * mf).ln()).sqrt() / mf,
                "collision Rademacher bound with contraction",
            )
        }
        BoundClass::R1r => {
            let dm = required(dist.d_max, "D_max")?;
            check_nonneg("D_max", dm)?;
            rep.input("D_max", dm)
                .input("kappa", q.kappa)
                .term(
                    "complexity",
                    2.0 * mu * r / mf.sqrt() * (2.0 * (dm + q.kappa / mf.sqrt()) * (2.0 * mf).ln()).sqrt(),
                    "distributional collision bound with contraction",
                )
                .warn(kappa_warning(q.kappa))
        }
        BoundClass::H1r if empirical => {
            let w = required(sample.w_s, "W_S")?;
            if w < 1 || w > q.m {
                return Err(Error::domain(format!("W_S must lie in [1, m], got {w}")));
            }
            rep.input("W_S", w as f64)
                .term(
                    "variance",
                    2f64.sqrt() * c2 * 2.0 * mu * r * (w as f64 * l2m1).sqrt() / mf,
                    "matrix moment bound with contraction",
                )
                .term("linear", c1 * 2.0 * mu * r * l2m1 / mf, "matrix moment bound with contraction")
        }
        BoundClass::H1r => {
            let dv = required(dist.d_vee, "D_max^v")?;
            check_nonneg("D_max^v", dv)?;
            rep.input("D_max^v", dv)
                .input("kappa", q.kappa)
                .term(
                    "variance",
                    2f64.sqrt() * c2 * 2.0 * mu * r / mf.sqrt() * ((dv + q.kappa / mf.sqrt()) * l2m1).sqrt(),
                    "distributional matrix moment bound with contraction",
                )
                .term("linear", c1 * 2.0 * mu * r * l2m1 / mf, "matrix moment bound with contraction")
                .warn(kappa_warning(q.kappa))
        }
    };
    let uses_sample_confidence = empirical && matches!(q.class, BoundClass::Anp1 | BoundClass::R1r | BoundClass::H1r);
    let rep = if uses_sample_confidence {
        rep.term("confidence", conf_emp, "bounded-difference confidence term with empirical complexity")
    } else {
        rep.term("confidence", conf_dist, "bounded-difference confidence term")
    };
    Ok(rep)
}
