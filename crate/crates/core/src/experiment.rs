//! Reproducible experiment sweeps driven by a flat `key = value` spec.
//!
//! Every trial draws its sample from a seed derived from
//! `(seed, grid index, trial)`, so output is identical across runs and
//! thread counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::bounds::{
    bound_h1r, bound_h2r, bound_r1r, bound_r2r, bound_ranr, cm_wm_check, dist_params, CollisionCheck,
    DEFAULT_DIST_GUARD,
};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::hankel::{hankel_singular_values, truncated_hankel_svd, DEFAULT_HANKEL_GUARD};
use crate::io::{format_number, read_wfa};
use crate::norms::{HolderPair, NormIndex};
use crate::pfa::{make_pfa, sample_pfa, validate_pfa};
use crate::rademacher::{rademacher_anpr_lower, rademacher_hpr_bound, rademacher_rpr, AscentConfig, Mode};
use crate::rng;
use crate::sample::StringSample;
use crate::stats::{collision_stat, length_stat, ws_auto, DEFAULT_RESTARTS, DEFAULT_SPLIT_GUARD};
use crate::wfa::{Alphabet, WeightedAutomaton, Word};

/// Longest string the power-law model emits.
pub const POWER_LAW_TRUNCATION: usize = 10_000;
/// Longest walk accepted when sampling from a PFA.
pub const SAMPLE_MAX_LEN: usize = 100_000;
/// Slack for the floating-point comparisons of the inequality suite.
pub const INEQUALITY_TOLERANCE: f64 = 1e-12;
/// Up to this sample size the weight-class ascent averages over all sign
/// vectors, so its value is a true lower bound; above it, Monte Carlo.
pub const ASCENT_EXACT_SIGNS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Inequality,
    Growth,
    Hankel,
    Collision,
}

/// Where sample strings come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// One-state PFA over `k` letters halting with probability `stop`.
    Geometric { k: usize, stop: f64 },
    /// Length `T` with `P[T = t] ∝ (t+1)^{-(s+2)}`, `t ≤ 10⁴`, so that
    /// `P[T > t]` decays like `t^{-(s+1)}`; symbols uniform.
    PowerLaw { k: usize, exponent: f64 },
    /// Every string is ε.
    Empty,
    /// PFA read from a WFA file.
    Pfa(PathBuf),
}

/// Automata used by the Hankel convergence study.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Geometric {
        c: f64,
    },
    Zero,
    /// Random automata rescaled to `ρ(Σ A_a ⊗ A_a) = rho`.
    Random {
        n: usize,
        k: usize,
        rho: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub model: ModelSpec,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub r: f64,
    pub n: usize,
    pub p: NormIndex,
    pub ascent: AscentConfig,
    /// Sign vectors per sample for the weight-ball ascent.
    pub ascent_draws: usize,
    pub lengths: Vec<usize>,
    pub family: FamilySpec,
    /// String-length cutoff for distribution parameters.
    pub truncation: usize,
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| Error::parse(format!("{key}: cannot parse {s:?}"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| Error::parse(format!("{key}: cannot parse {v:?}")))
}

impl ExperimentSpec {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::parse(format!("line {}: expected key = value", i + 1)))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::parse(format!("line {}: duplicate key {:?}", i + 1, k.trim())));
            }
        }
        const KNOWN: &[&str] = &[
            "experiment",
            "model",
            "k",
            "stop",
            "exponent",
            "pfa",
            "m",
            "trials",
            "seed",
            "output",
            "r",
            "n",
            "p",
            "ascent_restarts",
            "ascent_steps",
            "ascent_step",
            "ascent_draws",
            "lengths",
            "family",
            "c",
            "rho",
            "automata",
            "truncation",
        ];
        if let Some(bad) = kv.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::parse(format!("unknown key {bad:?}")));
        }
        let get = |k: &str| kv.get(k).map(String::as_str);
        let kind = match get("experiment") {
            Some("inequality") => ExperimentKind::Inequality,
            Some("growth") => ExperimentKind::Growth,
            Some("hankel") => ExperimentKind::Hankel,
            Some("collision") => ExperimentKind::Collision,
            Some(other) => return Err(Error::parse(format!("unknown experiment {other:?}"))),
            None => return Err(Error::parse("missing key experiment")),
        };
        let k: usize = get("k").map(|v| parse_one("k", v)).transpose()?.unwrap_or(1);
        let model = match get("model").unwrap_or("geometric") {
            "geometric" => {
                ModelSpec::Geometric { k, stop: get("stop").map(|v| parse_one("stop", v)).transpose()?.unwrap_or(0.5) }
            }
            "power-law" => ModelSpec::PowerLaw {
                k,
                exponent: get("exponent").map(|v| parse_one("exponent", v)).transpose()?.unwrap_or(2.0),
            },
            "empty" => ModelSpec::Empty,
            "pfa" => ModelSpec::Pfa(PathBuf::from(get("pfa").ok_or_else(|| Error::parse("model pfa needs key pfa"))?)),
            other => return Err(Error::parse(format!("unknown model {other:?}"))),
        };
        let m_grid: Vec<usize> = get("m").map(|v| parse_list("m", v)).transpose()?.unwrap_or_default();
        let trials: usize = get("trials").map(|v| parse_one("trials", v)).transpose()?.unwrap_or(1);
        let seed: u64 = parse_one("seed", get("seed").ok_or_else(|| Error::parse("missing key seed"))?)?;
        let defaults = AscentConfig::default();
        let ascent = AscentConfig {
            restarts: get("ascent_restarts")
                .map(|v| parse_one("ascent_restarts", v))
                .transpose()?
                .unwrap_or(defaults.restarts),
            steps: get("ascent_steps").map(|v| parse_one("ascent_steps", v)).transpose()?.unwrap_or(defaults.steps),
            step_size: get("ascent_step")
                .map(|v| parse_one("ascent_step", v))
                .transpose()?
                .unwrap_or(defaults.step_size),
        };
        let n: usize = get("n").map(|v| parse_one("n", v)).transpose()?.unwrap_or(1);
        let family = match get("family").unwrap_or("geometric") {
            "geometric" => FamilySpec::Geometric { c: get("c").map(|v| parse_one("c", v)).transpose()?.unwrap_or(0.5) },
            "zero" => FamilySpec::Zero,
            "random" => FamilySpec::Random {
                n,
                k,
                rho: get("rho").map(|v| parse_one("rho", v)).transpose()?.unwrap_or(0.5),
                count: get("automata").map(|v| parse_one("automata", v)).transpose()?.unwrap_or(10),
            },
            other => return Err(Error::parse(format!("unknown family {other:?}"))),
        };
        let spec = ExperimentSpec {
            kind,
            model,
            m_grid,
            trials,
            seed,
            output: get("output").map(PathBuf::from),
            r: get("r").map(|v| parse_one("r", v)).transpose()?.unwrap_or(1.0),
            n,
            p: get("p").map(|v| parse_one::<NormIndex>("p", v)).transpose()?.unwrap_or(NormIndex::Two),
            ascent,
            ascent_draws: get("ascent_draws").map(|v| parse_one("ascent_draws", v)).transpose()?.unwrap_or(8),
            lengths: get("lengths").map(|v| parse_list("lengths", v)).transpose()?.unwrap_or_default(),
            family,
            truncation: get("truncation").map(|v| parse_one("truncation", v)).transpose()?.unwrap_or(40),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        let needs_m = self.kind != ExperimentKind::Hankel;
        if needs_m && (self.m_grid.is_empty() || self.m_grid.contains(&0)) {
            return Err(Error::domain("the m grid must be nonempty with entries ≥ 1"));
        }
        if self.kind == ExperimentKind::Hankel && self.lengths.is_empty() {
            return Err(Error::domain("the hankel experiment needs a nonempty lengths grid"));
        }
        Ok(())
    }
}

/// A ready-to-sample string distribution.
pub enum SampleModel {
    Pfa(WeightedAutomaton),
    PowerLaw { alphabet: Alphabet, cumulative: Vec<f64> },
    Empty,
}

impl SampleModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Geometric { k, stop } => Ok(SampleModel::Pfa(geometric_pfa(*k, *stop)?)),
            ModelSpec::PowerLaw { k, exponent } => {
                if !(*exponent > 0.0) {
                    return Err(Error::domain("power-law exponent must be positive"));
                }
                let weights: Vec<f64> =
                    (0..=POWER_LAW_TRUNCATION).map(|t| ((t + 1) as f64).powf(-(exponent + 2.0))).collect();
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                let cumulative = weights
                    .iter()
                    .map(|w| {
                        acc += w / total;
                        acc
                    })
                    .collect();
                Ok(SampleModel::PowerLaw { alphabet: Alphabet::letters(*k)?, cumulative })
            }
            ModelSpec::Empty => Ok(SampleModel::Empty),
            ModelSpec::Pfa(path) => {
                let a = read_wfa(path)?;
                validate_pfa(&a)?;
                Ok(SampleModel::Pfa(a))
            }
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        match self {
            SampleModel::Pfa(a) => a.alphabet().clone(),
            SampleModel::PowerLaw { alphabet, .. } => alphabet.clone(),
            SampleModel::Empty => Alphabet::letters(1).expect("one letter"),
        }
    }

    pub fn draw(&self, m: usize, seed: u64) -> Result<StringSample> {
        match self {
            SampleModel::Pfa(a) => sample_pfa(a, m, seed, SAMPLE_MAX_LEN),
            SampleModel::Empty => StringSample::new(self.alphabet(), vec![Word::empty(); m]),
            SampleModel::PowerLaw { alphabet, cumulative } => {
                let k = alphabet.size();
                let words = (0..m)
                    .into_par_iter()
                    .map(|i| {
                        let mut g = rng::stream(seed, i as u64);
                        let u: f64 = g.random();
                        let len = cumulative.partition_point(|&c| c <= u).min(POWER_LAW_TRUNCATION);
                        Word::from((0..len).map(|_| g.random_range(0..k)).collect::<Vec<_>>())
                    })
                    .collect();
                StringSample::new(alphabet.clone(), words)
            }
        }
    }
}

/// One-state PFA over `k` letters: stop with probability `stop`, else emit
/// a uniformly random letter.
pub fn geometric_pfa(k: usize, stop: f64) -> Result<WeightedAutomaton> {
    if !(stop > 0.0 && stop <= 1.0) {
        return Err(Error::domain(format!("stop probability must lie in (0, 1], got {stop}")));
    }
    let each = (1.0 - stop) / k as f64;
    make_pfa(Alphabet::letters(k)?, &[1.0], vec![DMatrix::from_element(1, 1, each); k], &[stop])
}

fn trial_seed(seed: u64, grid_index: usize, trial: usize) -> u64 {
    rng::derive_seed(rng::derive_seed(seed, grid_index as u64), trial as u64)
}

/// Output of an experiment: CSV text plus a human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub csv: String,
    pub summary: String,
    /// Inequality violations (inequality suite) or failed checks.
    pub failures: usize,
}

pub const INEQUALITY_HEADER: &str = "m,trial,seed,L_S,C_S,W_S,W_exact,R1_exact,R1_bound,R2_exact,R2_lower,R2_upper,H2_exact,H2_bound,H1_bound,A_lower,A_bound,violations";

/// Values computed for one sample by the inequality suite.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRow {
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub l_s: usize,
    pub c_s: usize,
    pub w_s: usize,
    pub w_exact: bool,
    pub r1_exact: f64,
    pub r1_bound: f64,
    pub r2_exact: f64,
    pub r2_lower: f64,
    pub r2_upper: f64,
    pub h2_exact: f64,
    pub h2_bound: f64,
    pub h1_bound: f64,
    pub a_lower: f64,
    pub a_bound: f64,
    pub violations: Vec<&'static str>,
}

impl InequalityRow {
    fn csv(&self) -> String {
        let f = format_number;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.m,
            self.trial,
            self.seed,
            self.l_s,
            self.c_s,
            self.w_s,
            self.w_exact,
            f(self.r1_exact),
            f(self.r1_bound),
            f(self.r2_exact),
            f(self.r2_lower),
            f(self.r2_upper),
            f(self.h2_exact),
            f(self.h2_bound),
            f(self.h1_bound),
            f(self.a_lower),
            f(self.a_bound),
            self.violations.join(";")
        )
    }
}

fn le(a: f64, b: f64) -> bool {
    a <= b + INEQUALITY_TOLERANCE * (1.0 + b.abs())
}

/// Exact estimators and closed-form bounds for one sample, with every
/// per-sample inequality checked.
pub fn inequality_row(
    s: &StringSample,
    r: f64,
    n: usize,
    p: NormIndex,
    ascent: AscentConfig,
    ascent_draws: usize,
    seed: u64,
) -> Result<InequalityRow> {
    let m = s.len();
    let l_s = length_stat(s);
    let c_s = collision_stat(s);
    let ws = ws_auto(s, DEFAULT_SPLIT_GUARD, seed, DEFAULT_RESTARTS)?;
    let r1 = rademacher_rpr(s, r, NormIndex::One, Mode::Exact, seed)?.value;
    let r2 = rademacher_rpr(s, r, NormIndex::Two, Mode::Exact, seed)?.value;
    let h2 = rademacher_hpr_bound(s, &ws.witness, r, NormIndex::Two, Mode::Exact, seed)?.value;
    // a Monte-Carlo average may exceed the expectation; allow 3 standard errors
    let (a_lower, a_slack) = if ascent_draws > 0 && r > 0.0 {
        let mode = if m <= ASCENT_EXACT_SIGNS { Mode::Enumerate } else { Mode::MonteCarlo { draws: ascent_draws } };
        let e = rademacher_anpr_lower(s, n, HolderPair::from_p(p), r, mode, seed, ascent)?;
        (e.value, 3.0 * e.standard_error)
    } else {
        (0.0, 0.0)
    };
    let r1_bound = bound_r1r(m, r, c_s)?.value;
    let r2_bounds = bound_r2r(m, r)?;
    let h2_bound = bound_h2r(m, r)?.value;
    let h1_bound = bound_h1r(m, r, ws.value)?.value;
    let a_bound = if r > 0.0 { bound_ranr(m, n, s.alphabet().size(), r, l_s)?.value } else { 0.0 };
    let r2_lower = r2_bounds.lower.expect("sandwich");
    let mut violations = Vec::new();
    if !le(r1, r1_bound) {
        violations.push("R1");
    }
    if !le(r2_lower, r2) || !le(r2, r2_bounds.value) {
        violations.push("R2");
    }
    if !le(h2, h2_bound) {
        violations.push("H2");
    }
    if !le(a_lower - a_slack, a_bound) {
        violations.push("A");
    }
    Ok(InequalityRow {
        m,
        trial: 0,
        seed,
        l_s,
        c_s,
        w_s: ws.value,
        w_exact: ws.exactness == crate::stats::Exactness::Exhaustive,
        r1_exact: r1,
        r1_bound,
        r2_exact: r2,
        r2_lower,
        r2_upper: r2_bounds.value,
        h2_exact: h2,
        h2_bound,
        h1_bound,
        a_lower,
        a_bound,
        violations,
    })
}

fn grid_jobs(spec: &ExperimentSpec) -> Vec<(usize, usize, usize, u64)> {
    spec.m_grid
        .iter()
        .enumerate()
        .flat_map(|(gi, &m)| (0..spec.trials).map(move |t| (gi, m, t, trial_seed(spec.seed, gi, t))))
        .collect()
}

/// Samples `trials` sets per grid point and checks every per-sample
/// inequality; one CSV row per `(m, trial)`.
pub fn run_inequality_suite(spec: &ExperimentSpec) -> Result<(Vec<InequalityRow>, ExperimentOutput)> {
    let model = SampleModel::from_spec(&spec.model)?;
    let rows = grid_jobs(spec)
        .into_par_iter()
        .map(|(_, m, t, seed)| {
            let s = model.draw(m, seed)?;
            let mut row = inequality_row(&s, spec.r, spec.n, spec.p, spec.ascent, spec.ascent_draws, seed)?;
            row.trial = t;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from(INEQUALITY_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv());
        csv.push('\n');
    }
    let failures: usize = rows.iter().map(|r| r.violations.len()).sum();
    let summary = format!(
        "inequality suite: {} samples, {} violations: {}\n",
        rows.len(),
        failures,
        if failures == 0 { "pass" } else { "FAIL" }
    );
    Ok((rows, ExperimentOutput { csv, summary, failures }))
}

/// Least-squares line `y ≈ intercept + slope·x` with its `R²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn least_squares(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("a fit needs at least two points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("a fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit { intercept, slope, r_squared })
}

pub const GROWTH_HEADER: &str = "m,trial,seed,L_S";

/// Mean maximum length per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthPoint {
    pub m: usize,
    pub mean: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthStudy {
    pub points: Vec<GrowthPoint>,
    /// `L_m` against `log m`.
    pub log_fit: Option<LinearFit>,
    /// `L_m` against `m^{1/s}` for the power-law model.
    pub power_fit: Option<LinearFit>,
    pub output: ExperimentOutput,
}

/// Estimates `L_m = E[L_S]` over the grid and fits it against `log m`
/// and, for the power-law model, `m^{1/s}`.
pub fn run_growth_study(spec: &ExperimentSpec) -> Result<GrowthStudy> {
    let model = SampleModel::from_spec(&spec.model)?;
    let jobs = grid_jobs(spec);
    let lens = jobs
        .par_iter()
        .map(|&(_, m, _, seed)| Ok(length_stat(&model.draw(m, seed)?)))
        .collect::<Result<Vec<usize>>>()?;
    let mut csv = String::from(GROWTH_HEADER);
    csv.push('\n');
    for (&(_, m, t, seed), l) in jobs.iter().zip(&lens) {
        let _ = writeln!(csv, "{m},{t},{seed},{l}");
    }
    let points: Vec<GrowthPoint> = spec
        .m_grid
        .iter()
        .enumerate()
        .map(|(gi, &m)| {
            let v: Vec<f64> = lens[gi * spec.trials..(gi + 1) * spec.trials].iter().map(|&l| l as f64).collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let se = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            GrowthPoint { m, mean, standard_error: se }
        })
        .collect();
    let ms: Vec<f64> = points.iter().map(|p| p.m as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean).collect();
    let log_fit = least_squares(&ms.iter().map(|m| m.ln()).collect::<Vec<_>>(), &ys).ok();
    let power_fit = match spec.model {
        ModelSpec::PowerLaw { exponent, .. } => {
            least_squares(&ms.iter().map(|m| m.powf(1.0 / exponent)).collect::<Vec<_>>(), &ys).ok()
        }
        _ => None,
    };
    let mut summary = String::new();
    for p in &points {
        let ratio = if p.m > 1 { p.mean / (p.m as f64).ln() } else { f64::NAN };
        let _ = writeln!(
            summary,
            "m {} L_m {} se {} L_m/log(m) {}",
            p.m,
            format_number(p.mean),
            format_number(p.standard_error),
            format_number(ratio)
        );
    }
    let fit_line = |name: &str, f: &Option<LinearFit>| match f {
        Some(f) => format!(
            "fit {name} intercept {} slope {} r2 {}\n",
            format_number(f.intercept),
            format_number(f.slope),
            format_number(f.r_squared)
        ),
        None => String::new(),
    };
    summary.push_str(&fit_line("log(m)", &log_fit));
    summary.push_str(&fit_line("m^(1/s)", &power_fit));
    Ok(GrowthStudy { points, log_fit, power_fit, output: ExperimentOutput { csv, summary, failures: 0 } })
}

pub const HANKEL_HEADER: &str = "automaton,L,s1_truncated,s1_gramian,max_gap";

/// Truncated-Hankel singular values against the Gramian spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelRow {
    pub automaton: usize,
    pub length: usize,
    pub truncated: Vec<f64>,
    pub gramian: Vec<f64>,
    /// `max_i |s̃_i − s_i| / s_1`, zero when `s_1 = 0`.
    pub max_gap: f64,
}

/// Relative gap between a truncated and the exact spectrum, over the
/// first `exact.len()` values.
pub fn spectrum_gap(truncated: &[f64], exact: &[f64]) -> f64 {
    let s1 = exact.first().copied().unwrap_or(0.0);
    let gap =
        exact.iter().enumerate().map(|(i, s)| (truncated.get(i).copied().unwrap_or(0.0) - s).abs()).fold(0.0, f64::max);
    if s1 > 0.0 {
        gap / s1
    } else {
        gap
    }
}

fn family_automata(spec: &ExperimentSpec) -> Vec<WeightedAutomaton> {
    match &spec.family {
        FamilySpec::Geometric { c } => vec![fixtures::geometric(*c)],
        FamilySpec::Zero => {
            vec![WeightedAutomaton::zero(Alphabet::letters(1).expect("one letter"), 1).expect("one state")]
        }
        FamilySpec::Random { n, k, rho, count } => (0..*count)
            .map(|i| fixtures::random_contractive(&mut rng::stream(spec.seed, i as u64), *n, *k, *rho))
            .collect(),
    }
}

/// Gap between truncated-Hankel and Gramian singular values as the
/// truncation length grows; checks that the gap never increases.
pub fn run_hankel_convergence(spec: &ExperimentSpec) -> Result<(Vec<HankelRow>, ExperimentOutput)> {
    let automata = family_automata(spec);
    let mut lengths = spec.lengths.clone();
    lengths.sort_unstable();
    let mut rows = Vec::new();
    let mut failures = 0;
    for (i, a) in automata.iter().enumerate() {
        let exact = hankel_singular_values(a)?.singular_values;
        let per_length = lengths
            .par_iter()
            .map(|&l| truncated_hankel_svd(a, l, l, DEFAULT_HANKEL_GUARD))
            .collect::<Result<Vec<_>>>()?;
        let mut prev = f64::INFINITY;
        for (&l, trunc) in lengths.iter().zip(per_length) {
            let gap = spectrum_gap(&trunc, &exact);
            // noise floor of the SVD
            if gap > prev + 1e-12 {
                failures += 1;
            }
            prev = gap;
            rows.push(HankelRow { automaton: i, length: l, truncated: trunc, gramian: exact.clone(), max_gap: gap });
        }
    }
    let mut csv = String::from(HANKEL_HEADER);
    csv.push('\n');
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.automaton,
            r.length,
            format_number(r.truncated.first().copied().unwrap_or(0.0)),
            format_number(r.gramian.first().copied().unwrap_or(0.0)),
            format_number(r.max_gap)
        );
    }
    let summary = format!(
        "hankel convergence: {} automata, {} non-monotone steps: {}\n",
        automata.len(),
        failures,
        if failures == 0 { "pass" } else { "FAIL" }
    );
    Ok((rows, ExperimentOutput { csv, summary, failures }))
}

pub const COLLISION_HEADER: &str = "m,trials,C_mean,C_se,m_Dmax,C_residual,W_mean,W_se,m_Dvee,W_residual,lower_holds";

/// Monte-Carlo `C_m`, `W_m` against `m D_max`, `m D_max^∨` over the grid.
/// Fails when the lower inequality breaks or a residual exceeds three
/// times the grid median.
pub fn run_collision_study(spec: &ExperimentSpec) -> Result<(Vec<CollisionCheck>, ExperimentOutput)> {
    let a = match SampleModel::from_spec(&spec.model)? {
        SampleModel::Pfa(a) => a,
        _ => return Err(Error::domain("the collision study needs a PFA model")),
    };
    let params = dist_params(&a, spec.truncation, DEFAULT_DIST_GUARD)?;
    let checks = spec
        .m_grid
        .iter()
        .enumerate()
        .map(|(gi, &m)| {
            cm_wm_check(
                &a,
                m,
                spec.trials,
                rng::derive_seed(spec.seed, gi as u64),
                &params,
                SAMPLE_MAX_LEN,
                DEFAULT_SPLIT_GUARD,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from(COLLISION_HEADER);
    csv.push('\n');
    for c in &checks {
        let f = format_number;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.m,
            c.trials,
            f(c.c_mean),
            f(c.c_standard_error),
            f(c.m_d_max),
            f(c.c_residual),
            f(c.w_mean),
            f(c.w_standard_error),
            f(c.m_d_vee),
            f(c.w_residual),
            c.lower_holds
        );
    }
    let mut failures = checks.iter().filter(|c| !c.lower_holds).count();
    failures += residual_outliers(&checks.iter().map(|c| c.c_residual).collect::<Vec<_>>());
    failures += residual_outliers(&checks.iter().map(|c| c.w_residual).collect::<Vec<_>>());
    let summary = format!(
        "collision study: D_max {} (exact {}), D_max^v {} + {}, {} failed checks: {}\n",
        format_number(params.d_max),
        params.d_max_exact,
        format_number(params.d_vee_lower),
        format_number(params.d_vee_residual),
        failures,
        if failures == 0 { "pass" } else { "FAIL" }
    );
    Ok((checks, ExperimentOutput { csv, summary, failures }))
}

/// Points whose absolute value exceeds three times the median absolute value.
pub fn residual_outliers(values: &[f64]) -> usize {
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    if abs.is_empty() {
        return 0;
    }
    let mid = abs.len() / 2;
    let median = if abs.len() % 2 == 1 { abs[mid] } else { 0.5 * (abs[mid - 1] + abs[mid]) };
    abs.iter().filter(|&&v| v > 3.0 * median).count()
}

/// Runs whichever experiment the spec names.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    match spec.kind {
        ExperimentKind::Inequality => Ok(run_inequality_suite(spec)?.1),
        ExperimentKind::Growth => Ok(run_growth_study(spec)?.output),
        ExperimentKind::Hankel => Ok(run_hankel_convergence(spec)?.1),
        ExperimentKind::Collision => Ok(run_collision_study(spec)?.1),
    }
}
