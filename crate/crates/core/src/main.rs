use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wfa_complexity::bounds::{
    bound_an1, bound_dist_h1r, bound_dist_r1r, bound_h1r, bound_h2r, bound_r1r, bound_r2r, bound_ranr,
    generalization_bound, BoundClass, BoundQuery, DistributionStats, SampleStats,
};
use wfa_complexity::experiment::{self, ExperimentSpec};
use wfa_complexity::hankel::{hankel_singular_values, schatten_norm};
use wfa_complexity::io::{format_number, read_sample, read_wfa, sample_to_text};
use wfa_complexity::norms::{
    growth_radius, l2_norm_squared, lp_norm_truncated, wfa_norm, FunctionNormResult, HolderPair, NormIndex,
    DEFAULT_ENUMERATION_GUARD,
};
use wfa_complexity::pfa::sample_pfa;
use wfa_complexity::rademacher::{
    rademacher_anpr_lower, rademacher_hpr_bound, rademacher_rpr, AscentConfig, Mode, RademacherEstimate,
};
use wfa_complexity::stats::{
    collision_stat, length_stat, ws_exhaustive, ws_heuristic, WsResult, DEFAULT_RESTARTS, DEFAULT_SPLIT_GUARD,
};
use wfa_complexity::{Error, Result, StringSample};

/// Complexity measures, Rademacher complexities and generalization bounds
/// for weighted finite automata.
#[derive(Parser)]
#[command(name = "wfa-complexity", version)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a WFA on one string.
    Eval {
        #[arg(long)]
        wfa: PathBuf,
        /// Whitespace-separated symbols; `<eps>` or "" for the empty string.
        #[arg(long)]
        string: String,
    },
    /// Weight norm and function norms of a WFA.
    Norm {
        #[arg(long)]
        wfa: PathBuf,
        /// 1, 2 or inf.
        #[arg(long, default_value = "2")]
        p: NormIndex,
        /// Length cutoff for the truncated ℓp sum.
        #[arg(long, default_value_t = 10)]
        cutoff: usize,
    },
    /// Hankel singular values and Schatten norms.
    Spectrum {
        #[arg(long)]
        wfa: PathBuf,
    },
    /// L_S, C_S and W_S of a sample.
    Stats {
        #[command(flatten)]
        sample: SampleArgs,
        /// Needed only when the split search falls back to local search.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Empirical Rademacher complexity of a sample.
    Rademacher {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, value_enum)]
        class: RademacherClass,
        #[arg(long, default_value = "2")]
        p: NormIndex,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// States, for the weight class.
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Evaluate a closed-form bound.
    Bound(BoundArgs),
    /// Draw a sample from a PFA.
    Sample {
        #[arg(long)]
        wfa: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        max_len: usize,
        /// Write here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run an experiment spec file and emit CSV.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the spec's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the per-sample inequality suite on built-in models.
    Check {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    sample: PathBuf,
    /// Take the alphabet from this WFA instead of inferring it.
    #[arg(long)]
    wfa: Option<PathBuf>,
}

impl SampleArgs {
    fn load(&self) -> Result<StringSample> {
        match &self.wfa {
            Some(w) => read_sample(&self.sample, Some(read_wfa(w)?.alphabet())),
            None => read_sample(&self.sample, None),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RademacherClass {
    /// ℓp ball of rational functions.
    R,
    /// Schatten–Hankel ball (upper bound via the best split found).
    H,
    /// Weight ball of n-state automata (lower estimate).
    A,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Enumerate,
    MonteCarlo,
}

#[derive(Args)]
struct BoundArgs {
    /// An1, RAnr, R1r, R2r, H1r or H2r.
    #[arg(long)]
    class: String,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Maximum length L_S (or expected maximum length L_m).
    #[arg(long)]
    l: Option<f64>,
    /// Collision statistic C_S.
    #[arg(long)]
    c: Option<usize>,
    /// Split statistic W_S.
    #[arg(long)]
    w: Option<usize>,
    #[arg(long)]
    d_max: Option<f64>,
    #[arg(long)]
    d_vee: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    kappa: f64,
    /// Report the generalization slack instead of the Rademacher bound.
    #[arg(long)]
    generalization: bool,
    #[arg(long, default_value = "2")]
    p: NormIndex,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    loss_bound: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

fn need_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::domain(format!("{what} is stochastic: pass --seed")))
}

fn norm_line(out: &mut String, name: &str, r: &FunctionNormResult) {
    let _ = write!(out, "{name} {} status {}", format_number(r.value), kebab(&r.status));
    if let Some(l) = r.truncation {
        let _ = write!(out, " cutoff {l}");
    }
    if let Some(t) = r.tail_bound {
        let _ = write!(out, " tail {}", format_number(t));
    }
    if let Some(k) = r.kronecker_radius {
        let _ = write!(out, " kronecker_radius {}", format_number(k));
    }
    out.push('\n');
}

fn kebab<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(str::to_string)).unwrap_or_default()
}

fn estimate_text(e: &RademacherEstimate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "value {}", format_number(e.value));
    let _ = writeln!(out, "mode {}", kebab(&e.mode));
    let _ = writeln!(out, "direction {}", kebab(&e.direction));
    let _ = writeln!(out, "draws {}", e.draws);
    let _ = writeln!(out, "standard_error {}", format_number(e.standard_error));
    if let Some(s) = e.seed {
        let _ = writeln!(out, "seed {s}");
    }
    out
}

fn split_search(s: &StringSample, seed: Option<u64>) -> Result<WsResult> {
    match ws_exhaustive(s, DEFAULT_SPLIT_GUARD) {
        Err(Error::Resource(_)) => {
            ws_heuristic(s, need_seed(seed, "the split search for this sample")?, DEFAULT_RESTARTS)
        }
        other => other,
    }
}

fn bound(b: &BoundArgs) -> Result<String> {
    if b.generalization {
        let class: BoundClass = b.class.parse()?;
        let sample_given = b.c.is_some() || b.w.is_some() || (b.l.is_some() && b.d_max.is_none() && b.d_vee.is_none());
        let (sample, distribution) = if b.d_max.is_some() || b.d_vee.is_some() {
            (None, Some(DistributionStats { l_m: b.l, d_max: b.d_max, d_vee: b.d_vee }))
        } else if sample_given {
            (Some(SampleStats { l_s: b.l.map(|l| l as usize), c_s: b.c, w_s: b.w }), None)
        } else {
            (None, Some(DistributionStats::default()))
        };
        let q = BoundQuery {
            class,
            m: b.m,
            n: b.n,
            k: b.k,
            r: b.r,
            p: b.p,
            mu: b.mu,
            loss_bound: b.loss_bound,
            delta: b.delta,
            kappa: b.kappa,
            sample,
            distribution,
        };
        return Ok(generalization_bound(&q)?.to_text());
    }
    let need_l = || b.l.ok_or_else(|| Error::domain("this bound needs --l"));
    let report = match b.class.as_str() {
        "An1" => bound_an1(b.m, b.n, b.k, need_l()?)?,
        "RAnr" => bound_ranr(b.m, b.n, b.k, b.r, need_l()? as usize)?,
        "R1r" => match (b.c, b.d_max) {
            (Some(c), _) => bound_r1r(b.m, b.r, c)?,
            (None, Some(d)) => bound_dist_r1r(b.m, b.r, d, b.kappa)?,
            _ => return Err(Error::domain("R1r needs --c or --d-max")),
        },
        "R2r" => bound_r2r(b.m, b.r)?,
        "H1r" => match (b.w, b.d_vee) {
            (Some(w), _) => bound_h1r(b.m, b.r, w)?,
            (None, Some(d)) => bound_dist_h1r(b.m, b.r, d, b.kappa)?,
            _ => return Err(Error::domain("H1r needs --w or --d-vee")),
        },
        "H2r" => bound_h2r(b.m, b.r)?,
        other => return Err(Error::parse(format!("unknown bound class {other:?}"))),
    };
    Ok(report.to_text())
}

fn run(command: Command) -> Result<(String, bool)> {
    let mut out = String::new();
    let mut ok = true;
    match command {
        Command::Eval { wfa, string } => {
            let a = read_wfa(&wfa)?;
            let x = a.alphabet().parse_word(&string)?;
            let _ = writeln!(out, "{}", format_number(a.evaluate(&x)?));
        }
        Command::Norm { wfa, p, cutoff } => {
            let a = read_wfa(&wfa)?;
            let hp = HolderPair::from_p(p);
            let _ = writeln!(out, "weight_norm p {} q {} {}", hp.p, hp.q, format_number(wfa_norm(&a, hp)));
            let _ = writeln!(out, "growth_radius {}", format_number(growth_radius(&a)));
            norm_line(&mut out, "l2_squared", &l2_norm_squared(&a)?);
            norm_line(
                &mut out,
                &format!("l{p}_truncated"),
                &lp_norm_truncated(&a, p.value(), cutoff, DEFAULT_ENUMERATION_GUARD)?,
            );
        }
        Command::Spectrum { wfa } => {
            let a = read_wfa(&wfa)?;
            let spec = hankel_singular_values(&a)?;
            for (i, s) in spec.singular_values.iter().enumerate() {
                let _ = writeln!(out, "singular_value {} {}", i + 1, format_number(*s));
            }
            let _ = writeln!(out, "numerical_rank {}", spec.numerical_rank);
            for p in [1.0, 2.0, f64::INFINITY] {
                let name = if p.is_infinite() { "inf".to_string() } else { format_number(p) };
                let _ = writeln!(out, "schatten {name} {}", format_number(schatten_norm(&spec.singular_values, p)?));
            }
            let _ = writeln!(out, "reach_residual {}", format_number(spec.gramians.reach_residual));
            let _ = writeln!(out, "observe_residual {}", format_number(spec.gramians.observe_residual));
        }
        Command::Stats { sample, seed } => {
            let s = sample.load()?;
            let ws = split_search(&s, seed)?;
            let _ = writeln!(out, "m {}", s.len());
            let _ = writeln!(out, "L_S {}", length_stat(&s));
            let _ = writeln!(out, "C_S {}", collision_stat(&s));
            let _ = writeln!(out, "W_S {}", ws.value);
            let _ = writeln!(out, "W_S_search {}", kebab(&ws.exactness));
            let _ = writeln!(out, "U_S {}", ws.witness.prefix_max);
            let _ = writeln!(out, "V_S {}", ws.witness.suffix_max);
            let al = s.alphabet();
            for (u, v) in &ws.witness.pairs {
                let _ = writeln!(out, "split {} | {}", al.format_word(u), al.format_word(v));
            }
        }
        Command::Rademacher { sample, class, p, r, mode, draws, seed, n } => {
            let s = sample.load()?;
            let mode = match mode {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Enumerate => Mode::Enumerate,
                ModeArg::MonteCarlo => Mode::MonteCarlo { draws },
            };
            let stochastic = matches!(mode, Mode::MonteCarlo { .. }) || matches!(class, RademacherClass::A);
            let seed_value = if stochastic { need_seed(seed, "this estimate")? } else { seed.unwrap_or(0) };
            let e = match class {
                RademacherClass::R => rademacher_rpr(&s, r, p, mode, seed_value)?,
                RademacherClass::H => {
                    let ws = split_search(&s, seed)?;
                    rademacher_hpr_bound(&s, &ws.witness, r, p, mode, seed_value)?
                }
                RademacherClass::A => {
                    rademacher_anpr_lower(&s, n, HolderPair::from_p(p), r, mode, seed_value, AscentConfig::default())?
                }
            };
            out.push_str(&estimate_text(&e));
        }
        Command::Bound(b) => out.push_str(&bound(&b)?),
        Command::Sample { wfa, m, seed, max_len, output } => {
            let a = read_wfa(&wfa)?;
            let s = sample_pfa(&a, m, seed, max_len)?;
            match output {
                Some(path) => fs::write(path, sample_to_text(&s))?,
                None => out.push_str(&sample_to_text(&s)),
            }
        }
        Command::Experiment { spec, output } => {
            let spec = ExperimentSpec::parse(&fs::read_to_string(&spec)?)?;
            let result = experiment::run(&spec)?;
            match output.or(spec.output.clone()) {
                Some(path) => {
                    fs::write(path, &result.csv)?;
                    out.push_str(&result.summary);
                }
                None => {
                    out.push_str(&result.csv);
                    eprint!("{}", result.summary);
                }
            }
            ok = result.failures == 0;
        }
        Command::Check { seed, trials } => {
            let specs = [
                "experiment = inequality\nmodel = geometric\nk = 2\nm = 1,2,4,8,12",
                "experiment = inequality\nmodel = geometric\nk = 1\nstop = 0.3\nm = 2,6,12",
                "experiment = inequality\nmodel = empty\nm = 1,5,12",
            ];
            let mut failures = 0;
            for (i, text) in specs.iter().enumerate() {
                let full = format!(
                    "{text}\ntrials = {trials}\nseed = {}\nn = 1\nascent_draws = 4\nascent_restarts = 4\nascent_steps = 50\n",
                    seed.wrapping_add(i as u64)
                );
                let (_, result) = experiment::run_inequality_suite(&ExperimentSpec::parse(&full)?)?;
                failures += result.failures;
                out.push_str(&result.summary);
            }
            let _ = writeln!(out, "check {}", if failures == 0 { "pass" } else { "FAIL" });
            ok = failures == 0;
        }
    }
    Ok((out, ok))
}

/// Exit code when `check` or an experiment finds a violated inequality.
const EXIT_CHECK_FAILED: u8 = 5;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok((out, ok)) => {
            print!("{out}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
