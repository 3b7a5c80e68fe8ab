//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::collections::HashMap;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use tempfile::TempDir;

use wfa_complexity::bounds::{bound_r1r, bound_ranr};
use wfa_complexity::experiment::{run_collision_study, ExperimentSpec};
use wfa_complexity::fixtures::{geometric, random_automaton, random_contractive, three_state};
use wfa_complexity::hankel::{hankel_singular_values, truncated_hankel_svd, DEFAULT_HANKEL_GUARD};
use wfa_complexity::io::write_wfa;
use wfa_complexity::norms::{l2_norm_squared, l2_tail, lp_norm_truncated, wfa_norm, HolderPair, NormIndex, NormStatus};
use wfa_complexity::rademacher::{rademacher_anpr_lower, rademacher_hpr_bound, rademacher_rpr, AscentConfig, Mode};
use wfa_complexity::rng::stream;
use wfa_complexity::stats::{collision_stat, length_stat, ws_exhaustive, ws_heuristic, SplitAssignment};
use wfa_complexity::wfa::enumerate_words;
use wfa_complexity::{Alphabet, StringSample, Word};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn random_sample<R: Rng>(rng: &mut R, m: usize, k: usize, max_len: usize) -> StringSample {
    let words = (0..m)
        .map(|_| {
            let len = rng.random_range(0..=max_len);
            Word::from((0..len).map(|_| rng.random_range(0..k)).collect::<Vec<_>>())
        })
        .collect();
    StringSample::new(Alphabet::letters(k).unwrap(), words).unwrap()
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let a = three_state();
    let ab = a.evaluate(&Word::from(vec![0, 1])).unwrap();
    let mut mismatches = 0;
    for x in enumerate_words(2, 4, 1 << 20).unwrap() {
        let fast = a.evaluate(&x).unwrap();
        let slow = a.evaluate_path_sum(&x, 1 << 20).unwrap();
        if !close(fast, slow, 1e-12) {
            mismatches += 1;
        }
    }
    let norm = wfa_norm(&a, HolderPair { p: NormIndex::One, q: NormIndex::Infinity });
    let elapsed = start.elapsed();
    outcome(
        ab == 52.0 && mismatches == 0 && norm == 8.0 && within(elapsed, Duration::from_secs(1)),
        format!("f(ab) = {ab}, {mismatches} path-sum mismatches, norm(1,inf) = {norm}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(2, 0);
    let mut violations = 0;
    for _ in 0..200 {
        let m = rng.random_range(1..=12);
        let s = random_sample(&mut rng, m, 2, 3);
        let r = rng.random_range(0.25..4.0);
        let e = rademacher_rpr(&s, r, NormIndex::Two, Mode::Enumerate, 0).unwrap();
        let lower = r / (2.0 * m as f64).sqrt();
        let upper = r / (m as f64).sqrt();
        if e.value < lower - 1e-12 || e.value > upper + 1e-12 {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && within(elapsed, Duration::from_secs(30)),
        format!("{violations} sandwich violations over 200 samples, {elapsed:.2?}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = stream(3, 0);
    let mut fixtures = 0;
    let mut worst = 0.0f64;
    while fixtures < 100 {
        let m = rng.random_range(2..=14);
        let s = random_sample(&mut rng, m, 2, 2);
        if collision_stat(&s) <= 1 {
            continue;
        }
        fixtures += 1;
        for p in [NormIndex::One, NormIndex::Two, NormIndex::Infinity] {
            let shortcut = rademacher_rpr(&s, 1.0, p, Mode::Exact, 0).unwrap().value;
            let brute = rademacher_rpr(&s, 1.0, p, Mode::Enumerate, 0).unwrap().value;
            worst = worst.max((shortcut - brute).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |convolution - enumeration| = {worst:e} over 100 fixtures, p in 1, 2, inf"))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(4, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..=3);
        let target = rng.random_range(0.05..=0.5);
        let a = random_contractive(&mut rng, n, 1, target);
        let exact = hankel_singular_values(&a).unwrap().singular_values;
        let trunc = truncated_hankel_svd(&a, 30, 30, DEFAULT_HANKEL_GUARD).unwrap();
        let s1 = exact[0].max(trunc[0]);
        if s1 == 0.0 {
            continue;
        }
        for (i, e) in exact.iter().enumerate() {
            worst = worst.max((e - trunc.get(i).copied().unwrap_or(0.0)).abs() / s1);
        }
    }
    let g = geometric(0.5);
    let g_exact = hankel_singular_values(&g).unwrap().singular_values[0];
    let g_trunc = truncated_hankel_svd(&g, 30, 30, DEFAULT_HANKEL_GUARD).unwrap()[0];
    let geo_ok = (g_exact - 4.0 / 3.0).abs() <= 1e-8 && (g_trunc - 4.0 / 3.0).abs() <= 1e-8;

    // two-symbol side check: the block grows as 2^L, so only the trend is checked
    let mut monotone = true;
    for _ in 0..5 {
        let n = rng.random_range(1..=3);
        let a = random_contractive(&mut rng, n, 2, 0.5);
        let exact = hankel_singular_values(&a).unwrap().singular_values;
        let gaps: Vec<f64> = [3, 6, 9]
            .iter()
            .map(|&l| {
                let t = truncated_hankel_svd(&a, l, l, DEFAULT_HANKEL_GUARD).unwrap();
                (exact[0] - t[0]).abs() / exact[0]
            })
            .collect();
        monotone &= gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-5 && geo_ok && monotone && within(elapsed, Duration::from_secs(120)),
        format!(
            "max relative gap {worst:e} at L = 30, geometric s1 {g_exact} / {g_trunc}, two-symbol gaps shrink: {monotone}, {elapsed:.2?}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = stream(4, 0);
    let mut bad = 0;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..=3);
        let target = rng.random_range(0.05..=0.5);
        let a = random_contractive(&mut rng, n, 1, target);
        let exact = l2_norm_squared(&a).unwrap();
        if exact.status != NormStatus::Exact {
            bad += 1;
            continue;
        }
        let cutoff = 40;
        let partial = lp_norm_truncated(&a, 2.0, cutoff, 1 << 20).unwrap().value.powi(2);
        let tail = l2_tail(&a, cutoff).unwrap();
        let missing = exact.value - partial;
        let slack = 1e-12 * exact.value.max(1.0);
        if missing < -slack || missing > tail + slack {
            bad += 1;
        }
        worst = worst.max((missing - tail).abs() / exact.value.max(1e-300));
    }
    let g = l2_norm_squared(&geometric(0.5)).unwrap().value;
    let geo_ok = (g - 4.0 / 3.0).abs() <= 1e-10;
    outcome(
        bad == 0 && geo_ok,
        format!("{bad} automata outside [partial, partial + tail], tail identity error {worst:e}, geometric {g}"),
    )
}

/// W_S by trying every split, on plain token strings; shares no code with
/// the library's search.
fn brute_force_ws(strings: &[Vec<u8>]) -> usize {
    let mut cuts = vec![0usize; strings.len()];
    let mut best = usize::MAX;
    loop {
        let mut prefixes: HashMap<&[u8], usize> = HashMap::new();
        let mut suffixes: HashMap<&[u8], usize> = HashMap::new();
        for (x, &c) in strings.iter().zip(&cuts) {
            *prefixes.entry(&x[..c]).or_default() += 1;
            *suffixes.entry(&x[c..]).or_default() += 1;
        }
        let v = prefixes.values().chain(suffixes.values()).copied().max().unwrap_or(0);
        best = best.min(v);
        // odometer over the cut vector
        let mut i = 0;
        loop {
            if i == strings.len() {
                return best;
            }
            if cuts[i] < strings[i].len() {
                cuts[i] += 1;
                break;
            }
            cuts[i] = 0;
            i += 1;
        }
    }
}

fn criterion_6() -> Outcome {
    let pool: Vec<Vec<u8>> = enumerate_words(2, 3, 1 << 10)
        .unwrap()
        .iter()
        .map(|w| w.symbols().iter().map(|&s| s as u8).collect())
        .collect();
    let alphabet = Alphabet::letters(2).unwrap();
    let mut cases = 0usize;
    let mut mismatches = 0usize;
    let mut heuristic_below = 0usize;
    // multisets of size 1..=5 as nondecreasing index sequences
    fn visit(pool_len: usize, size: usize, start: usize, acc: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if acc.len() == size {
            f(acc);
            return;
        }
        for i in start..pool_len {
            acc.push(i);
            visit(pool_len, size, i, acc, f);
            acc.pop();
        }
    }
    for size in 1..=5 {
        visit(pool.len(), size, 0, &mut Vec::new(), &mut |idx| {
            let strings: Vec<Vec<u8>> = idx.iter().map(|&i| pool[i].clone()).collect();
            let words = strings.iter().map(|x| Word::from(x.iter().map(|&s| s as usize).collect::<Vec<_>>())).collect();
            let s = StringSample::new(alphabet.clone(), words).unwrap();
            let exact = ws_exhaustive(&s, 1 << 30).unwrap().value;
            cases += 1;
            if exact != brute_force_ws(&strings) {
                mismatches += 1;
            }
            if ws_heuristic(&s, cases as u64, 4).unwrap().value < exact {
                heuristic_below += 1;
            }
        });
    }

    let mut extremes_ok = true;
    let mut rng = stream(6, 0);
    for m in 1..=6 {
        let eps = StringSample::new(alphabet.clone(), vec![Word::empty(); m]).unwrap();
        extremes_ok &= ws_exhaustive(&eps, 1 << 30).unwrap().value == m;
        extremes_ok &= ws_heuristic(&eps, 1, 8).unwrap().value == m;

        let mut all: Vec<Word> = enumerate_words(2, m, 1 << 20).unwrap().into_iter().filter(|w| w.len() == m).collect();
        all.shuffle(&mut rng);
        let distinct = StringSample::new(alphabet.clone(), all[..m].to_vec()).unwrap();
        extremes_ok &= ws_exhaustive(&distinct, 1 << 30).unwrap().value == 1;
        extremes_ok &= ws_heuristic(&distinct, 1, 8).unwrap().value == 1;
    }
    outcome(
        mismatches == 0 && heuristic_below == 0 && extremes_ok && cases > 1000,
        format!(
            "{cases} samples: {mismatches} brute-force mismatches, {heuristic_below} heuristic below exact, extremes ok: {extremes_ok}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = stream(7, 0);
    let mut violations = 0;
    for i in 0..10_000 {
        let r = [0.5, 1.0, 2.0][i % 3];
        let hp = HolderPair::ALL[rng.random_range(0..3)];
        let n = rng.random_range(1..=3);
        let k = rng.random_range(1..=3);
        let raw_a = random_automaton(&mut rng, n, k);
        let a = raw_a.scale(r / wfa_norm(&raw_a, hp)).unwrap();
        let raw_b = random_automaton(&mut rng, n, k);
        let shrink: f64 = rng.random_range(0.05..=1.0);
        let b = raw_b.scale(shrink * r / wfa_norm(&raw_b, hp)).unwrap();
        let len = rng.random_range(0..=8);
        let x = Word::from((0..len).map(|_| rng.random_range(0..k)).collect::<Vec<_>>());

        let fa = a.evaluate(&x).unwrap();
        let growth = r.powi(len as i32 + 2);
        if fa.abs() > growth + 1e-9 * growth.max(1.0) {
            violations += 1;
        }
        let dist = wfa_norm(&a.add(&b.scale(-1.0).unwrap()).unwrap(), hp);
        let lipschitz = r.powi(len as i32 + 1) * (len as f64 + 2.0) * dist;
        let diff = (fa - b.evaluate(&x).unwrap()).abs();
        if diff > lipschitz + 1e-9 * lipschitz.max(1.0) {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations over 10000 draws"))
}

fn criterion_8() -> Outcome {
    let mut rng = stream(8, 0);
    let (mut r1, mut h2, mut a) = (0, 0, 0);
    let cfg = AscentConfig { restarts: 3, steps: 60, step_size: 0.1 };
    for i in 0..200 {
        let m = rng.random_range(1..=10);
        let k = rng.random_range(1..=2);
        let s = random_sample(&mut rng, m, k, 3);
        let r = rng.random_range(0.5..=2.0);

        let exact = rademacher_rpr(&s, r, NormIndex::One, Mode::Exact, 0).unwrap().value;
        if exact > bound_r1r(m, r, collision_stat(&s)).unwrap().value + 1e-12 {
            r1 += 1;
        }

        let split = ws_exhaustive(&s, 1 << 30).unwrap().witness;
        let h = rademacher_hpr_bound(&s, &split, r, NormIndex::Two, Mode::Exact, 0).unwrap().value;
        if h > r / (m as f64).sqrt() + 1e-12 {
            h2 += 1;
        }
        // arbitrary splits must respect the same bound
        let cuts: Vec<usize> = s.strings().iter().map(|x| rng.random_range(0..=x.len())).collect();
        let other = SplitAssignment::from_cuts(&s, &cuts).unwrap();
        let h = rademacher_hpr_bound(&s, &other, r, NormIndex::Two, Mode::Exact, 0).unwrap().value;
        if h > r / (m as f64).sqrt() + 1e-12 {
            h2 += 1;
        }

        let n = rng.random_range(1..=2);
        let hp = HolderPair::ALL[i % 3];
        let lower = rademacher_anpr_lower(&s, n, hp, r, Mode::Enumerate, i as u64, cfg).unwrap().value;
        if lower > bound_ranr(m, n, k, r, length_stat(&s)).unwrap().value + 1e-12 {
            a += 1;
        }
    }
    outcome(r1 + h2 + a == 0, format!("violations: R1r {r1}, H2 {h2}, A {a} over 200 fixtures"))
}

fn criterion_9() -> Outcome {
    let alphabet = Alphabet::letters(2).unwrap();
    let w = |v: &[usize]| Word::from(v.to_vec());
    let fixtures = [
        StringSample::new(alphabet.clone(), vec![w(&[0]); 10]).unwrap(),
        StringSample::new(alphabet.clone(), vec![w(&[]), w(&[]), w(&[]), w(&[0]), w(&[0]), w(&[1]), w(&[0, 1])])
            .unwrap(),
        StringSample::new(
            alphabet,
            vec![w(&[0]), w(&[0]), w(&[1]), w(&[1]), w(&[1, 1]), w(&[1, 1]), w(&[0, 0]), w(&[0, 1]), w(&[1, 0])],
        )
        .unwrap(),
    ];
    let mut worst_hits = 100;
    for s in &fixtures {
        for p in [NormIndex::One, NormIndex::Two, NormIndex::Infinity] {
            let exact = rademacher_rpr(s, 1.0, p, Mode::Exact, 0).unwrap().value;
            let hits = (0..100u64)
                .filter(|&seed| {
                    let e = rademacher_rpr(s, 1.0, p, Mode::MonteCarlo { draws: 10_000 }, seed).unwrap();
                    (e.value - exact).abs() <= 4.0 * e.standard_error
                })
                .count();
            worst_hits = worst_hits.min(hits);
        }
        let split = ws_exhaustive(s, 1 << 30).unwrap().witness;
        for p in [NormIndex::One, NormIndex::Two] {
            let exact = rademacher_hpr_bound(s, &split, 1.0, p, Mode::Enumerate, 0).unwrap().value;
            let hits = (0..100u64)
                .filter(|&seed| {
                    let e = rademacher_hpr_bound(s, &split, 1.0, p, Mode::MonteCarlo { draws: 10_000 }, seed).unwrap();
                    (e.value - exact).abs() <= 4.0 * e.standard_error
                })
                .count();
            worst_hits = worst_hits.min(hits);
        }
    }
    outcome(worst_hits >= 99, format!("worst configuration within 4 standard errors on {worst_hits} of 100 seeds"))
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let spec = ExperimentSpec::parse(
        "experiment = collision\nmodel = geometric\nk = 2\nstop = 0.5\nm = 25,50,100\ntrials = 200\nseed = 10\ntruncation = 20\n",
    )
    .unwrap();
    let (checks, output) = run_collision_study(&spec).unwrap();
    let elapsed = start.elapsed();
    let lower = checks.iter().all(|c| c.lower_holds);
    let residuals: Vec<String> =
        checks.iter().map(|c| format!("m={}: C {:.3} W {:.3}", c.m, c.c_residual, c.w_residual)).collect();
    outcome(
        lower && output.failures == 0 && within(elapsed, Duration::from_secs(300)),
        format!("lower inequality holds: {lower}; {}; {elapsed:.2?}", residuals.join(", ")),
    )
}

fn criterion_11() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_wfa-complexity");
    let dir = TempDir::new().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    let pfa = wfa_complexity::experiment::geometric_pfa(2, 0.3).unwrap();
    write_wfa(dir.path().join("pfa.json").as_path(), &pfa).unwrap();
    let mut rng = stream(11, 0);
    let long = random_sample(&mut rng, 60, 2, 12);
    wfa_complexity::io::write_sample(dir.path().join("long.txt").as_path(), &long).unwrap();
    std::fs::write(
        path("spec.txt"),
        "experiment = inequality\nmodel = geometric\nk = 2\nm = 2,5\ntrials = 3\nseed = 4\nascent_draws = 2\nascent_restarts = 2\nascent_steps = 20\n",
    )
    .unwrap();

    let invocations: Vec<Vec<String>> = [
        vec!["sample", "--wfa", &path("pfa.json"), "--m", "40", "--seed", "9"],
        vec!["stats", "--sample", &path("long.txt"), "--seed", "3"],
        vec![
            "rademacher",
            "--sample",
            &path("long.txt"),
            "--class",
            "r",
            "--p",
            "1",
            "--mode",
            "monte-carlo",
            "--draws",
            "500",
            "--seed",
            "5",
        ],
        vec![
            "rademacher",
            "--sample",
            &path("long.txt"),
            "--class",
            "h",
            "--p",
            "1",
            "--mode",
            "monte-carlo",
            "--draws",
            "50",
            "--seed",
            "5",
        ],
        vec![
            "rademacher",
            "--sample",
            &path("long.txt"),
            "--class",
            "a",
            "--n",
            "2",
            "--mode",
            "monte-carlo",
            "--draws",
            "2",
            "--seed",
            "5",
        ],
        vec!["experiment", "--spec", &path("spec.txt")],
        vec!["check", "--seed", "1", "--trials", "2"],
    ]
    .iter()
    .map(|v| v.iter().map(|s| s.to_string()).collect())
    .collect();

    let run = |args: &[String], jobs: Option<&str>| {
        let mut cmd = Command::new(bin);
        if let Some(j) = jobs {
            cmd.args(["--jobs", j]);
        }
        cmd.args(args).output().unwrap()
    };
    let mut differing = Vec::new();
    for args in &invocations {
        let first = run(args, None);
        let second = run(args, None);
        let serial = run(args, Some("1"));
        let succeeded = first.status.success() && !first.stdout.is_empty();
        if !succeeded || first.stdout != second.stdout || first.stdout != serial.stdout {
            differing.push(format!("{} ({})", args[0], String::from_utf8_lossy(&first.stderr).trim()));
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} stochastic invocations, differing or failing: {:?}", invocations.len(), differing),
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 11] = [
        ("evaluation on the three-state reference automaton", criterion_1),
        ("l2-ball Rademacher sandwich", criterion_2),
        ("dual-norm shortcut against sign enumeration", criterion_3),
        ("Gramian spectrum against truncated Hankel SVD", criterion_4),
        ("exact l2 norm against truncated sums", criterion_5),
        ("W_S search against brute force", criterion_6),
        ("growth and Lipschitz inequalities on weight balls", criterion_7),
        ("per-sample bound dominance", criterion_8),
        ("Monte-Carlo consistency", criterion_9),
        ("collision statistic lower inequality", criterion_10),
        ("determinism of stochastic subcommands", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} [{}] ({:.2?})",
            i + 1,
            if o.ok { "PASS" } else { "FAIL" },
            name,
            o.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
