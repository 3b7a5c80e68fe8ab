use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use wfa_complexity::bounds::{bound_an1, bound_h1r, bound_h2r, bound_r1r, bound_r2r, bound_ranr};
use wfa_complexity::experiment::{inequality_row, run, ExperimentSpec};
use wfa_complexity::fixtures::{random_automaton, random_contractive};
use wfa_complexity::hankel::{hankel_singular_values, schatten_hankel_norm, truncated_hankel_svd};
use wfa_complexity::norms::{
    hankel_bounded, l2_norm_squared, lp_norm_truncated, wfa_norm, HolderPair, NormIndex, NormStatus,
};
use wfa_complexity::pfa::{make_dfa, make_pfa, DfaTransition};
use wfa_complexity::rademacher::{rademacher_anpr_lower, rademacher_hpr_bound, rademacher_rpr, AscentConfig, Mode};
use wfa_complexity::rng::stream;
use wfa_complexity::stats::{collision_stat, length_stat, ws_exhaustive, ws_heuristic, SplitAssignment};
use wfa_complexity::wfa::enumerate_words;
use wfa_complexity::{Alphabet, StringSample, WeightedAutomaton, Word};

fn sample_strategy(max_m: usize, k: usize, max_len: usize) -> impl Strategy<Value = StringSample> {
    prop::collection::vec(prop::collection::vec(0..k, 0..=max_len), 1..=max_m).prop_map(move |ws| {
        StringSample::new(Alphabet::letters(k).unwrap(), ws.into_iter().map(Word::from).collect()).unwrap()
    })
}

fn automaton(seed: u64, n: usize, k: usize) -> WeightedAutomaton {
    random_automaton(&mut stream(seed, 0), n, k)
}

fn words(k: usize, max_len: usize) -> Vec<Word> {
    enumerate_words(k, max_len, 1 << 20).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_matches_path_sum(seed in any::<u64>(), n in 1usize..=3, k in 1usize..=2) {
        let a = automaton(seed, n, k);
        for x in words(k, 4) {
            let fast = a.evaluate(&x).unwrap();
            let slow = a.evaluate_path_sum(&x, 1 << 20).unwrap();
            prop_assert!((fast - slow).abs() <= 1e-10 * fast.abs().max(slow.abs()).max(1.0));
        }
    }

    #[test]
    fn add_is_parameter_wise(s1 in any::<u64>(), s2 in any::<u64>(), n in 1usize..=3) {
        let (a, b) = (automaton(s1, n, 2), automaton(s2, n, 2));
        let c = a.add(&b).unwrap();
        prop_assert_eq!(c.alpha(), &(a.alpha() + b.alpha()));
        prop_assert_eq!(c.beta(), &(a.beta() + b.beta()));
        for s in 0..2 {
            prop_assert_eq!(c.transition(s), &(a.transition(s) + b.transition(s)));
        }
    }

    #[test]
    fn conjugation_preserves_function(seed in any::<u64>(), n in 1usize..=3) {
        let a = automaton(seed, n, 2);
        let mut rng = stream(seed, 1);
        let q = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.0 } + rng.random_range(-0.5..0.5));
        let b = a.conjugate(&q).unwrap();
        for x in words(2, 4) {
            let (fa, fb) = (a.evaluate(&x).unwrap(), b.evaluate(&x).unwrap());
            prop_assert!((fa - fb).abs() <= 1e-9 * fa.abs().max(1.0));
        }
    }

    #[test]
    fn conjugation_preserves_spectrum(seed in any::<u64>(), n in 1usize..=3) {
        let a = random_contractive(&mut stream(seed, 0), n, 2, 0.5);
        let mut rng = stream(seed, 1);
        let q = DMatrix::from_fn(n, n, |i, j| if i == j { 1.5 } else { 0.0 } + rng.random_range(-0.3..0.3));
        let s = hankel_singular_values(&a).unwrap().singular_values;
        let t = hankel_singular_values(&a.conjugate(&q).unwrap()).unwrap().singular_values;
        for (x, y) in s.iter().zip(&t) {
            prop_assert!((x - y).abs() <= 1e-8 * s[0].max(1e-300));
        }
    }

    #[test]
    fn pfa_mass_increases_to_one(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = stream(seed, 0);
        let k = 2;
        let mut initial: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = initial.iter().sum();
        initial.iter_mut().for_each(|v| *v /= total);
        let mut trans = vec![DMatrix::zeros(n, n); k];
        let mut stop = vec![0.0; n];
        for i in 0..n {
            let w: Vec<f64> = (0..k * n + 1).map(|_| rng.random_range(0.0..1.0)).collect();
            // at least a fifth of each row goes to stopping, so the mass converges
            let w_stop = w[k * n] + 0.25 * w.iter().sum::<f64>();
            let total: f64 = w[..k * n].iter().sum::<f64>() + w_stop;
            stop[i] = w_stop / total;
            for a in 0..k {
                for j in 0..n {
                    trans[a][(i, j)] = w[a * n + j] / total;
                }
            }
        }
        let a = make_pfa(Alphabet::letters(k).unwrap(), &initial, trans, &stop).unwrap();
        let mut mass = 0.0;
        let mut last = 0.0;
        for x in words(k, 12) {
            let f = a.evaluate(&x).unwrap();
            prop_assert!(f >= 0.0);
            mass += f;
            prop_assert!(mass >= last);
            last = mass;
        }
        prop_assert!(mass <= 1.0 + 1e-9);
        prop_assert!(mass > 0.9);
    }

    #[test]
    fn dfa_is_boolean(seed in any::<u64>(), states in 1usize..=4) {
        let mut rng = stream(seed, 0);
        let mut transitions = Vec::new();
        for q in 0..states {
            for symbol in 0..2 {
                if rng.random_bool(0.8) {
                    transitions.push(DfaTransition { state: q, symbol, target: rng.random_range(0..states) });
                }
            }
        }
        let accepting: Vec<usize> = (0..states).filter(|_| rng.random_bool(0.5)).collect();
        let a = make_dfa(Alphabet::letters(2).unwrap(), states, &transitions, 0, &accepting).unwrap();
        prop_assert!(wfa_norm(&a, HolderPair::from_p(NormIndex::One)) <= 1.0);
        for x in words(2, 6) {
            let f = a.evaluate(&x).unwrap();
            prop_assert!(f == 0.0 || f == 1.0);
        }
    }

    #[test]
    fn weight_norm_is_a_norm(s1 in any::<u64>(), s2 in any::<u64>(), c in -3.0f64..3.0, pi in 0usize..3) {
        let hp = HolderPair::ALL[pi];
        let (a, b) = (automaton(s1, 2, 2), automaton(s2, 2, 2));
        let na = wfa_norm(&a, hp);
        prop_assert!((wfa_norm(&a.scale(c).unwrap(), hp) - c.abs() * na).abs() <= 1e-12 * (1.0 + na));
        prop_assert!(wfa_norm(&a.add(&b).unwrap(), hp) <= na + wfa_norm(&b, hp) + 1e-12);
    }

    #[test]
    fn l2_exact_dominates_truncation(seed in any::<u64>(), n in 1usize..=3, target in 0.05f64..0.9) {
        let a = random_contractive(&mut stream(seed, 0), n, 2, target);
        let exact = l2_norm_squared(&a).unwrap();
        prop_assert_eq!(exact.status, NormStatus::Exact);
        for cutoff in [0, 2, 5, 8] {
            let t = lp_norm_truncated(&a, 2.0, cutoff, 1 << 20).unwrap();
            let partial = t.value * t.value;
            prop_assert!(partial <= exact.value * (1.0 + 1e-10) + 1e-14);
            if let Some(tail) = t.tail_bound {
                prop_assert!(exact.value - partial <= tail * (1.0 + 1e-10) + 1e-14);
            }
        }
    }

    #[test]
    fn bounded_hankel_has_a_spectrum(seed in any::<u64>(), n in 1usize..=3, scale in 0.2f64..1.5) {
        let a = automaton(seed, n, 2).scale(scale).unwrap();
        let b = hankel_bounded(&a);
        let spectrum = hankel_singular_values(&a);
        if b.bounded {
            let s = spectrum.unwrap();
            prop_assert!(s.numerical_rank <= n);
            prop_assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
        // containment of the Schatten classes in the l2 class
        let l2 = l2_norm_squared(&a).unwrap();
        let schatten = schatten_hankel_norm(&a, 1.0);
        prop_assert_eq!(schatten.is_ok(), l2.status == NormStatus::Exact);
    }

    #[test]
    fn truncated_spectrum_grows_to_gramian(seed in any::<u64>(), n in 1usize..=2) {
        let a = random_contractive(&mut stream(seed, 0), n, 1, 0.4);
        let exact = hankel_singular_values(&a).unwrap().singular_values;
        let mut previous = 0.0;
        for l in [2, 5, 10, 20] {
            let s1 = truncated_hankel_svd(&a, l, l, 1 << 20).unwrap()[0];
            prop_assert!(s1 + 1e-12 >= previous);
            prop_assert!(s1 <= exact[0] * (1.0 + 1e-9));
            previous = s1;
        }
    }

    #[test]
    fn split_statistics(s in sample_strategy(7, 2, 3), seed in any::<u64>()) {
        let m = s.len();
        let exact = ws_exhaustive(&s, 1 << 30).unwrap();
        let w = exact.value;
        for ((u, v), x) in exact.witness.pairs.iter().zip(s.strings()) {
            prop_assert_eq!(&u.concat(v), x);
        }
        prop_assert!(1 <= w && w <= m);
        prop_assert!(collision_stat(&s) <= m);
        prop_assert!(w <= SplitAssignment::all_prefix(&s).value());
        prop_assert!(w <= SplitAssignment::all_suffix(&s).value());
        let h = ws_heuristic(&s, seed, 4).unwrap();
        prop_assert!(h.value >= w);
        for ((u, v), x) in h.witness.pairs.iter().zip(s.strings()) {
            prop_assert_eq!(&u.concat(v), x);
        }
    }

    #[test]
    fn statistics_ignore_order(s in sample_strategy(7, 2, 3), seed in any::<u64>()) {
        let mut shuffled = s.strings().to_vec();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut stream(seed, 0));
        let t = StringSample::new(s.alphabet().clone(), shuffled).unwrap();
        prop_assert_eq!(collision_stat(&s), collision_stat(&t));
        prop_assert_eq!(length_stat(&s), length_stat(&t));
        prop_assert_eq!(ws_exhaustive(&s, 1 << 30).unwrap().value, ws_exhaustive(&t, 1 << 30).unwrap().value);
    }

    #[test]
    fn rademacher_per_sample_inequalities(s in sample_strategy(12, 2, 3), r in 0.1f64..5.0) {
        let m = s.len() as f64;
        let r2 = rademacher_rpr(&s, r, NormIndex::Two, Mode::Exact, 0).unwrap().value;
        prop_assert!(r2 >= r / (2.0 * m).sqrt() - 1e-12 && r2 <= r / m.sqrt() + 1e-12);
        let r1 = rademacher_rpr(&s, r, NormIndex::One, Mode::Exact, 0).unwrap().value;
        let c = collision_stat(&s) as f64;
        prop_assert!(r1 <= r * (2.0 * c * (2.0 * m).ln()).sqrt() / m + 1e-12);
        let split = ws_exhaustive(&s, 1 << 30).unwrap().witness;
        let h2 = rademacher_hpr_bound(&s, &split, r, NormIndex::Two, Mode::Exact, 0).unwrap().value;
        prop_assert!(h2 <= r / m.sqrt() + 1e-12);
    }

    #[test]
    fn estimators_are_linear_in_radius(s in sample_strategy(8, 2, 3), r in 0.1f64..5.0) {
        for p in [NormIndex::One, NormIndex::Two, NormIndex::Infinity] {
            let a = rademacher_rpr(&s, r, p, Mode::Exact, 0).unwrap().value;
            let b = rademacher_rpr(&s, 2.0 * r, p, Mode::Exact, 0).unwrap().value;
            prop_assert_eq!(b, 2.0 * a);
        }
        let split = SplitAssignment::all_suffix(&s);
        for p in [NormIndex::One, NormIndex::Two] {
            let a = rademacher_hpr_bound(&s, &split, r, p, Mode::Exact, 0).unwrap().value;
            let b = rademacher_hpr_bound(&s, &split, 2.0 * r, p, Mode::Exact, 0).unwrap().value;
            prop_assert!((b - 2.0 * a).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn monte_carlo_is_deterministic(s in sample_strategy(10, 2, 3), seed in any::<u64>()) {
        let mode = Mode::MonteCarlo { draws: 200 };
        let a = rademacher_rpr(&s, 1.0, NormIndex::One, mode, seed).unwrap();
        let b = rademacher_rpr(&s, 1.0, NormIndex::One, mode, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bounds_weakly_decrease_in_m(m in 5usize..500, r in 0.1f64..3.0, c in 1usize..5, w in 1usize..5, l in 0usize..20) {
        let next = m + 1 + m / 3;
        prop_assert!(bound_an1(next, 2, 2, l as f64).unwrap().value <= bound_an1(m, 2, 2, l as f64).unwrap().value + 1e-12);
        prop_assert!(bound_r1r(next, r, c).unwrap().value <= bound_r1r(m, r, c).unwrap().value + 1e-12);
        prop_assert!(bound_r2r(next, r).unwrap().value <= bound_r2r(m, r).unwrap().value);
        prop_assert!(bound_h2r(next, r).unwrap().value <= bound_h2r(m, r).unwrap().value);
        if m >= 3 {
            prop_assert!(bound_h1r(next, r, w).unwrap().value <= bound_h1r(m, r, w).unwrap().value + 1e-12);
        }
    }

    #[test]
    fn ranr_below_an1(m in 1usize..10_000, n in 1usize..4, k in 1usize..4, l in 0usize..50) {
        let ranr = bound_ranr(m, n, k, 1.0, l).unwrap().value;
        prop_assert!(ranr <= bound_an1(m, n, k, l as f64).unwrap().value * (1.0 + 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ascent_stays_below_weight_bound(s in sample_strategy(6, 2, 3), r in 1.0f64..2.0, pi in 0usize..3) {
        let cfg = AscentConfig { restarts: 3, steps: 40, step_size: 0.1 };
        let lower = rademacher_anpr_lower(&s, 1, HolderPair::ALL[pi], r, Mode::Enumerate, 1, cfg).unwrap().value;
        prop_assert!(lower >= 0.0);
        prop_assert!(lower <= bound_ranr(s.len(), 1, 2, r, length_stat(&s)).unwrap().value + 1e-12);
    }

    #[test]
    fn inequality_rows_use_fresh_bounds(s in sample_strategy(8, 2, 3), seed in any::<u64>()) {
        let row = inequality_row(&s, 1.0, 1, NormIndex::Two, AscentConfig { restarts: 2, steps: 20, step_size: 0.1 }, 2, seed).unwrap();
        prop_assert!(row.violations.is_empty(), "{:?}", row.violations);
        prop_assert_eq!(row.r1_bound, bound_r1r(s.len(), 1.0, row.c_s).unwrap().value);
        prop_assert_eq!(row.r2_upper, bound_r2r(s.len(), 1.0).unwrap().value);
        prop_assert_eq!(row.h2_bound, bound_h2r(s.len(), 1.0).unwrap().value);
        prop_assert_eq!(row.h1_bound, bound_h1r(s.len(), 1.0, row.w_s).unwrap().value);
        prop_assert_eq!(row.a_bound, bound_ranr(s.len(), 1, 2, 1.0, row.l_s).unwrap().value);
    }
}

// Below r = 1 the covering bound uses r^{L_S+2} where r^2 is the true
// envelope; the empty string alone pushes the exact value above it.
#[test]
fn ranr_undershoots_below_unit_radius() {
    let alphabet = Alphabet::letters(2).unwrap();
    let s = StringSample::new(alphabet, vec![Word::from(vec![]), Word::from(vec![0, 0, 0])]).unwrap();
    let r = 0.3;
    let cfg = AscentConfig { restarts: 3, steps: 60, step_size: 0.1 };
    let lower = rademacher_anpr_lower(&s, 1, HolderPair::ALL[0], r, Mode::Enumerate, 1, cfg).unwrap().value;
    // every sign vector reaches r²(1 + r³)/2 with |α| = |β| = |A_a| = r
    let analytic = r * r / 2.0 * (1.0 + r.powi(3));
    assert!(lower <= analytic + 1e-12 && lower > 0.99 * analytic, "{lower} vs {analytic}");
    let report = bound_ranr(2, 1, 2, r, 3).unwrap();
    assert!(report.value < lower, "{} vs {lower}", report.value);
    assert!(!report.warnings.is_empty());
    assert!(bound_ranr(2, 1, 2, 1.0, 3).unwrap().warnings.is_empty());
}

#[test]
fn experiment_csv_is_reproducible() {
    let spec = ExperimentSpec::parse(
        "experiment = inequality\nmodel = geometric\nk = 2\nm = 3,6\ntrials = 4\nseed = 21\nascent_draws = 2\nascent_restarts = 2\nascent_steps = 20\n",
    )
    .unwrap();
    let a = run(&spec).unwrap();
    let b = run(&spec).unwrap();
    assert_eq!(a.csv, b.csv);
    assert_eq!(a.failures, 0);
    assert_eq!(a.csv.lines().count(), 1 + 2 * 4);
}

#[test]
fn dvector_helpers_agree() {
    // the ℓ2 value of a one-state automaton is a geometric series
    let a = WeightedAutomaton::new(
        Alphabet::letters(2).unwrap(),
        DVector::from_element(1, 2.0),
        DVector::from_element(1, 0.5),
        vec![DMatrix::from_element(1, 1, 0.3), DMatrix::from_element(1, 1, 0.4)],
    )
    .unwrap();
    let exact = l2_norm_squared(&a).unwrap().value;
    assert!((exact - 1.0 / (1.0 - 0.25)).abs() < 1e-12);
}
