//! Deterministic and probabilistic automata as special WFAs, and forward
//! sampling from PFAs.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::spectral_radius;
use crate::rng;
use crate::sample::StringSample;
use crate::wfa::{Alphabet, WeightedAutomaton, Word};

/// Tolerance on probability-vector and row-sum constraints.
pub const PFA_TOLERANCE: f64 = 1e-9;

/// One DFA transition: from `state`, reading `symbol`, go to `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DfaTransition {
    pub state: usize,
    pub symbol: usize,
    pub target: usize,
}

/// Builds the 0/1 WFA of a (partial) DFA. Missing transitions leave an
/// all-zero row.
pub fn make_dfa(
    alphabet: Alphabet,
    states: usize,
    transitions: &[DfaTransition],
    initial: usize,
    accepting: &[usize],
) -> Result<WeightedAutomaton> {
    if states == 0 {
        return Err(Error::domain("a DFA needs at least one state"));
    }
    let k = alphabet.size();
    if initial >= states {
        return Err(Error::domain(format!("initial state {initial} out of range")));
    }
    let mut alpha = DVector::zeros(states);
    alpha[initial] = 1.0;
    let mut beta = DVector::zeros(states);
    for &q in accepting {
        if q >= states {
            return Err(Error::domain(format!("accepting state {q} out of range")));
        }
        beta[q] = 1.0;
    }
    let mut trans = vec![DMatrix::zeros(states, states); k];
    for t in transitions {
        if t.state >= states || t.target >= states {
            return Err(Error::domain(format!("transition {t:?} references a state out of range")));
        }
        if t.symbol >= k {
            return Err(Error::domain(format!("transition {t:?} uses a symbol out of range")));
        }
        let row = trans[t.symbol].row(t.state);
        if row.iter().any(|&v| v != 0.0) {
            return Err(Error::domain(format!("state {} has two transitions on symbol {}", t.state, t.symbol)));
        }
        trans[t.symbol][(t.state, t.target)] = 1.0;
    }
    WeightedAutomaton::new(alphabet, alpha, beta, trans)
}

/// Builds a PFA: `initial` is a distribution over states, `trans[a](i, j)`
/// the probability of emitting `a` while moving from `i` to `j`, and
/// `stopping[i]` the halting probability of `i`.
pub fn make_pfa(
    alphabet: Alphabet,
    initial: &[f64],
    trans: Vec<DMatrix<f64>>,
    stopping: &[f64],
) -> Result<WeightedAutomaton> {
    let a = WeightedAutomaton::new(
        alphabet,
        DVector::from_column_slice(initial),
        DVector::from_column_slice(stopping),
        trans,
    )?;
    validate_pfa(&a)?;
    Ok(a)
}

/// Checks the PFA constraints: nonnegative weights, `Σ α = 1`, and
/// `β(i) + Σ_a Σ_j A_a(i, j) = 1` for every state, all within 1e-9.
pub fn validate_pfa(a: &WeightedAutomaton) -> Result<()> {
    let negative = a.alpha().iter().chain(a.beta().iter()).any(|&v| v < 0.0)
        || a.transitions().iter().any(|m| m.iter().any(|&v| v < 0.0));
    if negative {
        return Err(Error::domain("PFA weights must be nonnegative"));
    }
    let mass: f64 = a.alpha().iter().sum();
    if (mass - 1.0).abs() > PFA_TOLERANCE {
        return Err(Error::domain(format!("initial weights sum to {mass}, expected 1")));
    }
    for i in 0..a.states() {
        let out: f64 = a.transitions().iter().map(|m| m.row(i).sum()).sum();
        let total = a.beta()[i] + out;
        if (total - 1.0).abs() > PFA_TOLERANCE {
            return Err(Error::domain(format!("state {i}: stopping plus outgoing probability is {total}, expected 1")));
        }
    }
    Ok(())
}

/// `ρ(Σ_a A_a)`; the PFA halts with probability one when this is below 1.
pub fn continuation_radius(a: &WeightedAutomaton) -> f64 {
    spectral_radius(&a.transition_sum())
}

fn pick<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64>) -> Option<usize> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = Some(i);
        }
        acc += w;
        if u < acc {
            return Some(i);
        }
    }
    // rounding slack within PFA_TOLERANCE
    last_positive
}

fn walk<R: Rng>(a: &WeightedAutomaton, rng: &mut R, max_len: usize) -> Result<Word> {
    let n = a.states();
    let k = a.alphabet().size();
    let mut state = pick(rng, a.alpha().iter().copied()).ok_or_else(|| Error::domain("PFA has no initial mass"))?;
    let mut out = Vec::new();
    loop {
        // option 0 stops; option 1 + a*n + j emits a and moves to j
        let weights = std::iter::once(a.beta()[state])
            .chain((0..k).flat_map(|s| (0..n).map(move |j| (s, j))).map(|(s, j)| a.transition(s)[(state, j)]));
        match pick(rng, weights) {
            Some(0) => return Ok(Word::from(out)),
            Some(opt) => {
                let opt = opt - 1;
                if out.len() >= max_len {
                    return Err(Error::resource(format!("sampled walk exceeded the maximum length {max_len}")));
                }
                out.push(opt / n);
                state = opt % n;
            }
            None => return Err(Error::domain(format!("state {state} has no outgoing mass"))),
        }
    }
}

/// Draws `m` independent strings by the forward walk. String `i` uses the
/// generator derived from `(seed, i)`, so output is independent of thread
/// scheduling.
pub fn sample_pfa(a: &WeightedAutomaton, m: usize, seed: u64, max_len: usize) -> Result<StringSample> {
    validate_pfa(a)?;
    let rho = continuation_radius(a);
    if rho >= 1.0 {
        return Err(Error::domain(format!(
            "PFA does not halt with probability one (spectral radius of the transition sum is {rho})"
        )));
    }
    let strings = (0..m)
        .into_par_iter()
        .map(|i| walk(a, &mut rng::stream(seed, i as u64), max_len))
        .collect::<Result<Vec<_>>>()?;
    StringSample::new(a.alphabet().clone(), strings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_row_sum;

    fn geometric_pfa() -> WeightedAutomaton {
        make_pfa(Alphabet::letters(1).unwrap(), &[1.0], vec![DMatrix::from_element(1, 1, 0.5)], &[0.5]).unwrap()
    }

    #[test]
    fn geometric_pfa_values() {
        let a = geometric_pfa();
        let mut total = 0.0;
        for t in 0..60 {
            let v = a.evaluate(&Word::from(vec![0; t])).unwrap();
            assert_eq!(v, 0.5f64.powi(t as i32 + 1));
            total += v;
        }
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn immediate_stop() {
        let a = make_pfa(Alphabet::letters(2).unwrap(), &[1.0], vec![DMatrix::zeros(1, 1); 2], &[1.0]).unwrap();
        assert_eq!(a.evaluate(&Word::empty()).unwrap(), 1.0);
        assert_eq!(a.evaluate(&Word::from(vec![1])).unwrap(), 0.0);
        let s = sample_pfa(&a, 50, 3, 10).unwrap();
        assert!(s.strings().iter().all(Word::is_empty));
    }

    #[test]
    fn invalid_pfa_rejected() {
        let al = Alphabet::letters(1).unwrap();
        assert!(make_pfa(al.clone(), &[1.0], vec![DMatrix::from_element(1, 1, 0.6)], &[0.5]).is_err());
        assert!(make_pfa(al.clone(), &[0.9], vec![DMatrix::from_element(1, 1, 0.5)], &[0.5]).is_err());
        assert!(make_pfa(al, &[1.0], vec![DMatrix::from_element(1, 1, 1.5)], &[-0.5]).is_err());
    }

    #[test]
    fn non_halting_pfa_rejected_by_sampler() {
        let a = WeightedAutomaton::from_slices(Alphabet::letters(1).unwrap(), &[1.0], &[0.0], &[&[1.0]]).unwrap();
        assert!(validate_pfa(&a).is_ok());
        assert!(matches!(sample_pfa(&a, 1, 0, 100), Err(Error::Domain(_))));
    }

    #[test]
    fn walk_guard() {
        let a = make_pfa(Alphabet::letters(1).unwrap(), &[1.0], vec![DMatrix::from_element(1, 1, 0.999)], &[0.001])
            .unwrap();
        assert!(matches!(sample_pfa(&a, 200, 1, 5), Err(Error::Resource(_))));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = geometric_pfa();
        let s1 = sample_pfa(&a, 500, 42, 1000).unwrap();
        let s2 = sample_pfa(&a, 500, 42, 1000).unwrap();
        assert_eq!(s1, s2);
        assert_ne!(s1, sample_pfa(&a, 500, 43, 1000).unwrap());
    }

    #[test]
    fn geometric_sampling_statistics() {
        let a = geometric_pfa();
        let m = 100_000;
        let s = sample_pfa(&a, m, 7, 10_000).unwrap();
        // P[ε] = 1/2, binomial sd = sqrt(m/4)
        let eps = s.multiplicity(&Word::empty()) as f64;
        assert!((eps - m as f64 / 2.0).abs() <= 3.0 * (m as f64 / 4.0).sqrt());
        // |x| ~ Geometric, mean 1 and variance 2
        let mean = s.strings().iter().map(|w| w.len() as f64).sum::<f64>() / m as f64;
        assert!((mean - 1.0).abs() <= 3.0 * (2.0 / m as f64).sqrt(), "mean length {mean}");
    }

    #[test]
    fn dfa_construction() {
        let al = Alphabet::letters(1).unwrap();
        let star = make_dfa(al.clone(), 1, &[DfaTransition { state: 0, symbol: 0, target: 0 }], 0, &[0]).unwrap();
        for t in 0..10 {
            assert_eq!(star.evaluate(&Word::from(vec![0; t])).unwrap(), 1.0);
        }
        let none = make_dfa(al.clone(), 1, &[DfaTransition { state: 0, symbol: 0, target: 0 }], 0, &[]).unwrap();
        assert_eq!(none.evaluate(&Word::from(vec![0; 3])).unwrap(), 0.0);
        assert!(make_dfa(al.clone(), 1, &[], 1, &[]).is_err());
        assert!(make_dfa(al.clone(), 1, &[DfaTransition { state: 0, symbol: 0, target: 3 }], 0, &[]).is_err());
        let dup = [DfaTransition { state: 0, symbol: 0, target: 0 }, DfaTransition { state: 0, symbol: 0, target: 0 }];
        assert!(make_dfa(al, 1, &dup, 0, &[]).is_err());
    }

    #[test]
    fn pfa_row_norm_at_most_one() {
        let a = make_pfa(
            Alphabet::letters(2).unwrap(),
            &[0.5, 0.5],
            vec![
                DMatrix::from_row_slice(2, 2, &[0.2, 0.2, 0.1, 0.1]),
                DMatrix::from_row_slice(2, 2, &[0.1, 0.1, 0.3, 0.3]),
            ],
            &[0.4, 0.2],
        )
        .unwrap();
        assert!(a.transitions().iter().all(|m| max_abs_row_sum(m) <= 1.0));
    }
}
