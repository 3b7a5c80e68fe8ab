//! Reference automata and random generators shared by tests, the CLI and
//! the experiment harness.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::linalg::kron_square_sum;
use crate::linalg::spectral_radius;
use crate::wfa::{Alphabet, WeightedAutomaton};

/// The three-state automaton over `{a, b}` with `f(ab) = 52`.
pub fn three_state() -> WeightedAutomaton {
    WeightedAutomaton::from_slices(
        Alphabet::letters(2).unwrap(),
        &[1.0, 3.0, 4.0],
        &[2.0, 1.0, 1.0],
        &[&[0.0, 0.0, 3.0, 0.0, 0.0, 3.0, 1.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 4.0]],
    )
    .unwrap()
}

/// One state, one symbol: `α = β = 1`, `A_a = c`, so `f(aᵗ) = cᵗ`.
pub fn geometric(c: f64) -> WeightedAutomaton {
    WeightedAutomaton::from_slices(Alphabet::letters(1).unwrap(), &[1.0], &[1.0], &[&[c]]).unwrap()
}

/// Random automaton with entries uniform in `[-1, 1]`.
pub fn random_automaton<R: Rng>(rng: &mut R, n: usize, k: usize) -> WeightedAutomaton {
    let mut u = || rng.random_range(-1.0..=1.0);
    let alpha = DVector::from_fn(n, |_, _| u());
    let beta = DVector::from_fn(n, |_, _| u());
    let trans = (0..k).map(|_| DMatrix::from_fn(n, n, |_, _| u())).collect();
    WeightedAutomaton::new(Alphabet::letters(k).unwrap(), alpha, beta, trans).unwrap()
}

/// Random automaton rescaled so that `ρ(Σ_a A_a ⊗ A_a)` equals `target`.
pub fn random_contractive<R: Rng>(rng: &mut R, n: usize, k: usize, target: f64) -> WeightedAutomaton {
    loop {
        let a = random_automaton(rng, n, k);
        let rho = spectral_radius(&kron_square_sum(&a));
        if rho < 1e-6 {
            continue;
        }
        // ρ scales quadratically with the transition weights
        let c = (target / rho).sqrt();
        let trans = a.transitions().iter().map(|m| m * c).collect();
        return WeightedAutomaton::new(a.alphabet().clone(), a.alpha().clone(), a.beta().clone(), trans).unwrap();
    }
}
