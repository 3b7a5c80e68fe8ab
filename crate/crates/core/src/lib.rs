//! Complexity measures, empirical Rademacher complexities and
//! generalization bounds for classes of weighted finite automata.
//!
//! The crate covers three ways of measuring a rational function
//! `f: Σ* → ℝ`:
//!
//! * the weights of a WFA computing it (`‖A‖_{p,q}`, see [`norms`]),
//! * the ℓp norm of `f` itself ([`norms`]),
//! * the Schatten norm of its Hankel operator ([`hankel`]),
//!
//! Sample statistics live in [`stats`]; the estimators and bounds built on
//! them in [`rademacher`] and [`bounds`].

// `!(x > 0.0)` is how NaN inputs are rejected throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod hankel;
pub mod io;
pub mod linalg;
pub mod norms;
pub mod pfa;
pub mod rademacher;
pub mod rng;
pub mod sample;
pub mod stats;
pub mod wfa;

pub use error::{Error, Result};
pub use sample::{LabeledSample, StringSample};
pub use wfa::{Alphabet, WeightedAutomaton, Word};
