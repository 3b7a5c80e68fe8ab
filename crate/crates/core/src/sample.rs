use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::wfa::{Alphabet, WeightedAutomaton, Word};

/// Ordered multiset of strings `S = (x_1, …, x_m)` with its derived
/// statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct StringSample {
    alphabet: Alphabet,
    strings: Vec<Word>,
    multiplicity: BTreeMap<Word, usize>,
    max_len: usize,
    max_multiplicity: usize,
}

impl StringSample {
    pub fn new(alphabet: Alphabet, strings: Vec<Word>) -> Result<Self> {
        if strings.is_empty() {
            return Err(Error::domain("a sample needs at least one string"));
        }
        let k = alphabet.size();
        if let Some(bad) = strings.iter().find(|w| w.max_symbol().is_some_and(|s| s >= k)) {
            return Err(Error::domain(format!("string {bad} uses a symbol outside the alphabet")));
        }
        let mut multiplicity = BTreeMap::new();
        for w in &strings {
            *multiplicity.entry(w.clone()).or_insert(0usize) += 1;
        }
        let max_len = strings.iter().map(Word::len).max().unwrap_or(0);
        let max_multiplicity = multiplicity.values().copied().max().unwrap_or(0);
        Ok(StringSample { alphabet, strings, multiplicity, max_len, max_multiplicity })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn strings(&self) -> &[Word] {
        &self.strings
    }

    /// Sample size `m`.
    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    /// `s_x` for every distinct string, in structural order.
    pub fn multiplicities(&self) -> &BTreeMap<Word, usize> {
        &self.multiplicity
    }

    pub fn multiplicity(&self, x: &Word) -> usize {
        self.multiplicity.get(x).copied().unwrap_or(0)
    }

    /// `L_S`.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// `C_S`.
    pub fn max_multiplicity(&self) -> usize {
        self.max_multiplicity
    }
}

/// Labeled sample `((x_1, z_1), …, (x_m, z_m))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    strings: StringSample,
    labels: Vec<f64>,
}

impl LabeledSample {
    pub fn new(alphabet: Alphabet, pairs: Vec<(Word, f64)>) -> Result<Self> {
        if pairs.iter().any(|(_, z)| !z.is_finite()) {
            return Err(Error::domain("labels must be finite"));
        }
        let (words, labels): (Vec<Word>, Vec<f64>) = pairs.into_iter().unzip();
        Ok(LabeledSample { strings: StringSample::new(alphabet, words)?, labels })
    }

    /// Projection onto the input strings.
    pub fn strings(&self) -> &StringSample {
        &self.strings
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Empirical risk `(1/m) Σ ℓ(f_A(x_i), z_i)`.
    pub fn empirical_loss<L>(&self, a: &WeightedAutomaton, loss: L) -> Result<f64>
    where
        L: Fn(f64, f64) -> f64,
    {
        let mut total = 0.0;
        for (x, &z) in self.strings.strings().iter().zip(&self.labels) {
            total += loss(a.evaluate(x)?, z);
        }
        Ok(total / self.labels.len() as f64)
    }
}

/// Absolute loss `|y − z|`, 1-Lipschitz in its first argument.
pub fn absolute_loss(y: f64, z: f64) -> f64 {
    (y - z).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::geometric;

    #[test]
    fn derived_statistics() {
        let al = Alphabet::letters(2).unwrap();
        let ws = ["a", "b", "a", "a a"].iter().map(|s| al.parse_word(s).unwrap()).collect();
        let s = StringSample::new(al, ws).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.max_len(), 2);
        assert_eq!(s.max_multiplicity(), 2);
        assert_eq!(s.multiplicities().values().sum::<usize>(), 4);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(StringSample::new(Alphabet::letters(1).unwrap(), vec![]).is_err());
    }

    #[test]
    fn labeled_absolute_loss() {
        let a = geometric(0.5);
        let pairs = vec![(Word::empty(), 1.0), (Word::from(vec![0]), 0.0)];
        let s = LabeledSample::new(a.alphabet().clone(), pairs).unwrap();
        assert_eq!(s.empirical_loss(&a, absolute_loss).unwrap(), 0.25);
        assert!(LabeledSample::new(a.alphabet().clone(), vec![(Word::empty(), f64::NAN)]).is_err());
    }
}
