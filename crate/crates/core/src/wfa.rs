//! Weighted finite automata over the reals.
//!
//! An automaton `⟨α, β, {A_a}⟩` with `n` states computes
//! `f(a_1…a_t) = αᵀ A_{a_1} ⋯ A_{a_t} β`. The set of automata with a fixed
//! alphabet and state count is treated as a real vector space with
//! parameter-wise addition and scaling; [`WeightedAutomaton::add`] is *not*
//! the sum of the computed functions.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Token reserved for the empty string in sample files.
pub const EPSILON_TOKEN: &str = "<eps>";

/// Condition-number ceiling accepted by [`WeightedAutomaton::conjugate`].
pub const MAX_CONJUGATION_CONDITION: f64 = 1e12;

/// Finite ordered alphabet. Symbols are multi-character tokens; strings are
/// stored as index sequences into this list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<S: AsRef<str>>(tokens: &[S]) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::domain("alphabet must contain at least one symbol"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        let mut owned = Vec::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            let t = t.as_ref();
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::domain(format!("invalid symbol token {t:?}")));
            }
            if t == EPSILON_TOKEN {
                return Err(Error::domain(format!("{EPSILON_TOKEN} is reserved for the empty string")));
            }
            if index.insert(t.to_string(), i).is_some() {
                return Err(Error::domain(format!("duplicate symbol token {t:?}")));
            }
            owned.push(t.to_string());
        }
        Ok(Alphabet { tokens: owned, index })
    }

    /// Alphabet `{a, b, c, …}` of `k` single-letter symbols (k ≤ 26).
    pub fn letters(k: usize) -> Result<Self> {
        if k == 0 || k > 26 {
            return Err(Error::domain("letters alphabet needs 1 ≤ k ≤ 26"));
        }
        let tokens: Vec<String> = (0..k).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        Alphabet::new(&tokens)
    }

    /// Number of symbols `k`.
    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, i: usize) -> Option<&str> {
        self.tokens.get(i).map(String::as_str)
    }

    pub fn symbol(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Parses a whitespace-separated string of tokens. `<eps>` alone, or an
    /// empty input, is the empty string.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() || text == EPSILON_TOKEN {
            return Ok(Word::empty());
        }
        text.split_whitespace()
            .map(|tok| self.symbol(tok).ok_or_else(|| Error::domain(format!("symbol {tok:?} not in alphabet"))))
            .collect::<Result<Vec<_>>>()
            .map(Word::from)
    }

    /// Inverse of [`Alphabet::parse_word`].
    pub fn format_word(&self, w: &Word) -> String {
        if w.is_empty() {
            return EPSILON_TOKEN.to_string();
        }
        w.symbols().iter().map(|&s| self.tokens.get(s).map(String::as_str).unwrap_or("?")).collect::<Vec<_>>().join(" ")
    }
}

/// A finite string, stored as symbol indices. Equality and ordering are
/// structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, serde::Serialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Splits at `cut` into (prefix, suffix).
    pub fn split_at(&self, cut: usize) -> (Word, Word) {
        let (u, v) = self.0.split_at(cut);
        (Word(u.to_vec()), Word(v.to_vec()))
    }

    pub fn max_symbol(&self) -> Option<usize> {
        self.0.iter().copied().max()
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str(EPSILON_TOKEN);
        }
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Number of strings of length ≤ `max_len` over `k` symbols, saturating.
pub fn count_words(k: usize, max_len: usize) -> u128 {
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=max_len {
        total = total.saturating_add(level);
        level = level.saturating_mul(k as u128);
    }
    total
}

/// All strings of length ≤ `max_len` in length-then-lexicographic order.
pub fn enumerate_words(k: usize, max_len: usize, guard: u128) -> Result<Vec<Word>> {
    let count = count_words(k, max_len);
    if count > guard {
        return Err(Error::resource(format!("enumerating {count} strings (k={k}, L={max_len}) exceeds guard {guard}")));
    }
    let mut out = Vec::with_capacity(count as usize);
    out.push(Word::empty());
    let mut start = 0;
    for _ in 0..max_len {
        let end = out.len();
        for i in start..end {
            for a in 0..k {
                let mut w = out[i].0.clone();
                w.push(a);
                out.push(Word(w));
            }
        }
        start = end;
    }
    Ok(out)
}

/// Weighted finite automaton `⟨α, β, {A_a}⟩` over the reals.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAutomaton {
    alphabet: Alphabet,
    alpha: DVector<f64>,
    beta: DVector<f64>,
    trans: Vec<DMatrix<f64>>,
}

impl WeightedAutomaton {
    /// Builds an automaton; `trans[a]` is the matrix of symbol index `a`.
    pub fn new(alphabet: Alphabet, alpha: DVector<f64>, beta: DVector<f64>, trans: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = alpha.len();
        if n == 0 {
            return Err(Error::domain("automaton needs at least one state"));
        }
        if beta.len() != n {
            return Err(Error::domain(format!("beta has length {} but n = {n}", beta.len())));
        }
        if trans.len() != alphabet.size() {
            return Err(Error::domain(format!(
                "{} transition matrices for an alphabet of {} symbols",
                trans.len(),
                alphabet.size()
            )));
        }
        for (a, m) in trans.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::domain(format!(
                    "matrix for symbol {} is {}x{}, expected {n}x{n}",
                    alphabet.token(a).unwrap_or("?"),
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let finite = alpha.iter().chain(beta.iter()).all(|v| v.is_finite())
            && trans.iter().all(|m| m.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::domain("automaton weights must be finite"));
        }
        Ok(WeightedAutomaton { alphabet, alpha, beta, trans })
    }

    /// Convenience constructor from plain slices; matrices are row-major.
    pub fn from_slices(alphabet: Alphabet, alpha: &[f64], beta: &[f64], trans: &[&[f64]]) -> Result<Self> {
        let n = alpha.len();
        let mats = trans
            .iter()
            .map(|m| {
                if m.len() != n * n {
                    Err(Error::domain(format!("transition matrix needs {} entries, got {}", n * n, m.len())))
                } else {
                    Ok(DMatrix::from_row_slice(n, n, m))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        WeightedAutomaton::new(alphabet, DVector::from_column_slice(alpha), DVector::from_column_slice(beta), mats)
    }

    /// The all-zero automaton with `n` states.
    pub fn zero(alphabet: Alphabet, n: usize) -> Result<Self> {
        let k = alphabet.size();
        WeightedAutomaton::new(alphabet, DVector::zeros(n), DVector::zeros(n), vec![DMatrix::zeros(n, n); k])
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Number of states.
    pub fn states(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.trans
    }

    pub fn transition(&self, symbol: usize) -> &DMatrix<f64> {
        &self.trans[symbol]
    }

    /// Number of real parameters `n(kn + 2)`.
    pub fn parameter_count(&self) -> usize {
        let n = self.states();
        n * (self.alphabet.size() * n + 2)
    }

    pub(crate) fn check_word(&self, x: &Word) -> Result<()> {
        match x.max_symbol() {
            Some(s) if s >= self.alphabet.size() => {
                Err(Error::domain(format!("symbol index {s} not in alphabet of size {}", self.alphabet.size())))
            }
            _ => Ok(()),
        }
    }

    /// Forward row vector `αᵀ A_x`.
    pub fn forward(&self, x: &Word) -> Result<DVector<f64>> {
        self.check_word(x)?;
        Ok(self.forward_unchecked(x.symbols()))
    }

    pub(crate) fn forward_unchecked(&self, symbols: &[usize]) -> DVector<f64> {
        let mut v = self.alpha.clone();
        for &a in symbols {
            v = self.trans[a].tr_mul(&v);
        }
        v
    }

    /// Evaluates `f_A(x) = αᵀ A_{x_1} ⋯ A_{x_t} β` as a left-to-right chain
    /// of vector-matrix products.
    pub fn evaluate(&self, x: &Word) -> Result<f64> {
        self.check_word(x)?;
        Ok(self.evaluate_unchecked(x.symbols()))
    }

    pub(crate) fn evaluate_unchecked(&self, symbols: &[usize]) -> f64 {
        self.forward_unchecked(symbols).dot(&self.beta)
    }

    /// Evaluates `f_A(x)` by summing the weights of all `n^{|x|+1}` state
    /// paths. Exponential; intended as an oracle for [`Self::evaluate`].
    pub fn evaluate_path_sum(&self, x: &Word, max_paths: u128) -> Result<f64> {
        self.check_word(x)?;
        let n = self.states();
        let t = x.len();
        let paths = (n as u128).checked_pow(t as u32 + 1).unwrap_or(u128::MAX);
        if paths > max_paths {
            return Err(Error::resource(format!("{paths} paths for |x| = {t}, n = {n} exceeds guard {max_paths}")));
        }
        let syms = x.symbols();
        let mut states = vec![0usize; t + 1];
        let mut total = 0.0;
        loop {
            let mut w = self.alpha[states[0]];
            for s in 0..t {
                w *= self.trans[syms[s]][(states[s], states[s + 1])];
            }
            total += w * self.beta[states[t]];
            // odometer increment over [n]^{t+1}
            let mut pos = 0;
            loop {
                if pos > t {
                    return Ok(total);
                }
                states[pos] += 1;
                if states[pos] < n {
                    break;
                }
                states[pos] = 0;
                pos += 1;
            }
        }
    }

    fn check_compatible(&self, other: &WeightedAutomaton) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::domain("automata have different alphabets"));
        }
        if self.states() != other.states() {
            return Err(Error::domain(format!("state counts differ ({} vs {})", self.states(), other.states())));
        }
        Ok(())
    }

    /// Parameter-wise sum `⟨α+α', β+β', {A_a+A'_a}⟩`.
    pub fn add(&self, other: &WeightedAutomaton) -> Result<WeightedAutomaton> {
        self.check_compatible(other)?;
        WeightedAutomaton::new(
            self.alphabet.clone(),
            &self.alpha + &other.alpha,
            &self.beta + &other.beta,
            self.trans.iter().zip(&other.trans).map(|(a, b)| a + b).collect(),
        )
    }

    /// Parameter-wise scaling `⟨cα, cβ, {cA_a}⟩`. Note `f_{cA}(x) = c^{|x|+2} f_A(x)`.
    pub fn scale(&self, c: f64) -> Result<WeightedAutomaton> {
        WeightedAutomaton::new(
            self.alphabet.clone(),
            &self.alpha * c,
            &self.beta * c,
            self.trans.iter().map(|m| m * c).collect(),
        )
    }

    /// Change of basis `⟨Qᵀα, Q⁻¹β, {Q⁻¹A_aQ}⟩`, which computes the same
    /// function. Rejects `Q` with 2-norm condition number above 1e12.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> Result<WeightedAutomaton> {
        let n = self.states();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::domain(format!("conjugating matrix must be {n}x{n}")));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("conjugating matrix must be finite"));
        }
        let sv = q.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if !(smin > 0.0) || smax / smin > MAX_CONJUGATION_CONDITION {
            return Err(Error::numeric(format!(
                "conjugating matrix is ill-conditioned (condition number {:e})",
                smax / smin
            )));
        }
        let qinv = q.clone().try_inverse().ok_or_else(|| Error::numeric("conjugating matrix is singular"))?;
        WeightedAutomaton::new(
            self.alphabet.clone(),
            q.tr_mul(&self.alpha),
            &qinv * &self.beta,
            self.trans.iter().map(|m| &qinv * m * q).collect(),
        )
    }

    /// `Σ_a A_a`.
    pub fn transition_sum(&self) -> DMatrix<f64> {
        let n = self.states();
        self.trans.iter().fold(DMatrix::zeros(n, n), |acc, m| acc + m)
    }
}
