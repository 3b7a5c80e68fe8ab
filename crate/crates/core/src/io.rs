//! File formats and number formatting.
//!
//! A WFA file is JSON:
//!
//! ```json
//! {"alphabet": ["a", "b"], "n": 1, "alpha": [1.0], "beta": [1.0],
//!  "trans": {"a": [0.5], "b": [0.25]}}
//! ```
//!
//! with each matrix stored row-major. A sample file holds one string per
//! line, symbols separated by whitespace; a line reading `<eps>` is the
//! empty string and blank lines are skipped.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::StringSample;
use crate::wfa::{Alphabet, WeightedAutomaton, Word, EPSILON_TOKEN};

/// Significant digits of every printed number.
pub const SIGNIFICANT_DIGITS: usize = 17;

/// Formats with 17 significant digits, dropping trailing zeros; plain
/// notation for exponents in `[-5, 17)`, scientific otherwise.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };
    if (-5..17).contains(&exp) {
        let body = if exp < 0 {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        } else {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                format!("{}{}", digits, "0".repeat(int_len - digits.len()))
            } else {
                format!("{}.{}", &digits[..int_len], &digits[int_len..])
            }
        };
        format!("{sign}{body}")
    } else {
        let frac = &digits[1..];
        if frac.is_empty() {
            format!("{sign}{}e{exp}", &digits[..1])
        } else {
            format!("{sign}{}.{}e{exp}", &digits[..1], frac)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WfaFile {
    alphabet: Vec<String>,
    n: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    trans: BTreeMap<String, Vec<f64>>,
}

/// Parses the JSON WFA format.
pub fn parse_wfa(text: &str) -> Result<WeightedAutomaton> {
    let file: WfaFile = serde_json::from_str(text).map_err(|e| Error::parse(format!("WFA file: {e}")))?;
    let alphabet = Alphabet::new(&file.alphabet)?;
    let n = file.n;
    if file.alpha.len() != n || file.beta.len() != n {
        return Err(Error::parse(format!("alpha and beta must have n = {n} entries")));
    }
    if file.trans.len() != alphabet.size() {
        return Err(Error::parse(format!(
            "trans has {} entries for an alphabet of {} symbols",
            file.trans.len(),
            alphabet.size()
        )));
    }
    let mut trans = Vec::with_capacity(alphabet.size());
    for tok in alphabet.tokens() {
        let entries =
            file.trans.get(tok).ok_or_else(|| Error::parse(format!("trans has no matrix for symbol {tok:?}")))?;
        if entries.len() != n * n {
            return Err(Error::parse(format!("matrix for {tok:?} has {} entries, expected {}", entries.len(), n * n)));
        }
        trans.push(DMatrix::from_row_slice(n, n, entries));
    }
    WeightedAutomaton::new(alphabet, DVector::from_vec(file.alpha), DVector::from_vec(file.beta), trans)
}

/// Serializes to the JSON WFA format; floats use the shortest
/// representation that parses back to the same bits.
pub fn wfa_to_json(a: &WeightedAutomaton) -> String {
    let n = a.states();
    let file = WfaFile {
        alphabet: a.alphabet().tokens().to_vec(),
        n,
        alpha: a.alpha().iter().copied().collect(),
        beta: a.beta().iter().copied().collect(),
        trans: a
            .alphabet()
            .tokens()
            .iter()
            .zip(a.transitions())
            .map(|(tok, m)| (tok.clone(), (0..n).flat_map(|i| (0..n).map(move |j| m[(i, j)])).collect()))
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("finite floats serialize")
}

pub fn read_wfa(path: &Path) -> Result<WeightedAutomaton> {
    parse_wfa(&fs::read_to_string(path)?)
}

pub fn write_wfa(path: &Path, a: &WeightedAutomaton) -> Result<()> {
    fs::write(path, wfa_to_json(a) + "\n")?;
    Ok(())
}

/// Parses a sample over a known alphabet.
pub fn parse_sample(text: &str, alphabet: &Alphabet) -> Result<StringSample> {
    let mut words = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        words.push(alphabet.parse_word(line).map_err(|e| Error::parse(format!("line {}: {e}", i + 1)))?);
    }
    if words.is_empty() {
        return Err(Error::parse("sample file contains no strings"));
    }
    StringSample::new(alphabet.clone(), words)
}

/// Alphabet of the tokens of a sample file, in order of first appearance.
pub fn infer_alphabet(text: &str) -> Result<Alphabet> {
    let mut tokens: Vec<&str> = Vec::new();
    for tok in text.split_whitespace() {
        if tok != EPSILON_TOKEN && !tokens.contains(&tok) {
            tokens.push(tok);
        }
    }
    if tokens.is_empty() {
        // a sample of empty strings only; any alphabet will do
        tokens.push("a");
    }
    Alphabet::new(&tokens)
}

/// Reads a sample; without an alphabet it is inferred from the file.
pub fn read_sample(path: &Path, alphabet: Option<&Alphabet>) -> Result<StringSample> {
    let text = fs::read_to_string(path)?;
    match alphabet {
        Some(al) => parse_sample(&text, al),
        None => parse_sample(&text, &infer_alphabet(&text)?),
    }
}

pub fn sample_to_text(s: &StringSample) -> String {
    let mut out = String::new();
    for w in s.strings() {
        out.push_str(&s.alphabet().format_word(w));
        out.push('\n');
    }
    out
}

pub fn write_sample(path: &Path, s: &StringSample) -> Result<()> {
    fs::write(path, sample_to_text(s))?;
    Ok(())
}

/// Formats a word with a given alphabet; helper for reports.
pub fn word_text(alphabet: &Alphabet, w: &Word) -> String {
    alphabet.format_word(w)
}
