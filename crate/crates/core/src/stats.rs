//! Sample statistics that drive the data-dependent bounds: the maximum
//! length `L_S`, the maximum multiplicity `C_S`, and the split statistic
//! `W_S = min over splits of max(U_S, V_S)`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::sample::StringSample;
use crate::wfa::Word;

/// Default number of local-search restarts for [`ws_heuristic`].
pub const DEFAULT_RESTARTS: usize = 16;
/// Default ceiling on `Π(|x_i| + 1)` for [`ws_exhaustive`].
pub const DEFAULT_SPLIT_GUARD: u128 = 50_000_000;

/// `L_S = max_i |x_i|`, by direct scan.
pub fn length_stat(s: &StringSample) -> usize {
    s.strings().iter().map(Word::len).max().unwrap_or(0)
}

/// `C_S = max_x s_x`, by direct count.
pub fn collision_stat(s: &StringSample) -> usize {
    let mut counts: HashMap<&Word, usize> = HashMap::new();
    let mut best = 0;
    for w in s.strings() {
        let c = counts.entry(w).or_insert(0);
        *c += 1;
        best = best.max(*c);
    }
    best
}

/// One decomposition `x_i = u_i v_i` per sample string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitAssignment {
    /// Cut position for each string: `u_i = x_i[..cut]`.
    pub cuts: Vec<usize>,
    pub pairs: Vec<(Word, Word)>,
    /// Largest prefix multiplicity `U_S`.
    pub prefix_max: usize,
    /// Largest suffix multiplicity `V_S`.
    pub suffix_max: usize,
}

impl SplitAssignment {
    pub fn from_cuts(s: &StringSample, cuts: &[usize]) -> Result<Self> {
        if cuts.len() != s.len() {
            return Err(Error::domain(format!("{} cuts for a sample of {} strings", cuts.len(), s.len())));
        }
        let mut pairs = Vec::with_capacity(cuts.len());
        for (x, &c) in s.strings().iter().zip(cuts) {
            if c > x.len() {
                return Err(Error::domain(format!("cut {c} beyond string length {}", x.len())));
            }
            pairs.push(x.split_at(c));
        }
        let max_count = |words: Vec<&Word>| {
            let mut h: HashMap<&Word, usize> = HashMap::new();
            words
                .into_iter()
                .map(|w| {
                    let e = h.entry(w).or_insert(0);
                    *e += 1;
                    *e
                })
                .max()
                .unwrap_or(0)
        };
        let prefix_max = max_count(pairs.iter().map(|p| &p.0).collect());
        let suffix_max = max_count(pairs.iter().map(|p| &p.1).collect());
        Ok(SplitAssignment { cuts: cuts.to_vec(), pairs, prefix_max, suffix_max })
    }

    /// Every string split at 0: all prefixes empty.
    pub fn all_suffix(s: &StringSample) -> Self {
        Self::from_cuts(s, &vec![0; s.len()]).expect("cuts at 0 are always valid")
    }

    /// Every string split at its end: all suffixes empty.
    pub fn all_prefix(s: &StringSample) -> Self {
        let cuts: Vec<usize> = s.strings().iter().map(Word::len).collect();
        Self::from_cuts(s, &cuts).expect("cuts at the end are always valid")
    }

    /// `max(U_S, V_S)`.
    pub fn value(&self) -> usize {
        self.prefix_max.max(self.suffix_max)
    }

    /// Whether `u_i v_i = x_i` for every string of `s`.
    pub fn is_split_of(&self, s: &StringSample) -> bool {
        self.pairs.len() == s.len() && self.pairs.iter().zip(s.strings()).all(|((u, v), x)| &u.concat(v) == x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    Exhaustive,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WsResult {
    pub value: usize,
    pub witness: SplitAssignment,
    pub exactness: Exactness,
}

/// Interned prefixes and suffixes: `prefix_ids[i][c]` is the id of
/// `x_i[..c]`, `suffix_ids[i][c]` the id of `x_i[c..]`.
struct SplitTable {
    prefix_ids: Vec<Vec<usize>>,
    suffix_ids: Vec<Vec<usize>>,
    prefix_count: usize,
    suffix_count: usize,
}

impl SplitTable {
    fn new(s: &StringSample) -> Self {
        let mut pre: HashMap<&[usize], usize> = HashMap::new();
        let mut suf: HashMap<&[usize], usize> = HashMap::new();
        let mut prefix_ids = Vec::with_capacity(s.len());
        let mut suffix_ids = Vec::with_capacity(s.len());
        for x in s.strings() {
            let sym = x.symbols();
            let mut p = Vec::with_capacity(sym.len() + 1);
            let mut q = Vec::with_capacity(sym.len() + 1);
            for c in 0..=sym.len() {
                let next = pre.len();
                p.push(*pre.entry(&sym[..c]).or_insert(next));
                let next = suf.len();
                q.push(*suf.entry(&sym[c..]).or_insert(next));
            }
            prefix_ids.push(p);
            suffix_ids.push(q);
        }
        SplitTable { prefix_ids, suffix_ids, prefix_count: pre.len(), suffix_count: suf.len() }
    }
}

/// Multiset counter that tracks its maximum count and how many keys attain it.
#[derive(Clone)]
struct MaxCounter {
    counts: Vec<usize>,
    freq: Vec<usize>,
    max: usize,
}

impl MaxCounter {
    fn new(keys: usize, capacity: usize) -> Self {
        MaxCounter { counts: vec![0; keys], freq: vec![0; capacity + 2], max: 0 }
    }

    fn inc(&mut self, id: usize) {
        let c = self.counts[id];
        if c > 0 {
            self.freq[c] -= 1;
        }
        self.counts[id] = c + 1;
        self.freq[c + 1] += 1;
        if c + 1 > self.max {
            self.max = c + 1;
        }
    }

    fn dec(&mut self, id: usize) {
        let c = self.counts[id];
        self.freq[c] -= 1;
        self.counts[id] = c - 1;
        if c > 1 {
            self.freq[c - 1] += 1;
        }
        if c == self.max && self.freq[c] == 0 {
            self.max = c - 1;
        }
    }

    fn at_max(&self) -> usize {
        self.freq[self.max]
    }
}

struct SplitState<'a> {
    table: &'a SplitTable,
    cuts: Vec<usize>,
    prefixes: MaxCounter,
    suffixes: MaxCounter,
}

impl<'a> SplitState<'a> {
    fn new(table: &'a SplitTable, cuts: Vec<usize>) -> Self {
        let m = cuts.len();
        let mut prefixes = MaxCounter::new(table.prefix_count, m);
        let mut suffixes = MaxCounter::new(table.suffix_count, m);
        for (i, &c) in cuts.iter().enumerate() {
            prefixes.inc(table.prefix_ids[i][c]);
            suffixes.inc(table.suffix_ids[i][c]);
        }
        SplitState { table, cuts, prefixes, suffixes }
    }

    fn set(&mut self, i: usize, c: usize) {
        let old = self.cuts[i];
        if old == c {
            return;
        }
        self.prefixes.dec(self.table.prefix_ids[i][old]);
        self.suffixes.dec(self.table.suffix_ids[i][old]);
        self.prefixes.inc(self.table.prefix_ids[i][c]);
        self.suffixes.inc(self.table.suffix_ids[i][c]);
        self.cuts[i] = c;
    }

    fn value(&self) -> usize {
        self.prefixes.max.max(self.suffixes.max)
    }

    /// Lexicographic potential: the objective, then how many prefixes and
    /// suffixes attain it. Strictly decreasing it breaks plateaus of the
    /// max alone.
    fn potential(&self) -> (usize, usize) {
        let v = self.value();
        let mut ties = 0;
        if self.prefixes.max == v {
            ties += self.prefixes.at_max();
        }
        if self.suffixes.max == v {
            ties += self.suffixes.at_max();
        }
        (v, ties)
    }
}

/// Lower bound used to stop enumeration early: the copies of any string
/// `x` spread over at most `|x| + 1` cuts, so some prefix is shared by
/// `⌈s_x / (|x| + 1)⌉` of them.
fn pigeonhole_bound(s: &StringSample) -> usize {
    s.multiplicities().iter().map(|(x, &c)| c.div_ceil(x.len() + 1)).max().unwrap_or(1).max(1)
}

/// Exact `W_S` by enumerating all `Π(|x_i| + 1)` splits. Splits are visited
/// as a mixed-radix counter over cut positions with string 0 least
/// significant; the witness is the first split attaining the minimum.
pub fn ws_exhaustive(s: &StringSample, guard: u128) -> Result<WsResult> {
    let total = s.strings().iter().fold(1u128, |acc, x| acc.saturating_mul(x.len() as u128 + 1));
    if total > guard {
        return Err(Error::resource(format!("{total} splits exceed guard {guard}; use the heuristic search instead")));
    }
    let table = SplitTable::new(s);
    let lengths: Vec<usize> = s.strings().iter().map(Word::len).collect();
    let floor = pigeonhole_bound(s);
    let mut state = SplitState::new(&table, vec![0; s.len()]);
    let mut best = state.value();
    let mut best_cuts = state.cuts.clone();
    'outer: while best > floor {
        let mut pos = 0;
        loop {
            if pos == lengths.len() {
                break 'outer;
            }
            if state.cuts[pos] < lengths[pos] {
                let c = state.cuts[pos] + 1;
                state.set(pos, c);
                break;
            }
            state.set(pos, 0);
            pos += 1;
        }
        let v = state.value();
        if v < best {
            best = v;
            best_cuts.clone_from(&state.cuts);
        }
    }
    let witness = SplitAssignment::from_cuts(s, &best_cuts)?;
    debug_assert_eq!(witness.value(), best);
    Ok(WsResult { value: best, witness, exactness: Exactness::Exhaustive })
}

fn local_search<R: Rng>(table: &SplitTable, lengths: &[usize], rng: &mut R) -> (usize, Vec<usize>) {
    let cuts: Vec<usize> = lengths.iter().map(|&l| rng.random_range(0..=l)).collect();
    let mut state = SplitState::new(table, cuts);
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    loop {
        let mut improved = false;
        order.shuffle(rng);
        for &i in &order {
            let current = state.cuts[i];
            let mut best = (state.potential(), current);
            for c in 0..=lengths[i] {
                if c == current {
                    continue;
                }
                state.set(i, c);
                let p = state.potential();
                if p < best.0 {
                    best = (p, c);
                }
            }
            state.set(i, best.1);
            if best.1 != current {
                improved = true;
            }
        }
        if !improved {
            return (state.value(), state.cuts);
        }
    }
}

/// Upper bound on `W_S` by randomized local search: each restart starts
/// from uniform random cuts and repeatedly moves a single string to the cut
/// that most reduces the objective (ties in the maximum broken by how many
/// prefixes or suffixes attain it), visiting strings in random order until
/// no move improves. Restart `r` uses the generator derived from
/// `(seed, r)`; the best restart wins, lowest index first.
pub fn ws_heuristic(s: &StringSample, seed: u64, restarts: usize) -> Result<WsResult> {
    let table = SplitTable::new(s);
    let lengths: Vec<usize> = s.strings().iter().map(Word::len).collect();
    let runs: Vec<(usize, Vec<usize>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| local_search(&table, &lengths, &mut rng::stream(seed, r as u64)))
        .collect();
    let (value, cuts) = runs.into_iter().reduce(|a, b| if b.0 < a.0 { b } else { a }).expect("at least one restart");
    let witness = SplitAssignment::from_cuts(s, &cuts)?;
    Ok(WsResult { value, witness, exactness: Exactness::Heuristic })
}

/// Exhaustive search when `Π(|x_i| + 1) ≤ guard`, heuristic otherwise.
pub fn ws_auto(s: &StringSample, guard: u128, seed: u64, restarts: usize) -> Result<WsResult> {
    match ws_exhaustive(s, guard) {
        Err(Error::Resource(_)) => ws_heuristic(s, seed, restarts),
        other => other,
    }
}
