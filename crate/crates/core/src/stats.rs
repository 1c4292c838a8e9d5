//! Structured test statistics.
//!
//! A statistic decomposes into m integer-valued per-entry scoring functions
//! whose dataset-level sums are combined by a real-valued aggregator. The
//! built-ins cover the two standard cases: difference in accuracy (m = 1)
//! and difference in F1 score (m = 4). Anything matching
//! [`DecomposableStatistic`] plugs into the same test runners.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::{EffectTuple, LocalEffectPair};

/// Whether the aggregator reports the signed effect or its magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tails {
    One,
    Two,
}

/// Per-entry evaluation counts for one system.
///
/// `correct`/`length` drive accuracy statistics; `true_positive`/
/// `incorrect` drive F1. Producers fill in whichever fields their metric
/// needs; the rest default to zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRecord {
    #[serde(default)]
    pub correct: u32,
    pub length: u32,
    #[serde(default)]
    pub true_positive: u32,
    #[serde(default)]
    pub incorrect: u32,
}

impl EntryRecord {
    /// Accuracy-style entry: `correct` out of `length` predictions.
    pub fn accuracy(correct: u32, length: u32) -> Result<Self> {
        EntryRecord {
            correct,
            length,
            true_positive: 0,
            incorrect: 0,
        }
        .validated(0)
    }

    /// F1-style entry: true-positive and incorrect prediction counts.
    pub fn f1(true_positive: u32, incorrect: u32, length: u32) -> Result<Self> {
        EntryRecord {
            correct: 0,
            length,
            true_positive,
            incorrect,
        }
        .validated(0)
    }

    /// Checks the count invariants, reporting `index` on failure.
    pub fn validated(self, index: usize) -> Result<Self> {
        if self.length == 0 {
            return Err(Error::ZeroLength { index });
        }
        if self.correct > self.length {
            return Err(Error::CorrectExceedsLength {
                index,
                correct: self.correct,
                length: self.length,
            });
        }
        if self.true_positive > self.length {
            return Err(Error::TruePositiveExceedsLength {
                index,
                true_positive: self.true_positive,
                length: self.length,
            });
        }
        Ok(self)
    }
}

/// Aligned per-entry records for two systems evaluated on the same data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairedDataset {
    u: Vec<EntryRecord>,
    v: Vec<EntryRecord>,
}

impl PairedDataset {
    /// Validates alignment: equal non-zero entry counts and matching
    /// per-index lengths (both systems predicted the same items).
    pub fn new(u: Vec<EntryRecord>, v: Vec<EntryRecord>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::EntryCountMismatch {
                u_count: u.len(),
                v_count: v.len(),
            });
        }
        if u.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (index, (a, b)) in u.iter().zip(&v).enumerate() {
            a.validated(index)?;
            b.validated(index)?;
            if a.length != b.length {
                return Err(Error::LengthMismatch {
                    index,
                    u_length: a.length,
                    v_length: b.length,
                });
            }
        }
        Ok(PairedDataset { u, v })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty datasets
    }

    pub fn u(&self) -> &[EntryRecord] {
        &self.u
    }

    pub fn v(&self) -> &[EntryRecord] {
        &self.v
    }

    pub fn entries(&self) -> impl Iterator<Item = (&EntryRecord, &EntryRecord)> {
        self.u.iter().zip(self.v.iter())
    }
}

/// A test statistic of the form `h(g_1(u,v), ..., g_m(u,v))` where each
/// `g_i` is an integer-valued sum of per-entry scores.
///
/// Implementations declare a per-entry range bound so effect computation
/// can be validated, and say whether the aggregator is integer-valued so
/// threshold comparisons can be exact where exactness is available.
pub trait DecomposableStatistic {
    /// Number of per-entry scoring functions (m).
    fn dim(&self) -> usize;

    /// The per-entry effect tuple `(g_1(u,v), ..., g_m(u,v))`.
    fn per_entry_effects(&self, u: &EntryRecord, v: &EntryRecord) -> EffectTuple;

    /// Bound on `|g_i(u,v)|` for this entry pair and dimension.
    fn per_entry_bound(&self, u: &EntryRecord, v: &EntryRecord, dim: usize) -> i64;

    /// The aggregator `h`, evaluated on exact integer component sums.
    fn aggregate(&self, sums: &[i64]) -> f64;

    /// True when `h` maps integer sums to exactly representable values, in
    /// which case threshold comparisons need no tolerance.
    fn integer_valued_aggregate(&self) -> bool {
        false
    }
}

/// Difference in the number of correct predictions (m = 1).
///
/// One-tailed uses the signed difference; two-tailed its absolute value.
#[derive(Clone, Copy, Debug)]
pub struct AccuracyDiff {
    tails: Tails,
}

/// Builds the accuracy-difference statistic.
pub fn accuracy_diff(tails: Tails) -> AccuracyDiff {
    AccuracyDiff { tails }
}

impl DecomposableStatistic for AccuracyDiff {
    fn dim(&self) -> usize {
        1
    }

    fn per_entry_effects(&self, u: &EntryRecord, v: &EntryRecord) -> EffectTuple {
        EffectTuple::scalar(i64::from(u.correct) - i64::from(v.correct))
    }

    fn per_entry_bound(&self, u: &EntryRecord, _v: &EntryRecord, _dim: usize) -> i64 {
        i64::from(u.length)
    }

    fn aggregate(&self, sums: &[i64]) -> f64 {
        let x = sums[0] as f64;
        match self.tails {
            Tails::One => x,
            Tails::Two => x.abs(),
        }
    }

    fn integer_valued_aggregate(&self) -> bool {
        true
    }
}

/// Difference in F1 scores (m = 4).
///
/// The four per-entry scores are the true-positive and incorrect counts of
/// both systems, cross-wired so that swapping the systems swaps components
/// (1,2) with (3,4). The aggregator computes
/// `x1/(x1 + x2/2) - x3/(x3 + x4/2)`, with an all-zero term defined as 0
/// (a system that produced no positives has F1 zero).
#[derive(Clone, Copy, Debug)]
pub struct F1Diff {
    tails: Tails,
}

/// Builds the F1-difference statistic.
pub fn f1_diff(tails: Tails) -> F1Diff {
    F1Diff { tails }
}

fn f1_term(tp: i64, incorrect: i64) -> f64 {
    if tp == 0 && incorrect == 0 {
        0.0
    } else {
        tp as f64 / (tp as f64 + 0.5 * incorrect as f64)
    }
}

impl DecomposableStatistic for F1Diff {
    fn dim(&self) -> usize {
        4
    }

    fn per_entry_effects(&self, u: &EntryRecord, v: &EntryRecord) -> EffectTuple {
        EffectTuple::new(vec![
            i64::from(u.true_positive),
            i64::from(u.incorrect),
            i64::from(v.true_positive),
            i64::from(v.incorrect),
        ])
    }

    fn per_entry_bound(&self, u: &EntryRecord, _v: &EntryRecord, _dim: usize) -> i64 {
        i64::from(u.length)
    }

    fn aggregate(&self, sums: &[i64]) -> f64 {
        let diff = f1_term(sums[0], sums[1]) - f1_term(sums[2], sums[3]);
        match self.tails {
            Tails::One => diff,
            Tails::Two => diff.abs(),
        }
    }
}

/// Per-entry stay/swap effect pairs for the whole dataset.
///
/// Element n is `(g(u_n, v_n), g(v_n, u_n))`. Effects outside the
/// statistic's declared range are rejected.
pub fn local_effects(
    stat: &dyn DecomposableStatistic,
    dataset: &PairedDataset,
) -> Result<Vec<LocalEffectPair>> {
    let m = stat.dim();
    let mut out = Vec::with_capacity(dataset.len());
    for (entry, (u, v)) in dataset.entries().enumerate() {
        let forward = stat.per_entry_effects(u, v);
        let backward = stat.per_entry_effects(v, u);
        for (tuple, swapped) in [(&forward, false), (&backward, true)] {
            debug_assert_eq!(tuple.dim(), m);
            for dim in 0..m {
                let value = tuple.values()[dim];
                let (a, b) = if swapped { (v, u) } else { (u, v) };
                let bound = stat.per_entry_bound(a, b, dim);
                if value.abs() > bound {
                    return Err(Error::EffectOutOfRange {
                        entry,
                        dim,
                        value,
                        bound,
                    });
                }
            }
        }
        out.push(LocalEffectPair::new(forward, backward)?);
    }
    Ok(out)
}

/// The observed effect: `h` applied to the component-wise sums of the
/// forward tuples. Panics on an empty slice; datasets are never empty.
pub fn observed_effect(stat: &dyn DecomposableStatistic, effects: &[LocalEffectPair]) -> f64 {
    assert!(!effects.is_empty(), "observed effect needs >= 1 entry");
    stat.aggregate(&forward_sums(stat.dim(), effects))
}

pub(crate) fn forward_sums(m: usize, effects: &[LocalEffectPair]) -> Vec<i64> {
    let mut sums = vec![0i64; m];
    for pair in effects {
        for (s, &x) in sums.iter_mut().zip(pair.forward().values()) {
            *s += x;
        }
    }
    sums
}
