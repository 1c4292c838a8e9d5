//! Test procedures: exact (DP or FFT convolution), Monte Carlo, and an
//! exhaustive brute-force oracle.
//!
//! All runners share one code path for the observed effect and for the
//! threshold comparison, so the exact accumulation, the sampled estimate,
//! and the enumeration count agree on tie handling.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

use crate::convolve::ConvolutionEngine;
use crate::error::{Error, Result};
use crate::pmf::LocalPmf;
use crate::stats::{forward_sums, local_effects, DecomposableStatistic, PairedDataset};

/// Largest dataset the brute-force oracle will enumerate (2^25 assignments).
pub const BRUTE_FORCE_MAX_ENTRIES: usize = 25;

/// Tie tolerance for real-valued aggregators: `h(xi) >= t_bar` accepts
/// values within a relative 1e-12 of the observed effect. Integer-valued
/// aggregators compare exactly.
pub const REAL_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ExactDp,
    ExactFft,
    MonteCarlo,
    BruteForce,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactDp => "exact-dp",
            Method::ExactFft => "exact-fft",
            Method::MonteCarlo => "monte-carlo",
            Method::BruteForce => "brute-force",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a significance test.
#[derive(Clone, Debug)]
pub struct TestReport {
    pub p_value: f64,
    pub observed_effect: f64,
    pub method: Method,
    pub n_entries: usize,
    /// Sample count; present only for Monte Carlo runs.
    pub mc_samples: Option<usize>,
    /// RNG seed; present only for Monte Carlo runs.
    pub rng_seed: Option<u64>,
    /// Wall time from local-effect computation through the p-value.
    pub elapsed: Duration,
}

pub(crate) fn meets_threshold(value: f64, observed: f64, integer_valued: bool) -> bool {
    if integer_valued {
        value >= observed
    } else {
        value >= observed - REAL_TIE_TOLERANCE * observed.abs().max(1.0)
    }
}

/// Exact p-value by N-fold convolution of the local PMFs.
///
/// Accumulates the mass of every support point whose aggregated value
/// reaches the observed effect. Works for any dimensionality the memory
/// cap admits.
pub fn exact_perm_test(
    dataset: &PairedDataset,
    stat: &dyn DecomposableStatistic,
    engine: &ConvolutionEngine,
) -> Result<TestReport> {
    let start = Instant::now();
    let effects = local_effects(stat, dataset)?;
    let observed = crate::stats::observed_effect(stat, &effects);
    let pmfs: Vec<LocalPmf> = effects.into_iter().map(LocalPmf::from_pair).collect();
    let dist = engine.convolve(&pmfs)?;
    let integer_valued = stat.integer_valued_aggregate();
    let mut p = 0.0;
    dist.for_each_cell(|coords, mass| {
        if mass > 0.0 && meets_threshold(stat.aggregate(coords), observed, integer_valued) {
            p += mass;
        }
    });
    Ok(TestReport {
        p_value: p.min(1.0),
        observed_effect: observed,
        method: match engine.kind {
            crate::convolve::EngineKind::Dp => Method::ExactDp,
            crate::convolve::EngineKind::Fft => Method::ExactFft,
        },
        n_entries: dataset.len(),
        mc_samples: None,
        rng_seed: None,
        elapsed: start.elapsed(),
    })
}

/// Monte Carlo estimate of the p-value from `samples` random stay/swap
/// assignments.
///
/// Sample k draws its bits from stream k of a counter-based generator
/// keyed on `seed`, so results are identical under any evaluation order.
pub fn monte_carlo(
    dataset: &PairedDataset,
    stat: &dyn DecomposableStatistic,
    samples: usize,
    seed: u64,
) -> Result<TestReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "monte carlo needs at least one sample".into(),
        ));
    }
    let start = Instant::now();
    let effects = local_effects(stat, dataset)?;
    let observed = crate::stats::observed_effect(stat, &effects);
    let integer_valued = stat.integer_valued_aggregate();
    let m = stat.dim();

    let mut hits = 0usize;
    if m == 1 {
        let pairs: Vec<(i64, i64)> = effects
            .iter()
            .map(|e| (e.forward().values()[0], e.backward().values()[0]))
            .collect();
        for k in 0..samples {
            let mut rng = sample_rng(seed, k);
            let mut bits = 0u64;
            let mut avail = 0u32;
            let mut sum = 0i64;
            for &(f, b) in &pairs {
                if avail == 0 {
                    bits = rng.next_u64();
                    avail = 64;
                }
                sum += if bits & 1 == 1 { b } else { f };
                bits >>= 1;
                avail -= 1;
            }
            if meets_threshold(stat.aggregate(&[sum]), observed, integer_valued) {
                hits += 1;
            }
        }
    } else {
        let mut sums = vec![0i64; m];
        for k in 0..samples {
            let mut rng = sample_rng(seed, k);
            let mut bits = 0u64;
            let mut avail = 0u32;
            sums.fill(0);
            for pair in &effects {
                if avail == 0 {
                    bits = rng.next_u64();
                    avail = 64;
                }
                let tuple = if bits & 1 == 1 {
                    pair.backward()
                } else {
                    pair.forward()
                };
                bits >>= 1;
                avail -= 1;
                for (s, &x) in sums.iter_mut().zip(tuple.values()) {
                    *s += x;
                }
            }
            if meets_threshold(stat.aggregate(&sums), observed, integer_valued) {
                hits += 1;
            }
        }
    }

    Ok(TestReport {
        p_value: hits as f64 / samples as f64,
        observed_effect: observed,
        method: Method::MonteCarlo,
        n_entries: dataset.len(),
        mc_samples: Some(samples),
        rng_seed: Some(seed),
        elapsed: start.elapsed(),
    })
}

fn sample_rng(seed: u64, sample_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample_index as u64);
    rng
}

/// Exact p-value by exhaustive enumeration of all 2^N assignments.
///
/// Walks the assignments in Gray-code order so each step updates the
/// component sums by a single entry flip. Refuses datasets larger than
/// [`BRUTE_FORCE_MAX_ENTRIES`].
pub fn brute_force(
    dataset: &PairedDataset,
    stat: &dyn DecomposableStatistic,
) -> Result<TestReport> {
    let n = dataset.len();
    if n > BRUTE_FORCE_MAX_ENTRIES {
        return Err(Error::BruteForceOversize {
            n,
            max: BRUTE_FORCE_MAX_ENTRIES,
        });
    }
    let start = Instant::now();
    let effects = local_effects(stat, dataset)?;
    let observed = crate::stats::observed_effect(stat, &effects);
    let integer_valued = stat.integer_valued_aggregate();
    let m = stat.dim();

    let mut sums = forward_sums(m, &effects);
    let mut swapped = vec![false; n];
    let mut hits = 0u64;
    let total = 1u64 << n;
    for i in 0..total {
        if i > 0 {
            let j = i.trailing_zeros() as usize;
            let pair = &effects[j];
            let now_swapped = !swapped[j];
            let (minus, plus) = if now_swapped {
                (pair.forward().values(), pair.backward().values())
            } else {
                (pair.backward().values(), pair.forward().values())
            };
            for ((s, &sub), &add) in sums.iter_mut().zip(minus).zip(plus) {
                *s += add - sub;
            }
            swapped[j] = now_swapped;
        }
        if meets_threshold(stat.aggregate(&sums), observed, integer_valued) {
            hits += 1;
        }
    }

    Ok(TestReport {
        p_value: hits as f64 / total as f64,
        observed_effect: observed,
        method: Method::BruteForce,
        n_entries: n,
        mc_samples: None,
        rng_seed: None,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{accuracy_diff, f1_diff, EntryRecord, Tails};

    fn acc_dataset(u: &[(u32, u32)], v: &[(u32, u32)]) -> PairedDataset {
        let build = |rows: &[(u32, u32)]| {
            rows.iter()
                .map(|&(c, l)| EntryRecord::accuracy(c, l).unwrap())
                .collect()
        };
        PairedDataset::new(build(u), build(v)).unwrap()
    }

    #[test]
    fn identical_systems_give_p_one_for_every_method() {
        let ds = acc_dataset(&[(2, 3), (1, 4), (0, 2)], &[(2, 3), (1, 4), (0, 2)]);
        for tails in [Tails::One, Tails::Two] {
            let stat = accuracy_diff(tails);
            let dp = exact_perm_test(&ds, &stat, &ConvolutionEngine::dp()).unwrap();
            let fft = exact_perm_test(&ds, &stat, &ConvolutionEngine::fft()).unwrap();
            let bf = brute_force(&ds, &stat).unwrap();
            let mc = monte_carlo(&ds, &stat, 500, 7).unwrap();
            assert_eq!(dp.p_value, 1.0);
            assert_eq!(fft.p_value, 1.0);
            assert_eq!(bf.p_value, 1.0);
            assert_eq!(mc.p_value, 1.0);
        }
    }

    #[test]
    fn single_asymmetric_entry_gives_exact_half() {
        let ds = acc_dataset(&[(1, 1)], &[(0, 1)]);
        let stat = accuracy_diff(Tails::One);
        let dp = exact_perm_test(&ds, &stat, &ConvolutionEngine::dp()).unwrap();
        let fft = exact_perm_test(&ds, &stat, &ConvolutionEngine::fft()).unwrap();
        let bf = brute_force(&ds, &stat).unwrap();
        assert_eq!(dp.p_value, 0.5);
        assert_eq!(fft.p_value, 0.5);
        assert_eq!(bf.p_value, 0.5);
    }

    #[test]
    fn two_entry_two_tailed_case() {
        // forwards [+1, +1]; 2 of 4 assignments reach |sum| >= 2
        let ds = acc_dataset(&[(1, 1), (1, 1)], &[(0, 1), (0, 1)]);
        let stat = accuracy_diff(Tails::Two);
        let dp = exact_perm_test(&ds, &stat, &ConvolutionEngine::dp()).unwrap();
        assert_eq!(dp.p_value, 0.5);
        assert_eq!(brute_force(&ds, &stat).unwrap().p_value, 0.5);
    }

    #[test]
    fn monte_carlo_is_deterministic_under_a_seed() {
        let ds = acc_dataset(&[(3, 5), (1, 2), (2, 4)], &[(2, 5), (2, 2), (1, 4)]);
        let stat = accuracy_diff(Tails::Two);
        let a = monte_carlo(&ds, &stat, 4096, 123).unwrap();
        let b = monte_carlo(&ds, &stat, 4096, 123).unwrap();
        assert_eq!(a.p_value.to_bits(), b.p_value.to_bits());
    }

    #[test]
    fn monte_carlo_matches_binomial_error_on_half_case() {
        let ds = acc_dataset(&[(1, 1)], &[(0, 1)]);
        let stat = accuracy_diff(Tails::One);
        let mc = monte_carlo(&ds, &stat, 100_000, 42).unwrap();
        // 3 sigma of a fair coin at K = 100000 is ~0.0047
        assert!((mc.p_value - 0.5).abs() < 0.005, "p = {}", mc.p_value);
    }

    #[test]
    fn report_metadata_matches_method() {
        let ds = acc_dataset(&[(1, 2)], &[(2, 2)]);
        let stat = accuracy_diff(Tails::Two);
        let mc = monte_carlo(&ds, &stat, 10, 5).unwrap();
        assert_eq!(mc.mc_samples, Some(10));
        assert_eq!(mc.rng_seed, Some(5));
        let dp = exact_perm_test(&ds, &stat, &ConvolutionEngine::dp()).unwrap();
        assert_eq!(dp.mc_samples, None);
        assert_eq!(dp.rng_seed, None);
        assert_eq!(dp.method, Method::ExactDp);
    }

    #[test]
    fn brute_force_refuses_oversized_datasets() {
        let rows: Vec<(u32, u32)> = (0..26).map(|i| (u32::from(i % 2 == 0), 1)).collect();
        let other: Vec<(u32, u32)> = (0..26).map(|_| (0, 1)).collect();
        let ds = acc_dataset(&rows, &other);
        let err = brute_force(&ds, &accuracy_diff(Tails::One)).unwrap_err();
        assert!(matches!(err, Error::BruteForceOversize { n: 26, max: 25 }));
    }

    #[test]
    fn zero_samples_is_invalid() {
        let ds = acc_dataset(&[(1, 1)], &[(0, 1)]);
        assert!(matches!(
            monte_carlo(&ds, &accuracy_diff(Tails::One), 0, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn exact_p_is_at_least_two_to_minus_n() {
        let ds = acc_dataset(&[(3, 4), (0, 2), (2, 3), (1, 5)], &[(1, 4), (2, 2), (2, 3), (0, 5)]);
        for tails in [Tails::One, Tails::Two] {
            let stat = accuracy_diff(tails);
            let r = exact_perm_test(&ds, &stat, &ConvolutionEngine::dp()).unwrap();
            assert!(r.p_value >= 0.5f64.powi(ds.len() as i32));
        }
    }

    #[test]
    fn f1_exact_matches_brute_force_on_small_input() {
        let u = vec![
            EntryRecord::f1(2, 1, 3).unwrap(),
            EntryRecord::f1(1, 0, 2).unwrap(),
            EntryRecord::f1(0, 2, 3).unwrap(),
        ];
        let v = vec![
            EntryRecord::f1(1, 2, 3).unwrap(),
            EntryRecord::f1(1, 1, 2).unwrap(),
            EntryRecord::f1(1, 0, 3).unwrap(),
        ];
        let ds = PairedDataset::new(u, v).unwrap();
        let stat = f1_diff(Tails::Two);
        let bf = brute_force(&ds, &stat).unwrap();
        let dp = exact_perm_test(&ds, &stat, &ConvolutionEngine::dp()).unwrap();
        let fft = exact_perm_test(
            &ds,
            &stat,
            &ConvolutionEngine::fft().with_fft_base_case(1),
        )
        .unwrap();
        assert!((bf.p_value - dp.p_value).abs() < 1e-12);
        assert!((bf.p_value - fft.p_value).abs() < 1e-9);
    }
}
