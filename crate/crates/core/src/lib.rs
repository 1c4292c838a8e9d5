//! Exact paired-permutation significance testing for additively
//! decomposable test statistics.
//!
//! The paired-permutation test asks how likely a test statistic at least as
//! large as the observed one would be if the two systems' outputs were
//! randomly swapped entry by entry. When the statistic decomposes into
//! integer-valued per-entry scores, the statistic's null distribution is
//! the N-fold convolution of tiny two-point PMFs, which this crate computes
//! exactly, either by dynamic programming or by divide-and-conquer FFT
//! convolution. A seeded Monte Carlo estimator and an exhaustive
//! brute-force oracle cover the approximate and verification ends.
//!
//! ```
//! use permtest::{accuracy_diff, exact_perm_test, ConvolutionEngine, EntryRecord,
//!                PairedDataset, Tails};
//!
//! let u = vec![EntryRecord::accuracy(4, 5).unwrap(), EntryRecord::accuracy(3, 3).unwrap()];
//! let v = vec![EntryRecord::accuracy(3, 5).unwrap(), EntryRecord::accuracy(1, 3).unwrap()];
//! let dataset = PairedDataset::new(u, v).unwrap();
//! let stat = accuracy_diff(Tails::Two);
//! let report = exact_perm_test(&dataset, &stat, &ConvolutionEngine::fft()).unwrap();
//! assert!((report.p_value - 0.5).abs() < 1e-12);
//! ```

pub mod convolve;
pub mod error;
pub mod io;
pub mod pmf;
pub mod runner;
pub mod stats;
pub mod synth;

pub use convolve::{
    convolve_dp, convolve_fft, fft_pairwise_convolve, ConvolutionEngine, EngineKind,
    DEFAULT_FFT_BASE_CASE, DEFAULT_MEMORY_CAP,
};
pub use error::{Error, ErrorCategory, Result};
pub use pmf::{
    support_bounds, DensePmf, EffectTuple, LocalEffectPair, LocalPmf, SupportBox, MASS_TOLERANCE,
};
pub use runner::{
    brute_force, exact_perm_test, monte_carlo, Method, TestReport, BRUTE_FORCE_MAX_ENTRIES,
};
pub use stats::{
    accuracy_diff, f1_diff, local_effects, observed_effect, AccuracyDiff, DecomposableStatistic,
    EntryRecord, F1Diff, PairedDataset, Tails,
};
pub use synth::{generate_synthetic, SynthConfig};
