//! N-fold convolution engines.
//!
//! Two interchangeable engines compute the dense PMF of the sum of the
//! local PMFs:
//!
//! * [`convolve_dp`] folds the entries in one at a time. Each local PMF has
//!   at most two support points, so every step costs one pass over the
//!   accumulated support and the whole run is quadratic in the dataset
//!   size.
//! * [`convolve_fft`] splits the sequence in half, convolves each half
//!   recursively, and merges the halves with an FFT-based dense
//!   convolution, which brings the total down to quasilinear time. Leaves
//!   of at most [`ConvolutionEngine::fft_base_case_threshold`] entries fall
//!   back to the DP engine, which beats FFT setup costs at small sizes.
//!
//! Entries whose forward and backward effects coincide contribute a pure
//! translation of the result, so both engines fold them into the final
//! offset instead of convolving them.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::pmf::{row_major_strides, support_bounds, DensePmf, LocalPmf};
pub use crate::pmf::DEFAULT_MEMORY_CAP;

/// Below this many local PMFs, a recursion leaf is convolved by DP.
pub const DEFAULT_FFT_BASE_CASE: usize = 32;

/// Inverse-transform round-off below this is an internal error; values in
/// `[ROUNDOFF_FLOOR, 0)` are clamped to zero.
pub const ROUNDOFF_FLOOR: f64 = -1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineKind {
    Dp,
    Fft,
}

/// Configuration for the N-fold convolution step.
#[derive(Clone, Copy, Debug)]
pub struct ConvolutionEngine {
    pub kind: EngineKind,
    /// Recursion leaf size for the FFT engine; must be at least 1.
    pub fft_base_case_threshold: usize,
    /// Upper bound on dense PMF cells; exceeding it is a hard error.
    pub memory_cap: usize,
}

impl ConvolutionEngine {
    pub fn dp() -> Self {
        ConvolutionEngine {
            kind: EngineKind::Dp,
            fft_base_case_threshold: DEFAULT_FFT_BASE_CASE,
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }

    pub fn fft() -> Self {
        ConvolutionEngine {
            kind: EngineKind::Fft,
            ..Self::dp()
        }
    }

    pub fn with_fft_base_case(mut self, threshold: usize) -> Self {
        assert!(threshold >= 1, "fft base case threshold must be >= 1");
        self.fft_base_case_threshold = threshold;
        self
    }

    pub fn with_memory_cap(mut self, cells: usize) -> Self {
        assert!(cells >= 1, "memory cap must be >= 1");
        self.memory_cap = cells;
        self
    }

    /// Convolves the local PMFs with the configured engine.
    pub fn convolve(&self, pmfs: &[LocalPmf]) -> Result<DensePmf> {
        match self.kind {
            EngineKind::Dp => convolve_dp(pmfs, self.memory_cap),
            EngineKind::Fft => convolve_fft(pmfs, self),
        }
    }
}

impl Default for ConvolutionEngine {
    fn default() -> Self {
        Self::fft()
    }
}

/// A genuinely two-point local PMF, with per-dimension minima split out so
/// the engines can work on non-negative relative coordinates.
struct TwoPoint {
    /// Per-dimension minimum of the two effect tuples.
    lo: Vec<i64>,
    /// forward - lo (componentwise, all >= 0).
    rel_forward: Vec<usize>,
    /// backward - lo (componentwise, all >= 0).
    rel_backward: Vec<usize>,
}

/// Input sequence split into its translation part and its two-point part.
struct Folded {
    dim: usize,
    /// Sum of all point masses plus all two-point minima.
    offset: Vec<i64>,
    /// Extent of the result box per dimension.
    extents: Vec<usize>,
    splits: Vec<TwoPoint>,
}

fn fold_point_masses(pmfs: &[LocalPmf], memory_cap: usize) -> Result<Folded> {
    let boxed = support_bounds(pmfs, memory_cap)?;
    let m = boxed.dim();
    let mut splits = Vec::new();
    for pmf in pmfs {
        if let LocalPmf::Split { forward, backward } = pmf {
            let mut lo = Vec::with_capacity(m);
            let mut rel_forward = Vec::with_capacity(m);
            let mut rel_backward = Vec::with_capacity(m);
            for j in 0..m {
                let f = forward.values()[j];
                let b = backward.values()[j];
                let min = f.min(b);
                lo.push(min);
                rel_forward.push((f - min) as usize);
                rel_backward.push((b - min) as usize);
            }
            splits.push(TwoPoint {
                lo,
                rel_forward,
                rel_backward,
            });
        }
    }
    Ok(Folded {
        dim: m,
        offset: boxed.offset,
        extents: boxed.extents,
        splits,
    })
}

/// Sequential dynamic-programming convolution of `pmfs`.
///
/// Exact for dyadic masses as long as cell numerators stay below 2^53; in
/// practice the output matches exhaustive enumeration bit for bit on small
/// inputs.
pub fn convolve_dp(pmfs: &[LocalPmf], memory_cap: usize) -> Result<DensePmf> {
    let folded = fold_point_masses(pmfs, memory_cap)?;
    Ok(dp_over(&folded.splits, folded.offset, folded.extents))
}

fn dp_over(splits: &[TwoPoint], offset: Vec<i64>, extents: Vec<usize>) -> DensePmf {
    if splits.is_empty() {
        return DensePmf::point(&offset);
    }
    if extents.len() == 1 {
        dp_1d(splits, offset, extents)
    } else {
        dp_nd(splits, offset, extents)
    }
}

/// One-dimensional DP over a single in-place buffer.
///
/// Each step computes `W_n(i) = (W_{n-1}(i) + W_{n-1}(i - d)) / 2` where
/// `d >= 1` is the gap between the entry's two support points. Iterating
/// `i` downward reads only not-yet-updated cells, so `W_{n-1}` and `W_n`
/// share one allocation.
fn dp_1d(splits: &[TwoPoint], offset: Vec<i64>, extents: Vec<usize>) -> DensePmf {
    let mut w = vec![0.0f64; extents[0]];
    w[0] = 1.0;
    let mut hi = 0usize;
    for split in splits {
        let d = split.rel_forward[0].max(split.rel_backward[0]);
        hi += d;
        for i in (0..=hi).rev() {
            let lower = if i >= d { w[i - d] } else { 0.0 };
            w[i] = 0.5 * (w[i] + lower);
        }
    }
    DensePmf::from_parts(offset, extents, w)
}

/// Multi-dimensional DP over a pair of full-box buffers.
///
/// The live region after n steps is the box of partial sums, tracked per
/// dimension so each step only scans cells that can hold mass.
fn dp_nd(splits: &[TwoPoint], offset: Vec<i64>, extents: Vec<usize>) -> DensePmf {
    let m = extents.len();
    let strides = row_major_strides(&extents);
    let cells: usize = extents.iter().product();
    let mut prev = vec![0.0f64; cells];
    let mut next = vec![0.0f64; cells];
    prev[0] = 1.0;
    let mut live = vec![1usize; m];
    for split in splits {
        let off_f: usize = split
            .rel_forward
            .iter()
            .zip(&strides)
            .map(|(&r, &s)| r * s)
            .sum();
        let off_b: usize = split
            .rel_backward
            .iter()
            .zip(&strides)
            .map(|(&r, &s)| r * s)
            .sum();
        next.fill(0.0);
        for_each_flat(&live, &strides, |flat| {
            let p = prev[flat];
            if p != 0.0 {
                next[flat + off_f] += 0.5 * p;
                next[flat + off_b] += 0.5 * p;
            }
        });
        for j in 0..m {
            live[j] += split.rel_forward[j].max(split.rel_backward[j]);
        }
        std::mem::swap(&mut prev, &mut next);
    }
    DensePmf::from_parts(offset, extents, prev)
}

/// Visits the flat indices of every multi-index in `live`, under `strides`
/// of a possibly larger box.
fn for_each_flat(live: &[usize], strides: &[usize], mut f: impl FnMut(usize)) {
    let m = live.len();
    let mut idx = vec![0usize; m];
    let mut flat = 0usize;
    loop {
        f(flat);
        let mut j = m;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            flat += strides[j];
            if idx[j] < live[j] {
                break;
            }
            flat -= idx[j] * strides[j];
            idx[j] = 0;
        }
    }
}

/// Balanced divide-and-conquer convolution with FFT merges.
///
/// The sequence is split at N/2; each half is convolved recursively and the
/// halves are merged with [`fft_pairwise_convolve`]. Sub-sequences of at
/// most `engine.fft_base_case_threshold` PMFs are handled by the DP engine.
/// Output matches [`convolve_dp`] within 1e-9 per cell.
pub fn convolve_fft(pmfs: &[LocalPmf], engine: &ConvolutionEngine) -> Result<DensePmf> {
    assert!(engine.fft_base_case_threshold >= 1);
    let folded = fold_point_masses(pmfs, engine.memory_cap)?;
    if folded.splits.is_empty() {
        return Ok(DensePmf::point(&folded.offset));
    }
    let mut planner = FftPlanner::new();
    let mut out = fft_rec(&folded.splits, folded.dim, engine, &mut planner)?;
    // the recursion only saw the two-point entries; fold the point-mass
    // translation back into the offset
    let shift: Vec<i64> = folded
        .offset
        .iter()
        .zip(out.offset())
        .map(|(&total, &partial)| total - partial)
        .collect();
    out.shift_offset(&shift);
    Ok(out)
}

fn fft_rec(
    splits: &[TwoPoint],
    dim: usize,
    engine: &ConvolutionEngine,
    planner: &mut FftPlanner<f64>,
) -> Result<DensePmf> {
    if splits.len() <= engine.fft_base_case_threshold {
        let (offset, extents) = leaf_box(splits, dim);
        return Ok(dp_over(splits, offset, extents));
    }
    let mid = splits.len() / 2;
    let a = fft_rec(&splits[..mid], dim, engine, planner)?;
    let b = fft_rec(&splits[mid..], dim, engine, planner)?;
    pairwise_with_planner(&a, &b, engine.memory_cap, planner)
}

fn leaf_box(splits: &[TwoPoint], dim: usize) -> (Vec<i64>, Vec<usize>) {
    let mut offset = vec![0i64; dim];
    let mut extents = vec![1usize; dim];
    for split in splits {
        for j in 0..dim {
            offset[j] += split.lo[j];
            extents[j] += split.rel_forward[j].max(split.rel_backward[j]);
        }
    }
    (offset, extents)
}

/// Dense linear convolution of two PMFs via zero-padded FFTs.
///
/// Offsets add per dimension and extents combine as `a + b - 1`. Negative
/// round-off from the inverse transform is clamped to zero (values below
/// [`ROUNDOFF_FLOOR`] would indicate a real defect, not round-off).
pub fn fft_pairwise_convolve(a: &DensePmf, b: &DensePmf, memory_cap: usize) -> Result<DensePmf> {
    let mut planner = FftPlanner::new();
    pairwise_with_planner(a, b, memory_cap, &mut planner)
}

/// Same as [`fft_pairwise_convolve`] but without the round-off clamp.
/// Diagnostic surface: lets callers verify that inverse-transform round-off
/// never drops below [`ROUNDOFF_FLOOR`].
pub fn fft_convolve_values_unclamped(a: &DensePmf, b: &DensePmf) -> Result<Vec<f64>> {
    let mut planner = FftPlanner::new();
    let (_, _, values) = fft_raw(a, b, DEFAULT_MEMORY_CAP, &mut planner)?;
    Ok(values)
}

fn pairwise_with_planner(
    a: &DensePmf,
    b: &DensePmf,
    memory_cap: usize,
    planner: &mut FftPlanner<f64>,
) -> Result<DensePmf> {
    let (offset, extents, mut values) = fft_raw(a, b, memory_cap, planner)?;
    for v in values.iter_mut() {
        *v = clamp_probability(*v);
    }
    Ok(DensePmf::from_parts(offset, extents, values))
}

fn clamp_probability(v: f64) -> f64 {
    debug_assert!(
        v >= ROUNDOFF_FLOOR,
        "convolution produced {v}, below the round-off floor"
    );
    debug_assert!(v <= 1.0 + crate::pmf::MASS_TOLERANCE);
    v.clamp(0.0, 1.0)
}

fn fft_raw(
    a: &DensePmf,
    b: &DensePmf,
    memory_cap: usize,
    planner: &mut FftPlanner<f64>,
) -> Result<(Vec<i64>, Vec<usize>, Vec<f64>)> {
    if a.dim() != b.dim() {
        return Err(Error::MixedDimensions {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let offset: Vec<i64> = a.offset().iter().zip(b.offset()).map(|(&x, &y)| x + y).collect();
    let extents: Vec<usize> = a
        .extents()
        .iter()
        .zip(b.extents())
        .map(|(&x, &y)| x + y - 1)
        .collect();
    let cells: u128 = extents.iter().map(|&e| e as u128).product();
    if cells > memory_cap as u128 {
        return Err(Error::SupportTooLarge {
            cells,
            cap: memory_cap,
        });
    }
    let padded: Vec<usize> = extents.iter().map(|&e| e.next_power_of_two()).collect();
    let total: usize = padded.iter().product();

    let mut fa = embed(a.probs(), a.extents(), &padded);
    let mut fb = embed(b.probs(), b.extents(), &padded);
    fft_all_axes(&mut fa, &padded, FftDirection::Forward, planner);
    fft_all_axes(&mut fb, &padded, FftDirection::Forward, planner);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    fft_all_axes(&mut fa, &padded, FftDirection::Inverse, planner);

    let scale = 1.0 / total as f64;
    let values = extract(&fa, &padded, &extents, scale);
    debug_assert_eq!(values.len(), cells as usize);
    Ok((offset, extents, values))
}

/// Copies a row-major real array into the corner of a zero complex array
/// with `padded` extents.
fn embed(src: &[f64], src_extents: &[usize], padded: &[usize]) -> Vec<Complex<f64>> {
    let total: usize = padded.iter().product();
    let mut dst = vec![Complex::new(0.0, 0.0); total];
    let dst_strides = row_major_strides(padded);
    let m = src_extents.len();
    let row = src_extents[m - 1];
    let outer = &src_extents[..m - 1];
    let mut idx = vec![0usize; outer.len()];
    let mut src_pos = 0usize;
    loop {
        let dst_base: usize = idx.iter().zip(&dst_strides).map(|(&i, &s)| i * s).sum();
        for t in 0..row {
            dst[dst_base + t] = Complex::new(src[src_pos + t], 0.0);
        }
        src_pos += row;
        if !advance(&mut idx, outer) {
            break;
        }
    }
    dst
}

/// Extracts the leading `out_extents` region of a row-major complex array,
/// taking scaled real parts.
fn extract(src: &[Complex<f64>], padded: &[usize], out_extents: &[usize], scale: f64) -> Vec<f64> {
    let src_strides = row_major_strides(padded);
    let m = out_extents.len();
    let row = out_extents[m - 1];
    let outer = &out_extents[..m - 1];
    let cells: usize = out_extents.iter().product();
    let mut out = Vec::with_capacity(cells);
    let mut idx = vec![0usize; outer.len()];
    loop {
        let src_base: usize = idx.iter().zip(&src_strides).map(|(&i, &s)| i * s).sum();
        for t in 0..row {
            out.push(src[src_base + t].re * scale);
        }
        if !advance(&mut idx, outer) {
            break;
        }
    }
    out
}

/// Row-major odometer increment; false once the index space is exhausted.
fn advance(idx: &mut [usize], extents: &[usize]) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < extents[j] {
            return true;
        }
        idx[j] = 0;
    }
    false
}

/// In-place FFT along every axis of a row-major array.
fn fft_all_axes(
    data: &mut [Complex<f64>],
    dims: &[usize],
    direction: FftDirection,
    planner: &mut FftPlanner<f64>,
) {
    let strides = row_major_strides(dims);
    for (axis, &len) in dims.iter().enumerate() {
        if len == 1 {
            continue;
        }
        let fft: Arc<dyn Fft<f64>> = planner.plan_fft(len, direction);
        let stride = strides[axis];
        if stride == 1 {
            // lines along the innermost axis are contiguous
            fft.process(data);
        } else {
            let mut line = vec![Complex::new(0.0, 0.0); len];
            let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            let block = len * stride;
            let blocks = data.len() / block;
            for blk in 0..blocks {
                for inner in 0..stride {
                    let base = blk * block + inner;
                    for (t, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + t * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (t, &value) in line.iter().enumerate() {
                        data[base + t * stride] = value;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::{EffectTuple, LocalEffectPair};

    fn coin(f: i64, b: i64) -> LocalPmf {
        LocalPmf::from_pair(
            LocalEffectPair::new(EffectTuple::scalar(f), EffectTuple::scalar(b)).unwrap(),
        )
    }

    #[test]
    fn dp_single_point_mass() {
        let out = convolve_dp(&[coin(0, 0)], DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(out.offset(), &[0]);
        assert_eq!(out.probs(), &[1.0]);
    }

    #[test]
    fn dp_two_fair_coins() {
        let out = convolve_dp(&[coin(1, -1), coin(1, -1)], DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(out.offset(), &[-2]);
        assert_eq!(out.probs(), &[0.25, 0.0, 0.5, 0.0, 0.25]);
    }

    #[test]
    fn dp_three_fair_coins() {
        let coins = vec![coin(1, -1), coin(1, -1), coin(1, -1)];
        let out = convolve_dp(&coins, DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(out.offset(), &[-3]);
        assert_eq!(
            out.probs(),
            &[0.125, 0.0, 0.375, 0.0, 0.375, 0.0, 0.125]
        );
    }

    #[test]
    fn dp_folds_point_masses_into_the_offset() {
        let out = convolve_dp(&[coin(2, 2), coin(5, 5)], DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(out.offset(), &[7]);
        assert_eq!(out.probs(), &[1.0]);
    }

    #[test]
    fn dp_rejects_oversized_supports() {
        let err = convolve_dp(&[coin(0, 10), coin(0, 10)], 5).unwrap_err();
        assert!(matches!(err, Error::SupportTooLarge { .. }));
    }

    #[test]
    fn fft_two_fair_coins_matches_dp() {
        let pmfs = vec![coin(1, -1), coin(1, -1)];
        let engine = ConvolutionEngine::fft().with_fft_base_case(1);
        let out = convolve_fft(&pmfs, &engine).unwrap();
        assert_eq!(out.offset(), &[-2]);
        let expect = [0.25, 0.0, 0.5, 0.0, 0.25];
        for (got, want) in out.probs().iter().zip(expect) {
            assert!((got - want).abs() <= 1e-9);
        }
    }

    #[test]
    fn fft_single_pmf_is_densified_exactly() {
        let engine = ConvolutionEngine::fft();
        let out = convolve_fft(&[coin(3, -1)], &engine).unwrap();
        assert_eq!(out.offset(), &[-1]);
        assert_eq!(out.probs(), &[0.5, 0.0, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn pairwise_identity_element() {
        let identity = DensePmf::point(&[0]);
        let b = DensePmf::from_parts(vec![-1], vec![3], vec![0.25, 0.5, 0.25]);
        let out = fft_pairwise_convolve(&identity, &b, DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(out.offset(), &[-1]);
        for (got, want) in out.probs().iter().zip(b.probs()) {
            assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn pairwise_point_masses_shift() {
        let a = DensePmf::point(&[1]);
        let b = DensePmf::point(&[2]);
        let out = fft_pairwise_convolve(&a, &b, DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(out.offset(), &[3]);
        assert_eq!(out.extents(), &[1]);
        assert!((out.probs()[0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pairwise_half_half_square() {
        let a = DensePmf::from_parts(vec![0], vec![2], vec![0.5, 0.5]);
        let out = fft_pairwise_convolve(&a, &a, DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(out.offset(), &[0]);
        assert_eq!(out.extents(), &[3]);
        let expect = [0.25, 0.5, 0.25];
        for (got, want) in out.probs().iter().zip(expect) {
            assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_dimensional_dp_matches_hand_enumeration() {
        // one entry with effects (1,0) vs (0,1): mass 1/2 on each corner
        let f = EffectTuple::new(vec![1, 0]);
        let b = EffectTuple::new(vec![0, 1]);
        let pmf = LocalPmf::from_pair(LocalEffectPair::new(f, b).unwrap());
        let out = convolve_dp(&[pmf.clone(), pmf], DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(out.offset(), &[0, 0]);
        assert_eq!(out.extents(), &[3, 3]);
        // sums over 4 assignments: (2,0), (1,1), (1,1), (0,2)
        assert_eq!(out.prob_at(&[2, 0]), 0.25);
        assert_eq!(out.prob_at(&[1, 1]), 0.5);
        assert_eq!(out.prob_at(&[0, 2]), 0.25);
        assert_eq!(out.prob_at(&[2, 2]), 0.0);
    }
}
