//! Integer-support probability mass functions.
//!
//! Each dataset entry contributes a *local* PMF with at most two support
//! points: the effect of keeping the two systems' outputs as observed, and
//! the effect of swapping them, each with probability 1/2 (or a single unit
//! mass when swapping changes nothing). The distribution of the whole test
//! statistic is the N-fold convolution of these local PMFs, stored densely
//! as a [`DensePmf`] over a contiguous integer grid.

use crate::error::{Error, Result};

/// Tolerance on the total mass of any dense PMF produced by this crate.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Default cap on dense PMF cells. Multi-dimensional supports grow as a
/// power of the dataset size, so exceeding this is a hard error rather than
/// a silent truncation.
pub const DEFAULT_MEMORY_CAP: usize = 1 << 31;

/// Signed per-entry effect values, one component per scoring function.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EffectTuple(Vec<i64>);

impl EffectTuple {
    /// Panics if `values` is empty; effects are at least one-dimensional.
    pub fn new(values: Vec<i64>) -> Self {
        assert!(!values.is_empty(), "effect tuples must have dimension >= 1");
        EffectTuple(values)
    }

    /// One-dimensional effect.
    pub fn scalar(value: i64) -> Self {
        EffectTuple(vec![value])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }
}

/// The two values a per-entry effect can take under the null hypothesis:
/// keep the systems' outputs as observed (`forward`) or swap them
/// (`backward`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalEffectPair {
    forward: EffectTuple,
    backward: EffectTuple,
}

impl LocalEffectPair {
    pub fn new(forward: EffectTuple, backward: EffectTuple) -> Result<Self> {
        if forward.dim() != backward.dim() {
            return Err(Error::DimensionMismatch {
                forward: forward.dim(),
                backward: backward.dim(),
            });
        }
        Ok(LocalEffectPair { forward, backward })
    }

    pub fn forward(&self) -> &EffectTuple {
        &self.forward
    }

    pub fn backward(&self) -> &EffectTuple {
        &self.backward
    }

    pub fn dim(&self) -> usize {
        self.forward.dim()
    }
}

/// Per-entry PMF under the null distribution.
///
/// Swapping either changes the local effect (a fair two-point mass) or it
/// does not (a single unit mass). No other mass values ever occur; both 1/2
/// and 1 are exact in binary floating point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LocalPmf {
    /// forward == backward: all mass on the one reachable value.
    Point(EffectTuple),
    /// forward != backward: mass 1/2 on each value.
    Split {
        forward: EffectTuple,
        backward: EffectTuple,
    },
}

impl LocalPmf {
    /// Builds the local PMF of an effect pair: two-point iff the forward and
    /// backward effects differ.
    pub fn from_pair(pair: LocalEffectPair) -> Self {
        let LocalEffectPair { forward, backward } = pair;
        if forward == backward {
            LocalPmf::Point(forward)
        } else {
            LocalPmf::Split { forward, backward }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LocalPmf::Point(t) => t.dim(),
            LocalPmf::Split { forward, .. } => forward.dim(),
        }
    }

    /// Support points with their exact masses.
    pub fn points(&self) -> impl Iterator<Item = (&EffectTuple, f64)> {
        let pts: Vec<(&EffectTuple, f64)> = match self {
            LocalPmf::Point(t) => vec![(t, 1.0)],
            LocalPmf::Split { forward, backward } => vec![(forward, 0.5), (backward, 0.5)],
        };
        pts.into_iter()
    }

    /// Minimum support value along `dim`.
    pub fn min_at(&self, dim: usize) -> i64 {
        match self {
            LocalPmf::Point(t) => t.values()[dim],
            LocalPmf::Split { forward, backward } => {
                forward.values()[dim].min(backward.values()[dim])
            }
        }
    }

    /// Maximum support value along `dim`.
    pub fn max_at(&self, dim: usize) -> i64 {
        match self {
            LocalPmf::Point(t) => t.values()[dim],
            LocalPmf::Split { forward, backward } => {
                forward.values()[dim].max(backward.values()[dim])
            }
        }
    }
}

/// Tight integer bounding box of the support of an N-fold convolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportBox {
    pub offset: Vec<i64>,
    pub extents: Vec<usize>,
}

impl SupportBox {
    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    /// Number of grid cells in the box.
    pub fn cell_count(&self) -> u128 {
        self.extents.iter().map(|&e| e as u128).product()
    }
}

/// Tight per-dimension bounds on the support of the sum of `pmfs`.
///
/// The offset in each dimension is the sum of per-pmf minima and the extent
/// spans through the sum of per-pmf maxima, so every reachable sum lies in
/// the box and both ends are attained by some stay/swap assignment.
pub fn support_bounds(pmfs: &[LocalPmf], memory_cap: usize) -> Result<SupportBox> {
    let first = pmfs.first().ok_or(Error::EmptyDataset)?;
    let m = first.dim();
    let mut offset = vec![0i64; m];
    let mut span = vec![0usize; m];
    for pmf in pmfs {
        if pmf.dim() != m {
            return Err(Error::MixedDimensions {
                expected: m,
                found: pmf.dim(),
            });
        }
        for j in 0..m {
            offset[j] += pmf.min_at(j);
            span[j] += (pmf.max_at(j) - pmf.min_at(j)) as usize;
        }
    }
    let extents: Vec<usize> = span.iter().map(|&s| s + 1).collect();
    let boxed = SupportBox { offset, extents };
    let cells = boxed.cell_count();
    if cells > memory_cap as u128 {
        return Err(Error::SupportTooLarge {
            cells,
            cap: memory_cap,
        });
    }
    Ok(boxed)
}

/// Row-major strides for a dense array with the given extents.
pub(crate) fn row_major_strides(extents: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; extents.len()];
    for j in (0..extents.len().saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * extents[j + 1];
    }
    strides
}

/// Dense probability mass over a contiguous integer grid.
///
/// `probs` is laid out row-major over `extents`; the grid coordinate of a
/// cell is `offset + multi_index`, so aggregator functions always see exact
/// integer sums.
#[derive(Clone, Debug, PartialEq)]
pub struct DensePmf {
    offset: Vec<i64>,
    extents: Vec<usize>,
    probs: Vec<f64>,
}

impl DensePmf {
    /// Panics if the shapes disagree; engine code always constructs
    /// consistent parts.
    pub fn from_parts(offset: Vec<i64>, extents: Vec<usize>, probs: Vec<f64>) -> Self {
        assert_eq!(offset.len(), extents.len(), "offset/extents rank mismatch");
        let cells: usize = extents.iter().product();
        assert_eq!(probs.len(), cells, "probs length does not match extents");
        DensePmf {
            offset,
            extents,
            probs,
        }
    }

    /// Unit mass at a single grid point.
    pub fn point(coords: &[i64]) -> Self {
        DensePmf {
            offset: coords.to_vec(),
            extents: vec![1; coords.len()],
            probs: vec![1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn offset(&self) -> &[i64] {
        &self.offset
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Sum of all stored probabilities.
    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mass at a grid point, zero outside the stored box.
    pub fn prob_at(&self, point: &[i64]) -> f64 {
        assert_eq!(point.len(), self.dim());
        let mut flat = 0usize;
        let strides = row_major_strides(&self.extents);
        for j in 0..self.dim() {
            let rel = point[j] - self.offset[j];
            if rel < 0 || rel as usize >= self.extents[j] {
                return 0.0;
            }
            flat += rel as usize * strides[j];
        }
        self.probs[flat]
    }

    /// Visits every cell in row-major order with its grid coordinates.
    pub fn for_each_cell(&self, mut f: impl FnMut(&[i64], f64)) {
        let m = self.dim();
        let mut coords = self.offset.clone();
        for (i, &p) in self.probs.iter().enumerate() {
            f(&coords, p);
            if i + 1 == self.probs.len() {
                break;
            }
            // odometer increment from the innermost dimension
            let mut j = m - 1;
            loop {
                coords[j] += 1;
                if ((coords[j] - self.offset[j]) as usize) < self.extents[j] {
                    break;
                }
                coords[j] = self.offset[j];
                j -= 1;
            }
        }
    }

    /// Translates the support box; used to fold point-mass entries back in.
    pub(crate) fn shift_offset(&mut self, delta: &[i64]) {
        assert_eq!(delta.len(), self.dim());
        for (o, d) in self.offset.iter_mut().zip(delta) {
            *o += d;
        }
    }
}
