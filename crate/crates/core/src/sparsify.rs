//! Splitting an order-d array into pieces `x^(S)` that are sparse along the axes in `S`.
//!
//! For each axis subset `S`, `K(S)` keeps, in every fiber along `S` (all
//! coordinates outside `S` fixed), the `s^|S|` entries of largest magnitude.
//! Every index is then assigned to the largest `S` whose `K(S)` contains it.

use ndarray::ArrayD;

use crate::error::{Error, Result};
use crate::index::{self, AxisSet, FlatIndex, KronDims, PartialIndex};

/// Relative slack used when comparing the two sides of an inequality.
const REL_TOL: f64 = 1e-12;

/// `s^k`, saturating.
fn power(s: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, _| acc.saturating_mul(s))
}

fn dims_of(x: &ArrayD<f64>) -> Result<KronDims> {
    KronDims::new(x.shape().to_vec())
}

/// Membership mask of `K(S)` over the vectorized layout.
fn select_mask(dims: &KronDims, x: &[f64], axes: AxisSet, s: usize) -> Vec<bool> {
    let inner = index::axis_offsets(dims, axes);
    let outer = index::axis_offsets(dims, axes.complement(dims.order()));
    let keep = power(s, axes.len()).min(inner.len());
    let mut mask = vec![false; x.len()];
    let mut order: Vec<usize> = (0..inner.len()).collect();
    for &base in &outer {
        order.sort_by_key(|&a| a);
        // Stable sort keeps the smaller linearized index first among equal magnitudes.
        order.sort_by(|&a, &b| x[base + inner[b]].abs().total_cmp(&x[base + inner[a]].abs()));
        for &a in &order[..keep] {
            mask[base + inner[a]] = true;
        }
    }
    mask
}

/// `K(S)` as 1-based indices into the vectorized array, in ascending order.
pub fn select_k(x: &ArrayD<f64>, axes: AxisSet, s: usize) -> Result<Vec<FlatIndex>> {
    let dims = dims_of(x)?;
    check_subset(&dims, axes)?;
    check_s(s)?;
    let v = index::vectorize(&dims, x)?;
    Ok(select_mask(&dims, &v, axes, s)
        .iter()
        .enumerate()
        .filter(|(_, &keep)| keep)
        .map(|(i, _)| FlatIndex::from_zero_based(i))
        .collect())
}

fn check_subset(dims: &KronDims, axes: AxisSet) -> Result<()> {
    if !axes.is_subset_of(dims.axes()) {
        return Err(Error::InvalidSubset(format!(
            "{axes} is not a subset of [{}]",
            dims.order()
        )));
    }
    Ok(())
}

fn check_s(s: usize) -> Result<()> {
    if s == 0 {
        return Err(Error::Argument("sparsity parameter s must be at least 1".into()));
    }
    Ok(())
}

/// The decomposition `x = sum_S x^(S)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsifySplit {
    dims: KronDims,
    s: usize,
    /// Vectorized `x^(S)`, indexed by the bit mask of `S`.
    parts: Vec<Vec<f64>>,
    /// `S(i)` for every vectorized position.
    assignment: Vec<AxisSet>,
}

/// Splits `x` into the pieces `x^(S)`.
///
/// Among subsets of equal (maximal) size the lexicographically smallest wins.
pub fn split(x: &ArrayD<f64>, s: usize) -> Result<SparsifySplit> {
    let dims = dims_of(x)?;
    check_s(s)?;
    let v = index::vectorize(&dims, x)?;
    let d = dims.order();
    let masks: Vec<(AxisSet, Vec<bool>)> = dims
        .axes()
        .subsets()
        .map(|set| (set, select_mask(&dims, &v, set, s)))
        .collect();
    let assignment: Vec<AxisSet> = (0..v.len())
        .map(|i| {
            masks
                .iter()
                .filter(|(_, m)| m[i])
                .map(|(set, _)| *set)
                .min_by(|a, b| b.len().cmp(&a.len()).then(a.lex_cmp(*b)))
                .expect("K(empty set) contains every index")
        })
        .collect();
    let mut parts = vec![vec![0.0; v.len()]; 1 << d];
    for (i, set) in assignment.iter().enumerate() {
        parts[set.bits() as usize][i] = v[i];
    }
    Ok(SparsifySplit {
        dims,
        s,
        parts,
        assignment,
    })
}

impl SparsifySplit {
    /// Assembles a split from explicit pieces, e.g. to build negative test cases.
    ///
    /// Pieces not listed are zero. Supports must be disjoint; an index where
    /// every piece vanishes is assigned to the empty set.
    pub fn from_parts(dims: KronDims, s: usize, pieces: Vec<(AxisSet, ArrayD<f64>)>) -> Result<Self> {
        check_s(s)?;
        let n = dims.total();
        let mut parts = vec![vec![0.0; n]; 1 << dims.order()];
        let mut assignment = vec![AxisSet::empty(); n];
        let mut owned = vec![false; n];
        for (set, arr) in pieces {
            check_subset(&dims, set)?;
            let v = index::vectorize(&dims, &arr)?;
            for (i, &val) in v.iter().enumerate() {
                if val != 0.0 {
                    if owned[i] {
                        return Err(Error::Argument(format!(
                            "position {} is nonzero in more than one piece",
                            i + 1
                        )));
                    }
                    owned[i] = true;
                    assignment[i] = set;
                }
            }
            parts[set.bits() as usize] = v;
        }
        Ok(SparsifySplit {
            dims,
            s,
            parts,
            assignment,
        })
    }

    pub fn dims(&self) -> &KronDims {
        &self.dims
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `x^(S)` as an array.
    pub fn part(&self, set: AxisSet) -> Result<ArrayD<f64>> {
        check_subset(&self.dims, set)?;
        index::devectorize(&self.dims, &self.parts[set.bits() as usize])
    }

    /// `x^(S)` in the vectorized layout.
    pub fn part_vec(&self, set: AxisSet) -> &[f64] {
        &self.parts[set.bits() as usize]
    }

    /// `S(i)` for a full index.
    pub fn assignment(&self, idx: &PartialIndex) -> Result<AxisSet> {
        if idx.axes() != self.dims.axes() {
            return Err(Error::InvalidIndex("assignment needs a full index".into()));
        }
        let flat = index::linearize(&self.dims, idx)?;
        Ok(self.assignment[flat.zero_based()])
    }

    /// `sum_S x^(S)` in the vectorized layout.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dims.total()];
        for part in &self.parts {
            for (o, p) in out.iter_mut().zip(part) {
                *o += p;
            }
        }
        out
    }
}

/// Checks that each fiber of `x^(S)` along `S` has at most `s^|S|` nonzeros.
pub fn check_fiber_sparsity(split: &SparsifySplit) -> bool {
    let dims = &split.dims;
    dims.axes().subsets().all(|set| {
        let part = split.part_vec(set);
        let inner = index::axis_offsets(dims, set);
        let bound = power(split.s, set.len());
        index::axis_offsets(dims, set.complement(dims.order()))
            .iter()
            .all(|&base| inner.iter().filter(|&&a| part[base + a] != 0.0).count() <= bound)
    })
}

/// Which inequality a [`MaxSumViolation`] refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaxSumKind {
    /// `|S| < |T|`: `max_j |x^(S)_{j x k}|^2 <= s^-|T| sum_j |x_{j x k}|^2`.
    EntryVsFiber,
    /// `S, T` disjoint: `max_j sum_i |x^(S)_{i x j x k}|^2 <= s^-|T| sum_{i,j} |x_{i x j x k}|^2`.
    SliceVsBlock,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxSumViolation {
    pub kind: MaxSumKind,
    pub s_set: AxisSet,
    pub t_set: AxisSet,
    /// The fixed index `k` on the remaining axes.
    pub k: PartialIndex,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaxSumReport {
    pub entry_checks: usize,
    pub slice_checks: usize,
    pub violations: Vec<MaxSumViolation>,
}

impl MaxSumReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustively checks both max-sum inequalities for every admissible `(S, T, k)`.
pub fn check_max_sum_inequalities(x: &ArrayD<f64>, split: &SparsifySplit) -> Result<MaxSumReport> {
    let dims = &split.dims;
    let v = index::vectorize(dims, x)?;
    let d = dims.order();
    let sets: Vec<AxisSet> = dims.axes().subsets().collect();
    let mut report = MaxSumReport::default();
    let exceeds = |lhs: f64, rhs: f64| lhs > rhs * (1.0 + REL_TOL) + f64::MIN_POSITIVE;

    for &sset in &sets {
        let part = split.part_vec(sset);
        for &tset in &sets {
            let scale = 1.0 / power(split.s, tset.len()) as f64;
            if sset.len() < tset.len() {
                let rest = tset.complement(d);
                let t_off = index::axis_offsets(dims, tset);
                for (ki, &kb) in index::axis_offsets(dims, rest).iter().enumerate() {
                    let lhs = t_off.iter().map(|&j| part[kb + j].powi(2)).fold(0.0, f64::max);
                    let rhs = scale * t_off.iter().map(|&j| v[kb + j].powi(2)).sum::<f64>();
                    report.entry_checks += 1;
                    if exceeds(lhs, rhs) {
                        report.violations.push(MaxSumViolation {
                            kind: MaxSumKind::EntryVsFiber,
                            s_set: sset,
                            t_set: tset,
                            k: index::delinearize(dims, rest, FlatIndex::from_zero_based(ki))?,
                            lhs,
                            rhs,
                        });
                    }
                }
            }
            if sset.is_disjoint(tset) {
                let rest = sset.union(tset).complement(d);
                let s_off = index::axis_offsets(dims, sset);
                let t_off = index::axis_offsets(dims, tset);
                for (ki, &kb) in index::axis_offsets(dims, rest).iter().enumerate() {
                    let mut lhs = 0.0f64;
                    let mut total = 0.0;
                    for &j in &t_off {
                        let mut slice = 0.0;
                        for &i in &s_off {
                            slice += part[kb + j + i].powi(2);
                            total += v[kb + j + i].powi(2);
                        }
                        lhs = lhs.max(slice);
                    }
                    let rhs = scale * total;
                    report.slice_checks += 1;
                    if exceeds(lhs, rhs) {
                        report.violations.push(MaxSumViolation {
                            kind: MaxSumKind::SliceVsBlock,
                            s_set: sset,
                            t_set: tset,
                            k: index::delinearize(dims, rest, FlatIndex::from_zero_based(ki))?,
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}
