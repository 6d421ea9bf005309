//! Coordinate layer for order-d arrays.
//!
//! Axes are labelled `1..=d` and coordinates along axis `l` take values in
//! `1..=n_l`. A [`PartialIndex`] fixes coordinates on a subset of axes. The
//! linearization `L^n_I` maps a partial index on `I` to `1..=prod_{l in I} n_l`
//! with the smallest axis label varying fastest; [`vectorize`] lays a full
//! array out in the same order.

use std::cmp::Ordering;
use std::fmt;

use ndarray::{ArrayD, IxDyn, ShapeBuilder};

use crate::error::{Error, Result};

/// Largest axis label an [`AxisSet`] can hold.
pub const MAX_AXES: usize = 32;

/// A set of axis labels in `1..=32`, stored as a bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AxisSet(u32);

impl AxisSet {
    pub const fn empty() -> Self {
        AxisSet(0)
    }

    /// `{1, ..., d}`.
    pub fn full(d: usize) -> Self {
        assert!(d <= MAX_AXES, "at most {MAX_AXES} axes");
        if d == MAX_AXES {
            AxisSet(u32::MAX)
        } else {
            AxisSet((1u32 << d) - 1)
        }
    }

    /// # Panics
    ///
    /// Panics if a label is `0` or exceeds [`MAX_AXES`].
    pub fn from_axes(axes: &[usize]) -> Self {
        axes.iter().fold(AxisSet::empty(), |acc, &l| acc.with(l))
    }

    pub const fn from_bits(bits: u32) -> Self {
        AxisSet(bits)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    /// This set with `axis` added.
    pub fn with(self, axis: usize) -> Self {
        assert!((1..=MAX_AXES).contains(&axis), "axis label {axis} out of range");
        AxisSet(self.0 | (1 << (axis - 1)))
    }

    pub fn contains(self, axis: usize) -> bool {
        (1..=MAX_AXES).contains(&axis) && self.0 & (1 << (axis - 1)) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        AxisSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        AxisSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        AxisSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// `{l + by : l in self}`.
    pub fn shifted(self, by: usize) -> Self {
        self.iter().fold(AxisSet::empty(), |acc, l| acc.with(l + by))
    }

    /// `[d] \ self`.
    pub fn complement(self, d: usize) -> Self {
        AxisSet::full(d).difference(self)
    }

    /// Largest label, if any.
    pub fn max(self) -> Option<usize> {
        (self.0 != 0).then(|| (32 - self.0.leading_zeros()) as usize)
    }

    /// Labels in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (1..=MAX_AXES).filter(move |l| bits & (1 << (l - 1)) != 0)
    }

    /// Lexicographic order on the ascending label lists, e.g. `{1,2} < {1,3} < {2}`.
    pub fn lex_cmp(self, other: Self) -> Ordering {
        self.iter().cmp(other.iter())
    }

    /// All subsets of `self`, in increasing bit-mask order.
    pub fn subsets(self) -> impl Iterator<Item = AxisSet> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full { None } else { Some(cur.wrapping_sub(full) & full) };
            Some(AxisSet(cur))
        })
    }
}

impl fmt::Debug for AxisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for AxisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, l) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// The dimension vector `(n_1, ..., n_d)` and its product `N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KronDims {
    dims: Vec<usize>,
    total: usize,
}

impl KronDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Argument("dimension vector must be nonempty".into()));
        }
        if dims.len() > MAX_AXES {
            return Err(Error::Argument(format!("at most {MAX_AXES} axes supported")));
        }
        if let Some(pos) = dims.iter().position(|&n| n == 0) {
            return Err(Error::Argument(format!("axis {} has size 0", pos + 1)));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::Argument("product of dimensions overflows".into()))?;
        Ok(KronDims { dims, total })
    }

    /// Number of axes `d`.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Size of axis `axis` (1-based).
    pub fn dim(&self, axis: usize) -> usize {
        self.dims[axis - 1]
    }

    /// `N = prod n_l`.
    pub fn total(&self) -> usize {
        self.total
    }

    /// All axes `{1..d}`.
    pub fn axes(&self) -> AxisSet {
        AxisSet::full(self.order())
    }

    /// `(n_1, ..., n_d, n_1, ..., n_d)`.
    pub fn doubled(&self) -> KronDims {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&self.dims);
        KronDims::new(dims).expect("doubling valid dims stays valid")
    }

    /// `prod_{l in axes} n_l`.
    pub fn size_of(&self, axes: AxisSet) -> usize {
        axes.iter().map(|l| self.dim(l)).product()
    }

    /// Step in the vectorized layout when coordinate `axis` increases by one.
    pub fn stride(&self, axis: usize) -> usize {
        self.dims[..axis - 1].iter().product()
    }

    pub fn all_powers_of_two(&self) -> bool {
        self.dims.iter().all(|n| n.is_power_of_two())
    }

    fn check_axes(&self, axes: AxisSet) -> Result<()> {
        if !axes.is_subset_of(self.axes()) {
            return Err(Error::InvalidSubset(format!(
                "axes {axes} not contained in [{}]",
                self.order()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for KronDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// A 1-based position in `1..=prod_{l in I} n_l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlatIndex(usize);

impl FlatIndex {
    pub fn new(value: usize) -> Result<Self> {
        if value == 0 {
            return Err(Error::InvalidIndex("flat indices are 1-based".into()));
        }
        Ok(FlatIndex(value))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub(crate) fn from_zero_based(v: usize) -> Self {
        FlatIndex(v + 1)
    }

    pub(crate) fn zero_based(self) -> usize {
        self.0 - 1
    }
}

/// Coordinates on a subset of axes. Equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialIndex {
    axes: AxisSet,
    /// One coordinate per axis in ascending axis order.
    coords: Vec<usize>,
}

impl PartialIndex {
    /// The unique index on the empty axis set.
    pub fn empty() -> Self {
        PartialIndex {
            axes: AxisSet::empty(),
            coords: Vec::new(),
        }
    }

    /// Builds an index from `(axis, coordinate)` pairs, validated against `dims`.
    pub fn new(dims: &KronDims, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut sorted = pairs.to_vec();
        sorted.sort_unstable();
        let mut axes = AxisSet::empty();
        for &(axis, _) in &sorted {
            if axis == 0 || axis > dims.order() {
                return Err(Error::InvalidIndex(format!(
                    "axis {axis} outside [1, {}]",
                    dims.order()
                )));
            }
            if axes.contains(axis) {
                return Err(Error::InvalidIndex(format!("axis {axis} given twice")));
            }
            axes = axes.with(axis);
        }
        let idx = PartialIndex {
            axes,
            coords: sorted.into_iter().map(|(_, c)| c).collect(),
        };
        idx.validate(dims)?;
        Ok(idx)
    }

    /// A full index `(i_1, ..., i_d)`.
    pub fn full(dims: &KronDims, coords: &[usize]) -> Result<Self> {
        if coords.len() != dims.order() {
            return Err(Error::InvalidIndex(format!(
                "expected {} coordinates, got {}",
                dims.order(),
                coords.len()
            )));
        }
        let idx = PartialIndex {
            axes: dims.axes(),
            coords: coords.to_vec(),
        };
        idx.validate(dims)?;
        Ok(idx)
    }

    pub fn axes(&self) -> AxisSet {
        self.axes
    }

    /// Coordinates in ascending axis order.
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn get(&self, axis: usize) -> Option<usize> {
        self.pairs().find(|&(l, _)| l == axis).map(|(_, c)| c)
    }

    /// `(axis, coordinate)` pairs in ascending axis order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.axes.iter().zip(self.coords.iter().copied())
    }

    /// Checks every coordinate against its axis bound.
    pub fn validate(&self, dims: &KronDims) -> Result<()> {
        dims.check_axes(self.axes)
            .map_err(|e| Error::InvalidIndex(e.to_string()))?;
        for (axis, c) in self.pairs() {
            if c == 0 || c > dims.dim(axis) {
                return Err(Error::InvalidIndex(format!(
                    "coordinate {c} on axis {axis} outside [1, {}]",
                    dims.dim(axis)
                )));
            }
        }
        Ok(())
    }
}

/// `L^n_I`: position of a partial index in the linearization of its axis subset.
pub fn linearize(dims: &KronDims, idx: &PartialIndex) -> Result<FlatIndex> {
    idx.validate(dims)?;
    let mut flat = 0usize;
    let mut stride = 1usize;
    for (axis, c) in idx.pairs() {
        flat += (c - 1) * stride;
        stride *= dims.dim(axis);
    }
    Ok(FlatIndex(flat + 1))
}

/// Inverse of [`linearize`] on the axis subset `axes`.
pub fn delinearize(dims: &KronDims, axes: AxisSet, flat: FlatIndex) -> Result<PartialIndex> {
    dims.check_axes(axes)?;
    let size = dims.size_of(axes);
    if flat.0 == 0 || flat.0 > size {
        return Err(Error::InvalidIndex(format!(
            "flat index {} outside [1, {size}]",
            flat.0
        )));
    }
    let mut rest = flat.0 - 1;
    let coords = axes
        .iter()
        .map(|axis| {
            let n = dims.dim(axis);
            let c = rest % n + 1;
            rest /= n;
            c
        })
        .collect();
    Ok(PartialIndex { axes, coords })
}

/// Index-combination operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    /// `i x. j` on `I u J` for disjoint `I`, `J`.
    Cross,
    /// `i +. j` on `I u (J + d)` for `I` in `[2d]`, `J` in `[d]`: `j` is shifted by `order = d`.
    ShiftPlus { order: usize },
}

pub fn combine(a: &PartialIndex, b: &PartialIndex, mode: Combine) -> Result<PartialIndex> {
    let (b_axes, shift) = match mode {
        Combine::Cross => (b.axes, 0),
        Combine::ShiftPlus { order } => {
            if !a.axes.is_subset_of(AxisSet::full(2 * order)) {
                return Err(Error::InvalidSubset(format!(
                    "left operand axes {} not in [{}]",
                    a.axes,
                    2 * order
                )));
            }
            if !b.axes.is_subset_of(AxisSet::full(order)) {
                return Err(Error::InvalidSubset(format!(
                    "right operand axes {} not in [{order}]",
                    b.axes
                )));
            }
            (b.axes.shifted(order), order)
        }
    };
    if !a.axes.is_disjoint(b_axes) {
        return Err(Error::Conflict(format!(
            "axes {} and {} overlap",
            a.axes, b_axes
        )));
    }
    let mut pairs: Vec<(usize, usize)> = a
        .pairs()
        .chain(b.pairs().map(|(l, c)| (l + shift, c)))
        .collect();
    pairs.sort_unstable();
    Ok(PartialIndex {
        axes: a.axes.union(b_axes),
        coords: pairs.into_iter().map(|(_, c)| c).collect(),
    })
}

/// `j_I`: keeps the coordinates on `axes`.
pub fn restrict(idx: &PartialIndex, axes: AxisSet) -> Result<PartialIndex> {
    if !axes.is_subset_of(idx.axes) {
        return Err(Error::InvalidSubset(format!(
            "{axes} is not a subset of {}",
            idx.axes
        )));
    }
    let coords = idx
        .pairs()
        .filter(|&(l, _)| axes.contains(l))
        .map(|(_, c)| c)
        .collect();
    Ok(PartialIndex { axes, coords })
}

/// All partial indices on `axes`, in linearized order.
pub fn all_indices(dims: &KronDims, axes: AxisSet) -> Result<Vec<PartialIndex>> {
    dims.check_axes(axes)?;
    (1..=dims.size_of(axes))
        .map(|f| delinearize(dims, axes, FlatIndex(f)))
        .collect()
}

/// For each linearized index `a` on `axes` (0-based), the 0-based position in
/// the full vectorized layout of the partial index with other coordinates at 1.
///
/// Position of `i x. j` is `offsets(I)[L_I(i)-1] + offsets(J)[L_J(j)-1]` for
/// complementary `I`, `J`.
pub fn axis_offsets(dims: &KronDims, axes: AxisSet) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for axis in axes.iter() {
        let stride = dims.stride(axis);
        let n = dims.dim(axis);
        let prev = std::mem::take(&mut offsets);
        offsets = Vec::with_capacity(prev.len() * n);
        for c in 0..n {
            offsets.extend(prev.iter().map(|o| o + c * stride));
        }
    }
    offsets
}

/// `vec(a)`: entry `a_j` goes to position `L^n(j)`.
pub fn vectorize(dims: &KronDims, array: &ArrayD<f64>) -> Result<Vec<f64>> {
    if array.shape() != dims.dims() {
        return Err(Error::Shape(format!(
            "array shape {:?} does not match dims {:?}",
            array.shape(),
            dims.dims()
        )));
    }
    // Reversing the axes makes the first original axis the innermost one.
    Ok(array.t().iter().copied().collect())
}

/// Inverse of [`vectorize`].
pub fn devectorize(dims: &KronDims, vec: &[f64]) -> Result<ArrayD<f64>> {
    if vec.len() != dims.total() {
        return Err(Error::Shape(format!(
            "vector of length {} cannot hold {} entries",
            vec.len(),
            dims.total()
        )));
    }
    ArrayD::from_shape_vec(IxDyn(dims.dims()).f(), vec.to_vec())
        .map_err(|e| Error::Shape(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dims(v: &[usize]) -> KronDims {
        KronDims::new(v.to_vec()).unwrap()
    }

    #[test]
    fn linearize_example() {
        let d = dims(&[2, 3]);
        let idx = PartialIndex::full(&d, &[2, 3]).unwrap();
        assert_eq!(linearize(&d, &idx).unwrap().get(), 6);
        let back = delinearize(&d, d.axes(), FlatIndex::new(6).unwrap()).unwrap();
        assert_eq!(back, idx);
    }

    #[test]
    fn all_ones_is_first() {
        let d = dims(&[3, 5, 2, 7]);
        let idx = PartialIndex::full(&d, &[1, 1, 1, 1]).unwrap();
        assert_eq!(linearize(&d, &idx).unwrap().get(), 1);
        let first = delinearize(&d, d.axes(), FlatIndex::new(1).unwrap()).unwrap();
        assert_eq!(first.coords(), &[1, 1, 1, 1]);
    }

    #[test]
    fn two_by_two_enumeration() {
        let d = dims(&[2, 2]);
        let expect = [((1, 1), 1), ((2, 1), 2), ((1, 2), 3), ((2, 2), 4)];
        for ((a, b), f) in expect {
            let idx = PartialIndex::full(&d, &[a, b]).unwrap();
            assert_eq!(linearize(&d, &idx).unwrap().get(), f);
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let d = dims(&[2, 3]);
        assert!(matches!(
            PartialIndex::full(&d, &[3, 1]),
            Err(Error::InvalidIndex(_))
        ));
        assert!(matches!(
            delinearize(&d, d.axes(), FlatIndex(7)),
            Err(Error::InvalidIndex(_))
        ));
        assert!(FlatIndex::new(0).is_err());
        assert!(matches!(
            delinearize(&d, AxisSet::from_axes(&[3]), FlatIndex(1)),
            Err(Error::InvalidSubset(_))
        ));
    }

    #[test]
    fn partial_linearization_uses_only_listed_axes() {
        let d = dims(&[2, 3, 4]);
        let idx = PartialIndex::new(&d, &[(3, 2), (1, 2)]).unwrap();
        // (2-1)*1 + (2-1)*2 + 1
        assert_eq!(linearize(&d, &idx).unwrap().get(), 4);
        assert_eq!(d.size_of(idx.axes()), 8);
    }

    #[test]
    fn round_trip_exhaustive_small() {
        let d = dims(&[2, 2, 2]);
        for f in 1..=8 {
            let idx = delinearize(&d, d.axes(), FlatIndex(f)).unwrap();
            assert_eq!(linearize(&d, &idx).unwrap().get(), f);
        }
    }

    #[test]
    fn empty_axis_set_has_one_index() {
        let d = dims(&[3, 4]);
        let all = all_indices(&d, AxisSet::empty()).unwrap();
        assert_eq!(all, vec![PartialIndex::empty()]);
        assert_eq!(linearize(&d, &PartialIndex::empty()).unwrap().get(), 1);
    }

    #[test]
    fn combine_cross_and_shift() {
        let d = dims(&[3, 4]);
        let a = PartialIndex::new(&d, &[(1, 2)]).unwrap();
        let b = PartialIndex::new(&d, &[(2, 4)]).unwrap();
        let ab = combine(&a, &b, Combine::Cross).unwrap();
        assert_eq!(ab, PartialIndex::full(&d, &[2, 4]).unwrap());
        assert_eq!(combine(&PartialIndex::empty(), &b, Combine::Cross).unwrap(), b);

        let shifted = combine(&a, &b, Combine::ShiftPlus { order: 2 }).unwrap();
        assert_eq!(shifted.axes(), AxisSet::from_axes(&[1, 4]));
        assert_eq!(shifted.get(4), Some(4));

        assert!(matches!(
            combine(&a, &a, Combine::Cross),
            Err(Error::Conflict(_))
        ));
        let on_three = PartialIndex {
            axes: AxisSet::from_axes(&[3]),
            coords: vec![1],
        };
        assert!(matches!(
            combine(&on_three, &PartialIndex::new(&d, &[(1, 1)]).unwrap(), Combine::ShiftPlus { order: 2 }),
            Err(Error::Conflict(_))
        ));
    }

    #[test]
    fn restrict_cases() {
        let d = dims(&[2, 2, 3]);
        let idx = PartialIndex::full(&d, &[2, 1, 3]).unwrap();
        assert_eq!(restrict(&idx, d.axes()).unwrap(), idx);
        assert_eq!(restrict(&idx, AxisSet::empty()).unwrap(), PartialIndex::empty());
        let r = restrict(&idx, AxisSet::from_axes(&[1, 3])).unwrap();
        assert_eq!(r.pairs().collect::<Vec<_>>(), vec![(1, 2), (3, 3)]);
        let small = PartialIndex::new(&d, &[(1, 1)]).unwrap();
        assert!(matches!(
            restrict(&small, AxisSet::from_axes(&[2])),
            Err(Error::InvalidSubset(_))
        ));
    }

    #[test]
    fn vectorize_cases() {
        let d1 = dims(&[4]);
        let a = ArrayD::from_shape_vec(IxDyn(&[4]), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(vectorize(&d1, &a).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);

        let d2 = dims(&[2, 2]);
        let mut b = ArrayD::zeros(IxDyn(&[2, 2]));
        b[[0, 0]] = 5.0;
        assert_eq!(vectorize(&d2, &b).unwrap(), vec![5.0, 0.0, 0.0, 0.0]);

        let d3 = dims(&[2, 3]);
        let mut c = ArrayD::zeros(IxDyn(&[2, 3]));
        c[[1, 2]] = 1.0;
        let v = vectorize(&d3, &c).unwrap();
        assert_eq!(v[5], 1.0);
        assert!(matches!(vectorize(&d2, &c), Err(Error::Shape(_))));
    }

    #[test]
    fn axis_offsets_match_linearize() {
        let d = dims(&[2, 3, 2]);
        let s = AxisSet::from_axes(&[1, 3]);
        let c = s.complement(3);
        let off_s = axis_offsets(&d, s);
        let off_c = axis_offsets(&d, c);
        for (a, ia) in all_indices(&d, s).unwrap().iter().enumerate() {
            for (b, ib) in all_indices(&d, c).unwrap().iter().enumerate() {
                let full = combine(ia, ib, Combine::Cross).unwrap();
                assert_eq!(linearize(&d, &full).unwrap().get() - 1, off_s[a] + off_c[b]);
            }
        }
    }

    #[test]
    fn subsets_enumeration() {
        let s = AxisSet::from_axes(&[1, 3]);
        let subs: Vec<AxisSet> = s.subsets().collect();
        assert_eq!(subs.len(), 4);
        assert!(subs.contains(&AxisSet::from_axes(&[3])));
        assert_eq!(AxisSet::empty().subsets().count(), 1);
        assert_eq!(
            AxisSet::from_axes(&[1, 2]).lex_cmp(AxisSet::from_axes(&[1, 3])),
            Ordering::Less
        );
        assert_eq!(
            AxisSet::from_axes(&[1, 3]).lex_cmp(AxisSet::from_axes(&[2])),
            Ordering::Less
        );
    }

    proptest! {
        #[test]
        fn linearize_bijective(raw in proptest::collection::vec(1usize..5, 1..4)) {
            let d = KronDims::new(raw).unwrap();
            let mut seen = vec![false; d.total()];
            for f in 1..=d.total() {
                let idx = delinearize(&d, d.axes(), FlatIndex(f)).unwrap();
                let back = linearize(&d, &idx).unwrap().get();
                prop_assert_eq!(back, f);
                prop_assert!(!seen[back - 1]);
                seen[back - 1] = true;
            }
        }

        #[test]
        fn vectorize_preserves_norm(raw in proptest::collection::vec(1usize..4, 1..4), seed in 0u64..1000) {
            let d = KronDims::new(raw).unwrap();
            let mut rng = crate::rng::stream_rng(seed, 0);
            let data = crate::rng::gaussian_vec(&mut rng, d.total());
            let arr = ArrayD::from_shape_vec(IxDyn(d.dims()), data).unwrap();
            let v = vectorize(&d, &arr).unwrap();
            let na: f64 = arr.iter().map(|a| a * a).sum();
            let nv: f64 = v.iter().map(|a| a * a).sum();
            prop_assert!((na - nv).abs() <= 1e-12 * na.max(1.0));
            prop_assert_eq!(devectorize(&d, &v).unwrap(), arr);
        }

        #[test]
        fn cross_is_commutative_and_associative(c1 in 1usize..3, c2 in 1usize..4, c3 in 1usize..3) {
            let d = KronDims::new(vec![2, 3, 2]).unwrap();
            let a = PartialIndex::new(&d, &[(1, c1)]).unwrap();
            let b = PartialIndex::new(&d, &[(2, c2)]).unwrap();
            let c = PartialIndex::new(&d, &[(3, c3)]).unwrap();
            let left = combine(&combine(&a, &b, Combine::Cross).unwrap(), &c, Combine::Cross).unwrap();
            let right = combine(&a, &combine(&b, &c, Combine::Cross).unwrap(), Combine::Cross).unwrap();
            prop_assert_eq!(&left, &right);
            prop_assert_eq!(combine(&b, &a, Combine::Cross).unwrap(), combine(&a, &b, Combine::Cross).unwrap());
        }
    }
}
