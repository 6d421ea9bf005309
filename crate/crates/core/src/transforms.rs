//! Walsh-Hadamard transforms and the KFJLT operator.
//!
//! All Kronecker products use the vectorized layout of [`crate::index`]: the
//! entry of `x^(1) (x) ... (x) x^(d)` at `L^n(i)` is `prod_j x^(j)_{i_j}`,
//! so the first factor varies fastest.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::index::KronDims;
use crate::rng::{self, SAMPLE_STREAM, SIGN_STREAM};

/// In-place orthonormal Walsh-Hadamard transform.
///
/// Applies `H_k` with `H_{k+1} = [[H_k, H_k], [H_k, -H_k]] / sqrt(2)`; the
/// result is symmetric and orthogonal so `fwht(fwht(x)) = x`.
pub fn fwht_in_place(x: &mut [f64]) -> Result<()> {
    let n = x.len();
    if !n.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "Hadamard transform needs a power-of-two length, got {n}"
        )));
    }
    butterflies(x, n, 1, 0);
    let norm = 1.0 / (n as f64).sqrt();
    x.iter_mut().for_each(|v| *v *= norm);
    Ok(())
}

/// Orthonormal Walsh-Hadamard transform of `x`.
pub fn fwht(x: &[f64]) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    fwht_in_place(&mut y)?;
    Ok(y)
}

/// Unnormalized radix-2 butterflies on the fiber `x[base + k * stride]`, `k < n`.
#[inline]
fn butterflies(x: &mut [f64], n: usize, stride: usize, base: usize) {
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(2 * half) {
            for k in block..block + half {
                let i = base + k * stride;
                let j = i + half * stride;
                let (a, b) = (x[i], x[j]);
                x[i] = a + b;
                x[j] = a - b;
            }
        }
        half *= 2;
    }
}

/// In-place `(H_{n_1} (x) ... (x) H_{n_d}) x`, one axis at a time starting with axis 1.
pub fn kron_fwht_in_place(dims: &KronDims, x: &mut [f64]) -> Result<()> {
    check_hadamard_dims(dims)?;
    if x.len() != dims.total() {
        return Err(Error::Dimension(format!(
            "vector of length {} does not match N = {}",
            x.len(),
            dims.total()
        )));
    }
    for axis in 1..=dims.order() {
        let n = dims.dim(axis);
        if n == 1 {
            continue;
        }
        let stride = dims.stride(axis);
        let block = stride * n;
        for outer in (0..x.len()).step_by(block) {
            for inner in 0..stride {
                butterflies(x, n, stride, outer + inner);
            }
        }
    }
    let norm = 1.0 / (dims.total() as f64).sqrt();
    x.iter_mut().for_each(|v| *v *= norm);
    Ok(())
}

fn check_hadamard_dims(dims: &KronDims) -> Result<()> {
    if let Some(pos) = dims.dims().iter().position(|n| !n.is_power_of_two()) {
        return Err(Error::Dimension(format!(
            "axis {} has size {}, which is not a power of two",
            pos + 1,
            dims.dim(pos + 1)
        )));
    }
    Ok(())
}

/// Dense orthonormal Hadamard matrix of size `n`, built entrywise from the sign rule
/// `H_{jk} = (-1)^{popcount((j-1) & (k-1))} / sqrt(n)`.
pub fn hadamard_matrix(n: usize) -> Result<DMatrix<f64>> {
    if !n.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "Hadamard matrix needs a power-of-two size, got {n}"
        )));
    }
    let norm = 1.0 / (n as f64).sqrt();
    Ok(DMatrix::from_fn(n, n, |j, k| {
        if (j & k).count_ones() % 2 == 0 {
            norm
        } else {
            -norm
        }
    }))
}

/// `x^(1) (x) ... (x) x^(d)` in the vectorized layout.
pub fn kron_materialize<V: AsRef<[f64]>>(factors: &[V]) -> Result<Vec<f64>> {
    if factors.is_empty() {
        return Err(Error::Argument("need at least one factor".into()));
    }
    let mut out = vec![1.0];
    for f in factors {
        let f = f.as_ref();
        let mut next = Vec::with_capacity(out.len() * f.len());
        for &c in f {
            next.extend(out.iter().map(|v| v * c));
        }
        out = next;
    }
    Ok(out)
}

/// The sign factors `xi^(1), ..., xi^(d)` and the seed they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct RademacherFactors {
    factors: Vec<Vec<f64>>,
    seed: u64,
}

impl RademacherFactors {
    /// Draws factor 1, then factor 2, ... from the sign stream of `seed`.
    pub fn draw(dims: &KronDims, seed: u64) -> Self {
        let mut rng = rng::stream_rng(seed, SIGN_STREAM);
        let factors = dims
            .dims()
            .iter()
            .map(|&n| rng::rademacher_vec(&mut rng, n))
            .collect();
        RademacherFactors { factors, seed }
    }

    /// Wraps explicit sign vectors; every entry must be exactly `+1` or `-1`.
    pub fn from_factors(factors: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if factors.iter().flatten().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::Argument("sign factors must contain only +1 and -1".into()));
        }
        Ok(RademacherFactors { factors, seed })
    }

    pub fn factors(&self) -> &[Vec<f64>] {
        &self.factors
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The full diagonal `xi = xi^(1) (x) ... (x) xi^(d)`.
    pub fn kron(&self) -> Vec<f64> {
        kron_materialize(&self.factors).expect("at least one factor")
    }
}

/// Row indices drawn uniformly with replacement; values are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    rows: Vec<usize>,
}

impl SampleSet {
    pub fn draw(total: usize, m: usize, seed: u64) -> Self {
        let mut rng = rng::stream_rng(seed, SAMPLE_STREAM);
        Self::draw_from(&mut rng, total, m)
    }

    pub fn draw_from<R: Rng + ?Sized>(rng: &mut R, total: usize, m: usize) -> Self {
        let rows = (0..m)
            .map(|_| rng.random_range(0..total as u64) as usize + 1)
            .collect();
        SampleSet { rows }
    }

    /// Explicit rows (1-based, duplicates allowed).
    pub fn from_rows(rows: Vec<usize>, total: usize) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r == 0 || r > total) {
            return Err(Error::Argument(format!("row {bad} outside [1, {total}]")));
        }
        Ok(SampleSet { rows })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// `sqrt(N/m) * P_Omega * (H_{n_1} (x) ... (x) H_{n_d}) * D_xi`.
#[derive(Clone, Debug)]
pub struct KfjltOperator {
    dims: KronDims,
    signs: RademacherFactors,
    samples: SampleSet,
    scale: f64,
}

/// Draws a KFJLT operator. Deterministic in `(dims, m, seed)`; signs and rows
/// come from separate streams of `seed`.
pub fn build_operator(dims: &KronDims, m: usize, seed: u64) -> Result<KfjltOperator> {
    if m < 1 {
        return Err(Error::Construction("target dimension m must be at least 1".into()));
    }
    check_hadamard_dims(dims).map_err(|e| Error::Construction(e.to_string()))?;
    let signs = RademacherFactors::draw(dims, seed);
    let samples = SampleSet::draw(dims.total(), m, seed);
    KfjltOperator::from_parts(dims.clone(), signs, samples)
}

impl KfjltOperator {
    pub fn from_parts(dims: KronDims, signs: RademacherFactors, samples: SampleSet) -> Result<Self> {
        check_hadamard_dims(&dims).map_err(|e| Error::Construction(e.to_string()))?;
        if samples.is_empty() {
            return Err(Error::Construction("sample set is empty".into()));
        }
        let lens: Vec<usize> = signs.factors().iter().map(Vec::len).collect();
        if lens != dims.dims() {
            return Err(Error::Construction(format!(
                "sign factor lengths {lens:?} do not match dims {:?}",
                dims.dims()
            )));
        }
        if samples.rows().iter().any(|&r| r == 0 || r > dims.total()) {
            return Err(Error::Construction("sample row outside [1, N]".into()));
        }
        let scale = (dims.total() as f64 / samples.len() as f64).sqrt();
        Ok(KfjltOperator {
            dims,
            signs,
            samples,
            scale,
        })
    }

    pub fn dims(&self) -> &KronDims {
        &self.dims
    }

    pub fn signs(&self) -> &RademacherFactors {
        &self.signs
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    /// `sqrt(N/m)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn target_dim(&self) -> usize {
        self.samples.len()
    }

    pub fn input_dim(&self) -> usize {
        self.dims.total()
    }

    /// `H D_xi x` before subsampling; an exact isometry.
    pub fn pre_subsampling(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dims.total() {
            return Err(Error::Dimension(format!(
                "input has length {}, expected N = {}",
                x.len(),
                self.dims.total()
            )));
        }
        let xi = self.signs.kron();
        let mut y: Vec<f64> = x.iter().zip(&xi).map(|(a, s)| a * s).collect();
        kron_fwht_in_place(&self.dims, &mut y)?;
        Ok(y)
    }

    /// Applies the operator to an arbitrary vector in `O(N log N)`.
    pub fn apply_dense(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = self.pre_subsampling(x)?;
        Ok(self
            .samples
            .rows()
            .iter()
            .map(|&r| self.scale * y[r - 1])
            .collect())
    }

    /// Applies the operator to `x^(1) (x) ... (x) x^(d)` without forming it.
    ///
    /// Each factor is sign-flipped and transformed on its own, and every sampled
    /// row multiplies one entry from each transformed factor.
    pub fn apply_factored<V: AsRef<[f64]>>(&self, factors: &[V]) -> Result<Vec<f64>> {
        if factors.len() != self.dims.order() {
            return Err(Error::Dimension(format!(
                "expected {} factors, got {}",
                self.dims.order(),
                factors.len()
            )));
        }
        let mut transformed = Vec::with_capacity(factors.len());
        for (axis, (f, xi)) in factors.iter().zip(self.signs.factors()).enumerate() {
            let f = f.as_ref();
            if f.len() != xi.len() {
                return Err(Error::Dimension(format!(
                    "factor {} has length {}, expected {}",
                    axis + 1,
                    f.len(),
                    xi.len()
                )));
            }
            let mut z: Vec<f64> = f.iter().zip(xi).map(|(a, s)| a * s).collect();
            fwht_in_place(&mut z)?;
            transformed.push(z);
        }
        let dims = self.dims.dims();
        Ok(self
            .samples
            .rows()
            .iter()
            .map(|&r| {
                let mut rest = r - 1;
                let mut prod = self.scale;
                for (z, &n) in transformed.iter().zip(dims) {
                    prod *= z[rest % n];
                    rest /= n;
                }
                prod
            })
            .collect())
    }

    /// The operator as a dense `m x N` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dims.total();
        let mut out = DMatrix::zeros(self.target_dim(), n);
        let mut e = vec![0.0; n];
        for col in 0..n {
            e[col] = 1.0;
            let y = self.apply_dense(&e).expect("basis vector has length N");
            out.set_column(col, &nalgebra::DVector::from_vec(y));
            e[col] = 0.0;
        }
        out
    }
}

/// `sqrt(N/m) * P_Omega * H` (no sign flips) as a dense matrix, for RIP experiments.
pub fn subsampled_hadamard(dims: &KronDims, m: usize, seed: u64) -> Result<DMatrix<f64>> {
    let op = build_operator(dims, m, seed)?;
    let ones = RademacherFactors {
        factors: dims.dims().iter().map(|&n| vec![1.0; n]).collect(),
        seed,
    };
    KfjltOperator::from_parts(dims.clone(), ones, op.samples.clone()).map(|op| op.to_matrix())
}

/// Dense `m x N` matrix with i.i.d. `N(0, 1/m)` entries.
#[derive(Clone, Debug)]
pub struct GaussianOperator {
    matrix: DMatrix<f64>,
}

pub fn gaussian_baseline(m: usize, n: usize, seed: u64) -> Result<GaussianOperator> {
    if m < 1 || n < 1 {
        return Err(Error::Argument(format!(
            "Gaussian baseline needs m, N >= 1 (got m = {m}, N = {n})"
        )));
    }
    let mut rng = rng::stream_rng(seed, SAMPLE_STREAM);
    let norm = 1.0 / (m as f64).sqrt();
    let entries: Vec<f64> = rng::gaussian_vec(&mut rng, m * n)
        .into_iter()
        .map(|g| g * norm)
        .collect();
    Ok(GaussianOperator {
        matrix: DMatrix::from_vec(m, n, entries),
    })
}

impl GaussianOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.matrix.ncols() {
            return Err(Error::Dimension(format!(
                "input has length {}, expected {}",
                x.len(),
                self.matrix.ncols()
            )));
        }
        let v = &self.matrix * nalgebra::DVector::from_column_slice(x);
        Ok(v.iter().copied().collect())
    }
}
