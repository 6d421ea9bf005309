use nalgebra::DMatrix;
use ndarray::{ArrayD, Dimension};

use super::partition::{enumerate_partitions, SetPartition};
use crate::error::{Error, Result};
use crate::index::AxisSet;
use crate::rng;

/// Largest array (in entries) accepted by [`partition_norm`].
pub const MAX_ENTRIES: usize = 100_000;

/// Settings for the alternating maximization used when a partition has three or more blocks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormConfig {
    pub restarts: usize,
    /// Relative change in the objective below which a restart stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            restarts: 32,
            tolerance: 1e-10,
            max_iterations: 10_000,
            seed: 0,
        }
    }
}

/// A partition norm value with solver diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionNorm {
    pub value: f64,
    /// `false` when `value` is only a lower bound from alternating maximization.
    pub exact: bool,
    pub restarts: usize,
    pub iterations: usize,
    /// Restarts that met the tolerance before the iteration cap.
    pub converged_restarts: usize,
}

/// `B` regrouped so that every partition block becomes a single mode.
///
/// Data is laid out with the first mode varying fastest.
struct BlockTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl BlockTensor {
    fn new(b: &ArrayD<f64>, partition: &SetPartition) -> Self {
        let dims = b.shape();
        let shape: Vec<usize> = partition
            .blocks()
            .iter()
            .map(|blk| blk.iter().map(|a| dims[a - 1]).product())
            .collect();
        let mut strides = vec![1usize; shape.len()];
        for l in 1..shape.len() {
            strides[l] = strides[l - 1] * shape[l - 1];
        }
        // Within a block the smallest axis varies fastest.
        let mut axis_weight = vec![0usize; dims.len()];
        for (l, blk) in partition.blocks().iter().enumerate() {
            let mut w = strides[l];
            for a in blk.iter() {
                axis_weight[a - 1] = w;
                w *= dims[a - 1];
            }
        }
        let mut data = vec![0.0; b.len()];
        for (ix, &v) in b.indexed_iter() {
            let pos: usize = ix.as_array_view().iter().zip(&axis_weight).map(|(i, w)| i * w).sum();
            data[pos] = v;
        }
        BlockTensor { shape, data }
    }

    /// Contracts every mode except `skip` against `factors`.
    fn contract_except(&self, factors: &[Vec<f64>], skip: usize) -> Vec<f64> {
        let k = self.shape.len();
        let mut out = vec![0.0; self.shape[skip]];
        let mut idx = vec![0usize; k];
        for &v in &self.data {
            if v != 0.0 {
                let mut w = v;
                for l in 0..k {
                    if l != skip {
                        w *= factors[l][idx[l]];
                    }
                }
                out[idx[skip]] += w;
            }
            for l in 0..k {
                idx[l] += 1;
                if idx[l] < self.shape[l] {
                    break;
                }
                idx[l] = 0;
            }
        }
        out
    }

    /// Mode-`l` unfolding `M_l M_l^T`.
    fn unfolding_gram(&self, mode: usize) -> DMatrix<f64> {
        let rows = self.shape[mode];
        let stride: usize = self.shape[..mode].iter().product();
        let cols = self.data.len() / rows;
        let mut m = DMatrix::zeros(rows, cols);
        for (pos, &v) in self.data.iter().enumerate() {
            let r = (pos / stride) % rows;
            let c = pos % stride + (pos / (stride * rows)) * stride;
            m[(r, c)] = v;
        }
        &m * m.transpose()
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a /= n);
    }
    n
}

fn leading_eigenvector(g: DMatrix<f64>) -> Vec<f64> {
    let eig = g.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    eig.eigenvectors.column(top).iter().copied().collect()
}

/// `||B||_{I_1, ..., I_kappa}`: the supremum of the multilinear form of `B`
/// over unit vectors, one per block.
///
/// One block gives the Frobenius norm and two blocks the spectral norm of the
/// matching matricization; both are exact. With three or more blocks the value
/// comes from alternating maximization with restarts and is a lower bound.
pub fn partition_norm(b: &ArrayD<f64>, partition: &SetPartition, cfg: &NormConfig) -> Result<PartitionNorm> {
    let order = b.ndim();
    if partition.ground() != AxisSet::full(order) {
        return Err(Error::Argument(format!(
            "partition {partition} does not cover the {order} axes of the array"
        )));
    }
    if b.len() > MAX_ENTRIES {
        return Err(Error::Budget(format!(
            "array with {} entries exceeds the partition-norm budget of {MAX_ENTRIES}",
            b.len()
        )));
    }
    let exact = |value| PartitionNorm {
        value,
        exact: true,
        restarts: 0,
        iterations: 0,
        converged_restarts: 0,
    };
    match partition.len() {
        1 => Ok(exact(b.iter().map(|v| v * v).sum::<f64>().sqrt())),
        2 => {
            let t = BlockTensor::new(b, partition);
            let m = DMatrix::from_column_slice(t.shape[0], t.shape[1], &t.data);
            Ok(exact(m.singular_values().max()))
        }
        _ => Ok(alternating_maximization(&BlockTensor::new(b, partition), cfg)),
    }
}

fn alternating_maximization(t: &BlockTensor, cfg: &NormConfig) -> PartitionNorm {
    let k = t.shape.len();
    let mut best = PartitionNorm {
        value: 0.0,
        exact: false,
        restarts: cfg.restarts.max(1),
        iterations: 0,
        converged_restarts: 0,
    };
    let mut rng = rng::stream_rng(rng::derive_seed(cfg.seed, rng::labels::RESTARTS), 0);
    for restart in 0..best.restarts {
        let mut factors: Vec<Vec<f64>> = if restart == 0 {
            (0..k).map(|l| leading_eigenvector(t.unfolding_gram(l))).collect()
        } else {
            t.shape.iter().map(|&n| rng::unit_gaussian_vec(&mut rng, n)).collect()
        };
        let mut value = 0.0;
        let mut converged = false;
        for _ in 0..cfg.max_iterations {
            best.iterations += 1;
            let prev = value;
            for l in 0..k {
                let mut g = t.contract_except(&factors, l);
                value = normalize(&mut g);
                if value == 0.0 {
                    // Degenerate direction; any unit vector keeps the objective at zero.
                    g[0] = 1.0;
                }
                factors[l] = g;
            }
            if (value - prev).abs() <= cfg.tolerance * value.max(1e-300) {
                converged = true;
                break;
            }
        }
        if converged {
            best.converged_restarts += 1;
        }
        best.value = best.value.max(value);
    }
    log::debug!(
        "alternating maximization over shape {:?}: value {:.6e}, {} restarts, {} iterations, {} converged",
        t.shape,
        best.value,
        best.restarts,
        best.iterations,
        best.converged_restarts
    );
    best
}

/// `m_p(B) = sum_kappa p^(kappa/2) sum_{partitions with kappa blocks} ||B||_{I_1..I_kappa}`
/// over all partitions of the axes of `B`.
pub fn moment_functional(b: &ArrayD<f64>, p: f64, cfg: &NormConfig) -> Result<f64> {
    let mut total = 0.0;
    for partition in enumerate_partitions(AxisSet::full(b.ndim()), None)? {
        let norm = partition_norm(b, &partition, cfg)?;
        total += p.powf(partition.len() as f64 / 2.0) * norm.value;
    }
    Ok(total)
}
