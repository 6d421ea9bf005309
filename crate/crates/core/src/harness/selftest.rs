//! Exhaustive oracle checks run by `kfjlt selftest`.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::Result;
use crate::index::{delinearize, linearize, FlatIndex, KronDims};
use crate::lower_bound::{enumerate_subspaces, indicator, orthogonal_complement};
use crate::rng;
use crate::transforms::{fwht, hadamard_matrix, kron_fwht_in_place, kron_materialize};

const TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestCheck {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest error seen, in the check's own units.
    pub max_error: f64,
}

impl SelftestCheck {
    fn new(name: &'static str) -> Self {
        SelftestCheck {
            name,
            cases: 0,
            failures: 0,
            max_error: 0.0,
        }
    }

    fn record(&mut self, error: f64, ok: bool) {
        self.cases += 1;
        self.max_error = self.max_error.max(error);
        if !ok {
            self.failures += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<SelftestCheck>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(SelftestCheck::passed)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `linearize` and `delinearize` are inverse bijections on every axis subset.
pub fn check_index_bijections() -> Result<SelftestCheck> {
    let mut check = SelftestCheck::new("index_bijections");
    let shapes: [&[usize]; 5] = [&[5], &[3, 4], &[2, 3, 2], &[4, 1, 3], &[2, 3, 2, 2]];
    for shape in shapes {
        let dims = KronDims::new(shape.to_vec())?;
        for axes in dims.axes().subsets() {
            let size = dims.size_of(axes);
            let mut seen = HashSet::new();
            for f in 1..=size {
                let idx = delinearize(&dims, axes, FlatIndex::new(f)?)?;
                let back = linearize(&dims, &idx)?.get();
                let fresh = seen.insert(idx.coords().to_vec());
                check.record((back as f64 - f as f64).abs(), back == f && fresh && idx.axes() == axes);
            }
        }
    }
    Ok(check)
}

/// `H^T H = I` for every power of two up to `max_n`.
pub fn check_hadamard_orthogonality(max_n: usize) -> Result<SelftestCheck> {
    let mut check = SelftestCheck::new("hadamard_orthogonality");
    let mut n = 2;
    while n <= max_n {
        let h = hadamard_matrix(n)?;
        let mut gram = h.tr_mul(&h);
        gram.fill_diagonal(0.0);
        let diag_err = h.column_iter().map(|c| (c.norm_squared() - 1.0).abs()).fold(0.0, f64::max);
        let err = gram.amax().max(diag_err);
        check.record(err, err <= TOL);
        n *= 2;
    }
    Ok(check)
}

/// `fwht(fwht(x)) = x` and `fwht(x) = H x` on random vectors, relative error.
pub fn check_fwht(max_n: usize, seed: u64) -> Result<SelftestCheck> {
    let mut check = SelftestCheck::new("fwht_identities");
    let mut g = rng::stream_rng(seed, 0);
    let mut n = 2;
    while n <= max_n {
        let x = rng::gaussian_vec(&mut g, n);
        let y = fwht(&x)?;
        let back = fwht(&y)?;
        let hx = hadamard_matrix(n)? * nalgebra::DVector::from_column_slice(&x);
        let err = (max_abs_diff(&back, &x) / norm(&x)).max(max_abs_diff(&y, hx.as_slice()) / norm(&x));
        check.record(err, err <= TOL);
        n *= 2;
    }
    Ok(check)
}

/// The separable transform maps `x_1 (x) ... (x) x_d` to `H x_1 (x) ... (x) H x_d`.
pub fn check_kron_fwht(seed: u64) -> Result<SelftestCheck> {
    let mut check = SelftestCheck::new("kron_fwht");
    let mut g = rng::stream_rng(seed, 0);
    let shapes: [&[usize]; 5] = [&[2, 4], &[4, 2, 2], &[8, 4], &[2, 2, 2, 2], &[16, 16]];
    for shape in shapes {
        let dims = KronDims::new(shape.to_vec())?;
        let factors: Vec<Vec<f64>> = shape.iter().map(|&n| rng::gaussian_vec(&mut g, n)).collect();
        let mut x = kron_materialize(&factors)?;
        kron_fwht_in_place(&dims, &mut x)?;
        let expected = kron_materialize(&factors.iter().map(|f| fwht(f)).collect::<Result<Vec<_>>>()?)?;
        let err = max_abs_diff(&x, &expected) / norm(&expected);
        check.record(err, err <= TOL);
    }
    Ok(check)
}

/// For every subspace `V` of `F_2^n`, `n <= max_n`: `dim V^perp = n - dim V`,
/// `(V^perp)^perp = V`, `V` and `V^perp` are orthogonal, and `H 1_V = 1_{V^perp}`.
pub fn check_subspace_duality(max_n: usize) -> Result<SelftestCheck> {
    let mut check = SelftestCheck::new("subspace_duality");
    for n in 1..=max_n {
        for r in 0..=n {
            for v in enumerate_subspaces(n, r)? {
                let w = orthogonal_complement(&v);
                let orthogonal = v
                    .basis()
                    .iter()
                    .all(|&a| w.basis().iter().all(|&b| (a & b).count_ones() % 2 == 0));
                let structural = w.dim() == n - r && orthogonal_complement(&w) == v && orthogonal;
                let err = max_abs_diff(&fwht(&indicator(&v))?, &indicator(&w));
                check.record(err, structural && err <= TOL);
            }
        }
    }
    Ok(check)
}

/// Runs every check: index bijections, Hadamard identities up to `N = 1024`
/// and subspace duality up to `n = 5`.
pub fn run_selftest() -> Result<SelftestReport> {
    Ok(SelftestReport {
        checks: vec![
            check_index_bijections()?,
            check_hadamard_orthogonality(1024)?,
            check_fwht(1024, 1)?,
            check_kron_fwht(2)?,
            check_subspace_duality(5)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_selftest_passes() {
        assert!(check_index_bijections().unwrap().passed());
        assert!(check_hadamard_orthogonality(64).unwrap().passed());
        assert!(check_fwht(256, 3).unwrap().passed());
        assert!(check_kron_fwht(4).unwrap().passed());
        let duality = check_subspace_duality(4).unwrap();
        assert!(duality.passed());
        // Subspaces of F_2^n for n = 1..4: 2 + 5 + 16 + 67.
        assert_eq!(duality.cases, 90);
    }

    #[test]
    fn failures_are_counted() {
        let mut c = SelftestCheck::new("x");
        c.record(0.0, true);
        c.record(2.0, false);
        assert_eq!((c.cases, c.failures, c.max_error), (2, 1, 2.0));
        assert!(!SelftestReport { checks: vec![c] }.passed());
    }
}
