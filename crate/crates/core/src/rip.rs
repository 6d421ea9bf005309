//! Exhaustive restricted isometry constants for small matrices.

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng;

/// Largest number of supports (or support pairs) enumerated exhaustively.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct RipReport {
    pub sparsity: usize,
    pub delta: f64,
    /// 1-based column indices of a support attaining `delta`.
    pub witness_support: Vec<usize>,
}

/// `C(n, k)` without overflow for the sizes used here.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Spectral norm of a symmetric matrix.
fn symmetric_norm(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// `Phi^T Phi - I`.
pub fn gram_deviation(phi: &DMatrix<f64>) -> DMatrix<f64> {
    let n = phi.ncols();
    phi.transpose() * phi - DMatrix::identity(n, n)
}

fn principal_block(b: &DMatrix<f64>, support: &[usize]) -> DMatrix<f64> {
    let k = support.len();
    DMatrix::from_fn(k, k, |r, c| b[(support[r], support[c])])
}

/// Exact `delta_s` of `phi`: the largest `||Phi_T^T Phi_T - I||` over all supports of size `s`.
pub fn rip_constant(phi: &DMatrix<f64>, s: usize) -> Result<RipReport> {
    let n = phi.ncols();
    if s == 0 || s > n {
        return Err(Error::Argument(format!("sparsity {s} outside [1, {n}]")));
    }
    let count = binomial(n, s);
    if count > ENUMERATION_BUDGET {
        return Err(Error::Budget(format!(
            "C({n}, {s}) = {count} supports exceeds the budget of {ENUMERATION_BUDGET}"
        )));
    }
    let b = gram_deviation(phi);
    let mut best = RipReport {
        sparsity: s,
        delta: -1.0,
        witness_support: Vec::new(),
    };
    for support in (0..n).combinations(s) {
        let d = symmetric_norm(principal_block(&b, &support));
        if d > best.delta {
            best.delta = d;
            best.witness_support = support.iter().map(|c| c + 1).collect();
        }
    }
    Ok(best)
}

/// Options for [`check_disjoint_submatrix_bound`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCheck {
    /// Only consider pairs with `S` and `T` disjoint.
    pub disjoint_only: bool,
    /// Pair budget above which pairs are sampled at random instead.
    pub budget: u128,
    /// Number of random pairs used when the budget is exceeded.
    pub sampled_pairs: usize,
    pub seed: u64,
    /// Absolute slack allowed on `||B_{S,T}|| <= delta`.
    pub tolerance: f64,
}

impl Default for PairCheck {
    fn default() -> Self {
        PairCheck {
            disjoint_only: false,
            budget: ENUMERATION_BUDGET,
            sampled_pairs: 100_000,
            seed: 0,
            tolerance: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubmatrixBoundReport {
    pub holds: bool,
    pub worst_norm: f64,
    /// 1-based supports of the worst pair.
    pub worst_pair: (Vec<usize>, Vec<usize>),
    pub pairs_checked: u128,
    /// `true` when the budget forced random sampling of pairs.
    pub sampled: bool,
}

/// Checks `||(Phi^T Phi - I)_{S,T}|| <= delta` for all pairs `|S| = |T| = s`.
///
/// The norm of the rectangular block is the largest singular value, computed
/// as the square root of the top eigenvalue of `B_{S,T} B_{S,T}^T`.
pub fn check_disjoint_submatrix_bound(
    phi: &DMatrix<f64>,
    s: usize,
    delta: f64,
    opts: &PairCheck,
) -> Result<SubmatrixBoundReport> {
    let n = phi.ncols();
    if s == 0 || s > n {
        return Err(Error::Argument(format!("sparsity {s} outside [1, {n}]")));
    }
    let b = gram_deviation(phi);
    let supports = binomial(n, s);
    let total = if opts.disjoint_only {
        supports * binomial(n - s, s)
    } else {
        supports * supports
    };
    let mut report = SubmatrixBoundReport {
        holds: true,
        worst_norm: 0.0,
        worst_pair: (Vec::new(), Vec::new()),
        pairs_checked: 0,
        sampled: false,
    };
    let visit = |sset: &[usize], tset: &[usize], report: &mut SubmatrixBoundReport| {
        let block = DMatrix::from_fn(s, s, |r, c| b[(sset[r], tset[c])]);
        let norm = symmetric_norm(&block * block.transpose()).sqrt();
        report.pairs_checked += 1;
        if norm > report.worst_norm || report.worst_pair.0.is_empty() {
            report.worst_norm = norm;
            report.worst_pair = (
                sset.iter().map(|c| c + 1).collect(),
                tset.iter().map(|c| c + 1).collect(),
            );
        }
    };
    if total <= opts.budget {
        let all: Vec<Vec<usize>> = (0..n).combinations(s).collect();
        for sset in &all {
            for tset in &all {
                if opts.disjoint_only && sset.iter().any(|c| tset.contains(c)) {
                    continue;
                }
                visit(sset, tset, &mut report);
            }
        }
    } else {
        if opts.disjoint_only && 2 * s > n {
            return Err(Error::Argument("no disjoint pairs exist".into()));
        }
        log::info!(
            "{total} support pairs exceed the budget; sampling {} random pairs",
            opts.sampled_pairs
        );
        report.sampled = true;
        let mut rng = rng::stream_rng(rng::derive_seed(opts.seed, rng::labels::PAIRS), 0);
        for _ in 0..opts.sampled_pairs {
            let (sset, tset) = if opts.disjoint_only {
                let mut both = index::sample(&mut rng, n, 2 * s).into_vec();
                let tset = both.split_off(s);
                (sorted(both), sorted(tset))
            } else {
                (
                    sorted(index::sample(&mut rng, n, s).into_vec()),
                    sorted(index::sample(&mut rng, n, s).into_vec()),
                )
            };
            visit(&sset, &tset, &mut report);
        }
    }
    report.holds = report.worst_norm <= delta + opts.tolerance;
    Ok(report)
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}
