//! Desk-scale oracles for Rademacher chaos: set partitions, partition norms,
//! moment estimates and the counting/expectation checks used in the analysis.

mod moments;
mod norms;
mod partition;

use nalgebra::DMatrix;
use serde::Serialize;

pub use moments::{
    estimate_chaos_moments, exact_moments, fit_moment_constant, sample_chaos, ChaosCoefficients, ChaosMode,
    MomentProfile, MomentRatioFit, BOOTSTRAP_RESAMPLES, MAX_EXACT_SIGNS,
};
pub use norms::{moment_functional, partition_norm, NormConfig, PartitionNorm, MAX_ENTRIES};
pub use partition::{enumerate_partitions, SetPartition, MAX_GROUND};

use crate::error::{Error, Result};
use crate::index::AxisSet;
use crate::rip;

/// Tail bound from moment bounds `||X||_{L_p} <= sum_k min_l p^{e_kl} gamma_kl` for `p >= p0`:
///
/// `P(|X| > t) <= e^{p0} exp(-min_k max_l (t / (e d gamma_kl))^{1/e_kl})`, with `d` the number of rows.
pub fn moment_to_tail(gammas: &[Vec<f64>], exponents: &[Vec<f64>], p0: f64, t: f64) -> Result<f64> {
    if t.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Argument(format!("t must be positive, got {t}")));
    }
    if gammas.is_empty()
        || gammas.len() != exponents.len()
        || gammas.iter().zip(exponents).any(|(g, e)| g.is_empty() || g.len() != e.len())
    {
        return Err(Error::Argument("gammas and exponents must be nonempty with equal shapes".into()));
    }
    if gammas.iter().flatten().any(|&g| g <= 0.0) || exponents.iter().flatten().any(|&e| e <= 0.0) {
        return Err(Error::Argument("gammas and exponents must be positive".into()));
    }
    let d = gammas.len() as f64;
    let rate = gammas
        .iter()
        .zip(exponents)
        .map(|(gs, es)| {
            gs.iter()
                .zip(es)
                .map(|(g, e)| (t / (std::f64::consts::E * d * g)).powf(1.0 / e))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(p0.exp() * (-rate).exp())
}

/// One `(S, T, partition)` case where the counting inequality fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingViolation {
    pub s_set: String,
    pub t_set: String,
    pub partition: String,
    pub lhs_quarters: usize,
    pub kappa: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionCountingReport {
    pub d: usize,
    pub cases: usize,
    pub violations: Vec<CountingViolation>,
}

impl PartitionCountingReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Largest `d` accepted by [`check_partition_counting`].
pub const MAX_COUNTING_ORDER: usize = 4;

/// Checks `|J| / 4 + (|I| + |I'|) / 2 >= kappa / 2` for all `S, T` in `[d]` and every
/// partition of `[2d] \ (S u (T + d))`.
///
/// `I` joins the blocks inside `[d]`, `I'` the blocks inside `[2d] \ [d]` and
/// `J` the blocks meeting both halves. The check runs in integers as
/// `|J| + 2 (|I| + |I'|) >= 2 kappa`.
pub fn check_partition_counting(d: usize) -> Result<PartitionCountingReport> {
    if d == 0 || d > MAX_COUNTING_ORDER {
        return Err(Error::Budget(format!("order d = {d} outside [1, {MAX_COUNTING_ORDER}]")));
    }
    let first = AxisSet::full(d);
    let second = AxisSet::full(2 * d).difference(first);
    let mut report = PartitionCountingReport {
        d,
        cases: 0,
        violations: Vec::new(),
    };
    for s in first.subsets() {
        for t in first.subsets() {
            let ground = AxisSet::full(2 * d).difference(s.union(t.shifted(d)));
            for p in enumerate_partitions(ground, None)? {
                let (mut inner, mut outer, mut joint) = (0, 0, 0);
                for b in p.blocks() {
                    if b.is_subset_of(first) {
                        inner += b.len();
                    } else if b.is_subset_of(second) {
                        outer += b.len();
                    } else {
                        joint += b.len();
                    }
                }
                report.cases += 1;
                let lhs = joint + 2 * (inner + outer);
                if lhs < 2 * p.len() {
                    report.violations.push(CountingViolation {
                        s_set: s.to_string(),
                        t_set: t.to_string(),
                        partition: p.to_string(),
                        lhs_quarters: lhs,
                        kappa: p.len(),
                    });
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationBoundReport {
    /// `E X~ = sum_i (Phi^T Phi - I)_ii x_i^2`.
    pub expectation: f64,
    /// `max_j |(Phi^T Phi - I)_jj|`.
    pub max_diagonal: f64,
    /// `delta_1` of `Phi`.
    pub delta_one: f64,
    pub holds: bool,
}

/// Checks `|E X~| <= max_j |(Phi^T Phi - I)_jj| ||x||^2` and `max_j |...| <= delta_1`.
pub fn check_expectation_bound(phi: &DMatrix<f64>, x: &[f64]) -> Result<ExpectationBoundReport> {
    if x.len() != phi.ncols() {
        return Err(Error::Shape(format!(
            "x has length {}, operator has {} columns",
            x.len(),
            phi.ncols()
        )));
    }
    let diag: Vec<f64> = phi.column_iter().map(|c| c.norm_squared() - 1.0).collect();
    let expectation: f64 = diag.iter().zip(x).map(|(b, v)| b * v * v).sum();
    let max_diagonal = diag.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    let delta_one = rip::rip_constant(phi, 1)?.delta;
    let tol = 1e-12;
    let holds = expectation.abs() <= max_diagonal * norm_sq * (1.0 + tol) + tol && max_diagonal <= delta_one + tol;
    Ok(ExpectationBoundReport {
        expectation,
        max_diagonal,
        delta_one,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::KronDims;
    use crate::rng;
    use crate::transforms::subsampled_hadamard;
    use approx::assert_relative_eq;

    #[test]
    fn tail_plug_in() {
        let e = std::f64::consts::E;
        let v = moment_to_tail(&[vec![1.0]], &[vec![1.0]], 0.0, e).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn tail_small_t_is_vacuous() {
        let v = moment_to_tail(&[vec![1.0], vec![2.0]], &[vec![0.5], vec![1.0]], 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, 2f64.exp(), max_relative = 1e-6);
    }

    #[test]
    fn tail_grows_with_gamma() {
        let mut prev = 0.0;
        for k in 0..8 {
            let g = 2f64.powi(k);
            let v = moment_to_tail(&[vec![g, 3.0 * g]], &[vec![0.5, 1.0]], 1.0, 5.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn tail_rejects_bad_arguments() {
        assert!(moment_to_tail(&[vec![1.0]], &[vec![1.0]], 0.0, 0.0).is_err());
        assert!(moment_to_tail(&[vec![1.0]], &[vec![1.0]], 0.0, -1.0).is_err());
        assert!(moment_to_tail(&[vec![0.0]], &[vec![1.0]], 0.0, 1.0).is_err());
        assert!(moment_to_tail(&[vec![1.0]], &[vec![1.0, 2.0]], 0.0, 1.0).is_err());
    }

    #[test]
    fn counting_small_cases() {
        // d = 1, S = T = empty: {{1},{2}} gives 0 + 2*2 >= 4 and {{1,2}} gives 2 >= 2.
        let r = check_partition_counting(1).unwrap();
        assert!(r.holds());
        // Pairs (S, T): ground sizes 2, 1, 1, 0 with Bell numbers 2, 1, 1, 1.
        assert_eq!(r.cases, 5);
    }

    #[test]
    fn counting_holds_up_to_three() {
        for d in 1..=3 {
            assert!(check_partition_counting(d).unwrap().holds(), "d = {d}");
        }
        assert!(check_partition_counting(5).is_err());
    }

    #[test]
    fn expectation_zero_for_unit_columns() {
        let phi = DMatrix::<f64>::identity(4, 4);
        let r = check_expectation_bound(&phi, &[0.5; 4]).unwrap();
        assert_eq!(r.expectation, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn expectation_of_basis_vector() {
        let phi = subsampled_hadamard(&KronDims::new(vec![8]).unwrap(), 3, 2).unwrap();
        let mut x = vec![0.0; 8];
        x[5] = 1.0;
        let r = check_expectation_bound(&phi, &x).unwrap();
        assert_relative_eq!(r.expectation, phi.column(5).norm_squared() - 1.0, epsilon = 1e-14);
        assert!(r.holds);
    }

    #[test]
    fn expectation_chain_on_random_instances() {
        for seed in 0..50 {
            let mut g = rng::stream_rng(seed, 0);
            let phi = DMatrix::from_vec(6, 16, rng::gaussian_vec(&mut g, 96)) / 6f64.sqrt();
            let x = rng::unit_gaussian_vec(&mut g, 16);
            assert!(check_expectation_bound(&phi, &x).unwrap().holds);
        }
    }
}
