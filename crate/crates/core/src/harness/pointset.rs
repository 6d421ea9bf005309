//! Preservation of all pairwise distances of a finite point set.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use super::binomial_stderr;
use super::config::{ExperimentConfig, PointFamily};
use super::sweep::{trial_seed, TestVector};
use crate::error::{Error, Result};
use crate::index::KronDims;
use crate::lower_bound::AdversarialSet;
use crate::rng::{self, labels};
use crate::transforms::build_operator;

/// Largest per-factor subspace dimension used by the adversarial family (`|V_j| <= 32`).
const MAX_ADVERSARIAL_R: usize = 5;

/// Estimated distance-preservation failure for one `(p, m, eps)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointsetReport {
    pub p: usize,
    pub m: usize,
    pub eps: f64,
    pub trials: usize,
    pub seed: u64,
    /// Unordered pairs with a nonzero distance.
    pub pairs: usize,
    /// 1-based pairs of coincident points, excluded from every estimate.
    pub degenerate_pairs: Vec<(usize, usize)>,
    pub joint_failures: usize,
    /// Estimate of `P(some pair leaves [1 - eps, 1 + eps])`.
    pub joint_eta: f64,
    pub joint_stderr: f64,
    pub mean_pair_eta: f64,
    pub max_pair_eta: f64,
    /// `p (p - 1) * mean_pair_eta`, the union bound over ordered pairs.
    pub union_bound: f64,
    /// Binomial standard error of `union_bound` treating pairs as independent.
    pub union_bound_stderr: f64,
}

/// Pairwise squared distances, skipping coincident points.
struct PairTable {
    pairs: Vec<(usize, usize, f64)>,
    degenerate: Vec<(usize, usize)>,
}

fn dot(a: &TestVector, b: &TestVector) -> f64 {
    match (a, b) {
        (TestVector::Factors(fa), TestVector::Factors(fb)) if fa.len() == fb.len() => fa
            .iter()
            .zip(fb)
            .map(|(u, v)| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>())
            .product(),
        _ => a.materialize().iter().zip(b.materialize()).map(|(x, y)| x * y).sum(),
    }
}

impl PairTable {
    fn new(points: &[TestVector]) -> Self {
        let norms: Vec<f64> = points.iter().map(|x| dot(x, x)).collect();
        let mut table = PairTable {
            pairs: Vec::new(),
            degenerate: Vec::new(),
        };
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let dist = norms[i] + norms[j] - 2.0 * dot(&points[i], &points[j]);
                if dist <= 1e-12 * (norms[i] + norms[j]) {
                    table.degenerate.push((i + 1, j + 1));
                } else {
                    table.pairs.push((i, j, dist));
                }
            }
        }
        table
    }
}

fn check_points(dims: &KronDims, points: &[TestVector]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::Argument(format!("need at least 2 points, got {}", points.len())));
    }
    for x in points {
        let ok = match x {
            TestVector::Factors(f) => f.iter().map(Vec::len).eq(dims.dims().iter().copied()),
            TestVector::Dense(v) => v.len() == dims.total(),
        };
        if !ok {
            return Err(Error::Shape(format!("point does not match dims {dims}")));
        }
    }
    Ok(())
}

/// Joint and per-pair failure counts over `trials` operator draws.
fn count_failures(
    dims: &KronDims,
    points: &[TestVector],
    table: &PairTable,
    m: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<(usize, Vec<usize>)> {
    let mut joint = 0;
    let mut per_pair = vec![0usize; table.pairs.len()];
    let mut images = DMatrix::<f64>::zeros(m, points.len());
    for t in 0..trials {
        let op = build_operator(dims, m, trial_seed(seed, t))?;
        for (k, x) in points.iter().enumerate() {
            let y = match x {
                TestVector::Factors(f) => op.apply_factored(f)?,
                TestVector::Dense(v) => op.apply_dense(v)?,
            };
            images.column_mut(k).copy_from_slice(&y);
        }
        let gram = images.tr_mul(&images);
        let mut failed = false;
        for (slot, &(i, j, dist)) in table.pairs.iter().enumerate() {
            let sketched = gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)];
            if (sketched / dist - 1.0).abs() > eps {
                per_pair[slot] += 1;
                failed = true;
            }
        }
        joint += usize::from(failed);
    }
    Ok((joint, per_pair))
}

/// Estimates `P(exists i < j : | ||A(x_i - x_j)||^2 / ||x_i - x_j||^2 - 1 | > eps)`.
///
/// Operators are drawn from the same per-trial seeds as the JL sweep.
pub fn pointset_preservation(
    dims: &KronDims,
    points: &[TestVector],
    m: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<PointsetReport> {
    check_points(dims, points)?;
    if trials == 0 || m == 0 {
        return Err(Error::Argument("trials and m must be positive".into()));
    }
    let table = PairTable::new(points);
    if !table.degenerate.is_empty() {
        log::info!("skipping {} degenerate pair(s) with zero distance", table.degenerate.len());
    }
    let (joint, per_pair) = count_failures(dims, points, &table, m, eps, trials, seed)?;
    let p = points.len();
    let t = trials as f64;
    let joint_eta = joint as f64 / t;
    let pair_etas: Vec<f64> = per_pair.iter().map(|&f| f as f64 / t).collect();
    let mean_pair_eta = if pair_etas.is_empty() {
        0.0
    } else {
        pair_etas.iter().sum::<f64>() / pair_etas.len() as f64
    };
    let ordered = (p * (p - 1)) as f64;
    let var: f64 = pair_etas.iter().map(|&e| e * (1.0 - e) / t).sum();
    let per_pair_weight = ordered / pair_etas.len().max(1) as f64;
    Ok(PointsetReport {
        p,
        m,
        eps,
        trials,
        seed,
        pairs: table.pairs.len(),
        degenerate_pairs: table.degenerate,
        joint_failures: joint,
        joint_eta,
        joint_stderr: binomial_stderr(joint_eta, trials),
        mean_pair_eta,
        max_pair_eta: pair_etas.iter().copied().fold(0.0, f64::max),
        union_bound: ordered * mean_pair_eta,
        union_bound_stderr: per_pair_weight * var.sqrt(),
    })
}

/// Outcome of the search for the smallest `m` meeting a joint failure target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RequiredM {
    pub p: usize,
    pub eps: f64,
    pub target: f64,
    /// `None` if even `m_max` misses the target.
    pub m_star: Option<usize>,
    /// `(m, joint_eta)` for every `m` evaluated, in evaluation order.
    pub evaluations: Vec<(usize, f64)>,
}

/// Smallest `m` whose estimated joint failure is at most `target`.
///
/// Doubles `m` from 1 until the target is met, then bisects until the bracket
/// is within 1/32 of its upper end. Every evaluation reuses the same trial
/// seeds, so the estimate is close to monotone in `m`.
pub fn required_m(
    dims: &KronDims,
    points: &[TestVector],
    eps: f64,
    target: f64,
    trials: usize,
    seed: u64,
    m_max: usize,
) -> Result<RequiredM> {
    check_points(dims, points)?;
    if trials == 0 || m_max == 0 {
        return Err(Error::Argument("trials and m_max must be positive".into()));
    }
    let table = PairTable::new(points);
    let mut evaluations = Vec::new();
    let mut eval = |m: usize| -> Result<bool> {
        let (joint, _) = count_failures(dims, points, &table, m, eps, trials, seed)?;
        let eta = joint as f64 / trials as f64;
        evaluations.push((m, eta));
        Ok(eta <= target)
    };
    let (mut lo, mut hi) = (0usize, 1usize);
    loop {
        if eval(hi)? {
            break;
        }
        if hi == m_max {
            return Ok(RequiredM {
                p: points.len(),
                eps,
                target,
                m_star: None,
                evaluations,
            });
        }
        lo = hi;
        hi = (2 * hi).min(m_max);
    }
    while hi - lo > 1 && (hi - lo) * 32 > hi {
        let mid = lo + (hi - lo) / 2;
        if eval(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(RequiredM {
        p: points.len(),
        eps,
        target,
        m_star: Some(hi),
        evaluations,
    })
}

/// Least-squares slope of `ln m*` against `ln ln p`.
pub fn scaling_slope(p: &[usize], m_star: &[usize]) -> Result<f64> {
    if p.len() != m_star.len() || p.len() < 2 {
        return Err(Error::Argument("need at least two (p, m*) pairs".into()));
    }
    if p.iter().any(|&v| v < 3) || m_star.contains(&0) {
        return Err(Error::Argument("need p >= 3 and m* >= 1 for a log-log fit".into()));
    }
    let x: Vec<f64> = p.iter().map(|&v| (v as f64).ln().ln()).collect();
    let y: Vec<f64> = m_star.iter().map(|&v| (v as f64).ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("point-set sizes must not all be equal".into()));
    }
    Ok(sxy / sxx)
}

/// Per-factor subspace dimensions `r_j` for an adversarial set of `p` points.
///
/// Maximizes `prod_j 2^{r_j}` subject to the covering members,
/// `prod_j 2^{2^{r_j} - r_j - 1}` of them, fitting into `p` points. Ties go to
/// fewer covering members, then to larger dimensions on earlier factors.
pub fn adversarial_layout(field_dims: &[usize], p: usize) -> Vec<usize> {
    let budget = usize::BITS - 1 - p.max(1).leading_zeros();
    let cost = |r: usize| (1usize << r) - r - 1;
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    let mut r = vec![0usize; field_dims.len()];
    loop {
        let total_cost: usize = r.iter().map(|&v| cost(v)).sum();
        if total_cost <= budget as usize {
            let gain: usize = r.iter().sum();
            let better = match &best {
                None => true,
                Some((g, c, prev)) => gain > *g || (gain == *g && (total_cost < *c || (total_cost == *c && r > *prev))),
            };
            if better {
                best = Some((gain, total_cost, r.clone()));
            }
        }
        // Next assignment in mixed radix.
        let mut k = 0;
        loop {
            if k == r.len() {
                return best.map(|b| b.2).unwrap_or_else(|| vec![0; field_dims.len()]);
            }
            if r[k] < field_dims[k].min(MAX_ADVERSARIAL_R) {
                r[k] += 1;
                break;
            }
            r[k] = 0;
            k += 1;
        }
    }
}

/// `p` points of the given family, drawn from `seed`.
///
/// The adversarial family takes all covering members of an [`AdversarialSet`]
/// with the layout of [`adversarial_layout`] and fills up with further random
/// members.
pub fn point_family(family: PointFamily, dims: &KronDims, p: usize, seed: u64) -> Result<Vec<TestVector>> {
    let family_seed = rng::derive_path(seed, &[labels::POINTS, 16 + family as u64]);
    let mut g = rng::stream_rng(family_seed, 0);
    match family {
        PointFamily::Dense => Ok((0..p)
            .map(|_| TestVector::Dense(rng::unit_gaussian_vec(&mut g, dims.total())))
            .collect()),
        PointFamily::Kron => Ok((0..p)
            .map(|_| TestVector::Factors(dims.dims().iter().map(|&n| rng::unit_gaussian_vec(&mut g, n)).collect()))
            .collect()),
        PointFamily::Adversarial => {
            if !dims.all_powers_of_two() {
                return Err(Error::Argument(format!("adversarial points need power-of-two dims, got {dims}")));
            }
            let field_dims: Vec<usize> = dims.dims().iter().map(|n| n.trailing_zeros() as usize).collect();
            let r = adversarial_layout(&field_dims, p);
            let set = AdversarialSet::random(&field_dims, &r, family_seed)?;
            let log2_members = set.log2_size_bound();
            if log2_members < 63 && p > 1usize << log2_members {
                return Err(Error::Argument(format!("only 2^{log2_members} distinct adversarial points exist")));
            }
            let reps = set.coset_representatives();
            let mut words: Vec<Vec<u64>> = vec![Vec::new()];
            for choices in &reps {
                words = words
                    .into_iter()
                    .flat_map(|w| {
                        choices.iter().map(move |&c| {
                            let mut w = w.clone();
                            w.push(c);
                            w
                        })
                    })
                    .collect();
            }
            let mut seen: HashSet<Vec<u64>> = words.iter().cloned().collect();
            let sizes: Vec<usize> = set.subspaces().iter().map(|v| v.size()).collect();
            while words.len() < p {
                let w: Vec<u64> = sizes
                    .iter()
                    .map(|&s| g.random::<u64>() & if s == 64 { u64::MAX } else { (1u64 << s) - 1 })
                    .collect();
                if seen.insert(w.clone()) {
                    words.push(w);
                }
            }
            words.truncate(p);
            words.iter().map(|w| set.member(w).map(TestVector::Factors)).collect()
        }
    }
}

/// Distance-preservation estimates and required-`m` searches for a config.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointsetSummary {
    pub schema: &'static str,
    pub family: PointFamily,
    pub dims: String,
    pub trials: usize,
    pub seed: u64,
    pub reports: Vec<PointsetReport>,
    pub required: Vec<RequiredM>,
}

/// Runs every `(p, m, eps)` of `cfg` and the required-`m` search for every `(p, eps)`.
pub fn run_pointset(cfg: &ExperimentConfig) -> Result<PointsetSummary> {
    cfg.validate_pointset()?;
    let dims = cfg.kron_dims()?;
    let ps = &cfg.pointset;
    let mut reports = Vec::new();
    let mut required = Vec::new();
    for &p in &ps.points {
        let points = point_family(ps.family, &dims, p, cfg.seed)?;
        for &m in &cfg.m {
            for &eps in &cfg.eps {
                reports.push(pointset_preservation(&dims, &points, m, eps, cfg.trials, cfg.seed)?);
            }
        }
        for &eps in &cfg.eps {
            required.push(required_m(&dims, &points, eps, ps.target, cfg.trials, cfg.seed, ps.m_max)?);
        }
    }
    Ok(PointsetSummary {
        schema: super::SCHEMA,
        family: ps.family,
        dims: dims.to_string(),
        trials: cfg.trials,
        seed: cfg.seed,
        reports,
        required,
    })
}
