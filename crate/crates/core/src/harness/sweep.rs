//! Monte Carlo estimates of the distributional JL failure probability
//! `P(| ||A x||^2 - 1 | > eps)`.

use std::io::Write;
use std::time::Instant;

use rand::Rng;

use super::config::{Baseline, ExperimentConfig, Family};
use super::binomial_stderr;
use crate::error::Result;
use crate::index::KronDims;
use crate::rng::{self, labels};
use crate::transforms::{build_operator, gaussian_baseline, kron_materialize};

pub const SWEEP_HEADER: &str = "family,d,dims,N,m,eps,trials,failures,eta_hat,stderr,seed,wall_ms";

/// One CSV row of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub family: Family,
    pub dims: KronDims,
    pub m: usize,
    pub eps: f64,
    pub trials: usize,
    pub failures: usize,
    pub eta_hat: f64,
    pub stderr: f64,
    pub seed: u64,
    pub wall_ms: u64,
}

impl SweepRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.family,
            self.dims.order(),
            self.dims,
            self.dims.total(),
            self.m,
            self.eps,
            self.trials,
            self.failures,
            self.eta_hat,
            self.stderr,
            self.seed,
            self.wall_ms
        )
    }
}

pub fn write_sweep_csv<W: Write>(mut w: W, records: &[SweepRecord]) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

/// A family's test vector: factors for `kron`, the full vector otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum TestVector {
    Factors(Vec<Vec<f64>>),
    Dense(Vec<f64>),
}

impl TestVector {
    pub fn materialize(&self) -> Vec<f64> {
        match self {
            TestVector::Factors(f) => kron_materialize(f).expect("nonempty factor list"),
            TestVector::Dense(v) => v.clone(),
        }
    }
}

fn family_label(f: Family) -> u64 {
    match f {
        Family::Kron => 0,
        Family::Dense => 1,
        Family::Onehot => 2,
    }
}

/// The fixed unit test vector of `family`, drawn from `seed`.
pub fn test_vector(family: Family, dims: &KronDims, seed: u64) -> TestVector {
    let mut g = rng::stream_rng(rng::derive_path(seed, &[labels::POINTS, family_label(family)]), 0);
    match family {
        Family::Kron => TestVector::Factors(dims.dims().iter().map(|&n| rng::unit_gaussian_vec(&mut g, n)).collect()),
        Family::Dense => TestVector::Dense(rng::unit_gaussian_vec(&mut g, dims.total())),
        Family::Onehot => {
            let mut v = vec![0.0; dims.total()];
            v[g.random_range(0..dims.total())] = 1.0;
            TestVector::Dense(v)
        }
    }
}

/// Operator seed of trial `t`, shared by every family, `m` and `eps`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    rng::derive_path(seed, &[labels::TRIALS, t as u64])
}

/// `||A x||^2` for every `m` in `ms` (ascending) from one draw of signs and rows.
///
/// Rows are drawn one at a time from the sample stream, so the operator with
/// `m` rows uses the first `m` rows of the operator with `max(ms)` rows.
fn kfjlt_norms(dims: &KronDims, ms: &[usize], seed: u64, x: &[f64]) -> Result<Vec<f64>> {
    let m_max = *ms.last().expect("nonempty m grid");
    let op = build_operator(dims, m_max, seed)?;
    let y = op.pre_subsampling(x)?;
    let rows = op.samples().rows();
    let n = dims.total() as f64;
    let mut out = Vec::with_capacity(ms.len());
    let (mut acc, mut taken) = (0.0, 0);
    for &m in ms {
        acc += rows[taken..m].iter().map(|&r| y[r - 1] * y[r - 1]).sum::<f64>();
        taken = m;
        out.push(acc * n / m as f64);
    }
    Ok(out)
}

fn squared_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Estimates the failure probability for every (family, m, eps) cell of `cfg`.
///
/// Each trial draws one operator from `trial_seed(seed, t)` and reuses it for
/// all `eps`, so cells differ only through `m`, `eps` and the test vector.
/// Rows come back sorted by family name, then `m`, then `eps`.
pub fn jl_failure_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate_jl_sweep()?;
    let dims = cfg.kron_dims()?;
    let mut ms: Vec<usize> = match cfg.baseline {
        Baseline::Unsampled => vec![dims.total()],
        _ => cfg.m.clone(),
    };
    ms.sort_unstable();
    ms.dedup();
    let mut eps = cfg.eps.clone();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut families = cfg.families.clone();
    families.sort_by_key(|f| f.name());
    families.dedup();

    let mut records = Vec::new();
    for family in families {
        let start = Instant::now();
        let x = test_vector(family, &dims, cfg.seed).materialize();
        // failures[k][e] for m = ms[k], eps = eps[e]
        let mut failures = vec![vec![0usize; eps.len()]; ms.len()];
        for t in 0..cfg.trials {
            let seed_t = trial_seed(cfg.seed, t);
            let norms = match cfg.baseline {
                Baseline::Kfjlt => kfjlt_norms(&dims, &ms, seed_t, &x)?,
                Baseline::Unsampled => vec![squared_norm(&build_operator(&dims, 1, seed_t)?.pre_subsampling(&x)?)],
                Baseline::Gaussian => ms
                    .iter()
                    .map(|&m| Ok(squared_norm(&gaussian_baseline(m, dims.total(), seed_t)?.apply(&x)?)))
                    .collect::<Result<Vec<_>>>()?,
            };
            for (k, q) in norms.iter().enumerate() {
                for (e, &eps_e) in eps.iter().enumerate() {
                    if (q - 1.0).abs() > eps_e {
                        failures[k][e] += 1;
                    }
                }
            }
        }
        let wall_ms = if cfg.timing { start.elapsed().as_millis() as u64 } else { 0 };
        for (k, &m) in ms.iter().enumerate() {
            for (e, &eps_e) in eps.iter().enumerate() {
                let f = failures[k][e];
                let eta = f as f64 / cfg.trials as f64;
                records.push(SweepRecord {
                    family,
                    dims: dims.clone(),
                    m,
                    eps: eps_e,
                    trials: cfg.trials,
                    failures: f,
                    eta_hat: eta,
                    stderr: binomial_stderr(eta, cfg.trials),
                    seed: cfg.seed,
                    wall_ms,
                });
            }
        }
    }
    Ok(records)
}
