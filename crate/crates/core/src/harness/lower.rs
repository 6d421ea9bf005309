//! Sweeps of the adversarial failure probability against its closed form.

use std::io::Write;

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::lower_bound::failure_probability_empirical;
use crate::rng;

pub const LOWER_BOUND_HEADER: &str =
    "d,r,s,field_dim,N,m,trials,failures,eta_hat,stderr,closed_form,lower_bound,nu,m_threshold,flag,seed";

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundRecord {
    pub d: usize,
    pub r: usize,
    pub field_dim: usize,
    pub m: usize,
    pub trials: usize,
    pub failures: usize,
    pub eta_hat: f64,
    pub stderr: f64,
    /// `(1 - s^{-d})^m`.
    pub closed_form: f64,
    /// `exp(-2m / s^d)`.
    pub lower_bound: f64,
    pub nu: f64,
    pub m_threshold: f64,
    pub flag: bool,
    pub seed: u64,
}

impl LowerBoundRecord {
    pub fn s(&self) -> usize {
        1 << self.r
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.d,
            self.r,
            self.s(),
            self.field_dim,
            1usize << (self.field_dim * self.d),
            self.m,
            self.trials,
            self.failures,
            self.eta_hat,
            self.stderr,
            self.closed_form,
            self.lower_bound,
            self.nu,
            self.m_threshold,
            self.flag,
            self.seed
        )
    }
}

pub fn write_lower_bound_csv<W: Write>(mut w: W, records: &[LowerBoundRecord]) -> std::io::Result<()> {
    writeln!(w, "{LOWER_BOUND_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

/// `(1/2) log(1/nu) (log p / (d log 2))^d` with `p = 2^{d s}`, i.e. `(1/2) log(1/nu) s^d`.
pub fn m_threshold(nu: f64, s: usize, d: usize) -> f64 {
    let log_p = (d * s) as f64 * std::f64::consts::LN_2;
    0.5 * (1.0 / nu).ln() * (log_p / (d as f64 * std::f64::consts::LN_2)).powi(d as i32)
}

/// `true` when a failure rate above `nu` is observed although `m` is below the threshold.
pub fn lower_bound_flag(eta_hat: f64, m: usize, s: usize, d: usize, nu: f64) -> bool {
    eta_hat > nu && (m as f64) < m_threshold(nu, s, d)
}

/// One row per `(d, r, m)` of `cfg`, in that nesting order.
///
/// The subspaces of a `(d, r)` cell come from `derive_path(seed, [d, r])` and
/// are shared by every `m`, as are the per-trial operator seeds.
pub fn lower_bound_sweep(cfg: &ExperimentConfig) -> Result<Vec<LowerBoundRecord>> {
    cfg.validate_lower_bound()?;
    let lb = &cfg.lower_bound;
    let mut out = Vec::new();
    for &d in &lb.d {
        for &r in &lb.r {
            let cell_seed = rng::derive_path(cfg.seed, &[d as u64, r as u64]);
            for &m in &cfg.m {
                let e = failure_probability_empirical(&vec![lb.field_dim; d], r, m, cfg.trials, cell_seed)?;
                let s = 1usize << r;
                out.push(LowerBoundRecord {
                    d,
                    r,
                    field_dim: lb.field_dim,
                    m,
                    trials: e.trials,
                    failures: e.failures,
                    eta_hat: e.estimate,
                    stderr: e.stderr,
                    closed_form: e.closed_form.exact,
                    lower_bound: e.closed_form.lower_bound,
                    nu: lb.nu,
                    m_threshold: m_threshold(lb.nu, s, d),
                    flag: lower_bound_flag(e.estimate, m, s, d, lb.nu),
                    seed: cfg.seed,
                });
            }
        }
    }
    Ok(out)
}
