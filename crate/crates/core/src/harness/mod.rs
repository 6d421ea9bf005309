//! Seeded Monte Carlo experiments and their CSV / JSON output.
//!
//! Every trial derives its operator seed from `(master seed, trial index)`,
//! so results do not depend on evaluation order and reruns are byte-identical
//! unless wall-clock timing is switched on.

pub mod config;
pub mod lower;
pub mod pointset;
pub mod reports;
pub mod selftest;
pub mod sweep;

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub use config::{Baseline, ExperimentConfig, ExperimentKind, Family, Overrides, PointFamily};
pub use lower::{lower_bound_sweep, write_lower_bound_csv, LowerBoundRecord, LOWER_BOUND_HEADER};
pub use pointset::{point_family, pointset_preservation, required_m, run_pointset, scaling_slope, PointsetReport, RequiredM};
pub use reports::run_reports;
pub use selftest::{run_selftest, SelftestReport};
pub use sweep::{jl_failure_sweep, write_sweep_csv, SweepRecord, TestVector, SWEEP_HEADER};

/// Version tag carried by every JSON document.
pub const SCHEMA: &str = "kfjlt.report/v1";

/// `sqrt(eta (1 - eta) / trials)`.
pub fn binomial_stderr(eta: f64, trials: usize) -> f64 {
    (eta * (1.0 - eta) / trials as f64).sqrt()
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, to_json(value)?.as_bytes())
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
