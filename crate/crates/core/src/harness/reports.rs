//! Structured JSON reports on the RIP, chaos and partition-counting machinery.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ChaosSource, ExperimentConfig, ReportKind};
use super::{write_json, SCHEMA};
use crate::chaos::{
    check_partition_counting, estimate_chaos_moments, fit_moment_constant, ChaosCoefficients, ChaosMode,
    CountingViolation, NormConfig,
};
use crate::error::{Error, Result};
use crate::index::KronDims;
use crate::rip::rip_constant;
use crate::rng::{self, labels};
use crate::transforms::{build_operator, subsampled_hadamard};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RipDocument {
    pub schema: &'static str,
    pub kind: &'static str,
    pub dims: String,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub seed: u64,
    pub delta: f64,
    /// 1-based support attaining `delta`.
    pub witness_support: Vec<usize>,
    /// `delta_k` for `k = 1..=s`.
    pub delta_by_order: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChaosDocument {
    pub schema: &'static str,
    pub kind: &'static str,
    pub dims: String,
    pub m: usize,
    pub seed: u64,
    pub source: ChaosSource,
    pub mode: ChaosMode,
    pub trials: usize,
    pub p_values: Vec<f64>,
    pub lp_norms: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `m_p(A)` per `p`, absent for the zero source.
    pub m_p: Option<Vec<f64>>,
    pub fitted_constant: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingDocument {
    pub schema: &'static str,
    pub kind: &'static str,
    pub d: usize,
    pub cases: usize,
    pub violations: usize,
    pub violation_cases: Vec<CountingViolation>,
}

/// `delta_s` of one KFJLT draw, as a dense matrix.
pub fn rip_report(cfg: &ExperimentConfig) -> Result<RipDocument> {
    cfg.validate_report()?;
    let rc = &cfg.report.rip;
    let dims = KronDims::new(rc.dims.clone())?;
    let phi = build_operator(&dims, rc.m, cfg.seed)?.to_matrix();
    let mut delta_by_order = Vec::with_capacity(rc.s);
    let mut top = None;
    for k in 1..=rc.s {
        let r = rip_constant(&phi, k)?;
        delta_by_order.push(r.delta);
        top = Some(r);
    }
    let top = top.expect("s >= 1");
    Ok(RipDocument {
        schema: SCHEMA,
        kind: ReportKind::Rip.name(),
        dims: dims.to_string(),
        n: dims.total(),
        m: rc.m,
        s: rc.s,
        seed: cfg.seed,
        delta: top.delta,
        witness_support: top.witness_support,
        delta_by_order,
    })
}

/// Moment profile of `||Phi D_xi x||^2 - 1` for a subsampled Hadamard `Phi` and a random unit `x`.
pub fn chaos_report(cfg: &ExperimentConfig) -> Result<ChaosDocument> {
    cfg.validate_report()?;
    let cc = &cfg.report.chaos;
    let dims = KronDims::new(cc.dims.clone())?;
    let coeffs = match cc.source {
        ChaosSource::Zero => ChaosCoefficients::zeros(dims.clone()),
        ChaosSource::Operator => {
            let phi = subsampled_hadamard(&dims, cc.m, cfg.seed)?;
            let mut g = rng::stream_rng(rng::derive_path(cfg.seed, &[labels::POINTS, 32]), 0);
            let x = rng::unit_gaussian_vec(&mut g, dims.total());
            ChaosCoefficients::from_operator(dims.clone(), &phi, &x)?
        }
    };
    let profile = estimate_chaos_moments(&coeffs, cc.mode, &cc.p, cfg.trials, cfg.seed)?;
    let (m_p, fitted_constant) = match cc.source {
        ChaosSource::Zero => (None, None),
        ChaosSource::Operator => {
            let norm_cfg = NormConfig {
                seed: cfg.seed,
                ..NormConfig::default()
            };
            let fit = fit_moment_constant(&coeffs, &profile, &norm_cfg)?;
            (Some(fit.m_p), Some(fit.fitted_constant))
        }
    };
    Ok(ChaosDocument {
        schema: SCHEMA,
        kind: ReportKind::Chaos.name(),
        dims: dims.to_string(),
        m: cc.m,
        seed: cfg.seed,
        source: cc.source,
        mode: cc.mode,
        trials: profile.trials,
        p_values: profile.p_values,
        lp_norms: profile.lp_norms,
        stderr: profile.stderr,
        m_p,
        fitted_constant,
    })
}

pub fn counting_report(cfg: &ExperimentConfig) -> Result<CountingDocument> {
    cfg.validate_report()?;
    let r = check_partition_counting(cfg.report.counting_d)?;
    Ok(CountingDocument {
        schema: SCHEMA,
        kind: ReportKind::PartitionCounting.name(),
        d: r.d,
        cases: r.cases,
        violations: r.violations.len(),
        violation_cases: r.violations,
    })
}

/// Writes `<kind>.json` into `dir` for every configured report kind.
pub fn run_reports(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate_report()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for &kind in &cfg.report.kinds {
        let path = dir.join(format!("{}.json", kind.name()));
        match kind {
            ReportKind::Rip => write_json(&path, &rip_report(cfg)?)?,
            ReportKind::Chaos => write_json(&path, &chaos_report(cfg)?)?,
            ReportKind::PartitionCounting => write_json(&path, &counting_report(cfg)?)?,
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ChaosSection, ReportSection, RipSection};

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            seed: 7,
            trials: 2000,
            report: ReportSection {
                rip: RipSection {
                    dims: vec![16],
                    m: 8,
                    s: 2,
                },
                chaos: ChaosSection {
                    dims: vec![2, 4],
                    m: 4,
                    ..Default::default()
                },
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn rip_document() {
        let doc = rip_report(&cfg()).unwrap();
        assert_eq!((doc.n, doc.m, doc.s, doc.seed), (16, 8, 2, 7));
        assert_eq!(doc.witness_support.len(), 2);
        assert!(doc.delta_by_order[0] <= doc.delta_by_order[1]);
        assert_eq!(doc.delta, doc.delta_by_order[1]);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"schema\":\"kfjlt.report/v1\""));
        assert!(json.contains("\"witness_support\""));
    }

    #[test]
    fn zero_chaos_has_zero_moments() {
        let mut c = cfg();
        c.report.chaos.source = ChaosSource::Zero;
        let doc = chaos_report(&c).unwrap();
        assert!(doc.lp_norms.iter().all(|&v| v == 0.0));
        assert!(doc.m_p.is_none());
    }

    #[test]
    fn operator_chaos_is_bounded_by_fit() {
        let doc = chaos_report(&cfg()).unwrap();
        let m_p = doc.m_p.unwrap();
        let c = doc.fitted_constant.unwrap();
        for (l, m) in doc.lp_norms.iter().zip(&m_p) {
            assert!(*l <= c * m * (1.0 + 1e-12));
        }
    }

    #[test]
    fn counting_document_d2() {
        let mut c = cfg();
        c.report.counting_d = 2;
        let doc = counting_report(&c).unwrap();
        assert_eq!(doc.violations, 0);
        assert!(serde_json::to_string(&doc).unwrap().contains("\"violations\":0"));
    }

    #[test]
    fn files_are_written_and_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let a = run_reports(&cfg(), &dir.path().join("a")).unwrap();
        let b = run_reports(&cfg(), &dir.path().join("b")).unwrap();
        assert_eq!(a.len(), 3);
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
        }
        assert!(a[2].ends_with("partition_counting.json"));
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, "x").unwrap();
        match run_reports(&cfg(), &file.join("sub")) {
            Err(Error::Io { path, .. }) => assert!(path.ends_with("sub")),
            other => panic!("{other:?}"),
        }
    }
}
