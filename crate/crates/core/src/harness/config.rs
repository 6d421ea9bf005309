//! Declarative experiment configuration.
//!
//! A config is a TOML document. Top-level keys describe the grid shared by
//! all experiments; the optional `[pointset]`, `[lower_bound]` and `[report]`
//! tables hold the settings specific to one experiment. Command-line flags are
//! applied on top through [`Overrides`], so a flag always wins over the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chaos::ChaosMode;
use crate::error::{Error, Result};
use crate::index::KronDims;
use crate::lower_bound::MAX_FIELD_DIM;

pub const DEFAULT_TRIALS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    JlSweep,
    Pointset,
    LowerBound,
    RipReport,
    ChaosReport,
}

/// Test vectors for the JL sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Kronecker products of independent random unit factors.
    Kron,
    /// Dense random unit vectors.
    Dense,
    /// Standard basis vectors at a random position.
    Onehot,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Kron, Family::Dense, Family::Onehot];

    pub fn name(self) -> &'static str {
        match self {
            Family::Kron => "kron",
            Family::Dense => "dense",
            Family::Onehot => "onehot",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config("family", format!("unknown family `{s}` (expected kron, dense or onehot)")))
    }
}

/// Which random operator a sweep draws.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    Kfjlt,
    /// Dense `N(0, 1/m)` matrices.
    Gaussian,
    /// `H D_xi` without subsampling, an exact isometry.
    Unsampled,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Kfjlt => "kfjlt",
            Baseline::Gaussian => "gaussian",
            Baseline::Unsampled => "unsampled",
        }
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Baseline::Kfjlt, Baseline::Gaussian, Baseline::Unsampled]
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::config("baseline", format!("unknown baseline `{s}` (expected kfjlt, gaussian or unsampled)")))
    }
}

/// Point families for the pairwise-distance experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFamily {
    /// Sign-modulated subspace indicators chosen to be hard for the sketch.
    #[default]
    Adversarial,
    Kron,
    Dense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointsetSection {
    /// Point-set sizes `p`.
    pub points: Vec<usize>,
    pub family: PointFamily,
    /// Joint failure probability the required-`m` search aims for.
    pub target: f64,
    /// Largest `m` the required-`m` search may try.
    pub m_max: usize,
}

impl Default for PointsetSection {
    fn default() -> Self {
        PointsetSection {
            points: vec![4, 16, 64, 256],
            family: PointFamily::Adversarial,
            target: 0.1,
            m_max: 8192,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LowerBoundSection {
    /// `n_j`, shared by all factors.
    pub field_dim: usize,
    pub d: Vec<usize>,
    pub r: Vec<usize>,
    /// Failure level used for flagging.
    pub nu: f64,
}

impl Default for LowerBoundSection {
    fn default() -> Self {
        LowerBoundSection {
            field_dim: 4,
            d: vec![1, 2],
            r: vec![2],
            nu: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Rip,
    Chaos,
    PartitionCounting,
}

impl ReportKind {
    pub fn name(self) -> &'static str {
        match self {
            ReportKind::Rip => "rip",
            ReportKind::Chaos => "chaos",
            ReportKind::PartitionCounting => "partition_counting",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChaosSource {
    /// Coefficients of `||Phi D_xi x||^2` for a subsampled Hadamard `Phi` and a random unit `x`.
    #[default]
    Operator,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RipSection {
    pub dims: Vec<usize>,
    pub m: usize,
    pub s: usize,
}

impl Default for RipSection {
    fn default() -> Self {
        RipSection {
            dims: vec![16],
            m: 8,
            s: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosSection {
    pub dims: Vec<usize>,
    pub m: usize,
    pub p: Vec<f64>,
    pub mode: ChaosMode,
    pub source: ChaosSource,
}

impl Default for ChaosSection {
    fn default() -> Self {
        ChaosSection {
            dims: vec![4, 4],
            m: 8,
            p: vec![2.0, 4.0, 6.0],
            mode: ChaosMode::Coupled,
            source: ChaosSource::Operator,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSection {
    pub kinds: Vec<ReportKind>,
    pub rip: RipSection,
    pub chaos: ChaosSection,
    /// Order `d` of the partition-counting check.
    pub counting_d: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            kinds: vec![ReportKind::Rip, ReportKind::Chaos, ReportKind::PartitionCounting],
            rip: RipSection::default(),
            chaos: ChaosSection::default(),
            counting_d: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub dims: Vec<usize>,
    pub m: Vec<usize>,
    pub eps: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub families: Vec<Family>,
    pub baseline: Baseline,
    /// Record wall-clock milliseconds in sweep output (breaks byte reproducibility).
    pub timing: bool,
    pub pointset: PointsetSection,
    pub lower_bound: LowerBoundSection,
    pub report: ReportSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            dims: vec![16, 16],
            m: vec![8, 16, 32, 64, 128],
            eps: vec![0.5],
            trials: DEFAULT_TRIALS,
            seed: 0,
            out: None,
            families: Family::ALL.to_vec(),
            baseline: Baseline::Kfjlt,
            timing: false,
            pointset: PointsetSection::default(),
            lower_bound: LowerBoundSection::default(),
            report: ReportSection::default(),
        }
    }
}

/// Values supplied on the command line; `Some` replaces the file value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub dims: Option<Vec<usize>>,
    pub m: Option<Vec<usize>>,
    pub eps: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub families: Option<Vec<Family>>,
    pub baseline: Option<Baseline>,
    pub timing: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .and_then(|span| key_at(text, span.start))
                .unwrap_or_else(|| "config".to_string());
            Error::config(field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.dims {
            self.dims = v.clone();
        }
        if let Some(v) = &o.m {
            self.m = v.clone();
        }
        if let Some(v) = &o.eps {
            self.eps = v.clone();
        }
        if let Some(v) = o.trials {
            self.trials = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = &o.families {
            self.families = v.clone();
        }
        if let Some(v) = o.baseline {
            self.baseline = v;
        }
        if let Some(v) = o.timing {
            self.timing = v;
        }
    }

    pub fn kron_dims(&self) -> Result<KronDims> {
        check_dims("dims", &self.dims)
    }

    fn check_trials(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be positive"));
        }
        Ok(())
    }

    fn check_eps(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::config("eps", "need at least one value"));
        }
        if let Some(e) = self.eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::config("eps", format!("{e} is not a positive finite number")));
        }
        Ok(())
    }

    fn check_m(&self, allow_empty: bool) -> Result<()> {
        if self.m.is_empty() && !allow_empty {
            return Err(Error::config("m", "need at least one value"));
        }
        if self.m.contains(&0) {
            return Err(Error::config("m", "values must be positive"));
        }
        Ok(())
    }

    pub fn validate_jl_sweep(&self) -> Result<()> {
        self.kron_dims()?;
        self.check_trials()?;
        self.check_eps()?;
        if self.baseline != Baseline::Unsampled {
            self.check_m(false)?;
        }
        if self.families.is_empty() {
            return Err(Error::config("families", "need at least one family"));
        }
        Ok(())
    }

    pub fn validate_pointset(&self) -> Result<()> {
        self.kron_dims()?;
        self.check_trials()?;
        self.check_eps()?;
        self.check_m(true)?;
        let ps = &self.pointset;
        if ps.points.is_empty() {
            return Err(Error::config("pointset.points", "need at least one point-set size"));
        }
        if let Some(p) = ps.points.iter().find(|&&p| p < 2) {
            return Err(Error::config("pointset.points", format!("p = {p} is below 2")));
        }
        if !(ps.target > 0.0 && ps.target < 1.0) {
            return Err(Error::config("pointset.target", "must lie in (0, 1)"));
        }
        if ps.m_max == 0 {
            return Err(Error::config("pointset.m_max", "must be positive"));
        }
        Ok(())
    }

    pub fn validate_lower_bound(&self) -> Result<()> {
        self.check_trials()?;
        self.check_m(true)?;
        let lb = &self.lower_bound;
        if lb.field_dim == 0 || lb.field_dim > MAX_FIELD_DIM {
            return Err(Error::config("lower_bound.field_dim", format!("must lie in [1, {MAX_FIELD_DIM}]")));
        }
        if lb.d.contains(&0) {
            return Err(Error::config("lower_bound.d", "values must be positive"));
        }
        if let Some(r) = lb.r.iter().find(|&&r| r > lb.field_dim) {
            return Err(Error::config("lower_bound.r", format!("r = {r} exceeds field_dim = {}", lb.field_dim)));
        }
        if !(lb.nu > 0.0 && lb.nu < 1.0) {
            return Err(Error::config("lower_bound.nu", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn validate_report(&self) -> Result<()> {
        let rep = &self.report;
        if rep.kinds.is_empty() {
            return Err(Error::config("report.kinds", "need at least one report kind"));
        }
        check_dims("report.rip.dims", &rep.rip.dims)?;
        if rep.rip.m == 0 || rep.rip.s == 0 {
            return Err(Error::config("report.rip", "m and s must be positive"));
        }
        check_dims("report.chaos.dims", &rep.chaos.dims)?;
        if rep.chaos.m == 0 {
            return Err(Error::config("report.chaos.m", "must be positive"));
        }
        if rep.chaos.p.is_empty() || rep.chaos.p.iter().any(|p| !(1.0..=10.0).contains(p)) {
            return Err(Error::config("report.chaos.p", "need values in [1, 10]"));
        }
        if rep.kinds.contains(&ReportKind::Chaos) {
            self.check_trials()?;
        }
        if rep.counting_d == 0 {
            return Err(Error::config("report.counting_d", "must be positive"));
        }
        Ok(())
    }
}

fn check_dims(field: &str, dims: &[usize]) -> Result<KronDims> {
    if let Some(n) = dims.iter().find(|n| !n.is_power_of_two() || **n < 2) {
        return Err(Error::config(field, format!("{n} is not a power of two >= 2")));
    }
    KronDims::new(dims.to_vec()).map_err(|e| Error::config(field, e.to_string()))
}

/// The dotted key whose line contains byte offset `pos`, if it can be recovered.
fn key_at(text: &str, pos: usize) -> Option<String> {
    let mut table = String::new();
    let mut key = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            table = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
        if offset + line.len() > pos {
            if let Some((k, _)) = trimmed.split_once('=') {
                key = Some(k.trim().to_string());
            }
            break;
        }
        offset += line.len();
    }
    match (table.is_empty(), key) {
        (_, None) if !table.is_empty() => Some(table),
        (true, k) => k,
        (false, Some(k)) => Some(format!("{table}.{k}")),
        _ => None,
    }
}

/// Parses a comma-separated list such as `4,8,2`.
pub fn parse_list<T: FromStr>(field: &str, text: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| Error::config(field, format!("`{s}`: {e}"))))
        .collect()
}
