//! `kfjlt`: reproducible experiments with the Kronecker fast JL transform.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kfjlt::harness::{
    self, config::parse_list, lower_bound_sweep, run_pointset, run_reports, run_selftest, write_lower_bound_csv,
    write_sweep_csv, Baseline, ExperimentConfig, Family, Overrides, PointFamily,
};
use kfjlt::Error;

#[derive(Parser)]
#[command(name = "kfjlt", version, about = "Seeded Monte Carlo experiments for the Kronecker fast JL transform")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate P(| ||Ax||^2 - 1 | > eps) per test-vector family, m and eps (CSV).
    JlSweep(Common),
    /// Pairwise-distance preservation and the smallest m meeting a failure target (JSON).
    Pointset {
        #[command(flatten)]
        common: Common,
        /// Point-set sizes, e.g. 4,16,64.
        #[arg(long)]
        points: Option<String>,
        /// adversarial, kron or dense.
        #[arg(long)]
        point_family: Option<String>,
        /// Joint failure probability the m search aims for.
        #[arg(long)]
        target: Option<f64>,
    },
    /// Empirical vs closed-form failure on adversarial subspace indicators (CSV).
    LowerBound {
        #[command(flatten)]
        common: Common,
        /// Field dimension n_j of every factor.
        #[arg(long)]
        field_dim: Option<usize>,
        /// Orders d, e.g. 1,2.
        #[arg(long)]
        d: Option<String>,
        /// Subspace dimensions r, e.g. 2,3.
        #[arg(long)]
        r: Option<String>,
        /// Failure level used to flag rows.
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Write RIP, chaos and partition-counting JSON reports into a directory.
    Report(Common),
    /// Run the exhaustive oracle suite; exits with 3 on any failure.
    Selftest {
        /// Also write the JSON summary here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Factor sizes, e.g. 4,8,2.
    #[arg(long)]
    dims: Option<String>,
    /// Target dimensions, e.g. 8,16,32.
    #[arg(long)]
    m: Option<String>,
    /// Distortions, e.g. 0.25,0.5.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (directory for `report`); stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Test-vector families, e.g. kron,dense,onehot.
    #[arg(long)]
    family: Option<String>,
    /// kfjlt, gaussian or unsampled.
    #[arg(long)]
    baseline: Option<String>,
    /// Record wall-clock milliseconds in sweep output.
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn load(&self) -> kfjlt::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let overrides = Overrides {
            dims: self.dims.as_deref().map(|s| parse_list("dims", s)).transpose()?,
            m: self.m.as_deref().map(|s| parse_list("m", s)).transpose()?,
            eps: self.eps.as_deref().map(|s| parse_list("eps", s)).transpose()?,
            trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
            families: self.family.as_deref().map(|s| parse_list::<Family>("family", s)).transpose()?,
            baseline: self.baseline.as_deref().map(str::parse::<Baseline>).transpose()?,
            timing: self.timing.then_some(true),
        };
        cfg.apply(&overrides);
        Ok(cfg)
    }
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> kfjlt::Result<()> {
    match out {
        Some(path) => {
            harness::write_file(path, bytes)?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            }),
    }
}

fn parse_point_family(s: &str) -> kfjlt::Result<PointFamily> {
    match s {
        "adversarial" => Ok(PointFamily::Adversarial),
        "kron" => Ok(PointFamily::Kron),
        "dense" => Ok(PointFamily::Dense),
        other => Err(Error::Config {
            field: "point_family".into(),
            reason: format!("unknown point family `{other}` (expected adversarial, kron or dense)"),
        }),
    }
}

enum Outcome {
    Done,
    SelftestFailed,
}

fn run(command: Command) -> kfjlt::Result<Outcome> {
    match command {
        Command::JlSweep(common) => {
            let cfg = common.load()?;
            let records = harness::jl_failure_sweep(&cfg)?;
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &records).map_err(|e| Error::Serialization(e.to_string()))?;
            emit(cfg.out.as_ref(), &buf)?;
        }
        Command::Pointset {
            common,
            points,
            point_family,
            target,
        } => {
            let mut cfg = common.load()?;
            if let Some(p) = points {
                cfg.pointset.points = parse_list("points", &p)?;
            }
            if let Some(f) = point_family {
                cfg.pointset.family = parse_point_family(&f)?;
            }
            if let Some(t) = target {
                cfg.pointset.target = t;
            }
            let summary = run_pointset(&cfg)?;
            emit(cfg.out.as_ref(), harness::to_json(&summary)?.as_bytes())?;
        }
        Command::LowerBound {
            common,
            field_dim,
            d,
            r,
            nu,
        } => {
            let mut cfg = common.load()?;
            let lb = &mut cfg.lower_bound;
            if let Some(n) = field_dim {
                lb.field_dim = n;
            }
            if let Some(d) = d {
                lb.d = parse_list("d", &d)?;
            }
            if let Some(r) = r {
                lb.r = parse_list("r", &r)?;
            }
            if let Some(nu) = nu {
                lb.nu = nu;
            }
            let records = lower_bound_sweep(&cfg)?;
            let mut buf = Vec::new();
            write_lower_bound_csv(&mut buf, &records).map_err(|e| Error::Serialization(e.to_string()))?;
            emit(cfg.out.as_ref(), &buf)?;
        }
        Command::Report(common) => {
            let cfg = common.load()?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("reports"));
            for path in run_reports(&cfg, &dir)? {
                println!("{}", path.display());
            }
        }
        Command::Selftest { out } => {
            let report = run_selftest()?;
            for c in &report.checks {
                println!(
                    "{} {}: {} cases, {} failures, max error {:e}",
                    if c.passed() { "ok  " } else { "FAIL" },
                    c.name,
                    c.cases,
                    c.failures,
                    c.max_error
                );
            }
            if let Some(path) = out {
                harness::write_json(&path, &report)?;
            }
            if !report.passed() {
                return Ok(Outcome::SelftestFailed);
            }
        }
    }
    Ok(Outcome::Done)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Budget(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::SelftestFailed) => {
            eprintln!("selftest failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
