use std::path::Path;
use std::process::{Command, Output};

fn kfjlt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfjlt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SWEEP: &[&str] = &["jl-sweep", "--dims", "4,8", "--m", "4,16", "--eps", "0.5", "--trials", "300", "--seed", "5"];

#[test]
fn sweep_to_stdout() {
    let o = kfjlt(SWEEP);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "family,d,dims,N,m,eps,trials,failures,eta_hat,stderr,seed,wall_ms");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("dense,2,4x8,32,4,0.5,300,"));
    assert!(rows.iter().all(|r| r.ends_with(",5,0")));
}

#[test]
fn sweep_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let mut args = SWEEP.to_vec();
        let p = path.to_str().unwrap().to_string();
        args.extend(["--out", &p]);
        assert!(kfjlt(&args).status.success());
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 1\ntrials = 100\ndims = [8]\nm = [4]\neps = [0.5]\nfamilies = [\"onehot\"]\n").unwrap();
    let o = kfjlt(&["jl-sweep", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("onehot,1,8,8,4,0.5,100,"));
    assert!(row.ends_with(",9,0"));
}

#[test]
fn config_errors_exit_1_with_field() {
    let o = kfjlt(&["jl-sweep", "--dims", "16,12", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`dims`"), "{}", stderr(&o));

    let o = kfjlt(&["jl-sweep", "--baseline", "fancy"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`baseline`"));

    let o = kfjlt(&["jl-sweep", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/cfg.toml"));

    let o = kfjlt(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn budget_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("r.toml");
    std::fs::write(&cfg, "[report]\nkinds = [\"partition_counting\"]\ncounting_d = 6\n").unwrap();
    let out = dir.path().join("reports");
    let o = kfjlt(&["report", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn reports_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reports.toml");
    let out = dir.path().join("reports");
    let o = kfjlt(&[
        "report",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "1000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let counting = std::fs::read_to_string(out.join("partition_counting.json")).unwrap();
    assert!(counting.contains("\"violations\": 0"));
    let rip = std::fs::read_to_string(out.join("rip.json")).unwrap();
    assert!(rip.contains("\"witness_support\""));
    assert!(rip.contains("\"seed\": 7"));
}

#[test]
fn lower_bound_empty_grid() {
    let o = kfjlt(&["lower-bound", "--m=", "--trials", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1);
    assert!(stdout(&o).starts_with("d,r,s,"));
}

#[test]
fn lower_bound_rows() {
    let o = kfjlt(&["lower-bound", "--m", "16,64", "--d", "2", "--r", "2", "--trials", "200", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("2,2,4,4,256,16,200,"));
}

#[test]
fn pointset_json() {
    let o = kfjlt(&[
        "pointset", "--dims", "16", "--m", "8", "--eps", "0.5", "--trials", "100", "--points", "2,4", "--point-family",
        "dense",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("\"schema\": \"kfjlt.report/v1\""));
    assert!(text.contains("\"union_bound\""));
    assert!(text.contains("\"m_star\""));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("selftest.json");
    let o = kfjlt(&["selftest", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).contains("FAIL"));
    assert!(std::fs::read_to_string(out).unwrap().contains("subspace_duality"));
}
