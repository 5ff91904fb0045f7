use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn netsim(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_netsim"));
    cmd.args(args).env_remove("NETSIM_THREADS");
    if let Some(t) = threads {
        cmd.env("NETSIM_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &tempfile::TempDir, body: &str) -> String {
    let p = dir.path().join("c.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn golden_csv_across_thread_counts() {
    let golden = std::fs::read_to_string(data("pinned.csv")).unwrap();
    assert!(golden.starts_with("strategy,engine,param,value,lambda_star_density,lambda_star_fit,k_ue,ee,ce,ci_ee,ci_ce,seed\n"));
    let cfg = data("pinned.toml");
    for threads in ["1", "3"] {
        let o = netsim(&["sweep", "--config", cfg.to_str().unwrap()], Some(threads));
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(String::from_utf8(o.stdout).unwrap(), golden, "NETSIM_THREADS={threads}");
    }
}

#[test]
fn out_dir_gets_csv_summary_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "[sweep]\nparam = \"antennas_m\"\nvalues = [64.0, 128.0]\nstrategies = [\"ppp\"]\n",
    );
    let out = dir.path().join("out");
    let o = netsim(&["sweep", "--config", &cfg, "--seed", "9", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("ppp,analytic,antennas_m,") && l.ends_with(",9")));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 9);
    assert_eq!(summary["trends_passed"], true);
    assert_eq!(summary["content_hash"].as_str().unwrap().len(), 64);
    assert!(std::fs::read_to_string(out.join("plot.gp")).unwrap().contains("'results.csv'"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&netsim(&["--help"], None)), 0);
    assert_eq!(code(&netsim(&["--version"], None)), 0);
    assert_eq!(code(&netsim(&["frobnicate"], None)), 1);
    assert_eq!(code(&netsim(&["analytic", "--strategy", "hexagonal"], None)), 1);
    assert_eq!(code(&netsim(&["analytic", "--engine", "mc"], None)), 1);
    assert_eq!(code(&netsim(&["analytic"], Some("zero"))), 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(&dir, "eta = 1.5\n");
    let o = netsim(&["analytic", "--config", &bad], None);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("eta must be in (0,1]"));

    let unknown = write_config(&dir, "etta = 0.3\n");
    let o = netsim(&["analytic", "--config", &unknown], None);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("etta"));

    let no_sweep = write_config(&dir, "");
    assert_eq!(code(&netsim(&["sweep", "--config", &no_sweep], None)), 1);
}

#[test]
fn unevaluable_point_fails_the_trend_assertions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "[sweep]\nparam = \"delta\"\nvalues = [200.0, 1e6]\nstrategies = [\"matern\"]\n",
    );
    let o = netsim(&["sweep", "--config", &cfg], None);
    assert_eq!(code(&o), 2);
    let csv = String::from_utf8(o.stdout).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("matern,analytic,delta,1000000.0,NaN"), "{last}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("fit failed"));
}

#[test]
fn single_point_analytic() {
    let o = netsim(&["analytic", "--strategy", "ppp"], None);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..4], &["ppp", "analytic", "delta", "200.0"]);
    assert_eq!(row[4], "0.0001");
    let ce: f64 = row[8].parse().unwrap();
    assert!(ce > 0.0 && ce < 1.0);
}
