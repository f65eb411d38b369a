use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn glottochron(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glottochron"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const BASE: &str = "\
tree_prior = fbd
n_extant_family = 400
root_bounds = 4000, 8000
seed = 17
chain_length = 3000
thin = 30
n_runs = 2
n_chains = 2
print_every = 1000
audit_every = 500
";

/// Simulates a small dataset and writes a config pointing at it.
fn project(extra: &str) -> (TempDir, String) {
    let dir = TempDir::new().unwrap();
    let sim_cfg = dir.path().join("sim.cfg");
    fs::write(&sim_cfg, format!("{BASE}output = data\n")).unwrap();
    let o = glottochron(&["simulate", "--config", sim_cfg.to_str().unwrap(), "--taxa", "6", "--fossils", "1", "--sites", "60"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!("{BASE}dataset = data.sim.matrix.txt\ncalibrations = data.sim.calibrations.csv\noutput = out\n{extra}"),
    )
    .unwrap();
    let path = cfg.to_str().unwrap().to_string();
    (dir, path)
}

fn exists(dir: &Path, name: &str) -> bool {
    dir.join(name).exists()
}

#[test]
fn run_summarize_and_refuse_overwrite() {
    let (dir, cfg) = project("");
    let o = glottochron(&["run", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["out.run1.trace.tsv", "out.run2.trace.tsv", "out.run1.trees", "out.run2.trees", "out.stats.txt"] {
        assert!(exists(dir.path(), f), "{f} missing");
    }
    assert!(stdout(&o).contains("final ASDSF"));

    let again = glottochron(&["run", "--config", &cfg]);
    assert_eq!(again.status.code(), Some(2));
    assert!(stderr(&again).contains("--force"));

    let s = glottochron(&["summarize", "--config", &cfg]);
    assert!(s.status.success(), "{}", stderr(&s));
    let report = fs::read_to_string(dir.path().join("out.report.txt")).unwrap();
    assert!(report.contains("root age median"));
    assert!(report.contains("root age 95% HPD"));
    let newick = fs::read_to_string(dir.path().join("out.consensus.tree")).unwrap();
    assert!(newick.trim_end().ends_with(';'));
    assert!(newick.contains("support="));

    let bad = glottochron(&["summarize", "--config", &cfg, "--burn-in", "1.0", "--force"]);
    assert_eq!(bad.status.code(), Some(2));

    let trace = dir.path().join("out.run1.trace.tsv");
    let a = glottochron(&["aicm", trace.to_str().unwrap(), "--burn-in", "0.1"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(stdout(&a).contains("samples"));
}

#[test]
fn reruns_are_byte_identical() {
    let (dir, cfg) = project("");
    let mut reports = Vec::new();
    for _ in 0..2 {
        let o = glottochron(&["run", "--config", &cfg, "--force"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let s = glottochron(&["summarize", "--config", &cfg, "--force"]);
        assert!(s.status.success(), "{}", stderr(&s));
        reports.push((
            fs::read(dir.path().join("out.run1.trace.tsv")).unwrap(),
            fs::read(dir.path().join("out.report.txt")).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);

    let threaded = glottochron(&["run", "--config", &cfg, "--force", "--threads", "2"]);
    assert!(threaded.status.success());
    assert_eq!(fs::read(dir.path().join("out.run1.trace.tsv")).unwrap(), reports[0].0);
}

#[test]
fn prior_only_likelihood_column_is_zero() {
    let (dir, cfg) = project("prior_only = true\n");
    let o = glottochron(&["run", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("out.run1.trace.tsv")).unwrap();
    let rows: Vec<&str> = trace.lines().skip(2).collect();
    assert!(!rows.is_empty());
    for row in rows {
        assert_eq!(row.split('\t').nth(1), Some("0"));
    }
}

#[test]
fn config_and_data_errors_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "tree_prior = fbd\ndataset = m.txt\n").unwrap();
    let o = glottochron(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_extant_family"));

    fs::write(&cfg, "tree_prior = uniform\ndataset = missing.txt\n").unwrap();
    let o = glottochron(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    fs::write(dir.path().join("m.txt"), "2 3\nA\t01?\nB\t1x0\n").unwrap();
    fs::write(&cfg, "tree_prior = uniform\ndataset = m.txt\n").unwrap();
    let o = glottochron(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 3"));

    let o = glottochron(&["summarize", "--config", cfg.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn validate_accepts_simulated_project() {
    let (dir, cfg) = project("");
    let o = glottochron(&["validate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("ok: 6 taxa (1 dated), 60 sites"));
    assert!(!exists(dir.path(), "out.stats.txt"));
}

fn write_trace(path: &Path, heights: &[f64]) {
    let mut text = String::from("# glottochron trace\nSample\tLnL\tLnPrior\tTreeHeight\n");
    for (i, h) in heights.iter().enumerate() {
        text.push_str(&format!("{i}\t-10\t-1\t{h}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn bayes_factor_report_and_sentinels() {
    let dir = TempDir::new().unwrap();
    let post = dir.path().join("post.tsv");
    let prior = dir.path().join("prior.tsv");
    let mut heights = vec![6000.0; 300];
    heights.extend(vec![9000.0; 50]);
    heights.extend(vec![12000.0; 650]);
    write_trace(&post, &heights);
    let mut heights = vec![6000.0; 100];
    heights.extend(vec![9000.0; 100]);
    heights.extend(vec![12000.0; 800]);
    write_trace(&prior, &heights);
    let args = |p: &Path, q: &Path| {
        glottochron(&[
            "bf",
            "--posterior",
            p.to_str().unwrap(),
            "--prior",
            q.to_str().unwrap(),
            "--burn-in",
            "0",
        ])
    };
    let o = args(&post, &prior);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("K = 6.000 (Positive)"), "{}", stdout(&o));

    let empty = dir.path().join("empty.tsv");
    write_trace(&empty, &[12000.0; 10]);
    assert!(stdout(&args(&post, &empty)).contains("K = *"));
    assert!(stdout(&args(&empty, &empty)).contains("K = **"));
}
