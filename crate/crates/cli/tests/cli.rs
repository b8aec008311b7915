use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ssls::output::{format_float, load_checkpoint};
use tempfile::TempDir;

const TINY_SSLS: &str = r#"
[ssls]
epochs = 2
batch_size = 16
hidden = [8]
temperatures = 2
inner_steps = 3
"#;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn ssls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssls")).args(args).output().unwrap()
}

fn run_in(dir: &Path, sub: &str, body: &str, out: &str) -> Output {
    let cfg = write_config(dir, body);
    let out = dir.join(out);
    ssls(&[sub, cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_run_writes_two_rows() {
    let dir = TempDir::new().unwrap();
    let body = format!("experiment = \"linear_gaussian\"\nmethod = \"ssls\"\nensemble_size = 40\nsteps = 2\n{TINY_SSLS}");
    let o = run_in(dir.path(), "run", &body, "out");
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let traj = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(traj[0], ["k", "ref_0", "obs_0", "mean_0", "std_0"]);
    assert_eq!(traj.len(), 3);
    let metrics = csv_rows(&out.join("metrics.csv"));
    assert_eq!(metrics[0], ["k", "rmse", "spread", "coverage", "crps"]);
    assert_eq!(metrics.len(), 3);
    assert_eq!(metrics[1][0], "1");
    assert_eq!(metrics[2][0], "2");
    let summary = csv_rows(&out.join("summary.csv"));
    assert_eq!(summary[0], ["method", "rmse", "spread", "coverage", "crps"]);
    assert_eq!(summary[1][0], "ssls");
}

#[test]
fn floats_round_trip() {
    let dir = TempDir::new().unwrap();
    let body = "experiment = \"linear_gaussian\"\nmethod = \"enkf\"\nensemble_size = 30\nsteps = 3\n";
    assert!(run_in(dir.path(), "run", body, "out").status.success());
    for row in &csv_rows(&dir.path().join("out/trajectory.csv"))[1..] {
        for cell in &row[1..] {
            let v: f64 = cell.parse().unwrap();
            assert_eq!(&format_float(v), cell);
        }
    }
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    for method in ["ssls", "enkf", "apf"] {
        let body = format!(
            "experiment = \"double_well_linear\"\nmethod = \"{method}\"\nensemble_size = 30\nsteps = 4\nmutation_period = 2\nseed = 9\n{TINY_SSLS}"
        );
        assert!(run_in(dir.path(), "run", &body, "a").status.success());
        assert!(run_in(dir.path(), "run", &body, "b").status.success());
        let (a, b) = (read_all(&dir.path().join("a")), read_all(&dir.path().join("b")));
        assert_eq!(a.len(), 3);
        assert_eq!(a, b, "{method}");
    }
}

#[test]
fn seed_override_changes_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"linear_gaussian\"\nmethod = \"apf\"\nensemble_size = 30\nsteps = 3\nseed = 1\n",
    );
    let run = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let o = ssls(&["run", cfg.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        fs::read(out.join("trajectory.csv")).unwrap()
    };
    assert_eq!(run("1", "x"), run("1", "y"));
    assert_ne!(run("1", "x"), run("2", "z"));
}

#[test]
fn output_dir_from_config() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("from_config");
    let body = format!(
        "experiment = \"linear_gaussian\"\nmethod = \"kalman\"\nsteps = 2\noutput_dir = \"{}\"\n",
        out.display()
    );
    let cfg = write_config(dir.path(), &body);
    assert!(ssls(&["run", cfg.to_str().unwrap()]).status.success());
    assert!(out.join("metrics.csv").exists());
}

#[test]
fn kalman_on_double_well_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        "run",
        "experiment = \"double_well_linear\"\nmethod = \"kalman\"\nsteps = 2\n",
        "out",
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kalman"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn compare_joins_methods() {
    let dir = TempDir::new().unwrap();
    let body = "experiment = \"linear_gaussian\"\nmethods = [\"enkf\", \"kalman\"]\nensemble_size = 50\nsteps = 5\n";
    let o = run_in(dir.path(), "compare", body, "cmp");
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("cmp");
    assert_eq!(read_all(&out).len(), 3);
    let joined = csv_rows(&out.join("comparison.csv"));
    assert_eq!(joined.len(), 6);
    assert_eq!(joined[0][0], "k");
    assert!(joined[0].contains(&"enkf_rmse".to_string()));
    assert!(joined[0].contains(&"kalman_crps".to_string()));
    // joined columns equal the per-method files
    let enkf = csv_rows(&out.join("metrics_enkf.csv"));
    for (j, e) in joined[1..].iter().zip(&enkf[1..]) {
        assert_eq!(j[0], e[0]);
        assert_eq!(j[1..5], e[1..5]);
    }
}

#[test]
fn compare_needs_two_methods() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        "compare",
        "experiment = \"linear_gaussian\"\nmethods = [\"enkf\"]\nsteps = 2\n",
        "out",
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("methods"));
}

#[test]
fn unknown_key_reports_location() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        "run",
        "experiment = \"linear_gaussian\"\nmethod = \"enkf\"\nensembel_size = 10\n",
        "out",
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("ensembel_size") && err.contains("line 3"), "{err}");
}

#[test]
fn model_key_of_other_experiment_rejected() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        "run",
        "experiment = \"lorenz96\"\nmethod = \"enkf\"\n[model]\ngamma = 0.6\n",
        "out",
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma"));
}

#[test]
fn missing_config_file_fails() {
    let o = ssls(&["run", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ensemble_of_one_rejected() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        "run",
        "experiment = \"linear_gaussian\"\nmethod = \"apf\"\nensemble_size = 1\n",
        "out",
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn checkpoint_is_written_and_loadable() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "experiment = \"lorenz96\"\nmethod = \"ssls\"\nensemble_size = 20\nsteps = 2\n[model]\ndim = 5\n{}checkpoint = true\n",
        TINY_SSLS.trim_start()
    );
    let o = run_in(dir.path(), "run", &body, "out");
    assert!(o.status.success(), "{}", stderr(&o));
    let net = load_checkpoint(&dir.path().join("out/score_net.bin")).unwrap();
    assert_eq!(net.dim(), 5);
    assert_eq!(net.hidden_widths(), &[8]);
}
