mod common;

use std::fs;
use std::path::Path;

use gplab::experiment::{emulator_diagnostics, target_values, Target};
use gplab::posterior::PosteriorKind;

use common::*;

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &small_study_toml(&out));
    assert_eq!(run_cli(&["experiment", "--config", &cfg]), 0);
    let reproducible = |dir: &Path| {
        let mut t = tree_contents(dir);
        t.retain(|(p, _)| p != Path::new("timing.log"));
        t
    };
    let first = reproducible(&out);
    fs::remove_dir_all(&out).unwrap();
    assert_eq!(run_cli(&["experiment", "--config", &cfg, "--jobs", "2"]), 0);
    let second = reproducible(&out);
    assert_eq!(first.len(), second.len());
    for (a, b) in first.iter().zip(&second) {
        assert!(a == b, "{} differs", a.0.display());
    }
    assert!(first.iter().any(|(p, _)| p == Path::new("rates.csv")));
    assert!(first.iter().any(|(p, _)| p == Path::new("problem_K2.toml")));
}

#[test]
fn seed_override_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "K = [1]\nn_per_dim = [2, 3, 4]\nkinds = [\"mean_g\"]\nqmc_points = 256\nqmc_shifts = 2\n";
    let cfg = write_config(tmp.path(), body);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run_cli(&["hellinger", "--config", &cfg, "--out", a.to_str().unwrap()]), 0);
    assert_eq!(
        run_cli(&["hellinger", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "9"]),
        0
    );
    let ra = fs::read(a.join("results.csv")).unwrap();
    let rb = fs::read(b.join("results.csv")).unwrap();
    assert_ne!(ra, rb);
    assert!(!a.join("rates.csv").exists());
}

#[test]
fn bad_config_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "K = [2]\nbogus_key = 3\n");
    assert_eq!(run_cli(&["experiment", "--config", &cfg]), 1);
    let cfg = write_config(tmp.path(), "nu = [-1.0]\n");
    assert_eq!(run_cli(&["emulate", "--config", &cfg]), 1);
    let missing = tmp.path().join("absent.toml");
    assert_eq!(run_cli(&["hellinger", "--config", missing.to_str().unwrap()]), 1);
}

#[test]
fn single_design_size_reports_insufficient_points() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = format!(
        "K = [1]\nn_per_dim = [4]\nkinds = [\"mean_g\", \"marginal_phi\"]\nqmc_points = 256\nqmc_shifts = 2\noutput_dir = {:?}\n",
        out.to_str().unwrap()
    );
    let cfg = write_config(tmp.path(), &body);
    assert_eq!(run_cli(&["experiment", "--config", &cfg]), 0);
    let rates = fs::read_to_string(out.join("rates.csv")).unwrap();
    assert_eq!(rates.matches("insufficient points").count(), 2);
}

#[test]
fn one_plot_file_per_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &small_study_toml(&out));
    assert_eq!(run_cli(&["experiment", "--config", &cfg]), 0);
    let plots: Vec<_> = fs::read_dir(out.join("plots")).unwrap().collect();
    assert_eq!(plots.len(), PosteriorKind::APPROXIMATIONS.len());
}

#[test]
fn emulate_writes_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = format!(
        "K = [1]\nn_per_dim = [3, 5, 9]\ntarget = \"phi\"\noutput_dir = {:?}\n",
        out.to_str().unwrap()
    );
    let cfg = write_config(tmp.path(), &body);
    assert_eq!(run_cli(&["emulate", "--config", &cfg]), 0);
    let text = fs::read_to_string(out.join("emulate.csv")).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(data[0].starts_with("target,K,nu"));
    assert_eq!(data.len(), 4);
}

#[test]
fn design_equal_to_probe_has_no_error() {
    let ip = default_problem(2, 2, 8);
    let probe = gplab::experiment::midpoint_grid(2, 7).unwrap();
    for target in [Target::G, Target::Phi] {
        let truth = target_values(&ip, target, &probe).unwrap();
        let d = emulator_diagnostics(&ip, target, &matern1(), &probe, &probe, &truth).unwrap();
        assert!(d.sup_error < 1e-6, "{}: {}", target.name(), d.sup_error);
        assert!(d.max_std < 1e-6);
    }
}
