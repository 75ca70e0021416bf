//! End-to-end runs of the `latent-bcd` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use latent_bcd::experiment::read_metrics_csv;
use latent_bcd::io::load_dataset;
use latent_bcd::metrics::MetricsRecord;
use latent_bcd::plot::PlotSeries;
use tempfile::tempdir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latent-bcd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_documents_every_flag() {
    let expected: [(&str, &[&str]); 4] = [
        (
            "generate",
            &[
                "--d", "--D", "--er", "--sigma", "--n-obs", "--n-int", "--node-mode", "--value-mode", "--value", "--lo",
                "--hi", "--sets", "--seed", "--out",
            ],
        ),
        (
            "train",
            &["--scenario", "--data", "--steps", "--lr", "--seeds", "--supervised", "--mask", "--out"],
        ),
        ("plot", &["--in", "--metrics", "--format"]),
        ("check-grads", &["--d", "--D", "--supervised", "--h", "--seed"]),
    ];
    for (sub, flags) in expected {
        let o = bin(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        for f in flags {
            assert!(text.contains(&format!("{f} ")) || text.contains(&format!("{f}\n")), "{sub} help lacks {f}");
        }
    }
}

#[test]
fn generate_observational_dataset() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("obs");
    let o = bin(&["generate", "--d", "6", "--D", "10", "--er", "2", "--sigma", "0.1", "--n-obs", "600", "--seed", "0", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (data, scm, manifest) = load_dataset(&out).unwrap();
    assert_eq!((data.n(), data.n_observational()), (600, 600));
    assert_eq!((scm.d(), scm.big_d(), manifest.seed), (6, 10, 0));
}

#[test]
fn generate_uniform_multi_dataset() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("uni");
    let o = bin(&[
        "generate", "--n-obs", "300", "--n-int", "3300", "--node-mode", "multi", "--value-mode", "uniform", "--lo", "-10", "--hi",
        "10", "--out", path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (data, _, _) = load_dataset(&out).unwrap();
    assert_eq!((data.n(), data.n_observational()), (3600, 300));
    for r in 300..3600 {
        let t = data.labels.row_targets(r);
        assert!(t.len() >= 2);
        assert!(t.iter().all(|&k| (-10.0..10.0).contains(&data.labels.value(r, k))));
    }
}

#[test]
fn generate_rejects_bad_input() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(bin(&["generate", "--n-obs", "0", "--n-int", "0", "--out", path(&out)]).status.code(), Some(1));
    assert_eq!(bin(&["generate", "--n-int", "30", "--sets", "20", "--out", path(&out)]).status.code(), Some(1));
    assert_eq!(bin(&["generate", "--node-mode", "several", "--out", path(&out)]).status.code(), Some(1));
}

#[test]
fn generate_is_deterministic() {
    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(bin(&["generate", "--n-obs", "50", "--n-int", "40", "--seed", "7", "--out", path(out)]).status.success());
    }
    for f in ["data.csv", "labels.csv", "latents.csv", "scm.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn train_smoke_run_is_deterministic_and_plots() {
    let dir = tempdir().unwrap();
    let runs = [dir.path().join("r1"), dir.path().join("r2")];
    for out in &runs {
        let o = bin(&["train", "--scenario", "finding1", "--steps", "10", "--seeds", "2", "--eval-every", "5", "--out", path(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(text.contains("seed 0:") && text.contains("seed 1:"), "{text}");
    }
    for seed in ["0", "1"] {
        let a = fs::read(runs[0].join("finding1").join(seed).join("metrics.csv")).unwrap();
        let b = fs::read(runs[1].join("finding1").join(seed).join("metrics.csv")).unwrap();
        assert_eq!(a, b);
    }

    let scenario = runs[0].join("finding1");
    let plots = dir.path().join("plots");
    let o = bin(&["plot", "--in", path(&scenario), "--metrics", "eshd,auroc,mse_L,kl", "--format", "svg", "--out", path(&plots)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let trajectories: Vec<Vec<MetricsRecord>> = ["0", "1"]
        .iter()
        .map(|s| read_metrics_csv(&scenario.join(s).join("metrics.csv")).unwrap())
        .collect();
    for (file, column) in [("eshd", "eshd"), ("auroc", "auroc"), ("mse_L", "mse_L"), ("kl_true_learned", "kl_true_learned")] {
        let svg = fs::read_to_string(plots.join(format!("{file}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
        let series = PlotSeries::read_csv(&plots.join(format!("{file}.csv")), file).unwrap();
        for (k, step) in series.x.iter().enumerate() {
            let mut v: Vec<f64> = trajectories
                .iter()
                .map(|t| t.iter().find(|r| r.step as f64 == *step).unwrap().get(column).unwrap())
                .collect();
            v.sort_by(f64::total_cmp);
            let mid = v[0] + 0.5 * (v[1] - v[0]);
            assert_eq!(series.y_median[k], mid);
            assert_eq!(series.y_q1[k], v[0] + 0.25 * (v[1] - v[0]));
            assert_eq!(series.y_q3[k], v[0] + 0.75 * (v[1] - v[0]));
        }
    }
    assert_eq!(bin(&["plot", "--in", path(&scenario), "--metrics", "f1"]).status.code(), Some(1));
    assert_eq!(bin(&["plot", "--in", path(&scenario), "--format", "png"]).status.code(), Some(1));
    assert_eq!(bin(&["plot", "--in", path(&dir.path().join("missing"))]).status.code(), Some(1));
}

#[test]
fn train_on_saved_dataset() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(bin(&["generate", "--d", "4", "--D", "6", "--er", "1", "--n-obs", "80", "--seed", "3", "--out", path(&data)]).status.success());
    let out = dir.path().join("runs");
    let o = bin(&["train", "--data", path(&data), "--steps", "5", "--seeds", "1", "--supervised", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read_to_string(out.join("custom/0/manifest.json")).unwrap();
    assert!(manifest.contains("\"supervised\": true"));
}

#[test]
fn train_usage_errors() {
    let dir = tempdir().unwrap();
    let out = path(dir.path());
    assert_eq!(bin(&["train", "--scenario", "finding9", "--out", out]).status.code(), Some(1));
    assert_eq!(bin(&["train", "--out", out]).status.code(), Some(1));
    assert_eq!(bin(&["train", "--data", path(&dir.path().join("nope")), "--out", out]).status.code(), Some(1));
}

#[test]
fn check_grads_reports_json() {
    let o = bin(&["check-grads"]);
    assert_eq!(o.status.code(), Some(0));
    let fine: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();

    let o = bin(&["check-grads", "--supervised", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let sup: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(sup["max_rel_err"].as_f64().unwrap() < 1e-4);

    let o = bin(&["check-grads", "--h", "1e-3"]);
    let coarse: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(coarse["max_rel_err"].as_f64().unwrap() > fine["max_rel_err"].as_f64().unwrap());

    assert_eq!(bin(&["check-grads", "--h", "1e-1"]).status.code(), Some(1));
}
