use std::path::Path;
use std::process::{Command, Output};

fn couda(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_couda"))
        .args(args)
        .current_dir(dir)
        .env_remove("COUDA_SEED")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn gen(dir: &Path, name: &str, extra: &[&str]) {
    let mut args = vec!["gen-data", "--per-class", "60", "--test-per-class", "40", "--rot", "30", "-o", name];
    args.extend_from_slice(extra);
    ok(&couda(&args, dir));
}

#[test]
fn gen_data_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "a.csv", &["--seed", "3", "--noise", "0.2"]);
    gen(d, "b.csv", &["--seed", "3", "--noise", "0.2"]);
    gen(d, "c.csv", &["--seed", "4", "--noise", "0.2"]);
    let read = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn seed_from_environment_is_overridden_by_flag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |env: Option<&str>, extra: &[&str], name: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_couda"));
        c.args(["gen-data", "--per-class", "20", "--test-per-class", "5", "-o", name]).args(extra).current_dir(d);
        match env {
            Some(v) => c.env("COUDA_SEED", v),
            None => c.env_remove("COUDA_SEED"),
        };
        assert!(c.output().unwrap().status.success());
        std::fs::read(d.join(name)).unwrap()
    };
    let env9 = run(Some("9"), &[], "e.csv");
    let flag9 = run(None, &["--seed", "9"], "f.csv");
    let both = run(Some("1"), &["--seed", "9"], "g.csv");
    assert_eq!(env9, flag9);
    assert_eq!(both, flag9);
}

#[test]
fn invalid_values_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = couda(&["gen-data", "--noise", "1.5"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--noise"));

    gen(d, "d.csv", &[]);
    let out = couda(&["train", "--dataset", "d.csv", "--diversity-metric", "hamming"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("js"));

    let out = couda(&["eval", "--dataset", "missing.csv"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_eval_inspect_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "d.csv", &["--noise", "0.2"]);
    ok(&couda(
        &["train", "--dataset", "d.csv", "--steps", "60", "--alpha", "0", "--eta", "0", "--out-dir", "run", "--ensemble", "maximum"],
        d,
    ));
    let echo = std::fs::read_to_string(d.join("run/train-config.txt")).unwrap();
    assert!(echo.contains("ensemble = maximum"), "{echo}");
    assert!(echo.contains("alpha = 0"), "{echo}");

    let curves = std::fs::read_to_string(d.join("run/curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 6);

    let eval = |report: &str| {
        ok(&couda(&["eval", "--dataset", "d.csv", "--out-dir", "run", "--report", report], d));
        std::fs::read_to_string(d.join(report)).unwrap()
    };
    let r1 = eval("r1.csv");
    let r2 = eval("r2.csv");
    assert_eq!(r1, r2);
    assert!(r1.starts_with("name,value\naccuracy,"));
    assert!(r1.contains("Q_true,0,0.8,0.1,0.1"), "{r1}");

    let text = ok(&couda(&["inspect-noise-matrix", "--dataset", "d.csv", "--out-dir", "run"], d));
    assert!(text.contains("estimated_Q") && text.contains("q_error maxabs"));
}

#[test]
fn single_cell_ablation_matches_train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "d.csv", &["--noise", "0.1"]);
    let common = ["--dataset", "d.csv", "--steps", "80", "--seed", "5"];

    let mut args = vec!["ablate", "--report", "grid.csv"];
    args.extend_from_slice(&common);
    ok(&couda(&args, d));
    let grid = std::fs::read_to_string(d.join("grid.csv")).unwrap();
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("component,weight_metric,diversity_metric,domain_loss,ensemble,seed,accuracy"));

    let mut args = vec!["train", "--out-dir", "solo"];
    args.extend_from_slice(&common);
    ok(&couda(&args, d));
    let mut args = vec!["eval", "--out-dir", "solo"];
    args.extend_from_slice(&common);
    ok(&couda(&args, d));
    let report = std::fs::read_to_string(d.join("solo/report.csv")).unwrap();
    let accuracy = report.lines().nth(1).unwrap().split(',').nth(1).unwrap();

    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<&str> = lines[1].split(',').collect();
    let col = header.iter().position(|h| *h == "accuracy").unwrap();
    assert_eq!(row[..6], ["full", "cosine", "js", "least_squares", "average", "5"]);
    assert_eq!(row[col].parse::<f64>().unwrap(), accuracy.parse::<f64>().unwrap());
}

#[test]
fn ablation_grid_covers_every_combination() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "d.csv", &[]);
    ok(&couda(
        &[
            "ablate", "--dataset", "d.csv", "--steps", "20", "--out-dir", "abl",
            "--components", "full,source-only,no-noise-layer",
            "--ensembles", "average,maximum", "--seeds", "1,2",
        ],
        d,
    ));
    let grid = std::fs::read_to_string(d.join("abl/ablation.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 3 * 2 * 2);

    let out = couda(&["ablate", "--dataset", "d.csv", "--components", "full,bogus"], d);
    assert_eq!(out.status.code(), Some(2));
}
