use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;

fn asc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asc"))
        .args(args)
        .env("ASC_LOG", "error")
        .output()
        .expect("asc runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small dataset and a briefly trained model shared by all tests.
struct Fixture {
    _dir: tempfile::TempDir,
    data: PathBuf,
    model: PathBuf,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let model = dir.path().join("model.ascw");
        stdout_json(&asc(&[
            "gen-data",
            "--n",
            "12",
            "--seed",
            "3",
            "--out",
            s(&data),
        ]));
        let out = stdout_json(&asc(&[
            "train",
            "--data",
            s(&data),
            "--epochs",
            "2",
            "--seed",
            "1",
            "--out",
            s(&model),
        ]));
        assert_eq!(out["config"]["epochs"], 2);
        Fixture {
            _dir: dir,
            data,
            model,
        }
    })
}

fn attack(pattern: &str, extra: &[&str], out: &Path) -> Output {
    let f = fixture();
    let image = f.data.join("000000.png");
    let ann = f.data.join("annotations.json");
    let mut args = vec![
        "attack",
        "--model",
        s(&f.model),
        "--image",
        s(&image),
        "--ann",
        s(&ann),
        "--pattern",
        pattern,
        "--out",
        s(out),
    ];
    args.extend_from_slice(extra);
    asc(&args)
}

fn result_json(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("result.json")).unwrap()).unwrap()
}

#[test]
fn gen_data_writes_coco_layout() {
    let f = fixture();
    let ann: Value =
        serde_json::from_str(&std::fs::read_to_string(f.data.join("annotations.json")).unwrap())
            .unwrap();
    assert_eq!(ann["images"].as_array().unwrap().len(), 12);
    assert!(f.data.join("000011.png").exists());
    assert!(f.model.with_extension("json").exists());
}

#[test]
fn fasc_respects_budget() {
    let dir = tempfile::tempdir().unwrap();
    let summary = stdout_json(&attack(
        "fasc",
        &["--budget", "0.05", "--seed", "2"],
        dir.path(),
    ));
    let result = result_json(dir.path());
    let area = result["context"]["object_area"].as_u64().unwrap() as f64;
    let l0 = result["l0_used"].as_u64().unwrap();
    assert!(l0 as f64 <= (0.05 * area).floor());
    assert_eq!(summary["l0_used"], l0);
    assert_eq!(result["config"]["budget_fraction"], 0.05);
    for f in ["original.png", "mask.png", "colors.png", "adversarial.png"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn oasc_without_rounds_matches_fasc() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    stdout_json(&attack("fasc", &["--seed", "5"], a.path()));
    stdout_json(&attack("oasc", &["--seed", "5", "--rounds", "0"], b.path()));
    let (fa, oa) = (result_json(a.path()), result_json(b.path()));
    for key in ["pixels", "colors", "best_loss", "success", "l0_used"] {
        assert_eq!(fa[key], oa[key], "{key}");
    }
}

#[test]
fn attack_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    stdout_json(&attack("oasc", &["--seed", "9", "--rounds", "3"], a.path()));
    stdout_json(&attack("oasc", &["--seed", "9", "--rounds", "3"], b.path()));
    let (x, y) = (result_json(a.path()), result_json(b.path()));
    assert_eq!(x["pixels"], y["pixels"]);
    assert_eq!(x["loss_trace"], y["loss_trace"]);
}

#[test]
fn baseline_patterns_run() {
    for p in ["advpatch", "fourpatch", "grid2x2", "smallgrid", "strip"] {
        let dir = tempfile::tempdir().unwrap();
        let summary = stdout_json(&attack(p, &["--budget", "0.035"], dir.path()));
        assert!(summary["l0_used"].as_u64().unwrap() <= summary["budget"].as_u64().unwrap());
    }
}

#[test]
fn config_file_layers_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("asc.toml");
    std::fs::write(&cfg, "[attack]\nrounds = 2\nstep_size = 0.125\nseed = 4\n").unwrap();
    let out = dir.path().join("run");
    let summary = stdout_json(&attack("oasc", &["--config", s(&cfg), "--seed", "8"], &out));
    assert_eq!(summary["config"]["rounds"], 2);
    assert_eq!(summary["config"]["step_size"], 0.125);
    assert_eq!(summary["config"]["seed"], 8);
    assert_eq!(result_json(&out)["config"]["seed"], 8);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = attack("hexagon", &[], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown pattern"));
    assert_eq!(asc(&["bench", "--bogus"]).status.code(), Some(1));
    assert_eq!(asc(&[]).status.code(), Some(1));
    assert_eq!(asc(&["--help"]).status.code(), Some(0));
    for cmd in ["gen-data", "train", "attack", "bench", "render"] {
        let help = asc(&[cmd, "--help"]);
        assert_eq!(help.status.code(), Some(0), "{cmd}");
        assert!(String::from_utf8_lossy(&help.stdout).contains("Usage"));
    }

    let missing = dir.path().join("missing.ascw");
    let f = fixture();
    let out = asc(&[
        "bench",
        "--model",
        s(&missing),
        "--data",
        s(&f.data),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(
        attack("fasc", &["--budget", "1.5"], dir.path())
            .status
            .code(),
        Some(3)
    );
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[attack]\nno_such_key = 1\n").unwrap();
    assert_eq!(
        attack("fasc", &["--config", s(&cfg)], dir.path())
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn bench_writes_reproducible_grid() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let summary = stdout_json(&asc(&[
            "bench",
            "--model",
            s(&f.model),
            "--data",
            s(&f.data),
            "--limit",
            "3",
            "--seed",
            "1",
            "--workers",
            workers,
            "--out",
            s(&out),
        ]));
        assert_eq!(summary["images"], 3);
        std::fs::read_to_string(out.join("sdr_table.csv")).unwrap()
    };
    let (a, b) = (run("a", "1"), run("b", "2"));
    assert_eq!(a, b);
    let lines: Vec<_> = a.lines().collect();
    assert_eq!(lines[0], "pattern,budget_5.0,budget_3.5");
    assert_eq!(lines.len(), 1 + 8);
    assert!(lines[1].starts_with("clean,"));
}

#[test]
fn render_composes_panel() {
    let dir = tempfile::tempdir().unwrap();
    stdout_json(&attack("fasc", &[], dir.path()));
    let png = dir.path().join("panel.png");
    let out = stdout_json(&asc(&[
        "render",
        "--result",
        s(&dir.path().join("result.json")),
        "--out",
        s(&png),
    ]));
    assert_eq!(out["out"], s(&png));
    let bytes = std::fs::read(&png).unwrap();
    assert_eq!(&bytes[1..4], b"PNG");
}
