use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn holder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holder")).args(args).output().expect("spawn holder")
}

fn ok(args: &[&str]) -> String {
    let out = holder(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Fresh scratch directory per test.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("holder-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn gen_eps_trees_writes_labelled_graphs() {
    let dir = scratch("gen-trees");
    ok(&["gen", "eps-trees", "--T", "1", "--eps", "0.2", "--out", s(&dir)]);
    for (file, label) in [("g.json", 0), ("g_hat.json", 1)] {
        let g = json(&dir.join(file));
        assert_eq!(g["features"].as_array().unwrap().len(), 11);
        assert_eq!(g["label"], label);
    }
    let m = json(&dir.join("manifest.json"));
    assert_eq!(m["command"], "gen");
    assert_eq!(m["seed"], 0);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn gen_equal_moments_shares_seven_moments() {
    let v: Value = serde_json::from_str(&ok(&["gen", "equal-moments", "--k", "3"])).unwrap();
    let elems = |key: &str| -> Vec<f64> {
        v[key]["elements"].as_array().unwrap().iter().map(|e| e[0].as_f64().unwrap()).collect()
    };
    let (x, y) = (elems("x"), elems("y"));
    assert_eq!((x.len(), y.len()), (8, 8));
    for m in 1..=7 {
        let (a, b): (f64, f64) = (x.iter().map(|t| t.powi(m)).sum(), y.iter().map(|t| t.powi(m)).sum());
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "moment {m}: {a} vs {b}");
    }
    let m8 = |v: &[f64]| v.iter().map(|t| t.powi(8)).sum::<f64>();
    assert!((m8(&x) - m8(&y)).abs() > 1e-6);
}

#[test]
fn dist_tmd_is_homogeneous_and_zero_on_identical_inputs() {
    let dir = scratch("dist");
    let (a, b) = (dir.join("a"), dir.join("b"));
    ok(&["gen", "eps-trees", "--T", "1", "--eps", "0.2", "--out", s(&a)]);
    ok(&["gen", "eps-trees", "--T", "1", "--eps", "0.4", "--out", s(&b)]);
    let d = |x: &Path, y: &Path| ok(&["dist", "tmd", s(x), s(y), "--K", "2"]).trim().parse::<f64>().unwrap();
    assert_eq!(d(&a.join("g.json"), &a.join("g.json")), 0.0);
    let ratio = d(&b.join("g.json"), &b.join("g_hat.json")) / d(&a.join("g.json"), &a.join("g_hat.json"));
    assert!((ratio - 2.0).abs() <= 1e-9, "{ratio}");
}

#[test]
fn dist_wl_separates_relu_counterexample() {
    let dir = scratch("wl");
    ok(&["gen", "relu-counterexample", "--eps", "0.25", "--out", s(&dir)]);
    let (g, h) = (dir.join("g.json"), dir.join("h.json"));
    assert_eq!(ok(&["dist", "wl", s(&g), s(&h), "--K", "2"]).trim(), "distinguishable");
    assert_eq!(ok(&["dist", "wl", s(&g), s(&h), "--K", "1"]).trim(), "indistinguishable");
}

#[test]
fn dist_wasserstein_pads_unequal_multisets() {
    let dir = scratch("w1");
    fs::write(dir.join("x.json"), r#"{"dim": 1, "capacity": 3, "elements": [[1.0], [2.0]]}"#).unwrap();
    fs::write(dir.join("y.json"), r#"{"dim": 1, "capacity": 3, "elements": [[1.0], [2.0], [4.0]]}"#).unwrap();
    let x = dir.join("x.json");
    let y = dir.join("y.json");
    let d: f64 = ok(&["dist", "wasserstein", s(&x), s(&y), "--p", "1", "--z", "-1"]).trim().parse().unwrap();
    assert!((d - 5.0).abs() < 1e-12, "{d}");
}

fn fit(dir: &Path) -> f64 {
    json(&dir.join("fit.json"))["slope"].as_f64().unwrap()
}

#[test]
fn exponent_matches_known_rates() {
    let dir = scratch("exponent");
    let (relu, sort, smooth) = (dir.join("relu"), dir.join("sort"), dir.join("smooth"));
    ok(&[
        "exponent",
        "--family",
        "pm-epsilon",
        "--embedding",
        "relu",
        "--exact",
        "--eps-grid",
        "0.01:0.4:12",
        "--out",
        s(&relu),
    ]);
    assert!((fit(&relu) - 1.5).abs() <= 0.05);
    ok(&[
        "exponent",
        "--family",
        "equal-moments",
        "--embedding",
        "sort",
        "--eps-grid",
        "0.03:1:12",
        "--draws",
        "4000",
        "--out",
        s(&sort),
    ]);
    assert!((fit(&sort) - 1.0).abs() <= 0.1);
    ok(&[
        "exponent",
        "--family",
        "eps-trees",
        "--variant",
        "smooth",
        "--depth",
        "1",
        "--stack",
        "256",
        "--draws",
        "8",
        "--eps-grid",
        "0.05:0.4:12",
        "--out",
        s(&smooth),
    ]);
    assert!((fit(&smooth) - 4.0).abs() <= 0.6, "{}", fit(&smooth));
    let header = fs::read_to_string(relu.join("records.csv")).unwrap();
    assert!(header.starts_with("epsilon,input_distance,gap_mean,gap_std,samples\n"));
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = scratch("determinism");
    let run = |name: &str, threads: &str| {
        let out = dir.join(name);
        ok(&[
            "exponent",
            "--family",
            "adapt-adversarial",
            "--embedding",
            "adapt",
            "--width",
            "3",
            "--eps-grid",
            "0.05:0.8:6",
            "--draws",
            "300",
            "--seed",
            "7",
            "--threads",
            threads,
            "--out",
            s(&out),
        ]);
        (fs::read(out.join("records.csv")).unwrap(), fs::read(out.join("fit.json")).unwrap())
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
    let other = dir.join("d");
    ok(&["gen", "random-graphs", "--count", "3", "--seed", "8", "--out", s(&other)]);
    let again = dir.join("e");
    ok(&["gen", "random-graphs", "--count", "3", "--seed", "8", "--out", s(&again)]);
    for f in ["graph_0000.json", "graph_0001.json", "graph_0002.json"] {
        assert_eq!(fs::read(other.join(f)).unwrap(), fs::read(again.join(f)).unwrap());
    }
}

#[test]
fn replay_reproduces_outputs() {
    let dir = scratch("replay");
    let (first, second) = (dir.join("first"), dir.join("second"));
    ok(&[
        "variance",
        "--family",
        "pm-epsilon",
        "--embedding",
        "sort",
        "--widths",
        "1,2,4",
        "--draws",
        "50",
        "--seed",
        "3",
        "--out",
        s(&first),
    ]);
    ok(&["replay", s(&first.join("manifest.json")), "--out", s(&second)]);
    assert_eq!(fs::read(first.join("variance.csv")).unwrap(), fs::read(second.join("variance.csv")).unwrap());
    assert!(second.join("manifest.json").exists());
}

#[test]
fn exit_codes_separate_validation_from_numerical_failures() {
    let dir = scratch("exit");
    assert_eq!(holder(&["gen", "relu-counterexample", "--eps", "0.7"]).status.code(), Some(2));
    assert_eq!(holder(&["exponent", "--family", "eps-trees", "--embedding", "sort"]).status.code(), Some(2));
    assert_eq!(holder(&["no-such-command"]).status.code(), Some(2));

    let bad = dir.join("bad.json");
    fs::write(&bad, "{\n  \"dim\": 1,\n  \"features\": [[1.0]],\n  \"edgez\": []\n}\n").unwrap();
    let out = holder(&["dist", "tmd", s(&bad), s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let underflow = holder(&[
        "exponent",
        "--family",
        "equal-moments",
        "--embedding",
        "sigmoid",
        "--eps-grid",
        "0.001:0.01:8",
        "--draws",
        "50",
    ]);
    assert_eq!(underflow.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&underflow.stderr).contains("larger"));
}

#[test]
fn analysis_wrappers_reproduce_reference_values() {
    let csv = ok(&["distortion", "--combine", "concat"]);
    for line in csv.lines().skip(1) {
        let d: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(d <= 1.415, "{line}");
    }
    let csv = ok(&[
        "variance",
        "--family",
        "equal-moments",
        "--embedding",
        "sort",
        "--widths",
        "1,4,16,64",
        "--eps",
        "1",
        "--draws",
        "2000",
    ]);
    let points: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|t| t.parse().unwrap()).collect();
            (f[0].ln(), f[2].ln())
        })
        .collect();
    let (slope, _, _) = holder_core::analysis::least_squares(&points);
    assert!((slope + 0.5).abs() <= 0.1, "{slope}");
    let csv = ok(&["probe", "--variant", "sort"]);
    assert!(csv.lines().nth(1).unwrap().starts_with("sort,1.0000000000000000e0"), "{csv}");
}

#[test]
fn embed_is_seeded_and_sized() {
    let dir = scratch("embed");
    ok(&["gen", "eps-trees", "--T", "1", "--eps", "0.2", "--out", s(&dir)]);
    let g = dir.join("g.json");
    let a = ok(&["embed", s(&g), "--variant", "sort", "--width", "3", "--depth", "2", "--seed", "4"]);
    assert_eq!(a, ok(&["embed", s(&g), "--variant", "sort", "--width", "3", "--depth", "2", "--seed", "4"]));
    assert_ne!(a, ok(&["embed", s(&g), "--variant", "sort", "--width", "3", "--depth", "2", "--seed", "5"]));
    assert_eq!(a.lines().count(), 1 + 3);
    ok(&["gen", "pm-epsilon", "--eps", "0.1", "--out", s(&dir)]);
    let x = dir.join("x.json");
    let v = ok(&["embed", s(&x), "--embedding", "adapt", "--width", "2"]);
    assert_eq!(v.lines().count(), 1 + 8);
}
