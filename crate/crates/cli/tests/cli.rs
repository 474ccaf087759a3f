use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn satcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satcm")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic scene with `n` queries; returns the query paths in order.
fn scene(dir: &Path, seed: &str, n: &str) -> Vec<PathBuf> {
    let o = satcm(&[
        "synth", "--out-dir", s(dir), "--seed", seed, "--queries", n, "--query-lines", "8", "--map-lines", "48",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut q: Vec<PathBuf> = fs::read_dir(dir.join("queries")).unwrap().map(|e| e.unwrap().path()).collect();
    q.sort();
    q
}

fn with_queries<'a>(mut args: Vec<&'a str>, qs: &'a [PathBuf]) -> Vec<&'a str> {
    args.push("--query");
    args.extend(qs.iter().map(|p| s(p)));
    args
}

#[test]
fn synth_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let qa = scene(a.path(), "5", "2");
    let qb = scene(b.path(), "5", "2");
    assert_eq!(qa.len(), 2);
    for f in ["map.json", "truth.json", "spec.toml"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    for (x, y) in qa.iter().zip(&qb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    let c = tempfile::tempdir().unwrap();
    scene(c.path(), "6", "2");
    assert_ne!(fs::read(a.path().join("map.json")).unwrap(), fs::read(c.path().join("map.json")).unwrap());
}

#[test]
fn solve_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let qs = scene(dir.path(), "1", "3");
    let map = dir.path().join("map.json");
    let out1 = dir.path().join("r1.json");
    let out3 = dir.path().join("r3.json");
    let base = vec!["solve", "--map", s(&map)];
    let mut a1 = with_queries(base.clone(), &qs);
    a1.extend(["--out", s(&out1)]);
    let o = satcm(&a1);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut a3 = with_queries(base, &qs);
    a3.extend(["--out", s(&out3), "--workers", "3"]);
    assert_eq!(code(&satcm(&a3)), 0);

    let r1: Value = serde_json::from_str(&fs::read_to_string(&out1).unwrap()).unwrap();
    let r3: Value = serde_json::from_str(&fs::read_to_string(&out3).unwrap()).unwrap();
    let poses = |v: &Value| {
        v.as_array().unwrap().iter().map(|r| (r["rotation"].clone(), r["translation"].clone())).collect::<Vec<_>>()
    };
    assert_eq!(r1.as_array().unwrap().len(), 3);
    assert_eq!(poses(&r1), poses(&r3));

    let truth = dir.path().join("truth.json");
    let rep = dir.path().join("report.json");
    let o = satcm(&["eval", "--truth", s(&truth), "--results", s(&out1), "--out", s(&rep)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(r["n_queries"], 3);
    assert_eq!(r["recall_rotation_5deg"], 1.0);

    // solving inside eval also reports outlier ratios
    let o = satcm(&with_queries(vec!["eval", "--truth", s(&truth), "--map", s(&map)], &qs));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["median_outlier_ratio"].as_f64().unwrap() > 0.5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let qs = scene(dir.path(), "2", "1");
    let map = dir.path().join("map.json");
    let missing = dir.path().join("nope.json");

    assert_eq!(code(&satcm(&with_queries(vec!["solve", "--map", s(&missing)], &qs))), 1);
    assert_eq!(code(&satcm(&["solve", "--map", s(&map)])), 1);
    assert_eq!(code(&satcm(&["frobnicate"])), 1);
    assert_eq!(code(&satcm(&["--help"])), 0);
    let bad = with_queries(vec!["solve", "--map", s(&map), "--set", "rotation.no_such_key=1"], &qs);
    assert_eq!(code(&satcm(&bad)), 1);
    let bad_q = with_queries(vec!["solve", "--map", s(&map), "--q", "1.5"], &qs);
    assert_eq!(code(&satcm(&bad_q)), 1);

    // a node budget this small cannot close the gap
    let starved = with_queries(vec!["solve", "--map", s(&map), "--set", "rotation.max_nodes=5"], &qs);
    let o = satcm(&starved);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r[0]["certified"], false);
}

#[test]
fn landscape_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let qs = scene(dir.path(), "3", "2");
    let map = dir.path().join("map.json");
    let grids = dir.path().join("grids");
    let o = satcm(&[
        "landscape", "--map", s(&map), "--query", s(&qs[0]), "--step", "10", "--out-dir", s(&grids),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for kind in ["identity", "likelihood"] {
        let csv = fs::read_to_string(grids.join(format!("{kind}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("alpha_deg,phi_deg,value"));
        assert_eq!(lines.count(), 18 * 36);
    }

    let truth = dir.path().join("truth.json");
    let args = with_queries(
        vec!["sweep-q", "--map", s(&map), "--truth", s(&truth), "--qs", "0.6,0.9", "--rotation-only"],
        &qs,
    );
    let o = satcm(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0.6,1.0000,"), "{}", rows[1]);
}

#[test]
fn build_map_from_frames() {
    let dir = tempfile::tempdir().unwrap();
    let (w, h) = (64u32, 48u32);
    // a fronto-parallel wall 2 m away
    image::ImageBuffer::<image::Luma<u16>, _>::from_pixel(w, h, image::Luma([2000u16]))
        .save(dir.path().join("depth.png"))
        .unwrap();
    let segment = |a: [f64; 2], b: [f64; 2], label: u32| {
        let c = [a[1] - b[1], b[0] - a[0], a[0] * b[1] - a[1] * b[0]];
        serde_json::json!({ "coeffs": c, "endpoints_px": [a, b], "label": label })
    };
    let frame = serde_json::json!({
        "pose": { "rotation": [1.0, 0.0, 0.0, 0.0], "translation": [0.0, 0.0, 0.0] },
        "intrinsics": { "k": [50.0, 0.0, 32.0, 0.0, 50.0, 24.0, 0.0, 0.0, 1.0], "width": w, "height": h },
        "depth": "depth.png",
        "segments": [segment([10.0, 20.0], [50.0, 20.0], 1), segment([30.0, 5.0], [30.0, 40.0], 2)],
    });
    let manifest = serde_json::json!({
        "dictionary": [{ "id": 1, "word": "shelf" }, { "id": 2, "word": "door" }],
        "frames": [frame.clone(), frame.clone(), frame],
    });
    let mpath = dir.path().join("frames.json");
    fs::write(&mpath, manifest.to_string()).unwrap();
    let out = dir.path().join("map.json");
    let o = satcm(&[
        "build-map", "--manifest", s(&mpath), "--out", s(&out), "--set", "map_builder.delta_d=2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let map: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let lines = map["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 2);
    for l in lines {
        for e in l["endpoints"].as_array().unwrap() {
            assert!((e[2].as_f64().unwrap() - 2.0).abs() < 1e-6);
        }
    }
    assert_eq!(code(&satcm(&["build-map", "--manifest", s(&dir.path().join("x.json")), "--out", s(&out)])), 1);
}
