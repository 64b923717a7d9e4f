use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use shapeinv::io::parse_pgm;
use tempfile::TempDir;

fn shapeinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shapeinv"))
        .args(args)
        .output()
        .expect("spawn shapeinv")
}

fn json_ok(args: &[&str]) -> Value {
    let out = shapeinv(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["format_version"], "shapeinv/1");
    assert!(v["config"].is_object());
    v
}

fn code(args: &[&str]) -> i32 {
    shapeinv(args).status.code().unwrap()
}

struct Fx {
    dir: TempDir,
}

impl Fx {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        json_ok(&["fixtures", "--out", dir.path().to_str().unwrap()]);
        Fx { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_string()
    }

    fn write(&self, name: &str, text: &str) -> String {
        std::fs::write(self.dir.path().join(name), text).unwrap();
        self.path(name)
    }
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn moments_of_the_cross() {
    let fx = Fx::new();
    let v = json_ok(&["moments", &fx.path("cross.csv"), "--order", "2", "--scale", "off"]);
    assert_eq!(floats(&v["moments"][2]["entries"]), vec![0.5, 0.0, 0.5]);
    assert_eq!(v["moments"][2]["labels"], serde_json::json!([[1, 1], [1, 2], [2, 2]]));
    assert_eq!(v["config"]["scale"], "off");
    assert_eq!(v["config"]["order"], 2);

    let v = json_ok(&["moments", &fx.path("asym.csv"), "--order", "1"]);
    assert!(floats(&v["moments"][1]["entries"]).iter().all(|&x| x == 0.0));
}

#[test]
fn exit_codes() {
    let fx = Fx::new();
    let single = fx.write("single.csv", "x,y\n1,2\n");
    assert_eq!(code(&["moments", &single]), 3);
    assert_eq!(code(&["moments", &single, "--scale", "off"]), 0);
    let ragged = fx.write("ragged.csv", "1,2\n1,2,3,4\n");
    assert_eq!(code(&["moments", &ragged, "--dim", "2"]), 2);
    let junk = fx.write("junk.csv", "1,2\n1,oops\n");
    assert_eq!(code(&["moments", &junk]), 2);
    assert_eq!(code(&["compare", &fx.path("asym.csv"), &fx.path("mol.xyz")]), 4);
    assert_eq!(code(&["moments", &fx.path("mol.xyz"), "--dim", "2"]), 4);
    let black = fx.write("black.pgm", "P2\n2 2\n255\n0 0 0 0\n");
    assert_eq!(code(&["encode", &black]), 3);
    assert_eq!(code(&["moments", &fx.path("missing.csv")]), 1);
    assert_eq!(code(&["moments"]), 2);
}

fn encode_reconstruct(fx: &Fx, coeffs: &str, order: &str) -> (Value, PathBuf) {
    let out = fx.path(&format!("coeffs_{order}.json"));
    let status = shapeinv(&["encode", coeffs, "--order", order, "--out", &out]);
    assert!(status.status.success());
    let pgm = PathBuf::from(fx.path(&format!("recon_{order}.pgm")));
    let summary = json_ok(&["reconstruct", &out, "--out", pgm.to_str().unwrap()]);
    (summary, pgm)
}

fn read_pgm(p: &Path) -> shapeinv::io::GrayImage {
    parse_pgm(&std::fs::read(p).unwrap()).unwrap()
}

#[test]
fn degree_zero_reconstruction_is_one_bump() {
    let fx = Fx::new();
    let (_, pgm) = encode_reconstruct(&fx, &fx.path("blob_ring.pgm"), "0");
    let img = read_pgm(&pgm);
    let (w, h) = (img.width, img.height);
    let peak = img.pixels.iter().position(|&p| p == 255).unwrap();
    let (pr, pc) = (peak / w, peak % w);
    // monotone falloff from the peak along its row and column
    for c in 1..w {
        let toward = |a: usize, b: usize| img.pixels[pr * w + a] >= img.pixels[pr * w + b];
        if c <= pc {
            assert!(toward(c, c - 1));
        } else {
            assert!(toward(c - 1, c));
        }
    }
    for r in 1..h {
        let toward = |a: usize, b: usize| img.pixels[a * w + pc] >= img.pixels[b * w + pc];
        if r <= pr {
            assert!(toward(r, r - 1));
        } else {
            assert!(toward(r - 1, r));
        }
    }
}

#[test]
fn higher_degree_reconstructs_better() {
    let fx = Fx::new();
    let e5 = json_ok(&["encode", &fx.path("blob_seven.pgm"), "--order", "5"])["l2_error"]
        .as_f64()
        .unwrap();
    let v = json_ok(&["encode", &fx.path("blob_seven.pgm"), "--order", "20", "--sweep"]);
    let e20 = v["l2_error"].as_f64().unwrap();
    assert!(e20 <= e5, "{e20} > {e5}");
    let sweep: Vec<f64> = v["l2_by_degree"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["l2_error"].as_f64().unwrap())
        .collect();
    assert_eq!(sweep.len(), 21);
    assert_eq!(sweep[5], e5);
    assert_eq!(sweep[20], e20);

    let gs = json_ok(&["encode", &fx.path("blob_seven.pgm"), "--order", "20", "--gram-schmidt"]);
    assert!(gs["l2_error"].as_f64().unwrap() <= e20);
}

#[test]
fn zero_coefficients_give_a_black_image() {
    let fx = Fx::new();
    let coeffs = fx.write(
        "zero.json",
        r#"{"dim": 2, "degree_max": 1, "scale": 1.0, "coeffs": [
            {"j": [0, 0], "u": 0.0}, {"j": [1, 0], "u": 0.0}, {"j": [0, 1], "u": 0.0}]}"#,
    );
    let pgm = fx.path("zero.pgm");
    json_ok(&["reconstruct", &coeffs, "--out", &pgm, "--grid", "8x6"]);
    let img = read_pgm(Path::new(&pgm));
    assert_eq!((img.width, img.height), (8, 6));
    assert!(img.pixels.iter().all(|&p| p == 0));
}

#[test]
fn compare_verdicts() {
    let fx = Fx::new();
    let same = json_ok(&["compare", &fx.path("asym.csv"), &fx.path("asym.csv")]);
    assert_eq!(same["distance"]["l2"].as_f64(), Some(0.0));
    assert_eq!(same["equivalent"], true);

    for (a, b) in [
        ("asym.csv", "asym_rot.csv"),
        ("cross.csv", "cross_rot.csv"),
        ("mol.xyz", "mol_rot.xyz"),
        ("blob_one.pgm", "blob_one_rot.pgm"),
    ] {
        let v = json_ok(&["compare", &fx.path(a), &fx.path(b)]);
        assert!(v["distance"]["l2"].as_f64().unwrap() <= 1e-8, "{a}: {}", v["distance"]);
        assert_eq!(v["equivalent"], true, "{a}");
        assert_eq!(floats(&v["a"]).len(), v["names"].as_array().unwrap().len());
    }

    let v = json_ok(&["compare", &fx.path("asym.csv"), &fx.path("asym_stretch.csv")]);
    assert_eq!(v["equivalent"], false);
    assert!(v["worst"]["name"].is_string());
    assert!(v["worst"]["deviation"].as_f64().unwrap() > 1e-8);
}

#[test]
fn align_reports_optimized_and_oracle() {
    let fx = Fx::new();
    let v = json_ok(&["align", &fx.path("asym.csv"), &fx.path("asym_rot.csv"), "--verify"]);
    let opt = v["optimized"]["residual"].as_f64().unwrap();
    let oracle = v["oracle"]["residual"].as_f64().unwrap();
    assert!(opt < 1e-6);
    assert!(oracle >= opt - 1e-8);
    assert_eq!(v["optimized"]["matrix"].as_array().unwrap().len(), 4);
    // the fixture turned the shape by 1.1 rad; undoing it takes -1.1
    let angle = v["optimized"]["angle"].as_f64().unwrap();
    assert!((angle - (std::f64::consts::TAU - 1.1)).abs() < 1e-4);

    let same = json_ok(&["align", &fx.path("mol.xyz"), &fx.path("mol.xyz")]);
    assert_eq!(same["optimized"]["residual"].as_f64(), Some(0.0));
    assert_eq!(same["optimized"]["restarts_used"], 1);

    let rot = json_ok(&["align", &fx.path("mol.xyz"), &fx.path("mol_rot.xyz")]);
    assert!(rot["optimized"]["residual"].as_f64().unwrap() < 1e-6);

    assert_eq!(code(&["align", &fx.path("mol.xyz"), &fx.path("mol_rot.xyz"), "--verify"]), 4);
}

#[test]
fn invariants_csv_and_custom_catalog() {
    let fx = Fx::new();
    let out = shapeinv(&["invariants", &fx.path("asym.csv"), &fx.path("asym_rot.csv"), "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# format_version=shapeinv/1 config="));
    assert!(lines[1].starts_with("input,p0,|p1|^2,tr(p2^1)"));
    assert_eq!(lines.len(), 4);

    let catalog = fx.write(
        "catalog.json",
        r#"[{"name": "trace", "graph": {"vertices": [2], "edges": [[0, 0, 0, 1]], "bind": ["p2"]}},
            {"name": "norm3", "graph": {"vertices": [3, 3],
              "edges": [[0, 0, 1, 0], [0, 1, 1, 1], [0, 2, 1, 2]], "bind": ["p3", "p3"]}, "root": 1}]"#,
    );
    let v = json_ok(&["invariants", &fx.path("cross.csv"), "--catalog", &catalog, "--scale", "off"]);
    assert_eq!(v["names"], serde_json::json!(["trace", "norm3"]));
    let values = floats(&v["results"][0]["values"]);
    assert_eq!(values[0], 1.0);
    assert_eq!(values[1], 0.0);

    let bad = fx.write("bad.json", r#"[{"name": "x", "graph": {"vertices": [2], "edges": [], "bind": ["p2"]}}]"#);
    assert_eq!(code(&["invariants", &fx.path("cross.csv"), "--catalog", &bad]), 2);
}

#[test]
fn scale_modes_are_recorded() {
    let fx = Fx::new();
    let fixed = json_ok(&["moments", &fx.path("cross.csv"), "--order", "2", "--scale", "fixed:2"]);
    assert_eq!(fixed["scale"].as_f64(), Some(2.0));
    assert_eq!(floats(&fixed["moments"][2]["entries"]), vec![0.125, 0.0, 0.125]);
    assert_eq!(fixed["scale_normalized"], false);
    let norm = json_ok(&["moments", &fx.path("cross.csv"), "--order", "2"]);
    assert_eq!(norm["scale_normalized"], true);
    let cov = floats(&norm["moments"][2]["entries"]);
    for (got, want) in cov.iter().zip([1.0, 0.0, 1.0]) {
        assert!((got - want).abs() < 1e-15);
    }
    assert_eq!(code(&["moments", &fx.path("cross.csv"), "--scale", "fixed:0"]), 2);
}
