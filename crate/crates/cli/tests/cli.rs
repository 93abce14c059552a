use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_skorokhod");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn example_instance(alpha: f64) -> String {
    let side = (1.0 - alpha) / 2.0;
    format!(
        r#"{{"lambda":{{"atoms":[{{"x":-1,"p":0.25}},{{"x":0,"p":0.5}},{{"x":1,"p":0.25}}]}},
"mu":{{"atoms":[{{"x":-2,"p":{side}}},{{"x":0,"p":{alpha}}},{{"x":2,"p":{side}}}]}}}}"#
    )
}

const FOUR_ATOMS: &str = r#"{"lambda":{"atoms":[{"x":0,"p":1}]},
"mu":{"atoms":[{"x":-3,"p":0.1},{"x":-1,"p":0.3},{"x":0.5,"p":0.4},{"x":2,"p":0.2}]}}"#;

#[test]
fn calibrate_writes_a_v_line_at_the_middle_atom() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "i.json", &example_instance(0.6));
    let out = dir.path().join("c.json");
    let res = run(&["calibrate", inst.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let v_lines = doc["rule"]["barrier"]["v_lines"].as_array().unwrap();
    assert!(v_lines.iter().any(|l| l["max"] == 0.0));
    assert!(doc["residual_tv"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn calibrate_rejects_laws_out_of_convex_order() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "i.json", &example_instance(0.8));
    assert_eq!(code(&run(&["calibrate", inst.to_str().unwrap()])), 2);
}

#[test]
fn malformed_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"lambda": {"atoms": ["#);
    let res = run(&["calibrate", bad.to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("bad.json"));
    let unnormalized = write(
        dir.path(),
        "u.json",
        r#"{"lambda":{"atoms":[{"x":0,"p":0.5}]},"mu":{"atoms":[{"x":0,"p":1}]}}"#,
    );
    assert_eq!(code(&run(&["calibrate", unnormalized.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["calibrate", "/nonexistent/instance.json"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn example_labels_and_artifacts() {
    for (alpha, label, exit) in [
        ("0.5", "atom-stop only", 0),
        ("0.65", "v-line and h-line", 0),
        ("1.0", "not in convex order", 2),
    ] {
        let dir = TempDir::new().unwrap();
        let res = run(&["example", "--alpha", alpha, "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(code(&res), exit, "{alpha}");
        assert!(
            stdout(&res).lines().next().unwrap().contains(label),
            "{alpha}: {}",
            stdout(&res)
        );
        let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert!(report["label"].as_str().unwrap().contains(label));
        if exit == 0 {
            for name in [
                "calibration.json",
                "barrier.svg",
                "max_cdf.csv",
                "min_cdf.csv",
                "joint_law.csv",
            ] {
                assert!(dir.path().join(name).is_file(), "{alpha}: {name}");
            }
        }
    }
    assert_eq!(code(&run(&["example", "--alpha", "1.5"])), 1);
}

#[test]
fn compare_prefers_perkins_on_the_maximum() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "i.json", FOUR_ATOMS);
    let res = run(&["compare", inst.to_str().unwrap(), "--rules", "perkins,ay"]);
    assert_eq!(code(&res), 0);
    let report: Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(report["rules"], serde_json::json!(["perkins", "azema_yor"]));
    assert_eq!(report["max_law"][0][1]["verdict"], "first_smaller");
    assert_eq!(report["max_law"][1][0]["verdict"], "second_smaller");
    assert_eq!(report["max_law"][0][0]["verdict"], "equal");
}

#[test]
fn compare_with_one_rule_is_a_one_by_one_equal_matrix() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "i.json", FOUR_ATOMS);
    let res = run(&["compare", inst.to_str().unwrap(), "--rules", "perkins"]);
    let report: Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(report["max_law"], serde_json::json!([[{"verdict": "equal"}]]));
    assert_eq!(report["min_law"], serde_json::json!([[{"verdict": "equal"}]]));
}

#[test]
fn compare_warns_about_rules_it_cannot_run() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "i.json", &example_instance(0.6));
    let res = run(&["compare", inst.to_str().unwrap(), "--rules", "perkins,ay,hp"]);
    assert_eq!(code(&res), 0);
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("ay needs a point-mass"), "{err}");
    assert!(err.contains("no parameters for hobson_pedersen"), "{err}");
    let report: Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(report["rules"], serde_json::json!(["perkins"]));
}

#[test]
fn compare_samples_supplied_rules() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "i.json", FOUR_ATOMS);
    let params = write(
        dir.path(),
        "p.json",
        r#"{"rules":[{"rule":"hobson_pedersen","G":{"atoms":[{"x":2,"p":1}]},"g":{"breakpoints":[{"from":-3,"value":-3}]}}]}"#,
    );
    let res = run(&[
        "compare",
        inst.to_str().unwrap(),
        "--rules",
        "perkins,hp",
        "--params",
        params.to_str().unwrap(),
        "--mc-paths",
        "4000",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let report: Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(report["durations"][1]["evaluation"], "monte_carlo");
}

#[test]
fn verify_accepts_calibrations_and_rejects_broken_rules() {
    let dir = TempDir::new().unwrap();
    let inst = write(dir.path(), "i.json", FOUR_ATOMS);
    let cal = dir.path().join("c.json");
    assert_eq!(
        code(&run(&[
            "calibrate",
            inst.to_str().unwrap(),
            "--out",
            cal.to_str().unwrap()
        ])),
        0
    );
    let res = run(&["verify", inst.to_str().unwrap(), cal.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", stdout(&res));
    assert!(stdout(&res).lines().all(|l| l.ends_with("PASS")));

    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&cal).unwrap()).unwrap();
    let bare = write(dir.path(), "rule.json", &doc["rule"].to_string());
    assert_eq!(
        code(&run(&["verify", inst.to_str().unwrap(), bare.to_str().unwrap()])),
        0
    );

    let joint = doc["certificate"]["joint"].as_array_mut().unwrap();
    let moved = 0.01;
    joint[0]["mass"] = (joint[0]["mass"].as_f64().unwrap() - moved).into();
    joint[1]["mass"] = (joint[1]["mass"].as_f64().unwrap() + moved).into();
    let corrupt = write(dir.path(), "corrupt.json", &doc.to_string());
    let res = run(&["verify", inst.to_str().unwrap(), corrupt.to_str().unwrap()]);
    assert_eq!(code(&res), 4);
    assert!(stdout(&res).contains("certificate:") && stdout(&res).contains("FAIL"));

    let empty = write(
        dir.path(),
        "empty.json",
        r#"{"rule":"perkins","barrier":{"v_lines":[],"h_lines":[]},"atom_stop":{"atoms":[]}}"#,
    );
    assert_eq!(
        code(&run(&["verify", inst.to_str().unwrap(), empty.to_str().unwrap()])),
        3
    );

    let other = write(dir.path(), "other.json", &example_instance(0.6));
    assert_eq!(
        code(&run(&["verify", other.to_str().unwrap(), cal.to_str().unwrap()])),
        4
    );
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(
            code(&run(&["example", "--alpha", "0.7", "--out-dir", d.to_str().unwrap()])),
            0
        );
    }
    for name in [
        "instance.json",
        "calibration.json",
        "barrier.svg",
        "max_cdf.csv",
        "min_cdf.csv",
        "joint_law.csv",
        "report.json",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let inst = write(dir.path(), "i.json", FOUR_ATOMS);
    let params = write(
        dir.path(),
        "p.json",
        r#"{"rules":[{"rule":"hobson_pedersen","G":{"atoms":[{"x":2,"p":1}]},"g":{"breakpoints":[{"from":-3,"value":-3}]}}]}"#,
    );
    let args = [
        "compare",
        inst.to_str().unwrap(),
        "--rules",
        "hp",
        "--params",
        params.to_str().unwrap(),
        "--mc-paths",
        "3000",
    ];
    let one = stdout(&run(&args));
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    assert_eq!(one, stdout(&run(&threaded)));
}
