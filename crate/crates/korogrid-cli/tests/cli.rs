//! End-to-end tests of the `korogrid` binary: subcommand behaviour, exit
//! codes, artifact determinism, and the seed override.

use std::path::Path;
use std::process::{Command, Output};

fn korogrid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_korogrid"))
        .args(args)
        .current_dir(dir)
        .env_remove("KOROGRID_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn grid_build_info_eval_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = korogrid(
        dir.path(),
        &[
            "grid", "build", "--function", "poly2", "--d", "2", "--level", "3", "--scheme",
            "sparse", "--out", "g.json",
        ],
    );
    assert!(out.status.success(), "{out:?}");

    let info = korogrid(dir.path(), &["grid", "info", "g.json"]);
    assert!(info.status.success());
    let text = stdout(&info);
    assert!(text.contains("terms: 17"), "{text}");
    assert!(text.contains("scheme: sparse"), "{text}");

    // value at a grid node equals the function there
    let eval = korogrid(dir.path(), &["grid", "eval", "--grid", "g.json", "--point", "0.5,0.5"]);
    assert_eq!(stdout(&eval).trim(), "0.0625");
    let zero = korogrid(dir.path(), &["grid", "eval", "--grid", "g.json", "--point", "0,0"]);
    assert_eq!(stdout(&zero).trim(), "0");

    let verify = korogrid(
        dir.path(),
        &["grid", "verify", "--grid", "g.json", "--function", "poly2"],
    );
    assert!(verify.status.success(), "{verify:?}");
    assert!(stdout(&verify).contains("verify: ok"));
}

#[test]
fn net_compile_stats_eval() {
    let dir = tempfile::tempdir().unwrap();
    korogrid(
        dir.path(),
        &[
            "grid", "build", "--function", "poly2", "--d", "2", "--level", "3", "--out", "g.json",
        ],
    );
    let compile = korogrid(
        dir.path(),
        &[
            "net", "compile", "--grid", "g.json", "--eps", "0.03125", "--out", "net.json",
        ],
    );
    assert!(compile.status.success(), "{compile:?}");

    let stats = korogrid(dir.path(), &["net", "stats", "net.json"]);
    let text = stdout(&stats);
    let get = |key: &str| -> String {
        text.lines()
            .find(|l| l.starts_with(key))
            .unwrap_or_else(|| panic!("missing {key} in {text}"))
            .split(": ")
            .nth(1)
            .unwrap()
            .to_string()
    };
    // measured depth/size equal the recipe predictions
    assert_eq!(get("depth"), get("predicted_depth"));
    assert_eq!(get("size"), get("predicted_size"));

    // boundary-adjacent point evaluates to exactly zero
    let eval = korogrid(dir.path(), &["net", "eval", "--net", "net.json", "--point", "0,0"]);
    assert_eq!(stdout(&eval).trim(), "0");
}

#[test]
fn compile_auto_records_selection() {
    let dir = tempfile::tempdir().unwrap();
    let out = korogrid(
        dir.path(),
        &[
            "net",
            "compile-auto",
            "--function",
            "poly2",
            "--d",
            "2",
            "--eps",
            "0.0625",
            "--out",
            "auto.json",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let doc = std::fs::read_to_string(dir.path().join("auto.json")).unwrap();
    assert!(doc.contains("\"grid_error\""));
    assert!(doc.contains("\"seminorm_scale\""));
}

#[test]
fn artifacts_are_byte_deterministic() {
    // identical config + seed => byte-identical files across reruns
    let dir = tempfile::tempdir().unwrap();
    let build = ["grid", "build", "--function", "sinprod", "--d", "2", "--level", "4", "--out",
        "a.json"];
    korogrid(dir.path(), &build);
    let first = std::fs::read(dir.path().join("a.json")).unwrap();
    korogrid(dir.path(), &build);
    let second = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(first, second);

    let compile = ["net", "compile", "--grid", "a.json", "--eps", "0.0625", "--out", "n.json"];
    korogrid(dir.path(), &compile);
    let first = std::fs::read(dir.path().join("n.json")).unwrap();
    korogrid(dir.path(), &compile);
    let second = std::fs::read(dir.path().join("n.json")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn env_seed_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_korogrid"))
        .args([
            "grid", "build", "--function", "poly2", "--d", "1", "--level", "2", "--seed", "5",
            "--out", "g.json",
        ])
        .current_dir(dir.path())
        .env("KOROGRID_SEED", "99")
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc = std::fs::read_to_string(dir.path().join("g.json")).unwrap();
    assert!(doc.contains("\"seed\":\"99\""), "{doc}");
}

#[test]
fn study_outputs_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = korogrid(
        dir.path(),
        &[
            "study",
            "convergence",
            "--function",
            "poly2",
            "--d",
            "1",
            "--n-min",
            "1",
            "--n-max",
            "4",
            "--out",
            "conv.csv",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(dir.path().join("conv.csv")).unwrap();
    assert!(csv.starts_with("control,N,sup_error,depth,size,wall_ms"));
    assert_eq!(csv.lines().count(), 5);
    let sidecar = std::fs::read_to_string(dir.path().join("conv.csv.json")).unwrap();
    assert!(sidecar.contains("\"grid-convergence\""));

    let net = korogrid(
        dir.path(),
        &[
            "study", "network", "--function", "poly2", "--d", "2", "--eps",
            "0.0625,0.03125", "--out", "scale.csv",
        ],
    );
    assert!(net.status.success(), "{net:?}");
    let csv = std::fs::read_to_string(dir.path().join("scale.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // usage error: missing required flag
    let usage = korogrid(dir.path(), &["grid", "build", "--function", "poly2"]);
    assert_eq!(usage.status.code(), Some(2), "{usage:?}");
    // domain error: missing file
    let missing = korogrid(dir.path(), &["grid", "info", "missing.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
    // domain error: malformed document
    std::fs::write(dir.path().join("bad.json"), "{\"version\":9}").unwrap();
    let bad = korogrid(dir.path(), &["grid", "info", "bad.json"]);
    assert_eq!(bad.status.code(), Some(1));
    // domain error: unknown function
    let unknown = korogrid(
        dir.path(),
        &[
            "grid", "build", "--function", "nope", "--d", "1", "--level", "1", "--out", "x.json",
        ],
    );
    assert_eq!(unknown.status.code(), Some(1));
    // cap violation
    let cap = korogrid(
        dir.path(),
        &[
            "grid", "build", "--function", "poly2", "--d", "9", "--level", "1", "--out", "x.json",
        ],
    );
    assert_eq!(cap.status.code(), Some(1));
}

#[test]
fn selftest_single_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = korogrid(dir.path(), &["selftest", "--criterion", "1"]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("criterion 01"), "{text}");
    assert!(text.contains("PASS"), "{text}");
    assert!(text.contains("1/1 criteria passed"), "{text}");
    // unknown criterion id is a domain error
    let bad = korogrid(dir.path(), &["selftest", "--criterion", "42"]);
    assert_eq!(bad.status.code(), Some(1));
}
