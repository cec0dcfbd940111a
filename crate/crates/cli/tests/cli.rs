use std::path::{Path, PathBuf};
use std::process::Command;

use cstarcat::Tolerance;
use cstarcat_cli::commands::{generate, reserialize, GenKind, GenParams};
use cstarcat_cli::format::{canonical, parse_spec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cstarcat"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn valid_fixtures() -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(fixtures())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".cstar.json"))
        .collect();
    v.sort();
    v
}

fn exit_of(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn at_least_twenty_fixtures() {
    assert!(valid_fixtures().len() >= 20);
}

#[test]
fn fixtures_round_trip_byte_identical() {
    let tol = Tolerance::DEFAULT;
    for p in valid_fixtures() {
        let text = std::fs::read_to_string(&p).unwrap();
        let spec = parse_spec(&text).unwrap();
        assert_eq!(canonical(&spec), text, "{} is not canonical", p.display());
        let again = reserialize(&spec, &tol).unwrap();
        assert_eq!(canonical(&again), text, "{} changed on reload", p.display());
    }
}

#[test]
fn valid_fixtures_verify() {
    for p in valid_fixtures() {
        let out = bin().arg("verify").arg(&p).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}: {}", p.display(), String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn invalid_fixtures_exit_codes() {
    let inv = fixtures().join("invalid");
    let code = |name: &str| exit_of(&["verify", inv.join(name).to_str().unwrap()]);
    assert_eq!(code("truncated.cstar.json"), 2);
    assert_eq!(code("bad_version.cstar.json"), 2);
    assert_eq!(code("perturbed_basis.cstar.json"), 1);
    assert_eq!(code("perturbed_projection.cstar.json"), 1);
    assert_eq!(code("missing.cstar.json"), 2);
}

#[test]
fn json_report_has_verdict_and_digest() {
    let p = fixtures().join("category_1.cstar.json");
    let out = bin().args(["verify", "--format", "json"]).arg(&p).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn tolerance_flag_beats_environment() {
    let p = fixtures().join("category_1.cstar.json");
    let p = p.to_str().unwrap();
    let code = |env: Option<&str>, args: &[&str]| {
        let mut c = bin();
        c.args(["verify", p]).args(args);
        if let Some(v) = env {
            c.env("CSTARCAT_TOL_ABS", v);
        }
        c.output().unwrap().status.code().unwrap()
    };
    assert_eq!(code(Some("not-a-number"), &[]), 2);
    assert_eq!(code(Some("-1"), &[]), 2);
    assert_eq!(code(Some("-1"), &["--tol-abs", "1e-9"]), 0);
}

#[test]
fn construct_is_deterministic_and_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cat = fixtures().join("category_2.cstar.json");
    for verb in ["hull", "idem", "multiplier", "matalg"] {
        let a = dir.path().join(format!("{verb}_a.json"));
        let b = dir.path().join(format!("{verb}_b.json"));
        for out in [&a, &b] {
            let st = bin().args(["construct", verb]).arg(&cat).arg("--out").arg(out).output().unwrap();
            assert_eq!(st.status.code(), Some(0), "{verb}");
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{verb}");
        let again = dir.path().join(format!("{verb}_c.json"));
        let st = bin().args(["construct", verb]).arg(&cat).arg("--out").arg(&again).output().unwrap();
        assert_eq!(st.status.code(), Some(0));
        assert_eq!(exit_of(&["verify", a.to_str().unwrap()]), 0);
    }
}

#[test]
fn stdout_carries_the_file_without_out() {
    let out = bin().args(["gen", "module", "--seed", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, canonical(&generate(GenKind::Module, 2, &GenParams::default())));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("gen: PASS"));
}

#[test]
fn gen_is_deterministic() {
    let p = GenParams::default();
    for kind in
        [GenKind::Category, GenKind::Groupoid, GenKind::Module, GenKind::Bimodule, GenKind::Yoneda, GenKind::Matequiv]
    {
        for seed in [0u64, 9, 1 << 40] {
            assert_eq!(canonical(&generate(kind, seed, &p)), canonical(&generate(kind, seed, &p)));
        }
    }
    assert_ne!(canonical(&generate(GenKind::Category, 1, &p)), canonical(&generate(GenKind::Category, 2, &p)));
}

#[test]
fn tensor_morita_and_ew_on_fixtures() {
    let f = |n: &str| fixtures().join(n).to_str().unwrap().to_string();
    assert_eq!(exit_of(&["tensor", &f("yoneda_1.cstar.json"), &f("yoneda_1.cstar.json"), "--oracle"]), 0);
    assert_eq!(exit_of(&["morita", &f("matequiv_1.cstar.json")]), 0);
    assert_eq!(exit_of(&["morita", &f("yoneda_2.cstar.json")]), 0);
    assert_eq!(exit_of(&["ew", &f("bimodule_1.cstar.json"), "--count", "3"]), 0);
    // generated bimodules chain: seed s maps category s to category s + 1
    assert_eq!(exit_of(&["tensor", &f("bimodule_1.cstar.json"), &f("bimodule_2.cstar.json"), "--oracle"]), 0);
    assert_eq!(exit_of(&["tensor", &f("bimodule_1.cstar.json"), &f("bimodule_1.cstar.json")]), 2);
    assert_eq!(exit_of(&["tensor", &f("module_1.cstar.json"), &f("bimodule_1.cstar.json"), "--oracle"]), 0);
}
