use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use infheat::regularity::RegularityReport;
use infheat::CertificateReport;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn infheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infheat"))
        .args(args)
        .env("INFHEAT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn run_into(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    infheat(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn catalog_lists_every_form() {
    let o = infheat(&["list-catalog"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 9);
    let sphere = text.lines().position(|l| l.starts_with("ExteriorSphere")).unwrap();
    assert!(text.lines().skip(sphere).take(4).any(|l| l.contains("2aδ² ≥ 2R₀+1")));
    let fam = text.lines().position(|l| l.starts_with("AppendixFamily")).unwrap();
    assert!(text.lines().skip(fam).take(4).any(|l| l.contains("α=1, m=3")));
    for kind in [
        "QuadraticProbe",
        "BottomBarrier",
        "PetrovskyBarrier",
        "IrregularityFunction",
        "FundamentalW",
        "WallBarrier",
        "TopShift",
    ] {
        assert!(text.contains(kind), "{kind}");
    }
}

#[test]
fn petrovsky_certificate_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(&config("petrovsky_certify.toml"), dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rep: CertificateReport = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(rep.verdict, infheat::Verdict::Certified);
    let curve = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert!(curve.starts_with("t,radius\n"));
}

#[test]
fn heat_oracle_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(&config("heat_oracle.toml"), dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fields = fs::read_to_string(dir.path().join("fields.csv")).unwrap();
    assert!(fields.lines().count() > 1000);
}

#[test]
fn cfl_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(&config("cfl_violation.toml"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("CFL: dt ≤ ε²/2"), "{}", stderr(&o));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn parse_error_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "experiment = \"certify\"\nsamples = \n").unwrap();
    let o = run_into(&bad, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("line 2") && e.contains("column"), "{e}");
}

#[test]
fn expectation_mismatch_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("probe.toml");
    fs::write(
        &cfg,
        r#"
experiment = "certify"
samples = 200
side = "super"
region = { kind = "cylinder", base = { shape = "box", lo = [0.0], hi = [0.5] }, t0 = 0.0, t1 = 0.5 }
form = { kind = "QuadraticProbe", x0 = [0.0], t0 = 0.25, eps = 1.0 }

[expect]
verdict = "certified"
"#,
    )
    .unwrap();
    let o = run_into(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("MISMATCH"));
}

#[test]
fn report_round_trips_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(&config("petrovsky_check.toml"), dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let rep: CertificateReport = serde_json::from_str(&text).unwrap();
    assert_eq!(rep.to_json() + "\n", text);
}

#[test]
fn same_config_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config("future_blindness.toml");
    assert!(run_into(&cfg, a.path(), &[]).status.success());
    assert!(run_into(&cfg, b.path(), &[]).status.success());
    for f in ["report.json", "curves.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let text = fs::read_to_string(a.path().join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let full: RegularityReport = serde_json::from_value(v["pastAgreement"]["full"].clone()).unwrap();
    assert_eq!(full.verdict, infheat::RegularityVerdict::Regular);
}

#[test]
fn seed_flag_overrides_config() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config("petrovsky_certify.toml");
    assert!(run_into(&cfg, a.path(), &["--seed", "7"]).status.success());
    assert!(run_into(&cfg, b.path(), &["--seed", "8"]).status.success());
    let fa = fs::read(a.path().join("fields.csv")).unwrap();
    let fb = fs::read(b.path().join("fields.csv")).unwrap();
    assert_ne!(fa, fb);
    let plain = tempfile::tempdir().unwrap();
    assert!(run_into(&cfg, plain.path(), &[]).status.success());
    assert_eq!(fa, fs::read(plain.path().join("fields.csv")).unwrap());
}

#[test]
fn stationary_and_family_configs_pass() {
    for name in ["wall_stationary.toml", "wall_family.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let o = run_into(&config(name), dir.path(), &[]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn south_pole_certificate_refuted() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(&config("exterior_south.toml"), dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v["certificate"]["verdict"], "refuted");
}
