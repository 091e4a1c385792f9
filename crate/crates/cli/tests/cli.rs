use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn beran(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beran"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn core_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn scenario(name: &str) -> String {
    core_dir()
        .join("scenarios")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn keygen_is_deterministic_with_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = beran(dir.path(), &["keygen", "--seed", "9", "--out", "a.json"]);
    let b = beran(dir.path(), &["keygen", "--seed", "9", "--out", "b.json"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(
        fs::read(dir.path().join("a.json")).unwrap(),
        fs::read(dir.path().join("b.json")).unwrap()
    );
    let printed = stdout(&a);
    assert_eq!(printed.trim().len(), 68);
    assert!(printed
        .trim()
        .chars()
        .all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
}

#[test]
fn keygen_suites_differ_in_key_length() {
    let dir = tempfile::tempdir().unwrap();
    beran(
        dir.path(),
        &["keygen", "--suite", "ec", "--seed", "1", "--out", "ec.json"],
    );
    beran(
        dir.path(),
        &["keygen", "--suite", "ff", "--seed", "1", "--out", "ff.json"],
    );
    let pk_len = |f: &str| {
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(f)).unwrap()).unwrap();
        v["public_key"].as_str().unwrap().len() / 2
    };
    assert_eq!(pk_len("ec.json"), 32);
    assert_eq!(pk_len("ff.json"), 384);
}

#[test]
fn keygen_unwritable_path_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = beran(dir.path(), &["keygen", "--out", "missing/dir/id.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn emergency_scenario_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = beran(
        dir.path(),
        &["scenario", "run", &scenario("emergency.toml")],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let trace = fs::read_to_string(dir.path().join("trace.txt")).unwrap();
    let golden = fs::read_to_string(core_dir().join("tests/golden/emergency.trace")).unwrap();
    assert_eq!(trace, golden);
    beran(
        dir.path(),
        &[
            "scenario",
            "run",
            &scenario("emergency.toml"),
            "--out",
            "again.txt",
        ],
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("again.txt")).unwrap(),
        trace
    );
}

#[test]
fn unregistered_callee_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = beran(
        dir.path(),
        &["scenario", "run", &scenario("unregistered_callee.toml")],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("failed:unknown-destination"));
}

#[test]
fn bad_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "seed = 1\nbogus = 2\n").unwrap();
    let o = beran(dir.path(), &["scenario", "run", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        beran(dir.path(), &["keygen", "--colour"]).status.code(),
        Some(2)
    );
    assert_eq!(beran(dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn handshake_demo_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let ok = beran(dir.path(), &["handshake", "demo", "--seed", "4"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("established "));
    for message in ["1", "2", "3"] {
        let bad = beran(
            dir.path(),
            &[
                "handshake",
                "tamper",
                "--seed",
                "4",
                "--message",
                message,
                "--bit",
                "600",
            ],
        );
        assert_eq!(
            bad.status.code(),
            Some(1),
            "message {message}: {}",
            stdout(&bad)
        );
        assert!(stdout(&bad).contains("failed: "));
    }
}

#[test]
fn ledger_export_verify_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let o = beran(
        dir.path(),
        &[
            "ledger",
            "export",
            &scenario("emergency.toml"),
            "--node",
            "du1",
        ],
    );
    assert!(o.status.success());
    let v = beran(dir.path(), &["ledger", "verify", "chain.jsonl"]);
    assert!(v.status.success(), "{}", stdout(&v));
    let i = beran(dir.path(), &["ledger", "inspect", "chain.jsonl"]);
    assert_eq!(stdout(&i).matches("binding ").count(), 2);

    let text = fs::read_to_string(dir.path().join("chain.jsonl")).unwrap();
    fs::write(
        dir.path().join("bad.jsonl"),
        text.replacen("\"timestamp\":", "\"timestamp\":1", 1),
    )
    .unwrap();
    assert_eq!(
        beran(dir.path(), &["ledger", "verify", "bad.jsonl"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bench_comm_report() {
    let dir = tempfile::tempdir().unwrap();
    assert!(beran(dir.path(), &["bench", "comm"]).status.success());
    let csv = fs::read_to_string(dir.path().join("comm.csv")).unwrap();
    assert!(csv.starts_with("protocol,suite,mode,signal_index,bits,"));
    assert!(csv.contains("be-ran,ec,paper,1,1296,2848,356,"));
    assert!(csv.contains("tls13,ec,raw-pk,1,512,2560,320,"));

    let all: String = [
        "nonce_bits",
        "address_bits",
        "prf_bits",
        "cert_bits",
        "pk_ff_bits",
        "sk_ff_bits",
        "pk_ec_bits",
        "sk_ec_bits",
        "bc_addr_bits",
        "hash_bits",
        "hmac_bits",
        "dh_param_ff_bits",
        "dh_param_ec_bits",
    ]
    .iter()
    .zip([
        512, 256, 512, 11184, 6144, 512, 512, 512, 544, 512, 512, 6144, 512,
    ])
    .map(|(k, v)| format!("{k} = {v}\n"))
    .collect();
    fs::write(dir.path().join("double.toml"), all).unwrap();
    let o = beran(
        dir.path(),
        &[
            "bench",
            "comm",
            "--params",
            "double.toml",
            "--out",
            "double.csv",
        ],
    );
    assert!(o.status.success());
    let doubled = fs::read_to_string(dir.path().join("double.csv")).unwrap();
    assert!(doubled.contains("be-ran,ec,paper,1,2592,5696,712,"));
}

#[test]
fn bench_compute_with_supplied_timings() {
    let dir = tempfile::tempdir().unwrap();
    let mut timings = String::new();
    for (suite, sign, verify) in [("ec", 16.0, 100.0), ("ff", 1506.0, 30.0)] {
        for (name, v) in [
            ("t_sign", sign),
            ("t_verify", verify),
            ("t_hash", 0.5),
            ("t_sym", 3.0),
            ("t_hmac", 1.4),
            ("t_dh", 1812.0),
            ("t_ecdh", 2132.0),
        ] {
            timings.push_str(&format!("{name} {suite} {v}\n"));
        }
    }
    fs::write(dir.path().join("t.txt"), timings).unwrap();
    let o = beran(
        dir.path(),
        &[
            "bench",
            "compute",
            "--timings",
            "t.txt",
            "--repetitions",
            "2",
            "--format",
            "text",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(dir.path().join("compute.csv")).unwrap();
    assert!(report.contains("[be-ran ec paper]"));
    assert!(report.contains("predicted_us = 233.000"));
    assert!(report.contains("predicted_us = 3073.000"));
}

#[test]
fn report_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    beran(dir.path(), &["report", "--out", "a.txt"]);
    beran(dir.path(), &["report", "--out", "b.txt"]);
    let a = fs::read_to_string(dir.path().join("a.txt")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.txt")).unwrap());
    assert_eq!(a.matches("\n[").count() + 1, 6);
}
