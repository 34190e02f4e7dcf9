use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn canseal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_canseal"))
        .args(args)
        .output()
        .expect("spawn canseal")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn simulate(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    canseal(&args)
}

fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_full_run_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("run1");
    let b = tmp.path().join("run2");
    let flags = ["--mode", "encrypted", "--seed", "7", "--duration", "180"];
    let out = simulate(&a, &flags);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("0x100: 18000 frames"), "{text}");
    assert!(text.contains("0x101: 18000 frames"), "{text}");
    assert!(simulate(&b, &flags).status.success());
    assert_eq!(dir_snapshot(&a), dir_snapshot(&b));
    let meta = fs::read_to_string(a.join("meta.txt")).unwrap();
    assert_eq!(meta, "seed=7\nmode=encrypted\nduration_s=180\nrate_hz=100\n");
}

#[test]
fn simulate_rejects_bad_values() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simulate(&tmp.path().join("x"), &["--duration", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = simulate(&tmp.path().join("x"), &["--key", "abc"]);
    assert_eq!(out.status.code(), Some(2));
    let out = simulate(&tmp.path().join("x"), &["--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn analyze_reports_masking_and_patterns() {
    let tmp = tempfile::tempdir().unwrap();
    let enc = tmp.path().join("enc");
    let plain = tmp.path().join("plain");
    assert!(simulate(&enc, &["--duration", "60"]).status.success());
    assert!(simulate(&plain, &["--duration", "60", "--mode", "plaintext"]).status.success());

    let out = canseal(&["analyze", "--in", enc.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    let b2 = text.lines().find(|l| l.trim_start().starts_with("byte_2:")).unwrap();
    assert!(b2.contains("constant=false"), "{b2}");
    assert!(enc.join("report/encrypted_byte_profiles.csv").is_file());

    let out = canseal(&["analyze", "--in", plain.to_str().unwrap()]);
    let text = stdout(&out);
    assert!(text.contains("max_ascending=126"), "{text}");
    assert!(text.contains("constant=true"));
}

#[test]
fn analyze_empty_directory_is_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = canseal(&["analyze", "--in", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema mismatch"));
}

#[test]
fn compare_self_and_wrong_key() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    assert!(simulate(&run, &["--duration", "30"]).status.success());
    let r = run.to_str().unwrap();

    let out = canseal(&["compare", "--encrypted", r, "--plaintext", r, "--no-host-timing"]);
    let text = stdout(&out);
    let deltas: Vec<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("[deltas]"))
        .skip(1)
        .take_while(|l| l.starts_with("  "))
        .collect();
    assert!(!deltas.is_empty());
    assert!(deltas.iter().all(|l| l.ends_with(": 0.000000")), "{deltas:?}");
    assert!(text.contains("0 of 3000 data frames fail the padding check"));
    // A run compared with itself cannot show plaintext structure.
    assert_eq!(out.status.code(), Some(4));

    let out = canseal(&[
        "compare", "--encrypted", r, "--plaintext", r, "--no-host-timing",
        "--key", "00112233445566778899aabbccddeeff",
    ]);
    assert!(stdout(&out).contains("3000 of 3000 data frames fail the padding check (100.00%)"));
}

#[test]
fn compare_directories_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let enc = tmp.path().join("enc");
    let plain = tmp.path().join("plain");
    let rep = tmp.path().join("rep");
    assert!(simulate(&enc, &["--seed", "3"]).status.success());
    assert!(simulate(&plain, &["--seed", "3", "--mode", "plaintext"]).status.success());
    let out = canseal(&[
        "compare",
        "--encrypted", enc.to_str().unwrap(),
        "--plaintext", plain.to_str().unwrap(),
        "--out", rep.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(rep.join("report.txt").is_file());
    assert!(rep.join("checks.csv").is_file());
}

#[test]
fn compare_mismatched_schedules() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(simulate(&a, &["--duration", "10"]).status.success());
    assert!(simulate(&b, &["--duration", "11", "--mode", "plaintext"]).status.success());
    let out = canseal(&[
        "compare", "--encrypted", a.to_str().unwrap(), "--plaintext", b.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schedule"));
}

#[test]
fn kat_pass_and_negative_control() {
    let out = canseal(&["kat"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("PASS"));
    let out = canseal(&["kat", "--rounds", "26"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn ingest_candump() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("dump.log");
    fs::write(
        &log,
        "(0.000000) vcan0 100#0001020304050607\n(0.010000) vcan0 101#AABB\n(0.0) vcan0 1FFFFFFF#00\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("run");
    let out = canseal(&[
        "ingest", "--candump", log.to_str().unwrap(), "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read_to_string(out_dir.join("100.csv")).unwrap().lines().nth(1),
        Some("0,0x100,8,00,01,02,03,04,05,06,07")
    );
    assert_eq!(
        fs::read_to_string(out_dir.join("101.csv")).unwrap().lines().nth(1),
        Some("10000,0x101,2,AA,BB,,,,,,")
    );
    assert_eq!(
        fs::read_to_string(out_dir.join("1FFFFFFF.csv")).unwrap().lines().nth(1),
        Some("0,0x1FFFFFFF,1,00,,,,,,,")
    );
    assert!(fs::read_to_string(out_dir.join("meta.txt")).unwrap().contains("mode=external"));
}

#[test]
fn ingest_reports_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("dump.log");
    fs::write(&log, "(0.0) vcan0 100#00\n(0.1) vcan0 100#0\n").unwrap();
    let out = canseal(&[
        "ingest", "--candump", log.to_str().unwrap(), "--out", tmp.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}
