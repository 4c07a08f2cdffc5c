use std::fs;
use std::process::{Command, Output};

fn odoshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odoshift"))
        .args(args)
        .env_remove("ODOSHIFT_MAX_BYTES")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn letter(m: u64) -> char {
    match m.trailing_zeros() {
        0 => 'a',
        d if d % 3 == 0 => 'd',
        d if d % 3 == 1 => 'c',
        _ => 'b',
    }
}

#[test]
fn generate_sixteen() {
    let o = odoshift(&["generate", "--length", "16"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "acabacadacabacac\n");
}

#[test]
fn generate_matches_valuation_letters() {
    let o = odoshift(&["generate", "--length", "5000", "--shift", "7"]);
    let expected: String = (8..5008).map(letter).collect();
    assert_eq!(stdout(&o).trim_end(), expected);
}

#[test]
fn encode_shift_five() {
    let o = odoshift(&["encode", "--shift", "5", "--precision", "8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "10100000\n");
}

#[test]
fn encode_reads_a_prefix_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.txt");
    let w: String = (6..6 + 2048).map(letter).collect();
    fs::write(&path, format!("{w}\n")).unwrap();
    let o = odoshift(&[
        "encode",
        "--input",
        path.to_str().unwrap(),
        "--precision",
        "8",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "10100000\n");
}

#[test]
fn analyze_lists_levels_then_verdict() {
    let o = odoshift(&["analyze", "--precision", "4", "--length", "64"]);
    assert_eq!(
        stdout(&o),
        "# k M_k l_k\n1 2 a\n2 4 c\n3 8 b\n4 16 d\nverdict: eventually_constant distance=0 stable_from=1\n"
    );
}

#[test]
fn fiber_of_fixed_point_and_shift() {
    let fixed = odoshift(&[
        "fiber",
        "--precision",
        "10",
        "--length",
        "8192",
        "--master-length",
        "65536",
    ]);
    assert!(stdout(&fixed).contains("sigma_preimage_letters: b,c,d\n"));
    let shifted = odoshift(&[
        "fiber",
        "--precision",
        "10",
        "--length",
        "8192",
        "--shift",
        "2",
        "--master-length",
        "65536",
    ]);
    let s = stdout(&shifted);
    assert!(s.contains("classification: toeplitz_point\n"), "{s}");
    assert!(s.contains("sigma_preimage_letters: c\n"), "{s}");
}

#[test]
fn measure_prints_exact_rationals() {
    for (w, mu) in [
        ("a", "1/2"),
        ("b", "1/7"),
        ("c", "2/7"),
        ("d", "1/14"),
        ("aa", "0"),
    ] {
        let o = odoshift(&["measure", "--word", w]);
        assert_eq!(stdout(&o), format!("{mu}\n"), "word {w}");
    }
}

#[test]
fn freq_counts_exactly() {
    let o = odoshift(&[
        "freq", "--word", "ac", "--window", "1024", "--length", "2048",
    ]);
    let expected = (1..=1024u64)
        .filter(|&m| letter(m) == 'a' && letter(m + 1) == 'c')
        .count();
    let line = stdout(&o);
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields[0], "ac");
    assert_eq!(fields[1], expected.to_string());
    assert_eq!(fields[2], "1024");
}

#[test]
fn spectrum_csv_and_json_agree() {
    let args = ["spectrum", "--theta", "1/2,1/3", "--window", "65536"];
    let csv = stdout(&odoshift(&args));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("theta,magnitude,N"));
    let half: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(half[0], "1/2");
    assert_eq!(half[1].parse::<f64>().unwrap(), 0.5);
    assert_eq!(half[2], "65536");

    let mut json_args = args.to_vec();
    json_args.push("--json");
    let v: serde_json::Value = serde_json::from_str(&stdout(&odoshift(&json_args))).unwrap();
    assert_eq!(v["samples"][0]["magnitude"], 0.5);
    assert_eq!(v["samples"][1]["theta"], "1/3");
}

#[test]
fn identical_runs_are_byte_identical() {
    for args in [
        &["spectrum", "--theta", "1/3,1/5,3/7", "--window", "200000"][..],
        &["analyze", "--precision", "12", "--shift", "77"][..],
        &["freq", "--word", "acab", "--window", "100000", "--json"][..],
    ] {
        let a = odoshift(args);
        let b = odoshift(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn output_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.txt");
    let o = odoshift(&[
        "generate",
        "--length",
        "8",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(path).unwrap(), "acabacad\n");
}

#[test]
fn verify_quick_passes() {
    let o = odoshift(&["verify", "--level", "quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(
        out.lines()
            .filter(|l| l.starts_with("PASS criterion"))
            .count(),
        10
    );
    assert!(out.ends_with("10 of 10 criteria passed\n"));
}

#[test]
fn validation_errors_exit_2() {
    for args in [
        &["encode", "--precision", "0"][..],
        &["measure", "--word", "xyz"][..],
        &["spectrum", "--theta", "pi"][..],
        &["verify", "--level", "slow"][..],
        &["generate", "--bogus"][..],
    ] {
        assert_eq!(odoshift(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn insufficient_data_exits_3_with_required_length() {
    let o = odoshift(&["encode", "--precision", "10", "--length", "1000"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("4096"), "{err}");
    assert!(err.contains("hint: rerun with --length 4096"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.txt");
    fs::write(&path, "acabacad").unwrap();
    let o = odoshift(&[
        "analyze",
        "--input",
        path.to_str().unwrap(),
        "--precision",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("supply a prefix of at least 32 letters"));
}

#[test]
fn foreign_sequence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("const.txt");
    fs::write(&path, "a".repeat(1024)).unwrap();
    let o = odoshift(&[
        "encode",
        "--input",
        path.to_str().unwrap(),
        "--precision",
        "6",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("not in subshift"));
}

#[test]
fn io_errors_exit_1() {
    let o = odoshift(&["encode", "--input", "/nonexistent/prefix.txt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn byte_cap_is_enforced() {
    let o = Command::new(env!("CARGO_BIN_EXE_odoshift"))
        .args(["generate", "--length", "100"])
        .env("ODOSHIFT_MAX_BYTES", "64")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ODOSHIFT_MAX_BYTES"));
}

#[test]
fn custom_substitution_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tm.txt");
    fs::write(&path, "# Thue-Morse\n0 -> 01\n1 -> 10\n").unwrap();
    let o = odoshift(&[
        "generate",
        "--length",
        "16",
        "--substitution",
        path.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o), "0110100110010110\n");
}
