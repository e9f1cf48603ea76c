use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fhm_core::dominance::{is_ir, satisfies_ete};
use fhm_core::economy::{parse_allocation, serialize_allocation};
use fhm_core::fixtures;
use fhm_core::membership::in_weak_core;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    elapsed: Duration,
}

fn fhm(args: &[&str]) -> Run {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_fhm")).args(args).output().expect("binary runs");
    Run {
        code: out.status.code().expect("exited normally"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 report"),
        elapsed: start.elapsed(),
    }
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn has(run: &Run, line: &str) -> bool {
    run.stdout.lines().any(|l| l == line)
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let e1 = file(&dir, "e1.economy", fixtures::E1);
    let ok = fhm(&["validate", "--economy", s(&e1)]);
    assert_eq!(ok.code, 0);
    assert!(has(&ok, "valid: yes"));
    let bad = file(&dir, "bad.economy", &fixtures::E1.replace("1/2 0 1/2 0\n0 1/2", "1/2 1/2 1/2 0\n0 1/2"));
    let run = fhm(&["validate", "--economy", s(&bad)]);
    assert_eq!(run.code, 1);
    assert!(run.stdout.contains("row 2 sum 3/2"), "{}", run.stdout);
    let missing = dir.path().join("missing.economy");
    assert_eq!(fhm(&["validate", "--economy", s(&missing)]).code, 2);
}

#[test]
fn check_properties() {
    let dir = TempDir::new().unwrap();
    let e1 = file(&dir, "e1.economy", fixtures::E1);
    let w = file(&dir, "w.allocation", &serialize_allocation(fixtures::e1().endowment()));
    let run = fhm(&["check", "--economy", s(&e1), "--allocation", s(&w)]);
    assert_eq!(run.code, 0);
    for line in ["ir: yes", "ete: yes", "eene: yes", "sdeff: no"] {
        assert!(has(&run, line), "missing {line}\n{}", run.stdout);
    }
    let prime = file(&dir, "e1p.economy", fixtures::E1_PRIME);
    let construction = file(&dir, "c.allocation", fixtures::EENE_CONSTRUCTION);
    let run = fhm(&["check", "--economy", s(&prime), "--allocation", s(&construction), "--properties", "ir,eene"]);
    assert!(has(&run, "ir: yes") && has(&run, "eene: yes"));
    assert!(!run.stdout.contains("sdeff"));
    let small = file(&dir, "small.allocation", "1 0\n0 1\n");
    let run = fhm(&["check", "--economy", s(&e1), "--allocation", s(&small)]);
    assert_eq!(run.code, 1);
    assert!(run.stdout.contains("dimension mismatch"));
}

#[test]
fn core_verdicts() {
    let dir = TempDir::new().unwrap();
    let e1 = file(&dir, "e1.economy", fixtures::E1);
    let w = file(&dir, "w.allocation", &serialize_allocation(fixtures::e1().endowment()));
    let run = fhm(&["core", "--economy", s(&e1), "--allocation", s(&w), "--notion", "weak"]);
    assert_eq!(run.code, 3);
    assert!(has(&run, "coalition: {1,3}"));
    let ttc3 = file(&dir, "ttc3.economy", fixtures::TTC3);
    let t = file(&dir, "t.allocation", &serialize_allocation(&fhm_core::ttc::ttc(&fixtures::ttc3()).unwrap()));
    let run = fhm(&["core", "--economy", s(&ttc3), "--allocation", s(&t), "--notion", "strong"]);
    assert_eq!(run.code, 0);
    assert!(has(&run, "verdict: member"));
    // Agent 1 gives away their favorite for nothing better.
    let swapped = file(&dir, "s.allocation", "0 1/2 1/2 0\n1/2 0 0 1/2\n0 1/2 0 1/2\n1/2 0 1/2 0\n");
    for notion in ["strong", "weak"] {
        let run = fhm(&["core", "--economy", s(&e1), "--allocation", s(&swapped), "--notion", notion]);
        assert_eq!(run.code, 3);
        assert!(run.stdout.contains("ir-violator: "), "{}", run.stdout);
    }
}

#[test]
fn reproductions() {
    let run = fhm(&["reproduce", "statement1"]);
    assert_eq!(run.code, 0);
    assert!(has(&run, "verdict: STRONG CORE EMPTY: certified"));
    assert!(run.stdout.contains("p(1,o1)+p(1,o2) eq 1/2 min 1/2 max 1/2"));
    assert!(run.stdout.contains("Farkas certificate"));
    assert!(run.elapsed < Duration::from_secs(10));
    let run = fhm(&["reproduce", "statement3"]);
    assert_eq!(run.code, 0);
    assert!(has(&run, "verdict: WEAK CORE \u{2229} EENE = \u{2205}: certified"));
    assert!(run.stdout.contains("agent 3 gaps 1/4 0 0 0"));
    assert!(run.elapsed < Duration::from_secs(10));
    let dir = TempDir::new().unwrap();
    let prime = file(&dir, "e1p.economy", fixtures::E1_PRIME);
    let run = fhm(&["reproduce", "statement1", "--economy", s(&prime)]);
    assert_eq!(run.code, 4);
    assert!(run.stdout.contains("failed-step: line") && run.stdout.contains("best-exchange"), "{}", run.stdout);
}

#[test]
fn find_core_transcripts() {
    let dir = TempDir::new().unwrap();
    let e1 = file(&dir, "e1.economy", fixtures::E1);
    let out = dir.path().join("core.allocation");
    let run = fhm(&["find-core", "--economy", s(&e1), "--output", s(&out)]);
    assert_eq!(run.code, 0, "{}", run.stdout);
    for line in ["ir: yes", "ete: yes"] {
        assert!(has(&run, line));
    }
    assert!(run.stdout.contains("weak-core: member"));
    let p = parse_allocation(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let e = fixtures::e1();
    assert!(is_ir(&e, &p).unwrap() && satisfies_ete(&e, &p).unwrap() && in_weak_core(&e, &p).unwrap().is_member());

    let prime = file(&dir, "e1p.economy", fixtures::E1_PRIME);
    let run = fhm(&["find-core", "--economy", s(&prime)]);
    assert_eq!(run.code, 0);
    assert!(has(&run, "eene: no"));

    let two = file(&dir, "two.economy", "2\no_1 o_2\no_1 o_2\n1/2 1/2\n1/2 1/2\n");
    let run = fhm(&["find-core", "--economy", s(&two)]);
    assert!(run.stdout.contains("allocation: 1/2 1/2\n  1/2 1/2\n"));
}

#[test]
fn reports_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let e1 = file(&dir, "e1.economy", fixtures::E1);
    for format in ["text", "structured"] {
        let args = ["find-core", "--economy", s(&e1), "--seed", "3", "--format", format];
        assert_eq!(fhm(&args).stdout, fhm(&args).stdout);
        let args = ["reproduce", "statement3", "--format", format];
        assert_eq!(fhm(&args).stdout, fhm(&args).stdout);
    }
    let run = fhm(&["reproduce", "statement1", "--format", "structured"]);
    assert!(run.stdout.lines().all(|l| l.contains('=')));
}

#[test]
fn usage_errors() {
    let (_, exit) = fhm_cli::run(["fhm", "validate", "--economy", "/definitely/missing"]).unwrap();
    assert_eq!(exit, fhm_cli::Exit::Io);
    assert!(fhm_cli::run(["fhm", "core", "--notion", "medium"]).is_err());
    let dir = TempDir::new().unwrap();
    let e1 = file(&dir, "e1.economy", fixtures::E1);
    assert_eq!(fhm(&["find-core", "--economy", s(&e1), "--schedule", "0"]).code, 1);
}
