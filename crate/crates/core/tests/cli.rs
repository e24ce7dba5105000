use std::path::Path;
use std::process::{Command, Output};

use langstep::cli::{exit_code, Status, EXIT_BLOW_UP, EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OK};
use langstep::Error;

fn langstep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_langstep")).args(args).env("LANGSTEP_THREADS", "2").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn oracle_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for f in [&a, &b] {
        let o = langstep(&["oracle", "--schedule", "poly:0.5:0.9", "--n", "2000", "--out", p(f)]);
        assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let head = String::from_utf8_lossy(&text);
    assert!(head.starts_with("n,gamma_n,Gamma_n,variance,w1,tv_lower_bound\n1,0.5,"));
    assert_eq!(head.lines().count(), 2001);
}

#[test]
fn existing_outputs_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let args = ["run", "--model", "ou", "--schedule", "poly:0.5:0.5", "--steps", "50", "--paths", "8", "--out", p(&out)];
    assert_eq!(code(&langstep(&args)), EXIT_OK);
    let first = std::fs::read(&out).unwrap();
    assert!(dir.path().join("run.csv.manifest.json").exists());

    let again = langstep(&args);
    assert_eq!(code(&again), EXIT_ERROR);
    assert!(stderr(&again).contains("--force"), "{}", stderr(&again));

    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&langstep(&forced)), EXIT_OK);
    assert_eq!(first, std::fs::read(&out).unwrap());
}

#[test]
fn unknown_config_key_is_rejected_with_a_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"model": {"builtin": "ou"}, "stepsize": {"kind": "polynomial", "gamma1": 0.5, "a": 0.5},
            "experiment": {"kind": "run", "steps": 10, "paths": 4}}"#,
    )
    .unwrap();
    let o = langstep(&["run", "--config", p(&cfg), "--out", p(&dir.path().join("x.csv"))]);
    assert_eq!(code(&o), EXIT_ERROR);
    assert!(stderr(&o).contains("did you mean 'schedule'"), "{}", stderr(&o));
}

#[test]
fn blow_up_exits_with_its_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("blow.csv");
    let o = langstep(&[
        "run", "--model", "ou", "--schedule", "poly:5:0.1", "--steps", "2000", "--paths", "2", "--out", p(&out),
    ]);
    assert_eq!(code(&o), EXIT_BLOW_UP, "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&langstep(&["rates", "nonsense"])), EXIT_ERROR);
    assert_eq!(code(&langstep(&["oracle", "--n", "3"])), EXIT_ERROR);
    assert_eq!(code(&langstep(&["--help"])), EXIT_OK);
}

#[test]
fn missing_output_directory_is_an_error() {
    let o = langstep(&["oracle", "--schedule", "poly:0.5:0.9", "--n", "5", "--out", "/nonexistent/dir/o.csv"]);
    assert_eq!(code(&o), EXIT_ERROR);
}

#[test]
fn exit_codes_by_outcome() {
    assert_eq!(exit_code(&Ok(Status::Ok)), 0);
    assert_eq!(exit_code(&Ok(Status::Inconclusive)), EXIT_INCONCLUSIVE);
    assert_eq!(exit_code(&Err(Error::BlowUp { n: 3, x: vec![f64::INFINITY] })), 2);
    assert_eq!(exit_code(&Err(Error::ZeroStepIndex)), 1);
}
