//! End-to-end checks of the `lexis` binary: exit codes, determinism and
//! error reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lexis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexis"))
        .args(args)
        .output()
        .expect("spawn lexis")
}

fn path_str(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn pipeline_produces_tables_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cohort = path_str(d, "cohort.csv");

    let out = lexis(&["simulate", "--n", "300", "--seed", "5", "--out", &cohort]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for (cmd, file) in [("exposure", "exp.csv"), ("events", "ev.csv")] {
        let out = lexis(&[
            cmd, "--cohort", &cohort, "--t-r", "5", "--semantics", "post-onset",
            "--out", &path_str(d, file),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }

    let out = lexis(&[
        "rates",
        "--exposure", &path_str(d, "exp.csv"),
        "--events", &path_str(d, "ev.csv"),
        "--out", &path_str(d, "rates.csv"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = lexis(&["validate", "--cohort", &cohort, "--t-r", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));

    let exposure = String::from_utf8(read(d, "exp.csv")).unwrap();
    assert!(exposure.starts_with("# kind=exposure t_r=5 dim=3"));
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for run in ["one", "two"] {
        let cohort = path_str(d, &format!("cohort_{run}.csv"));
        assert!(lexis(&["simulate", "--n", "150", "--seed", "11", "--out", &cohort])
            .status
            .success());
        assert!(lexis(&[
            "exposure", "--cohort", &cohort, "--t-r", "2.5", "--semantics", "post-onset",
            "--out", &path_str(d, &format!("exp_{run}.csv")),
        ])
        .status
        .success());
    }
    assert_eq!(read(d, "cohort_one.csv"), read(d, "cohort_two.csv"));
    assert_eq!(read(d, "exp_one.csv"), read(d, "exp_two.csv"));
}

#[test]
fn usage_problems_exit_two() {
    assert_eq!(lexis(&["exposure", "--bogus"]).status.code(), Some(2));
    assert_eq!(lexis(&["simulate"]).status.code(), Some(2)); // --out missing
    assert_eq!(lexis(&[]).status.code(), Some(2));
    let out = lexis(&[
        "exposure", "--cohort", "x.csv", "--semantics", "sideways", "--out", "y.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(msg.contains("incidence") && msg.contains("post-onset"), "{msg}");
}

#[test]
fn data_problems_exit_one_with_error_line() {
    let out = lexis(&[
        "exposure", "--cohort", "/no/such/file.csv", "--semantics", "incidence",
        "--out", "/tmp/unused_lexis_test.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"), "{stderr}");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "id,birth_time,entry_time,entry_duration,exit_time,onset_time,event_at_exit\n\
         s9,0,60,5,50,,1\n",
    )
    .unwrap();
    let out = lexis(&[
        "validate", "--cohort", bad.to_str().unwrap(), "--t-r", "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("s9"), "{stderr}");
}

#[test]
fn mismatched_tables_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cohort = path_str(d, "cohort.csv");
    assert!(lexis(&["simulate", "--n", "100", "--seed", "3", "--out", &cohort])
        .status
        .success());
    for (semantics, exp, ev) in [
        ("post-onset", "exp_post.csv", "ev_post.csv"),
        ("incidence", "exp_inc.csv", "ev_inc.csv"),
    ] {
        assert!(lexis(&[
            "exposure", "--cohort", &cohort, "--semantics", semantics,
            "--out", &path_str(d, exp),
        ])
        .status
        .success());
        assert!(lexis(&[
            "events", "--cohort", &cohort, "--semantics", semantics,
            "--out", &path_str(d, ev),
        ])
        .status
        .success());
    }

    // events table passed where the exposure table belongs
    let out = lexis(&[
        "rates",
        "--exposure", &path_str(d, "ev_post.csv"),
        "--events", &path_str(d, "ev_post.csv"),
        "--out", &path_str(d, "r.csv"),
    ]);
    assert_eq!(out.status.code(), Some(1));

    // semantics differ between the two inputs
    let out = lexis(&[
        "rates",
        "--exposure", &path_str(d, "exp_post.csv"),
        "--events", &path_str(d, "ev_inc.csv"),
        "--out", &path_str(d, "r.csv"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("semantics"));
}

#[test]
fn two_dim_grid_and_custom_origin_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cohort = path_str(d, "cohort.csv");
    assert!(lexis(&["simulate", "--n", "80", "--seed", "9", "--out", &cohort])
        .status
        .success());
    let out = lexis(&[
        "exposure", "--cohort", &cohort, "--t-r", "5", "--dim", "2",
        "--origin", "0,50,0", "--semantics", "post-onset",
        "--out", &path_str(d, "exp2d.csv"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(read(d, "exp2d.csv")).unwrap();
    assert!(text.starts_with("# kind=exposure t_r=5 dim=2 origin=0,50,0"));
    assert_eq!(text.lines().nth(1), Some("i,j,value"));
}

#[test]
fn discretized_simulation_differs_from_exact() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (exact, rounded) = (path_str(d, "exact.csv"), path_str(d, "rounded.csv"));
    assert!(lexis(&["simulate", "--n", "50", "--seed", "21", "--out", &exact])
        .status
        .success());
    assert!(lexis(&[
        "simulate", "--n", "50", "--seed", "21", "--discretized", "--out", &rounded,
    ])
    .status
    .success());
    assert_ne!(read(d, "exact.csv"), read(d, "rounded.csv"));
}

fn first_file_differs(a: &PathBuf, b: &PathBuf) -> bool {
    std::fs::read(a).unwrap() != std::fs::read(b).unwrap()
}

#[test]
fn seeds_change_the_cohort() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, seed) in [(&a, "1"), (&b, "2")] {
        assert!(lexis(&["simulate", "--n", "40", "--seed", seed, "--out", path.to_str().unwrap()])
            .status
            .success());
    }
    assert!(first_file_differs(&a, &b));
}
