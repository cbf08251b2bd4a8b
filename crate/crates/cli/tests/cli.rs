//! End-to-end runs of the pmaplab binary: exit codes, JSON shapes, and
//! byte-determinism of stdout.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pmaplab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmaplab"))
        .args(args)
        .current_dir(dir)
        .env_remove("PMAPLAB_THREADS")
        .output()
        .expect("binary should run")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout should be one JSON value")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

#[test]
fn gen_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let a = pmaplab(&["gen", "--kind", "dense", "--n", "5", "--seed", "7"], dir.path());
    let b = pmaplab(&["gen", "--kind", "dense", "--n", "5", "--seed", "7"], dir.path());
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout, "same seed and flags must give identical bytes");

    let v = stdout_json(&a);
    assert_eq!(v["n"], 5);
    assert_eq!(v["field"]["kind"], "prime");
    assert_eq!(v["field"]["modulus"], "31253");

    let other = pmaplab(&["gen", "--kind", "dense", "--n", "5", "--seed", "8"], dir.path());
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn solve_pmap_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let gen = pmaplab(
        &["gen", "--kind", "dense", "--n", "6", "--seed", "3", "--out", "a.json"],
        dir.path(),
    );
    assert_eq!(code(&gen), 0);

    let solve = pmaplab(
        &[
            "solve-pmap", "--input", "a.json", "--seed", "11", "--check", "brute", "--out",
            "b.json", "--stats", "stats.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&solve), 0, "stderr: {}", String::from_utf8_lossy(&solve.stderr));
    let report = stdout_json(&solve);
    assert_eq!(report["check"]["equal"], true);
    assert_eq!(report["output"]["n"], 6);

    let stats: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats["seed"], 11);
    assert!(stats["attempts"].as_u64().unwrap() >= 1);
    assert!(stats["box_queries"].as_u64().unwrap() > 0);
    assert!(stats["timings_ms"]["reconstruct"].is_number());

    // the --out artifact is a bare matrix, loadable by the other subcommands
    let pme = pmaplab(&["test-pme", "--a", "a.json", "--b", "b.json"], dir.path());
    assert_eq!(code(&pme), 0);
    assert_eq!(stdout_json(&pme)["equal"], true);
}

#[test]
fn solve_pmap_gen_mode_reports_combines_on_planted_cuts() {
    let dir = tempfile::tempdir().unwrap();
    let solve = pmaplab(
        &[
            "solve-pmap", "--gen", "planted-cut", "--n", "9", "--splits", "4", "--seed", "5",
            "--check", "brute", "--stats", "stats.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&solve), 0, "stderr: {}", String::from_utf8_lossy(&solve.stderr));
    assert_eq!(stdout_json(&solve)["check"]["equal"], true);
    let stats: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats.json")).unwrap())
            .unwrap();
    assert!(stats["combine_count"].as_u64().unwrap() >= 1, "cut recursion must combine");
}

#[test]
fn learn_rod_checks_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let learn = pmaplab(
        &[
            "learn-rod", "--gen", "--n", "5", "--r", "3", "--seed", "4", "--check",
            "coefficients", "--stats", "stats.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&learn), 0, "stderr: {}", String::from_utf8_lossy(&learn.stderr));
    let report = stdout_json(&learn);
    assert_eq!(report["check"]["equal"], true);
    assert_eq!(report["check"]["points"], 32);
    let stats: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats.json")).unwrap())
            .unwrap();
    assert!(stats["box_queries"].as_u64().unwrap() > 0);
}

#[test]
fn fixture_pairs_split_by_method() {
    let dir = tempfile::tempdir().unwrap();

    // order-4 data cannot tell the banded pair apart
    let upto4 = pmaplab(&["verify", "--pair-gen", "banded", "--n", "6", "--mode", "upto4"], dir.path());
    assert_eq!(code(&upto4), 0);
    assert_eq!(stdout_json(&upto4)["equal"], true);

    // the full scan and the deterministic tester both see the gap
    let brute = pmaplab(&["verify", "--pair-gen", "banded", "--n", "6", "--mode", "brute"], dir.path());
    assert_eq!(code(&brute), 1);
    assert_eq!(stdout_json(&brute)["witness"], serde_json::json!([1, 2, 3, 4, 5, 6]));

    let det = pmaplab(&["test-pme", "--pair-gen", "banded", "--n", "6"], dir.path());
    assert_eq!(code(&det), 1);
    assert_eq!(stdout_json(&det)["equal"], false);

    let rand = pmaplab(
        &["test-pme", "--pair-gen", "cycle", "--n", "5", "--method", "rand", "--samples", "40",
          "--seed", "2"],
        dir.path(),
    );
    assert_eq!(code(&rand), 1);
    assert_eq!(stdout_json(&rand)["method"], "randomized");
}

#[test]
fn find_cut_and_cut_transpose_agree_on_planted_instances() {
    let dir = tempfile::tempdir().unwrap();
    let gen = pmaplab(
        &["gen", "--kind", "planted-cut", "--n", "8", "--splits", "3", "--seed", "9", "--out",
          "c.json"],
        dir.path(),
    );
    assert_eq!(code(&gen), 0);

    let explicit = pmaplab(&["find-cut", "--input", "c.json"], dir.path());
    assert_eq!(code(&explicit), 0);
    assert_eq!(stdout_json(&explicit)["cut"], serde_json::json!([1, 2, 3]));

    let oracle = pmaplab(&["find-cut", "--input", "c.json", "--oracle-only", "--minimal"], dir.path());
    assert_eq!(code(&oracle), 0);
    let v = stdout_json(&oracle);
    assert!(!v["cut"].is_null());
    assert!(v["queries"].as_u64().unwrap() > 0);

    let tw = pmaplab(
        &["verify", "--a", "c.json", "--cut-transpose", "1,2,3", "--mode", "brute"],
        dir.path(),
    );
    assert_eq!(code(&tw), 0, "cut-transpose preserves principal minors");

    // dense matrices have no cut: verdict exit 1
    let dense = pmaplab(&["gen", "--kind", "dense", "--n", "5", "--seed", "7", "--out", "d.json"], dir.path());
    assert_eq!(code(&dense), 0);
    let none = pmaplab(&["find-cut", "--input", "d.json"], dir.path());
    assert_eq!(code(&none), 1);
    assert!(stdout_json(&none)["cut"].is_null());
}

#[test]
fn reconstruct_matches_the_source_minors() {
    let dir = tempfile::tempdir().unwrap();
    let gen = pmaplab(&["gen", "--kind", "dense", "--n", "5", "--seed", "7", "--out", "a.json"], dir.path());
    assert_eq!(code(&gen), 0);
    let rec = pmaplab(
        &["reconstruct", "--input", "a.json", "--out", "b.json", "--stats", "stats.json"],
        dir.path(),
    );
    assert_eq!(code(&rec), 0, "stderr: {}", String::from_utf8_lossy(&rec.stderr));
    let check = pmaplab(&["verify", "--a", "a.json", "--b", "b.json", "--mode", "brute"], dir.path());
    assert_eq!(code(&check), 0);
    let stats: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats.json")).unwrap())
            .unwrap();
    assert!(stats["queries"].as_u64().unwrap() > 0);
}

#[test]
fn errors_and_missing_seeds_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let no_seed = pmaplab(&["gen", "--kind", "dense", "--n", "4"], dir.path());
    assert_eq!(code(&no_seed), 2);
    assert!(String::from_utf8_lossy(&no_seed.stderr).contains("--seed"));

    let rand_no_seed = pmaplab(
        &["test-pme", "--pair-gen", "cycle", "--n", "5", "--method", "rand"],
        dir.path(),
    );
    assert_eq!(code(&rand_no_seed), 2);

    let missing = pmaplab(&["test-pme", "--a", "nope.json", "--b", "nope.json"], dir.path());
    assert_eq!(code(&missing), 2);

    let bad_threads = Command::new(env!("CARGO_BIN_EXE_pmaplab"))
        .args(["gen", "--kind", "dense", "--n", "4", "--seed", "1"])
        .current_dir(dir.path())
        .env("PMAPLAB_THREADS", "zebra")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn stdout_is_byte_stable_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["solve-pmap", "--gen", "dense", "--n", "7", "--seed", "42", "--check", "minors"];
    let base = pmaplab(&args, dir.path());
    assert_eq!(code(&base), 0);
    for threads in ["1", "2", "4"] {
        let run = Command::new(env!("CARGO_BIN_EXE_pmaplab"))
            .args(args)
            .current_dir(dir.path())
            .env("PMAPLAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(run.stdout, base.stdout, "PMAPLAB_THREADS={threads} changed stdout");
    }
}
