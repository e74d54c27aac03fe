use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use sawlab::manifest::MANIFEST;
use serde_json::Value;

fn sawlab(cache: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sawlab"))
        .args(args)
        .env("SAWLAB_CACHE", cache)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(cache: &Path, args: &[&str]) -> (i32, Value) {
    let (code, out, err) = sawlab(cache, args);
    let v = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{args:?}: {e}\n{out}\n{err}"));
    (code, v)
}

fn ids(v: &Value) -> Vec<String> {
    v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["check_id"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn count_z2_six() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["count", "--lattice", "z2", "--n", "6"]);
    assert_eq!(code, 0);
    let c: Vec<&str> = v["data"]["c"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert_eq!(c, ["1", "4", "12", "36", "100", "284", "780"]);
    assert_eq!(v["outcome"], "pass");
}

#[test]
fn strip_and_lace_examples_pass() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["hex", "--check", "strip", "--T", "1", "--L", "1"]);
    assert_eq!(code, 0);
    assert!(v["data"]["result"]["residual"].as_f64().unwrap() < 1e-10);
    let (code, v) = json(dir.path(), &["lace", "--lattice", "z2", "--m-max", "6", "--check-recursion"]);
    assert_eq!(code, 0);
    assert!(ids(&v).contains(&"lace.recursion".to_string()));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(sawlab(p, &["count", "--lattice", "q7", "--n", "3"]).0, 2);
    assert_eq!(sawlab(p, &["count", "--lattice", "z2"]).0, 2);
    assert_eq!(sawlab(p, &["count", "--lattice", "z2", "--n", "3", "--lambda", "0.5"]).0, 2);
    assert_eq!(sawlab(p, &["count", "--lattice", "z2", "--n", "3", "--threads", "0"]).0, 2);
    assert_eq!(sawlab(p, &["series", "--lattice", "z2", "--n-max", "3", "--check", "fourier"]).0, 2);
    assert_eq!(sawlab(p, &["grassmann", "--M", "8", "--check", "repsaw"]).0, 2);
    assert_eq!(sawlab(p, &["nonsense"]).0, 2);
    assert_eq!(sawlab(p, &["--help"]).0, 0);
    let (code, _, err) = sawlab(p, &["count", "--lattice", "z2", "--n", "12", "--node-budget", "10"]);
    assert_eq!(code, 3, "{err}");
    let (code, v) = json(p, &["hex", "--check", "recursion", "--l-max", "6,4"]);
    assert!(code == 0 || code == 3);
    assert_eq!(code == 3, v["outcome"] == "inconclusive");
    let (code, v) = json(p, &["hex", "--check", "vertex", "--T", "1", "--L", "2", "--sigma", "1/2"]);
    assert_eq!(code, 1);
    let r = &v["reports"][1];
    assert_eq!(r["outcome"], "fail");
    assert!(r["counterexample"].is_object());
}

#[test]
fn identical_runs_are_byte_identical_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bridge", "--lattice", "z2", "--n", "8", "--mu", "2.63815853"];
    let a = sawlab(dir.path(), &args).1;
    let b = sawlab(dir.path(), &args).1;
    let mut fresh = args.to_vec();
    fresh.push("--no-cache");
    let c = sawlab(dir.path(), &fresh).1;
    assert_eq!(a, b);
    assert_eq!(a, c);
    let mut timed = args.to_vec();
    timed.push("--timing");
    let (_, v) = json(dir.path(), &timed);
    assert_eq!(v["timing"]["cached"], true);
    let other = tempfile::tempdir().unwrap();
    let (_, v) = json(other.path(), &timed);
    assert_eq!(v["timing"]["cached"], false);
    let threads = sawlab(other.path(), &["bridge", "--lattice", "z2", "--n", "8", "--mu", "2.63815853", "--threads", "2", "--no-cache"]).1;
    assert_eq!(a, threads);
}

#[test]
fn cache_gc_contract() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let (code, v) = json(p, &["cache-gc", "--max-bytes", "0"]);
    assert_eq!(code, 0);
    assert_eq!(v["data"]["summary"]["entries_before"], 0);
    assert_eq!(v["data"]["summary"]["evicted"], 0);
    for n in 1..=5 {
        sawlab(p, &["count", "--lattice", "z2", "--n", &n.to_string()]);
    }
    let records: Vec<_> = std::fs::read_dir(p)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|x| x.extension().is_some_and(|e| e == "json"))
        .collect();
    assert_eq!(records.len(), 5);
    let locked = &records[0];
    std::fs::write(locked.with_extension("lock"), b"").unwrap();
    let total: u64 = records.iter().map(|r| std::fs::metadata(r).unwrap().len()).sum();
    let max = total / 2;
    let (_, v) = json(p, &["cache-gc", "--max-bytes", &max.to_string()]);
    let s = &v["data"]["summary"];
    assert!(s["bytes_after"].as_u64().unwrap() <= max);
    assert!(locked.exists());
    let (_, v) = json(p, &["cache-gc", "--max-bytes", "0"]);
    assert_eq!(v["data"]["summary"]["entries_after"], 1);
    assert!(locked.exists());
    let missing = p.join("missing");
    let out = Command::new(env!("CARGO_BIN_EXE_sawlab"))
        .args(["cache-gc", "--max-bytes", "0", "--cache-dir"])
        .arg(&missing)
        .env_remove("SAWLAB_CACHE")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn env_var_overrides_flag() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let flag = flag_dir.path().to_str().unwrap();
    sawlab(env_dir.path(), &["count", "--lattice", "z2", "--n", "2", "--cache-dir", flag]);
    assert_eq!(std::fs::read_dir(env_dir.path()).unwrap().count(), 1);
    assert_eq!(std::fs::read_dir(flag_dir.path()).unwrap().count(), 0);
}

#[test]
fn csv_and_human_formats() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = sawlab(dir.path(), &["count", "--lattice", "z3", "--n", "3", "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines, ["n,c_n", "0,1", "1,6", "2,30", "3,150"]);
    let (_, out, _) = sawlab(
        dir.path(),
        &["series", "--lattice", "z2", "--n-max", "4", "--format", "csv"],
    );
    assert!(out.starts_with("n,chi_n,bubble_n\n0,1,1\n1,4,"), "{out}");
    let (_, out, _) = sawlab(dir.path(), &["count", "--lattice", "z2", "--n", "3", "--format", "human"]);
    assert!(out.contains("count.step_bound: PASS"));
}

#[test]
fn grassmann_matrix_import() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("c.json");
    std::fs::write(&m, "[[[1.0, 0.0], [0.25, 0.125]], [[-0.125, 0.0], [1.0, 0.5]]]").unwrap();
    let ms = m.to_str().unwrap();
    for check in ["norm", "wick", "ibp", "repsaw", "loops", "tau"] {
        let (code, v) = json(dir.path(), &["grassmann", "--matrix", ms, "--check", check]);
        assert_eq!(code, 0, "{check}: {v}");
        let (code, _) = json(dir.path(), &["grassmann", "--matrix", ms, "--check", check, "--exact"]);
        assert_eq!(code, 0, "{check} exact");
    }
    let (_, v) = json(dir.path(), &["grassmann", "--matrix", ms, "--check", "repsaw", "--exact"]);
    // M = 2: the only walk is the direct step, so both sides are C_01.
    assert_eq!(v["reports"][0]["witnesses"][0]["lhs"], "1/4 + 1/8i");
    std::fs::write(&m, "[[[-1.0, 0.0]]]").unwrap();
    assert_eq!(sawlab(dir.path(), &["grassmann", "--matrix", ms, "--check", "norm"]).0, 2);
    std::fs::write(&m, "[[1, 2]]").unwrap();
    assert_eq!(sawlab(dir.path(), &["grassmann", "--matrix", ms, "--check", "norm"]).0, 2);
}

#[test]
fn manifest_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let runs: Vec<Vec<&str>> = vec![
        vec!["count", "--lattice", "z2", "--n", "5"],
        vec!["bridge", "--lattice", "z2", "--n", "6", "--mu", "2.638"],
        vec!["polygon", "--lattice", "z2", "--n", "3"],
        vec!["hw", "--lattice", "z2", "--n", "6"],
        vec!["lace", "--lattice", "z2", "--m-max", "6", "--check-recursion", "--kj-b-max", "4"],
        vec!["series", "--lattice", "z2", "--n-max", "6", "--check", "ode"],
        vec!["series", "--lattice", "z2", "--n-max", "6", "--check", "chi-bound"],
        vec!["series", "--lattice", "z1", "--n-max", "12", "--check", "fourier", "--z", "1/3", "--k", "1/4"],
        vec!["series", "--lattice", "z2", "--n-max", "5", "--check", "simon-lieb"],
        vec!["series", "--lattice", "z2", "--n-max", "6", "--check", "diagrammatic", "--z", "1/8"],
        vec!["hex", "--check", "vertex", "--T", "1", "--L", "1"],
        vec!["hex", "--check", "strip", "--T", "1", "--L", "2"],
        vec!["hex", "--check", "recursion", "--l-max", "5,3"],
        vec!["grassmann", "--check", "norm"],
        vec!["grassmann", "--check", "wick"],
        vec!["grassmann", "--check", "ibp"],
        vec!["grassmann", "--check", "repsaw"],
        vec!["grassmann", "--check", "loops"],
        vec!["grassmann", "--check", "tau"],
        vec!["srw", "--d", "3", "--task", "return"],
    ];
    let mut seen = BTreeSet::new();
    for args in &runs {
        let (code, v) = json(p, args);
        assert!(code != 2, "{args:?}");
        for r in v["reports"].as_array().unwrap() {
            let id = r["check_id"].as_str().unwrap();
            let want = MANIFEST.iter().find(|(i, _)| *i == id).map(|(_, r)| *r);
            assert_eq!(r["reference"].as_str(), want, "{id}");
            seen.insert(id.to_string());
        }
    }
    let all: BTreeSet<String> = MANIFEST.iter().map(|(i, _)| i.to_string()).collect();
    assert_eq!(seen, all);
    assert_eq!(MANIFEST.len(), all.len(), "duplicate ids");
}

#[test]
fn one_dimensional_fourier_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    for (z, k) in [("1/3", "1/4"), ("1/2", "0"), ("2/5", "1")] {
        for bits in ["53", "106"] {
            let (code, v) = json(
                dir.path(),
                &["series", "--lattice", "z1", "--n-max", "30", "--check", "fourier", "--z", z, "--k", k, "--precision-bits", bits],
            );
            assert_eq!(code, 0, "{z} {k} {bits}: {v}");
        }
    }
}

#[test]
fn srw_classifications() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["srw", "--d", "2", "--task", "return"]);
    assert_eq!(code, 0);
    assert_eq!(v["data"]["value"], "divergent");
    let (_, v) = json(dir.path(), &["srw", "--d", "4", "--task", "intersection"]);
    assert_eq!(v["data"]["value"], "divergent");
    let (code, v) = json(dir.path(), &["srw", "--d", "3", "--task", "return"]);
    assert_eq!(code, 0);
    let x: f64 = v["data"]["value"].as_str().unwrap().parse().unwrap();
    assert!((x - 1.5163860591519769).abs() < 1e-9);
    assert!(ids(&v).contains(&"srw.cross_check".to_string()));
}
