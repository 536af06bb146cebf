use std::fs;
use std::process::Command;

use serde_json::Value;

fn chiralis(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_chiralis"))
        .args(args)
        .env_remove("CHIRALIS_CACHE_DIR")
        .env("RUST_LOG", "error")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn trivial_pairing_certifies_with_zero_dimensions() {
    let (code, out) = chiralis(&["pairing", "--algebra", "trivial", "--window=-3,3"]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["certificate"], true);
    assert_eq!(r["results"]["ext"]["dimExt1"], 0);
    assert_eq!(r["results"]["homology"]["dimH1"], 0);
    assert_eq!(r["results"]["homology"]["dimH0"], 1);
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.toml");
    fs::write(
        &cfg,
        "algebra = \"heisenberg\"\nlambdaA = \"0\"\nlambdaC = \"1\"\n[caps]\nD = 2\nN = 2\nwindowLo = -4\nwindowHi = 4\nQ = 2\n",
    )
    .unwrap();
    let out_path = dir.path().join("report.json");
    let (code, stdout) =
        chiralis(&["homology", "--config", cfg.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(r["config"]["lambdaC"], "1");
    assert_eq!(r["results"]["homology"]["dimH0"], 0);
    assert_eq!(r["results"]["d1d2"]["failures"].as_array().unwrap().len(), 0);

    let (code, out) = chiralis(&["homology", "--config", cfg.to_str().unwrap(), "--lambda-c", "0"]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["results"]["homology"]["dimH0"], 1);
}

#[test]
fn config_errors_exit_with_three() {
    assert_eq!(chiralis(&["homology", "--algebra", "lattice"]).0, 3);
    assert_eq!(chiralis(&["homology", "--cap-n", "0"]).0, 3);
    assert_eq!(chiralis(&["homology", "--window=5,-5"]).0, 3);
    assert_eq!(chiralis(&["homology", "--lambda-a", "1/0"]).0, 3);
    assert_eq!(chiralis(&["frobnicate"]).0, 3);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "algebra = \"heisenberg\"\ncolour = 3\n").unwrap();
    assert_eq!(chiralis(&["homology", "--config", cfg.to_str().unwrap()]).0, 3);
}

#[test]
fn reports_are_deterministic_and_cache_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["ext", "--cap-n", "2", "--window=-4,4", "--lambda-a", "1/2", "--lambda-c", "1/2"];
    let (c1, cold) = chiralis(&[&args[..], &["--cache-dir", cache.to_str().unwrap(), "--jobs", "1"]].concat());
    assert!(fs::read_dir(&cache).unwrap().count() >= 2);
    let (c2, warm) = chiralis(&[&args[..], &["--cache-dir", cache.to_str().unwrap(), "--jobs", "3"]].concat());
    let (c3, plain) = chiralis(&args);
    assert_eq!((c1, c2, c3), (0, 0, 0));
    assert_eq!(cold, warm);
    assert_eq!(cold, plain);
    let r: Value = serde_json::from_str(&cold).unwrap();
    assert_eq!(r["results"]["ext"]["dimExt1"], 1);
}

#[test]
fn axioms_pass_on_small_caps() {
    let (code, out) = chiralis(&["axioms", "--cap-n", "2", "--lambda-c", "-2"]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["certificate"], true);
    assert_eq!(r["results"]["axioms"]["contragredient"]["duality"]["failures"].as_array().unwrap().len(), 0);
}
