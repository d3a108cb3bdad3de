use std::path::Path;
use std::process::{Command, Output};

fn topocause(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topocause")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn config_problems_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "dataset = \"orbit\"\nreplicas = 3\n").unwrap();
    assert_eq!(code(&topocause(&["--config", path(&bad), "experiment"])), 2);
    std::fs::write(&bad, "n = 3\n").unwrap();
    assert_eq!(code(&topocause(&["--config", path(&bad), "experiment"])), 2);
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&topocause(&["--config", path(&missing), "test"])), 2);
    assert_eq!(code(&topocause(&["frobnicate"])), 2);
}

#[test]
fn runtime_problems_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.csv");
    std::fs::write(&cloud, "x,y\n0.1,0.2\n0.5,nope\n").unwrap();
    let out = dir.path().join("out");
    let result = topocause(&["--out", path(&out), "persist", "--kind", "cloud", "--input", path(&cloud)]);
    assert_eq!(code(&result), 1, "{}", String::from_utf8_lossy(&result.stderr));
    let absent = dir.path().join("absent.csv");
    assert_eq!(code(&topocause(&["--out", path(&out), "persist", "--kind", "cloud", "--input", path(&absent)])), 1);
}

#[test]
fn generated_data_feeds_estimate_and_test() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let args = ["--seed", "3", "--out"];
    let gen = topocause(&[&args[..], &[path(&data), "gen-data", "--dataset", "synth-graph", "--n", "80"]].concat());
    assert_eq!(code(&gen), 0, "{}", String::from_utf8_lossy(&gen.stderr));
    for f in ["covariates.csv", "treatment.csv", "manifest.json"] {
        assert!(data.join(f).exists(), "{f} missing");
    }
    let est_dir = dir.path().join("est");
    let est = topocause(&[
        &args[..],
        &[path(&est_dir), "estimate", "--dataset", "synth-graph", "--n", "80", "--input", path(&data)],
    ]
    .concat());
    assert_eq!(code(&est), 0, "{}", String::from_utf8_lossy(&est.stderr));
    let written: serde_json::Value =
        serde_json::from_slice(&std::fs::read(est_dir.join("estimate_aipw_h1.json")).unwrap()).unwrap();
    assert_eq!(written["curve"].as_array().unwrap().len(), written["grid"]["n_points"].as_u64().unwrap() as usize);
    let test_dir = dir.path().join("test");
    let test = topocause(&[
        &args[..],
        &[path(&test_dir), "test", "--dataset", "synth-graph", "--n", "80", "--input", path(&data)],
    ]
    .concat());
    assert_eq!(code(&test), 0, "{}", String::from_utf8_lossy(&test.stderr));
    assert!(test_dir.join("test.json").exists());
}
