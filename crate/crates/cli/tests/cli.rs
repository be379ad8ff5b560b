use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use evoipd_cli::manifest::{RunManifest, RUN_MANIFEST};
use evoipd_cli::{run, EXIT_CONFIG, EXIT_OK, EXIT_STAGE};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn banks() -> String {
    repo().join("banks").display().to_string()
}

fn evoipd(args: &[&str]) -> i32 {
    let mut full = vec!["evoipd", "--quiet"];
    full.extend_from_slice(args);
    run(full)
}

fn toy_config(dir: &Path) -> PathBuf {
    let path = dir.join("toy.toml");
    let text = format!(
        "banks = {banks:?}\nseed = 5\nrounds = 50\nnoise = [0.0, 0.1]\n\n[tournament]\nrepetitions = 2\n\n\
         [moran]\nruns = 3\npopulation = 6\ninitial = [\"2:2:2\", \"4:1:1\"]\n\n[beaufils]\nrepetitions = 4\n",
        banks = banks()
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(String::from).collect()
}

fn schemas() -> BTreeMap<String, Vec<String>> {
    serde_json::from_str(&std::fs::read_to_string(repo().join("schemas/csv_schemas.json")).unwrap()).unwrap()
}

#[test]
fn run_all_writes_every_table() {
    let tmp = tempfile::tempdir().unwrap();
    let config = toy_config(tmp.path());
    let out = tmp.path().join("out");
    let args = ["run-all", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(evoipd(&args), EXIT_OK);

    let schemas = schemas();
    for file in ["head_to_head.csv", "cooperation.csv", "equilibria.csv", "beaufils_scores.csv"] {
        assert_eq!(header(&out.join(file)), schemas[file], "{file}");
    }
    let traj = out.join("trajectories/reference/default/noise0.1/4-1-1/trajectory_0.csv");
    assert_eq!(header(&traj), schemas["trajectory_<run>.csv"]);

    // 9 cells per noise level; 14 participants x 4 repetitions.
    let rows = |f: &str| csv::Reader::from_path(out.join(f)).unwrap().records().count();
    assert_eq!(rows("head_to_head.csv"), 18);
    assert_eq!(rows("equilibria.csv"), 2 * 2 * 3);
    assert_eq!(rows("beaufils_scores.csv"), 14 * 4);

    let m = RunManifest::read(&out.join(RUN_MANIFEST)).unwrap();
    assert!(m.complete);
    assert_eq!(m.stages.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(), ["validate", "tournament", "moran", "beaufils"]);
    assert!(m.audits.iter().all(|a| a.faithful));
    assert!(m.files.contains_key("head_to_head.csv"));

    // Replaying the manifest reproduces every output byte for byte.
    let again = tmp.path().join("again");
    let manifest = out.join(RUN_MANIFEST);
    assert_eq!(evoipd(&["run-all", "--config", manifest.to_str().unwrap(), "--out", again.to_str().unwrap()]), EXIT_OK);
    let m2 = RunManifest::read(&again.join(RUN_MANIFEST)).unwrap();
    assert_eq!(m.files, m2.files);
    assert_eq!(m.config_hash, m2.config_hash);

    assert_eq!(evoipd(&["report", "--out", out.to_str().unwrap()]), EXIT_OK);
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let config = toy_config(tmp.path());
    let mut hashes = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(threads);
        let args = ["--threads", threads, "tournament", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
        assert_eq!(evoipd(&args), EXIT_OK);
        hashes.push(RunManifest::read(&out.join(RUN_MANIFEST)).unwrap().files);
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn custom_payoffs_are_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let config = toy_config(tmp.path());
    let out = tmp.path().join("out");
    let args = ["tournament", "--config", config.to_str().unwrap(), "--payoffs", "4,7,0,2", "--out", out.to_str().unwrap()];
    assert_eq!(evoipd(&args), EXIT_OK);
    let m = RunManifest::read(&out.join(RUN_MANIFEST)).unwrap();
    assert_eq!(m.config.payoffs, evoipd_core::game::PayoffMatrix::new(4, 7, 0, 2).unwrap());
}

#[test]
fn missing_banks_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let out = tmp.path().join("out");
    let args = ["tournament", "--banks", missing.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(evoipd(&args), EXIT_CONFIG);
}

#[test]
fn bad_arguments_are_config_errors() {
    assert_eq!(evoipd(&["tournament", "--payoffs", "3,3,3,3", "--banks", &banks()]), EXIT_CONFIG);
    assert_eq!(evoipd(&["tournament", "--payoffs", "3,5,0", "--banks", &banks()]), EXIT_CONFIG);
    assert_eq!(evoipd(&["moran", "--initial", "1:2", "--banks", &banks()]), EXIT_CONFIG);
    assert_eq!(evoipd(&["frobnicate"]), EXIT_CONFIG);
}

#[test]
fn validate_reports_bad_programs() {
    assert_eq!(evoipd(&["validate", &banks()]), EXIT_OK);
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.ipd");
    std::fs::write(&bad, "strategy \"x\" attitude=neutral {\n  first: C\n  rules:\n    if ghost > 1 -> D\n  default: C\n}\n").unwrap();
    assert_eq!(evoipd(&["validate", bad.to_str().unwrap()]), EXIT_STAGE);
    assert_eq!(evoipd(&["validate", tmp.path().join("absent.ipd").to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn generate_offline_from_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    let fixtures = repo().join("crates/core/tests/fixtures/ingest");
    let args = [
        "generate", "--model", "fixture-model", "--count", "2", "--max-retries", "0", "--fixtures",
        fixtures.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(),
    ];
    assert_eq!(evoipd(&args), EXIT_OK);
    let set = tmp.path().join("fixture-model/default");
    assert_eq!(evoipd(&["validate", set.to_str().unwrap()]), EXIT_OK);

    // A request with no recording fails the stage rather than reaching out.
    let args = [
        "generate", "--model", "fixture-model", "--count", "3", "--fixtures", fixtures.to_str().unwrap(), "--out",
        tmp.path().to_str().unwrap(),
    ];
    assert_eq!(evoipd(&args), EXIT_STAGE);
}
