//! End-to-end runs of the `mlcache` binary: exit codes, output formats and
//! round trips of the file formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mlcache::io::{parse_popularity, parse_spec, popularity_to_csv, spec_to_json};
use proptest::prelude::*;
use tempfile::TempDir;

const FIXTURE: &str = r#"{"setup": "multi-user", "caches": 4,
  "levels": [{"files": 64, "users_per_cache": 1, "degree": 1},
             {"files": 16, "users_per_cache": 4, "degree": 1}]}"#;

const K20: &str = r#"{"setup": "multi-user", "caches": 20, "levels": [
  {"files": 200, "users_per_cache": 10, "degree": 1},
  {"files": 20000, "users_per_cache": 5, "degree": 1},
  {"files": 800000, "users_per_cache": 1, "degree": 1}]}"#;

const SINGLE: &str = r#"{"setup": "single-user", "caches": 45,
  "levels": [{"files": 500, "users": 30}, {"files": 1000, "users": 15}]}"#;

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlcache")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["rate"]).status.code(), Some(2));
    assert_eq!(run(&["rate", "--spec", "/nonexistent/spec.json", "--memory", "1"]).status.code(), Some(2));
    let bad_json = write(&dir, "bad.json", "{\"setup\": \"multi-user\", \"caches\": 4");
    assert_eq!(run(&["validate", "--spec", p(&bad_json)]).status.code(), Some(2));
    let unknown = write(&dir, "unknown.json", r#"{"setup": "multi-user", "caches": 4, "levels": [], "x": 1}"#);
    assert_eq!(run(&["validate", "--spec", p(&unknown)]).status.code(), Some(2));
    let wide = write(
        &dir,
        "wide.json",
        r#"{"setup": "multi-user", "caches": 4, "levels": [{"files": 8, "users_per_cache": 1, "degree": 5}]}"#,
    );
    let o = run(&["validate", "--spec", p(&wide)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degree"));
    let odd = write(
        &dir,
        "odd.json",
        r#"{"setup": "multi-user", "caches": 4, "levels": [{"files": 8, "users_per_cache": 1, "degree": 3}]}"#,
    );
    assert_eq!(run(&["simulate", "--spec", p(&odd), "--memory", "1"]).status.code(), Some(3));
    let pop = write(&dir, "pop.csv", "rank,weight\n1,0.5\n2,1\n");
    let args = ["discretize", "--popularity", p(&pop), "--levels", "1", "--caches", "2", "--memory-frac", "0.1", "--users", "4"];
    assert_eq!(run(&args).status.code(), Some(2));
    assert_eq!(run(&["small-example", "--n2", "3", "--memory", "1"]).status.code(), Some(3));
}

#[test]
fn small_example_reports_the_optimum_and_its_scheme() {
    let o = run(&["small-example", "--n2", "4", "--memory", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["M", "R_opt", "corner", "requests", "max_broadcast_bits", "scheme_rate"]);
    assert_eq!(rows[0][1], "1.5");
    assert_eq!(rows[0][3], "16");
    assert_eq!(rows[0][4], "1536");
    assert_eq!(rows[0][5], "1.5");
}

#[test]
fn rate_and_table_on_the_fixture() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "fixture.json", FIXTURE);
    let o = run(&["rate", "--spec", p(&spec), "--memory", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["level", "class", "memory", "rate", "upper_bound"]);
    // levels keep their labels from the file: level 2 is the popular one
    let level2 = rows.iter().find(|r| r[0] == "2").unwrap();
    assert_eq!(level2[2], "14");
    assert_eq!(level2[3], "0.571429");
    let total = rows.iter().find(|r| r[0] == "total").unwrap();
    assert_eq!(total[3], "4.44643");

    let o = run(&["table", "--spec", p(&spec)]);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["t", "x_t", "kind", "level", "Y_t", "H", "I", "J"]);
    let ys: Vec<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    assert_eq!(ys, ["0", "12", "20", "80"]);
}

#[test]
fn gap_on_the_three_level_example() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "k20.json", K20);
    let o = run(&["--quiet", "gap", "--spec", p(&spec), "--m-grid", "4000:820000:40000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stderr.is_empty());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["M", "R_ach", "R_lb", "ratio", "lb_origin"]);
    let worst = rows.iter().map(|r| r[3].parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!((5.0..=8.5).contains(&worst), "max ratio {worst}");
    let noisy = run(&["gap", "--spec", p(&spec), "--m-grid", "4000:820000:40000"]);
    assert!(String::from_utf8_lossy(&noisy.stderr).contains("max ratio"));
}

#[test]
fn formats_and_output_files() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "fixture.json", FIXTURE);
    let out = dir.path().join("curve.json");
    let o = run(&["curve", "--spec", p(&spec), "--m-grid", "0:80:20", "--format", "json", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0]["M"], 0.0);
    assert_eq!(rows[4]["M"], 80.0);

    let csv_out = run(&["curve", "--spec", p(&spec), "--m-grid", "0:80:20"]);
    let (header, rows) = csv_rows(&stdout(&csv_out));
    assert_eq!(header, ["M", "R_ms", "R_lfu", "R_coded_lfu", "R_uniform", "R_su", "R_prior"]);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][1], "20");
    assert_eq!(rows[4][1], "0");

    let single = write(&dir, "single.json", SINGLE);
    let o = run(&["rate", "--spec", p(&single), "--memory", "100"]);
    let (_, rows) = csv_rows(&stdout(&o));
    assert!(rows.iter().any(|r| r[1] == "14"), "{rows:?}");
    let o = run(&["bound", "--spec", p(&single), "--memory", "0.1"]);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header[1], "R_lb");
    assert_eq!(rows[0][1], "40.5");
}

#[test]
fn simulation_is_deterministic_and_discretize_emits_a_valid_spec() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "fixture.json", FIXTURE);
    let args = ["simulate", "--spec", p(&spec), "--memory", "16", "--file-bits", "1024", "--seed", "3", "--trials", "2"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["decode_failures"], 0);

    let weights: Vec<f64> = (1..=300).map(|r| (r as f64).powf(-0.8)).collect();
    let pop = write(&dir, "pop.csv", &popularity_to_csv(&weights));
    let o = run(&[
        "discretize", "--popularity", p(&pop), "--levels", "2", "--caches", "5", "--memory-frac", "0.2", "--users", "100",
        "--lattice", "30",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let induced = serde_json::to_string(&v["spec"]).unwrap();
    let parsed = parse_spec(&induced).unwrap();
    assert_eq!(parsed.level_count(), 2);
    let induced_path = write(&dir, "induced.json", &induced);
    let o = run(&[
        "simulate", "--spec", p(&induced_path), "--memory", "60", "--file-bits", "512", "--stochastic", "--popularity",
        p(&pop), "--users", "100",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(&["access-opt", "--spec", p(&spec), "--memory", "16", "--d-max", "2", "--d-avg", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["degrees"].as_array().unwrap().len(), 2);
}

fn spec_doc() -> impl Strategy<Value = String> {
    (1u64..=20).prop_flat_map(|k| {
        prop::collection::vec((1u64..100_000, 1u64..50, 1..=k), 1..=5).prop_map(move |ls| {
            let levels: Vec<String> = ls
                .iter()
                .map(|(n, u, d)| format!(r#"{{"files": {n}, "users_per_cache": {u}, "degree": {d}}}"#))
                .collect();
            format!(r#"{{"setup": "multi-user", "caches": {k}, "levels": [{}]}}"#, levels.join(", "))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn spec_documents_round_trip(text in spec_doc()) {
        let spec = parse_spec(&text).unwrap();
        let again = parse_spec(&spec_to_json(&spec)).unwrap();
        prop_assert_eq!(spec, again);
    }

    #[test]
    fn popularity_round_trips(mut w in prop::collection::vec(1e-9f64..1e3, 1..200)) {
        w.sort_by(|a, b| b.partial_cmp(a).unwrap());
        prop_assert_eq!(parse_popularity(&popularity_to_csv(&w)).unwrap(), w);
    }
}
