use std::fs;

use fdl_core::bench::{run_bench, strip_timing_columns, BenchMatrix, CSV_HEADER};

fn matrix(extra: &str) -> String {
    format!(
        r#"{{
  "datasets": [
    {{"name": "tree", "source": {{"generator": "tree", "branching": 2, "depth": 3}}}},
    {{"name": "grid", "source": {{"generator": "grid_rnd", "width": 4, "height": 4, "keep_fraction": 0.8, "seed": 3}}}}
  ],
  "algorithms": [
    {{"name": "fr"}},
    {{"name": "kk-ms-ds", "params": {{"gamma": 0.8}}}}
  ],
  "budget": "50ms",
  "snapshot_marks": [10, "20ms"],
  "seeds": [1],
  "virtual_clock": "steps:1"{extra}
}}"#
    )
}

#[test]
fn cardinality_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let m = BenchMatrix::from_json(&matrix("")).unwrap();
    let out = run_bench(&m, dir.path(), dir.path(), 2).unwrap();
    assert_eq!(out.failed(), 0);
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], CSV_HEADER.join(","));
    assert!(lines[1].starts_with("tree,fr,1,50,"));
    assert!(lines[4].starts_with("grid,kk-ms-ds,1,50,"));
    let pivot = fs::read_to_string(dir.path().join("pivot_crossings.csv")).unwrap();
    assert_eq!(pivot.lines().next().unwrap(), "dataset,fr,kk-ms-ds");
    assert_eq!(pivot.lines().count(), 3);
    for stem in ["tree__fr__seed1", "grid__kk-ms-ds__seed1"] {
        let record: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("runs/{stem}.json"))).unwrap()).unwrap();
        assert_eq!(record["snapshots"].as_array().unwrap().len(), 3);
        assert!(dir.path().join(format!("runs/{stem}.svg")).exists());
    }
}

#[test]
fn repeated_runs_match() {
    let m = BenchMatrix::from_json(&matrix("")).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_bench(&m, a.path(), a.path(), 1).unwrap();
    run_bench(&m, b.path(), b.path(), 4).unwrap();
    let read = |d: &tempfile::TempDir, f: &str| fs::read_to_string(d.path().join(f)).unwrap();
        assert_eq!(
        strip_timing_columns(&read(&a, "bench.csv")).unwrap(),
        strip_timing_columns(&read(&b, "bench.csv")).unwrap()
    );
    assert_eq!(read(&a, "runs/grid__fr__seed1.svg"), read(&b, "runs/grid__fr__seed1.svg"));
}

#[test]
fn failed_cell_is_recorded() {
    let text = matrix("").replace(r#"{"name": "fr"}"#, r#"{"name": "fr-huge", "algorithm": "fr", "params": {"k": 1e200}}"#);
    let m = BenchMatrix::from_json(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_bench(&m, dir.path(), dir.path(), 1).unwrap();
    assert_eq!(out.failed(), 2);
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(1).unwrap().contains("FAILED"));
    let pivot = fs::read_to_string(dir.path().join("pivot_stddev.csv")).unwrap();
    assert!(pivot.lines().nth(1).unwrap().starts_with("tree,FAILED,"));
}

#[test]
fn invalid_matrices_rejected() {
    for bad in [
        matrix("").replace(r#""seeds": [1]"#, r#""seeds": []"#),
        matrix("").replace(r#"{"name": "fr"}"#, r#"{"name": "kk-ms-ds"}"#),
        matrix("").replace(r#"{"name": "fr"}"#, r#"{"name": "spring"}"#),
        matrix("").replace(r#""gamma": 0.8"#, r#""gama": 0.8"#),
        matrix(r#", "virtual_clock2": 1"#),
        matrix("").replace(r#""budget": "50ms""#, r#""budget": "15ms""#),
    ] {
        assert!(BenchMatrix::from_json(&bad).is_err(), "{bad}");
    }
}

#[test]
fn file_datasets_resolve_against_base_dir() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("square.txt"), "a b\nb c\nc d\nd a\n").unwrap();
    let text = matrix("").replace(
        r#"{"generator": "tree", "branching": 2, "depth": 3}"#,
        r#""square.txt""#,
    );
    let m = BenchMatrix::from_json(&text).unwrap();
    let out_dir = dir.path().join("out");
    let out = run_bench(&m, dir.path(), &out_dir, 1).unwrap();
    assert_eq!(out.failed(), 0);
    assert!(out_dir.join("runs/tree__fr__seed1.svg").exists());
}
