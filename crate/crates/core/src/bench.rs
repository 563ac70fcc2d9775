//! Benchmark matrices: every (dataset × algorithm × seed) cell run under the
//! same budget, summarised as CSV tables.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algorithms::{run_algorithm, AlgorithmKind};
use crate::engine::{parse_duration, Bounds, ClockMode, InitialLayout, Layout, RunConfig, RunRecord};
use crate::error::GraphError;
use crate::graph::{generate_grid_random, generate_sierpinski, generate_tree, load_edge_list, load_gml, Graph};
use crate::params::ParamMap;
use crate::render::{render_svg, RenderStyle};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid matrix: {0}")]
    Matrix(String),
    #[error("dataset '{name}': {source}")]
    Dataset { name: String, source: GraphError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A duration given as milliseconds or as text such as `"10s"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DurationSpec {
    Millis(f64),
    Text(String),
}

impl DurationSpec {
    pub fn resolve(&self) -> Result<Duration, BenchError> {
        match self {
            DurationSpec::Millis(ms) if ms.is_finite() && *ms >= 0.0 => Ok(Duration::from_secs_f64(ms / 1000.0)),
            DurationSpec::Text(t) => parse_duration(t).ok_or_else(|| BenchError::Matrix(format!("bad duration {t:?}"))),
            DurationSpec::Millis(ms) => Err(BenchError::Matrix(format!("bad duration {ms}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Tree {
        branching: usize,
        depth: u32,
    },
    Sierpinski {
        order: u32,
    },
    GridRnd {
        width: usize,
        height: usize,
        keep_fraction: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<Graph, GraphError> {
        match *self {
            GeneratorSpec::Tree { branching, depth } => generate_tree(branching, depth),
            GeneratorSpec::Sierpinski { order } => generate_sierpinski(order),
            GeneratorSpec::GridRnd {
                width,
                height,
                keep_fraction,
                seed,
            } => generate_grid_random(width, height, keep_fraction, seed),
        }
    }
}

/// Graph file path (relative to the matrix file) or inline generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Path(PathBuf),
    Generator(GeneratorSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub source: DatasetSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    /// Column label; also the algorithm when `algorithm` is absent.
    pub name: String,
    #[serde(default)]
    pub algorithm: Option<String>,
    #[serde(default)]
    pub params: ParamMap,
}

impl AlgorithmSpec {
    pub fn kind(&self) -> Result<AlgorithmKind, BenchError> {
        let key = self.algorithm.as_deref().unwrap_or(&self.name);
        key.parse().map_err(|e| BenchError::Matrix(format!("{e}")))
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchMatrix {
    pub datasets: Vec<DatasetSpec>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub budget: DurationSpec,
    #[serde(default)]
    pub snapshot_marks: Vec<DurationSpec>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub max_iterations: Option<u64>,
    /// `"steps:<ms>"` to advance time by a fixed amount per step.
    #[serde(default)]
    pub virtual_clock: Option<String>,
    #[serde(default = "default_true")]
    pub converge: bool,
    #[serde(default)]
    pub init: InitialLayout,
    #[serde(default)]
    pub bounds: Option<Bounds>,
}

impl BenchMatrix {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let m: Self = serde_json::from_str(text).map_err(|e| BenchError::Matrix(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Matrix(m));
        if self.datasets.is_empty() {
            return bad("no datasets".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        let mut names = BTreeSet::new();
        for d in &self.datasets {
            if !names.insert(d.name.as_str()) {
                return bad(format!("duplicate dataset name '{}'", d.name));
            }
        }
        names.clear();
        for a in &self.algorithms {
            if !names.insert(a.name.as_str()) {
                return bad(format!("duplicate algorithm name '{}'", a.name));
            }
            a.kind()?
                .validate_params(&a.params)
                .map_err(|e| BenchError::Matrix(format!("algorithm '{}': {e}", a.name)))?;
        }
        let seeds: BTreeSet<_> = self.seeds.iter().collect();
        if seeds.len() != self.seeds.len() {
            return bad("duplicate seeds".into());
        }
        if let Some(v) = &self.virtual_clock {
            if ClockMode::parse_virtual(v).is_none() {
                return bad(format!("virtual_clock must look like steps:<ms>, got {v:?}"));
            }
        }
        self.run_config(0, ParamMap::new())?
            .validate()
            .map_err(|e| BenchError::Matrix(e.to_string()))?;
        Ok(())
    }

    fn run_config(&self, seed: u64, params: ParamMap) -> Result<RunConfig, BenchError> {
        let clock = match &self.virtual_clock {
            Some(v) => ClockMode::parse_virtual(v).ok_or_else(|| BenchError::Matrix(format!("bad virtual_clock {v:?}")))?,
            None => ClockMode::Monotonic,
        };
        Ok(RunConfig {
            budget: self.budget.resolve()?,
            snapshot_marks: self.snapshot_marks.iter().map(DurationSpec::resolve).collect::<Result<_, _>>()?,
            seed,
            bounds: self.bounds.unwrap_or_default(),
            algorithm_params: params,
            max_iterations: self.max_iterations,
            allow_convergence: self.converge,
            clock,
            initial_layout: self.init,
        })
    }
}

/// Reads an edge list, or GML when the extension is `.gml`.
pub fn load_graph_file(path: &Path) -> Result<Graph, BenchError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let name = path.display().to_string();
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gml")) {
        load_gml(&text)
    } else {
        load_edge_list(&text)
    };
    parsed.map_err(|source| BenchError::Dataset { name, source })
}

fn load_dataset(spec: &DatasetSpec, base_dir: &Path) -> Result<Graph, BenchError> {
    match &spec.source {
        DatasetSource::Path(p) => load_graph_file(&base_dir.join(p)),
        DatasetSource::Generator(g) => g.generate().map_err(|source| BenchError::Dataset {
            name: spec.name.clone(),
            source,
        }),
    }
}

/// One CSV row. `outcome` is `Err(message)` for a failed cell.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub dataset: String,
    pub algorithm: String,
    pub seed: u64,
    pub budget_ms: u128,
    pub outcome: Result<CellResult, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub final_crossings: u64,
    pub final_stddev: f64,
    pub iterations: u64,
    pub termination: String,
    pub wall_time_ms: f64,
}

pub const CSV_HEADER: [&str; 9] = [
    "dataset",
    "algorithm",
    "seed",
    "budget_ms",
    "final_crossings",
    "final_stddev",
    "iterations",
    "termination",
    "wall_time_ms",
];

/// Columns whose values depend on machine speed.
pub const TIMING_COLUMNS: &[&str] = &["wall_time_ms"];

impl BenchRow {
    /// Fields in [`CSV_HEADER`] order. Failed cells leave the result columns
    /// empty and report `FAILED` as the termination.
    pub fn csv_record(&self) -> Vec<String> {
        let mut rec = vec![
            self.dataset.clone(),
            self.algorithm.clone(),
            self.seed.to_string(),
            self.budget_ms.to_string(),
        ];
        match &self.outcome {
            Ok(c) => rec.extend([
                c.final_crossings.to_string(),
                c.final_stddev.to_string(),
                c.iterations.to_string(),
                c.termination.clone(),
                format!("{:.3}", c.wall_time_ms),
            ]),
            Err(_) => rec.extend(["", "", "", "FAILED", ""].map(String::from)),
        }
        rec
    }
}

pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub output_dir: PathBuf,
}

impl BenchOutcome {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

struct Cell<'a> {
    dataset: &'a DatasetSpec,
    graph: &'a Graph,
    algorithm: &'a AlgorithmSpec,
    seed: u64,
}

impl Cell<'_> {
    fn stem(&self) -> String {
        format!(
            "{}__{}__seed{}",
            file_stem(&self.dataset.name),
            file_stem(&self.algorithm.name),
            self.seed
        )
    }
}

fn run_cell(matrix: &BenchMatrix, cell: &Cell) -> Result<RunRecord, String> {
    let kind = cell.algorithm.kind().map_err(|e| e.to_string())?;
    let cfg = matrix
        .run_config(cell.seed, cell.algorithm.params.clone())
        .map_err(|e| e.to_string())?;
    run_algorithm(kind, cell.graph, &cfg).map_err(|e| e.to_string())
}

fn write(path: &Path, contents: &str) -> Result<(), BenchError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Runs every cell and writes `bench.csv`, pivot tables, a summary and one
/// run record plus final SVG per cell under `output_dir`.
///
/// `base_dir` resolves relative dataset paths. Cells run on up to `jobs`
/// threads; output order follows the matrix regardless.
pub fn run_bench(matrix: &BenchMatrix, base_dir: &Path, output_dir: &Path, jobs: usize) -> Result<BenchOutcome, BenchError> {
    matrix.validate()?;
    let graphs = matrix
        .datasets
        .iter()
        .map(|d| load_dataset(d, base_dir))
        .collect::<Result<Vec<_>, _>>()?;
    let runs_dir = output_dir.join("runs");
    fs::create_dir_all(&runs_dir).map_err(io_err(&runs_dir))?;

    let mut cells = Vec::new();
    for (dataset, graph) in matrix.datasets.iter().zip(&graphs) {
        for algorithm in &matrix.algorithms {
            for &seed in &matrix.seeds {
                cells.push(Cell {
                    dataset,
                    graph,
                    algorithm,
                    seed,
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::Matrix(format!("thread pool: {e}")))?;
    let budget_ms = matrix.budget.resolve()?.as_millis();
    let style = RenderStyle::default();
    let results: Vec<Result<BenchRow, BenchError>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let stem = cell.stem();
                let outcome = match run_cell(matrix, cell) {
                    Ok(record) => {
                        write(&runs_dir.join(format!("{stem}.json")), &record.to_json())?;
                        let last = record.final_snapshot();
                        let layout = Layout::new(last.positions.clone(), record.bounds);
                        let svg = render_svg(cell.graph, &layout, &style)
                            .map_err(|e| BenchError::Matrix(format!("render {stem}: {e}")))?;
                        write(&runs_dir.join(format!("{stem}.svg")), &svg)?;
                        Ok(CellResult {
                            final_crossings: last.crossings,
                            final_stddev: last.edge_length_stddev,
                            iterations: record.total_iterations,
                            termination: record.termination.as_str().to_string(),
                            wall_time_ms: record.wall_time.as_secs_f64() * 1000.0,
                        })
                    }
                    Err(message) => {
                        let failure = json!({
                            "dataset": cell.dataset.name,
                            "algorithm": cell.algorithm.name,
                            "seed": cell.seed,
                            "error": message,
                        });
                        write(&runs_dir.join(format!("{stem}.json")), &format!("{failure:#}"))?;
                        Err(message)
                    }
                };
                Ok(BenchRow {
                    dataset: cell.dataset.name.clone(),
                    algorithm: cell.algorithm.name.clone(),
                    seed: cell.seed,
                    budget_ms,
                    outcome,
                })
            })
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let csv = to_csv(std::iter::once(CSV_HEADER.map(String::from).to_vec()).chain(rows.iter().map(BenchRow::csv_record)));
    write(&output_dir.join("bench.csv"), &csv)?;
    write(
        &output_dir.join("pivot_crossings.csv"),
        &pivot(matrix, &rows, |c| c.final_crossings as f64),
    )?;
    write(&output_dir.join("pivot_stddev.csv"), &pivot(matrix, &rows, |c| c.final_stddev))?;
    let summary = json!({
        "cells": rows.len(),
        "failed": rows.iter().filter(|r| r.outcome.is_err()).count(),
        "failures": rows.iter().filter_map(|r| r.outcome.as_ref().err().map(|e| json!({
            "dataset": r.dataset, "algorithm": r.algorithm, "seed": r.seed, "error": e,
        }))).collect::<Vec<_>>(),
    });
    write(&output_dir.join("summary.json"), &format!("{summary:#}\n"))?;
    Ok(BenchOutcome {
        rows,
        output_dir: output_dir.to_path_buf(),
    })
}

fn to_csv(records: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in records {
        w.write_record(&rec).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("fields are UTF-8")
}

/// Datasets by algorithms, each cell the mean over seeds, or `FAILED` if any
/// seed failed.
fn pivot(matrix: &BenchMatrix, rows: &[BenchRow], value: impl Fn(&CellResult) -> f64) -> String {
    let header = std::iter::once("dataset".to_string()).chain(matrix.algorithms.iter().map(|a| a.name.clone()));
    let body = matrix.datasets.iter().map(|d| {
        let mut rec = vec![d.name.clone()];
        for a in &matrix.algorithms {
            let cell: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.dataset == d.name && r.algorithm == a.name)
                .collect();
            let ok: Vec<f64> = cell.iter().filter_map(|r| r.outcome.as_ref().ok()).map(&value).collect();
            rec.push(if ok.len() < cell.len() || ok.is_empty() {
                "FAILED".to_string()
            } else {
                format!("{:.3}", ok.iter().sum::<f64>() / ok.len() as f64)
            });
        }
        rec
    });
    to_csv(std::iter::once(header.collect()).chain(body))
}

/// Drops the timing columns from a `bench.csv` body.
pub fn strip_timing_columns(text: &str) -> Result<String, csv::Error> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut records = Vec::new();
    let mut keep: Vec<bool> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if i == 0 {
            keep = rec.iter().map(|h| !TIMING_COLUMNS.contains(&h)).collect();
        }
        records.push(rec.iter().zip(&keep).filter(|(_, &k)| k).map(|(f, _)| f.to_string()).collect());
    }
    Ok(to_csv(records))
}
