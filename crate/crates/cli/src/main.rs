//! `fdl`: generate graphs, run layouts, measure and render them, and run
//! benchmark matrices.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use fdl_core::algorithms::{run_algorithm, AlgorithmKind};
use fdl_core::bench::{load_graph_file, run_bench, BenchMatrix, GeneratorSpec};
use fdl_core::engine::{parse_duration, Bounds, ClockMode, InitialLayout, Layout, RunConfig};
use fdl_core::graph::to_edge_list;
use fdl_core::metrics::measure;
use fdl_core::params::{parse_assignment, ParamMap};
use fdl_core::render::{render_svg, RenderStyle};
use fdl_core::{Graph, Point};

const VIRTUAL_CLOCK_ENV: &str = "FDL_VIRTUAL_CLOCK";

#[derive(Parser)]
#[command(name = "fdl", version, about = "Force-directed graph layout toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated graph as an edge list plus a `<out>.json` summary.
    Gen(GenArgs),
    /// Lay out a graph, writing run.json and one SVG per snapshot.
    Layout(LayoutArgs),
    /// Print crossing count and edge-length statistics as JSON.
    Metrics(MetricsArgs),
    /// Render positions to SVG.
    Render(RenderArgs),
    /// Run every cell of a benchmark matrix.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// tree BRANCHING DEPTH | sierpinski ORDER | grid_rnd WIDTH HEIGHT KEEP_FRACTION
    generator: String,
    #[arg(required = true)]
    args: Vec<String>,
    /// Seed for grid_rnd.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LayoutArgs {
    /// Edge list, or GML when the extension is .gml.
    graph: PathBuf,
    #[arg(long)]
    algo: String,
    /// Time budget, e.g. 500ms, 10s, 2m.
    #[arg(long, default_value = "10s")]
    budget: String,
    /// Comma-separated snapshot marks, e.g. 10s,20s,30s.
    #[arg(long, value_delimiter = ',')]
    marks: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Algorithm parameter as key=value; repeatable.
    #[arg(long = "params", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long, value_parser = ["random", "circular"], default_value = "random")]
    init: String,
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Run until the budget is spent even if the layout has converged.
    #[arg(long)]
    no_converge: bool,
    #[arg(long, default_value_t = 1000.0)]
    width: f64,
    #[arg(long, default_value_t = 1000.0)]
    height: f64,
}

#[derive(Args)]
struct MetricsArgs {
    graph: PathBuf,
    /// JSON `[[x, y], ...]`, a run.json, or one `x y` pair per line.
    positions: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    graph: PathBuf,
    positions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    size: Option<u32>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    node_radius: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Output directory; overrides the matrix's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

/// Failure classes with distinct exit codes.
enum Failure {
    /// Bad invocation or input that cannot be used as given (exit 2).
    Usage(anyhow::Error),
    /// Anything that went wrong while doing the work (exit 1).
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Layout(a) => cmd_layout(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Render(a) => cmd_render(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn parse_num<T: std::str::FromStr>(what: &str, text: &str) -> Result<T, Failure> {
    text.parse().map_err(|_| usage(anyhow!("{what}: cannot parse {text:?}")))
}

fn generator_spec(a: &GenArgs) -> Result<GeneratorSpec, Failure> {
    let want = |n: usize, shape: &str| {
        if a.args.len() == n {
            Ok(())
        } else {
            Err(usage(anyhow!("{} expects {shape}", a.generator)))
        }
    };
    Ok(match a.generator.as_str() {
        "tree" => {
            want(2, "BRANCHING DEPTH")?;
            GeneratorSpec::Tree {
                branching: parse_num("branching", &a.args[0])?,
                depth: parse_num("depth", &a.args[1])?,
            }
        }
        "sierpinski" => {
            want(1, "ORDER")?;
            GeneratorSpec::Sierpinski {
                order: parse_num("order", &a.args[0])?,
            }
        }
        "grid_rnd" => {
            want(3, "WIDTH HEIGHT KEEP_FRACTION")?;
            GeneratorSpec::GridRnd {
                width: parse_num("width", &a.args[0])?,
                height: parse_num("height", &a.args[1])?,
                keep_fraction: parse_num("keep_fraction", &a.args[2])?,
                seed: a.seed,
            }
        }
        other => return Err(usage(anyhow!("unknown generator '{other}'; expected tree, sierpinski or grid_rnd"))),
    })
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let spec = generator_spec(&a)?;
    let g = spec.generate().map_err(usage)?;
    let avg = g.avg_degree().map_err(usage)?;
    write_file(&a.out, &to_edge_list(&g))?;
    let summary = json!({
        "generator": spec,
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "avg_degree": (avg * 100.0).round() / 100.0,
    });
    let sidecar = sidecar_path(&a.out);
    write_file(&sidecar, &format!("{summary:#}\n"))?;
    println!("{} nodes, {} edges, avg degree {avg:.2}", g.node_count(), g.edge_count());
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    load_graph_file(path).map_err(|e| Failure::Runtime(e.into()))
}

fn virtual_clock() -> Result<Option<ClockMode>, Failure> {
    match std::env::var(VIRTUAL_CLOCK_ENV) {
        Ok(v) if !v.is_empty() => ClockMode::parse_virtual(&v)
            .map(Some)
            .ok_or_else(|| usage(anyhow!("{VIRTUAL_CLOCK_ENV} must look like steps:<ms>, got {v:?}"))),
        _ => Ok(None),
    }
}

fn duration(text: &str) -> Result<Duration, Failure> {
    parse_duration(text).ok_or_else(|| usage(anyhow!("invalid duration {text:?}; use e.g. 500ms, 10s, 2m")))
}

fn param_map(assignments: &[String]) -> Result<ParamMap, Failure> {
    let mut map = ParamMap::new();
    for a in assignments {
        let (k, v) = parse_assignment(a).map_err(usage)?;
        map.insert(k, v);
    }
    Ok(map)
}

fn cmd_layout(a: LayoutArgs) -> CmdResult {
    let kind: AlgorithmKind = a.algo.parse().map_err(usage)?;
    let params = param_map(&a.params)?;
    kind.validate_params(&params).map_err(usage)?;
    let cfg = RunConfig {
        budget: duration(&a.budget)?,
        snapshot_marks: a.marks.iter().map(|m| duration(m)).collect::<Result<_, _>>()?,
        seed: a.seed,
        bounds: Bounds::new(a.width, a.height),
        algorithm_params: params,
        max_iterations: a.max_iterations,
        allow_convergence: !a.no_converge,
        clock: virtual_clock()?.unwrap_or_default(),
        initial_layout: if a.init == "circular" {
            InitialLayout::Circular
        } else {
            InitialLayout::Random
        },
    };
    cfg.validate().map_err(usage)?;
    let g = load_graph(&a.graph)?;
    let record = run_algorithm(kind, &g, &cfg).map_err(|e| Failure::Runtime(e.into()))?;

    write_file(&a.out.join("run.json"), &record.to_json())?;
    let style = RenderStyle::default();
    for snap in &record.snapshots {
        let name = match snap.mark {
            Some(mark) => format!("snapshot_{}ms.svg", mark.as_millis()),
            None => "final.svg".to_string(),
        };
        let layout = Layout::new(snap.positions.clone(), record.bounds);
        let svg = render_svg(&g, &layout, &style).map_err(|e| Failure::Runtime(e.into()))?;
        write_file(&a.out.join(name), &svg)?;
    }
    let last = record.final_snapshot();
    println!(
        "{}: {} after {} iterations, {} crossings, edge length stddev {:.3}",
        record.algorithm,
        record.termination.as_str(),
        record.total_iterations,
        last.crossings,
        last.edge_length_stddev
    );
    Ok(())
}

fn read_positions(path: &Path) -> Result<Vec<Point>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let bad = |m: String| usage(anyhow!("{}: {m}", path.display()));
    if let Ok(value) = serde_json::from_str::<Value>(&text) {
        let list = match &value {
            Value::Object(map) => map
                .get("snapshots")
                .and_then(Value::as_array)
                .and_then(|s| s.last())
                .and_then(|s| s.get("positions"))
                .cloned()
                .ok_or_else(|| bad("JSON object without snapshots[].positions".into()))?,
            _ => value,
        };
        return serde_json::from_value(list).map_err(|e| bad(format!("expected [[x, y], ...]: {e}")));
    }
    let mut points = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad(format!("line {}: expected two numbers", no + 1)))?;
        match nums[..] {
            [x, y] => points.push(Point::new(x, y)),
            _ => return Err(bad(format!("line {}: expected two numbers", no + 1))),
        }
    }
    Ok(points)
}

fn graph_and_layout(graph: &Path, positions: &Path) -> Result<(Graph, Layout), Failure> {
    let g = load_graph(graph)?;
    let points = read_positions(positions)?;
    if points.len() != g.node_count() {
        return Err(usage(anyhow!(
            "{} has {} positions but the graph has {} nodes",
            positions.display(),
            points.len(),
            g.node_count()
        )));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(usage(anyhow!("{} contains non-finite coordinates", positions.display())));
    }
    Ok((g, Layout::new(points, Bounds::default())))
}

fn cmd_metrics(a: MetricsArgs) -> CmdResult {
    let (g, layout) = graph_and_layout(&a.graph, &a.positions)?;
    let report = measure(&g, &layout);
    println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    Ok(())
}

fn cmd_render(a: RenderArgs) -> CmdResult {
    let (g, layout) = graph_and_layout(&a.graph, &a.positions)?;
    let d = RenderStyle::default();
    let style = RenderStyle {
        image_size: a.size.unwrap_or(d.image_size),
        margin_fraction: a.margin.unwrap_or(d.margin_fraction),
        node_radius: a.node_radius.unwrap_or(d.node_radius),
        ..d
    };
    let svg = render_svg(&g, &layout, &style).map_err(usage)?;
    write_file(&a.out, &svg)
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let text = fs::read_to_string(&a.matrix).with_context(|| format!("reading {}", a.matrix.display()))?;
    let mut matrix = BenchMatrix::from_json(&text).map_err(usage)?;
    if let Some(ClockMode::Virtual { per_step }) = virtual_clock()? {
        matrix.virtual_clock = Some(format!("steps:{}", per_step.as_millis()));
    }
    let base = a.matrix.parent().unwrap_or(Path::new("."));
    let out = match (a.out, &matrix.output_dir) {
        (Some(o), _) => o,
        (None, Some(o)) => base.join(o),
        (None, None) => return Err(usage(anyhow!("no output directory: pass --out or set output_dir"))),
    };
    if a.jobs == 0 {
        return Err(usage(anyhow!("--jobs must be at least 1")));
    }
    let outcome = run_bench(&matrix, base, &out, a.jobs).map_err(|e| match e {
        fdl_core::bench::BenchError::Matrix(_) => usage(e),
        other => Failure::Runtime(other.into()),
    })?;
    let failed = outcome.failed();
    println!(
        "{} cells, {failed} failed; results in {}",
        outcome.rows.len(),
        outcome.output_dir.display()
    );
    if failed > 0 {
        return Err(Failure::Runtime(anyhow!("{failed} cell(s) failed; see summary.json")));
    }
    Ok(())
}
