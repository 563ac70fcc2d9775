//! Layouts, the algorithm stepping contract, and the time-budgeted run loop
//! with snapshot capture.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::LayoutError;
use crate::geometry::Point;
use crate::graph::Graph;
use crate::metrics;
use crate::params::ParamMap;
use crate::rng::DetRng;

/// Canvas size in canvas units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    pub const fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn is_valid(&self) -> bool {
        self.width.is_finite() && self.height.is_finite() && self.width > 0.0 && self.height > 0.0
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self::new(1000.0, 1000.0)
    }
}

/// Node positions on a bounded canvas.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub positions: Vec<Point>,
    pub bounds: Bounds,
}

impl Layout {
    pub fn new(positions: Vec<Point>, bounds: Bounds) -> Self {
        Self { positions, bounds }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Index of the first node with a non-finite coordinate.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.positions.iter().position(|p| !p.is_finite())
    }
}

/// Uniform random placement inside `bounds`.
///
/// Draws x then y for each node in index order from [`DetRng`] seeded with
/// `seed`, so the same seed gives the same layout on every platform.
pub fn init_random_layout(g: &Graph, bounds: Bounds, seed: u64) -> Layout {
    let mut rng = DetRng::new(seed);
    let positions = (0..g.node_count())
        .map(|_| {
            let x = rng.unit() * bounds.width;
            let y = rng.unit() * bounds.height;
            Point::new(x, y)
        })
        .collect();
    Layout::new(positions, bounds)
}

/// Nodes evenly spaced on the circle inscribed in `bounds`, node 0 at angle 0.
pub fn init_circular_layout(g: &Graph, bounds: Bounds) -> Layout {
    let n = g.node_count();
    let center = bounds.center();
    let radius = bounds.width.min(bounds.height) / 2.0;
    let positions = (0..n)
        .map(|i| {
            if n == 1 {
                return center;
            }
            let angle = std::f64::consts::TAU * i as f64 / n as f64;
            Point::new(center.x + radius * angle.cos(), center.y + radius * angle.sin())
        })
        .collect();
    Layout::new(positions, bounds)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialLayout {
    #[default]
    Random,
    Circular,
}

impl InitialLayout {
    pub fn build(self, g: &Graph, bounds: Bounds, seed: u64) -> Layout {
        match self {
            InitialLayout::Random => init_random_layout(g, bounds, seed),
            InitialLayout::Circular => init_circular_layout(g, bounds),
        }
    }
}

/// Outcome of one `step()`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StepReport {
    pub moved_nodes: usize,
    pub max_displacement: f64,
    pub converged: bool,
}

/// Uniform stepping contract shared by all layout algorithms.
///
/// An instance owns its layout. Given identical graph, parameters and seed,
/// the k-th call to [`step`](LayoutAlgorithm::step) yields identical positions.
pub trait LayoutAlgorithm {
    fn name(&self) -> &'static str;

    fn layout(&self) -> &Layout;

    fn step(&mut self) -> Result<StepReport, LayoutError>;

    /// Fully resolved parameters (defaults filled in), for run records.
    fn params(&self) -> Value;
}

/// Source of elapsed time for the run loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ClockMode {
    #[default]
    Monotonic,
    /// Advances by a fixed amount after every step; for reproducible runs.
    Virtual { per_step: Duration },
}

impl ClockMode {
    /// Parses `steps:<ms>` as used by the `FDL_VIRTUAL_CLOCK` variable.
    pub fn parse_virtual(spec: &str) -> Option<Self> {
        let ms: u64 = spec.strip_prefix("steps:")?.trim().parse().ok()?;
        Some(ClockMode::Virtual {
            per_step: Duration::from_millis(ms),
        })
    }
}

struct Clock {
    mode: ClockMode,
    start: Instant,
    virtual_elapsed: Duration,
}

impl Clock {
    fn start(mode: ClockMode) -> Self {
        Self {
            mode,
            start: Instant::now(),
            virtual_elapsed: Duration::ZERO,
        }
    }

    fn elapsed(&self) -> Duration {
        match self.mode {
            ClockMode::Monotonic => self.start.elapsed(),
            ClockMode::Virtual { .. } => self.virtual_elapsed,
        }
    }

    fn tick(&mut self) {
        if let ClockMode::Virtual { per_step } = self.mode {
            self.virtual_elapsed += per_step;
        }
    }
}

/// Steps in a row that must stay under the displacement threshold.
pub const CONVERGENCE_WINDOW: usize = 10;
/// Displacement threshold as a fraction of the canvas diagonal.
pub const CONVERGENCE_FRACTION: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub budget: Duration,
    pub snapshot_marks: Vec<Duration>,
    pub seed: u64,
    pub bounds: Bounds,
    pub algorithm_params: ParamMap,
    pub max_iterations: Option<u64>,
    /// Allow early termination on convergence. Disable to terminate on time only.
    pub allow_convergence: bool,
    pub clock: ClockMode,
    pub initial_layout: InitialLayout,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            budget: Duration::from_secs(10),
            snapshot_marks: Vec::new(),
            seed: 0,
            bounds: Bounds::default(),
            algorithm_params: ParamMap::new(),
            max_iterations: None,
            allow_convergence: true,
            clock: ClockMode::Monotonic,
            initial_layout: InitialLayout::Random,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if !self.bounds.is_valid() {
            return Err(LayoutError::Config(format!("invalid canvas bounds {:?}", self.bounds)));
        }
        for pair in self.snapshot_marks.windows(2) {
            if pair[0] >= pair[1] {
                return Err(LayoutError::Config("snapshot marks must be strictly ascending".into()));
            }
        }
        if let Some(last) = self.snapshot_marks.last() {
            if *last > self.budget {
                return Err(LayoutError::Config(format!(
                    "snapshot mark {}ms exceeds budget {}ms",
                    last.as_millis(),
                    self.budget.as_millis()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetExceeded,
    Converged,
    IterationCap,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::BudgetExceeded => "budget_exceeded",
            Termination::Converged => "converged",
            Termination::IterationCap => "iteration_cap",
        }
    }
}

fn as_ms<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1000.0)
}

fn as_ms_opt<S: serde::Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
    match d {
        Some(d) => as_ms(d, s),
        None => s.serialize_none(),
    }
}

fn as_ms_list<S: serde::Serializer>(ds: &[Duration], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(ds.len()))?;
    for d in ds {
        seq.serialize_element(&(d.as_secs_f64() * 1000.0))?;
    }
    seq.end()
}

/// Positions and quality metrics captured during a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    /// Actual capture time, at or after the scheduled mark.
    #[serde(rename = "elapsed_ms", serialize_with = "as_ms")]
    pub elapsed: Duration,
    /// Scheduled mark this snapshot answers; `None` for the final snapshot.
    #[serde(rename = "mark_ms", serialize_with = "as_ms_opt")]
    pub mark: Option<Duration>,
    pub iteration: u64,
    pub crossings: u64,
    pub edge_length_stddev: f64,
    pub positions: Vec<Point>,
}

impl Snapshot {
    pub fn capture(g: &Graph, layout: &Layout, elapsed: Duration, mark: Option<Duration>, iteration: u64) -> Self {
        let crossings = metrics::count_crossings_sweep(g, layout).crossings;
        let edge_length_stddev = metrics::edge_length_stddev(g, layout).map_or(0.0, |(_, sd)| sd);
        Self {
            elapsed,
            mark,
            iteration,
            crossings,
            edge_length_stddev,
            positions: layout.positions.clone(),
        }
    }

    pub fn is_final(&self) -> bool {
        self.mark.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub params: Value,
    pub seed: u64,
    #[serde(rename = "budget_ms", serialize_with = "as_ms")]
    pub budget: Duration,
    #[serde(rename = "snapshot_marks_ms", serialize_with = "as_ms_list")]
    pub snapshot_marks: Vec<Duration>,
    pub bounds: Bounds,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    pub total_iterations: u64,
    #[serde(rename = "wall_time_ms", serialize_with = "as_ms")]
    pub wall_time: Duration,
}

impl RunRecord {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("a run record always holds its final snapshot")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run records serialize")
    }

    /// JSON with every environment-dependent timing field removed.
    pub fn to_canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("run records serialize");
        if let Value::Object(map) = &mut value {
            map.remove("wall_time_ms");
            if let Some(Value::Array(snaps)) = map.get_mut("snapshots") {
                for snap in snaps {
                    if let Value::Object(s) = snap {
                        s.remove("elapsed_ms");
                    }
                }
            }
        }
        serde_json::to_string(&value).expect("values serialize")
    }
}

/// Runs `algo` until the budget is spent, it converges, or the iteration cap
/// is hit. See [`run_observed`].
pub fn run(algo: &mut dyn LayoutAlgorithm, g: &Graph, cfg: &RunConfig) -> Result<RunRecord, LayoutError> {
    run_observed(algo, g, cfg, |_, _, _| {})
}

/// [`run`] with a callback invoked after every step with
/// `(iteration, report, layout)`.
///
/// Snapshot marks are checked only at step boundaries; each mark passed
/// during a step yields one snapshot recording the actual elapsed time. A
/// final snapshot is always appended.
pub fn run_observed(
    algo: &mut dyn LayoutAlgorithm,
    g: &Graph,
    cfg: &RunConfig,
    mut observer: impl FnMut(u64, &StepReport, &Layout),
) -> Result<RunRecord, LayoutError> {
    cfg.validate()?;
    if algo.layout().len() != g.node_count() {
        return Err(LayoutError::SizeMismatch {
            positions: algo.layout().len(),
            nodes: g.node_count(),
        });
    }
    let wall = Instant::now();
    let mut clock = Clock::start(cfg.clock);
    let threshold = CONVERGENCE_FRACTION * algo.layout().bounds.diagonal();
    let mut snapshots = Vec::with_capacity(cfg.snapshot_marks.len() + 1);
    let mut next_mark = 0;
    let mut iteration: u64 = 0;
    let mut quiet_steps = 0;

    let termination = loop {
        if clock.elapsed() >= cfg.budget {
            break Termination::BudgetExceeded;
        }
        if cfg.max_iterations.is_some_and(|cap| iteration >= cap) {
            break Termination::IterationCap;
        }
        let report = algo.step()?;
        iteration += 1;
        clock.tick();
        if let Some(node) = algo.layout().first_non_finite() {
            return Err(LayoutError::NonFinite {
                algorithm: algo.name().to_string(),
                iteration,
                node,
            });
        }
        observer(iteration, &report, algo.layout());

        let elapsed = clock.elapsed();
        while next_mark < cfg.snapshot_marks.len() && elapsed >= cfg.snapshot_marks[next_mark] {
            let mark = cfg.snapshot_marks[next_mark];
            snapshots.push(Snapshot::capture(g, algo.layout(), elapsed, Some(mark), iteration));
            next_mark += 1;
        }

        if cfg.allow_convergence {
            if report.converged {
                break Termination::Converged;
            }
            quiet_steps = if report.max_displacement < threshold { quiet_steps + 1 } else { 0 };
            if quiet_steps >= CONVERGENCE_WINDOW {
                break Termination::Converged;
            }
        }
    };

    snapshots.push(Snapshot::capture(g, algo.layout(), clock.elapsed(), None, iteration));
    Ok(RunRecord {
        algorithm: algo.name().to_string(),
        params: algo.params(),
        seed: cfg.seed,
        budget: cfg.budget,
        snapshot_marks: cfg.snapshot_marks.clone(),
        bounds: algo.layout().bounds,
        snapshots,
        termination,
        total_iterations: iteration,
        wall_time: wall.elapsed(),
    })
}

/// Parses durations such as `250ms`, `10s`, `2m` or a bare millisecond count.
pub fn parse_duration(text: &str) -> Option<Duration> {
    let text = text.trim();
    let (number, scale_ms) = if let Some(n) = text.strip_suffix("ms") {
        (n, 1.0)
    } else if let Some(n) = text.strip_suffix('s') {
        (n, 1000.0)
    } else if let Some(n) = text.strip_suffix('m') {
        (n, 60_000.0)
    } else {
        (text, 1.0)
    };
    let value: f64 = number.trim().parse().ok()?;
    if !(value.is_finite() && value >= 0.0) {
        return None;
    }
    Some(Duration::from_secs_f64(value * scale_ms / 1000.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_layout_determinism_and_bounds() {
        let g = Graph::from_edges(1000, []).unwrap();
        let bounds = Bounds::new(100.0, 100.0);
        let a = init_random_layout(&g, bounds, 17);
        assert_eq!(a, init_random_layout(&g, bounds, 17));
        assert_ne!(a, init_random_layout(&g, bounds, 18));
        assert!(a
            .positions
            .iter()
            .all(|p| (0.0..=100.0).contains(&p.x) && (0.0..=100.0).contains(&p.y)));
    }

    #[test]
    fn circular_layout_geometry() {
        let g = Graph::from_edges(4, []).unwrap();
        let l = init_circular_layout(&g, Bounds::new(2.0, 2.0));
        let expected = [(2.0, 1.0), (1.0, 2.0), (0.0, 1.0), (1.0, 0.0)];
        for (p, (x, y)) in l.positions.iter().zip(expected) {
            assert!((p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12, "{p:?}");
        }
        let single = init_circular_layout(&Graph::from_edges(1, []).unwrap(), Bounds::new(2.0, 2.0));
        assert_eq!(single.positions, vec![Point::new(1.0, 1.0)]);
    }

    #[test]
    fn circular_layout_distinct_points() {
        let g = Graph::from_edges(10_000, []).unwrap();
        let l = init_circular_layout(&g, Bounds::default());
        // Neighbouring angles are the closest pairs on a circle.
        for i in 0..l.len() {
            let j = (i + 1) % l.len();
            assert!(l.positions[i].distance(l.positions[j]) > 0.0);
        }
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration("250ms"), Some(Duration::from_millis(250)));
        assert_eq!(parse_duration("10s"), Some(Duration::from_secs(10)));
        assert_eq!(parse_duration("2m"), Some(Duration::from_secs(120)));
        assert_eq!(parse_duration("40"), Some(Duration::from_millis(40)));
        assert_eq!(parse_duration("1.5s"), Some(Duration::from_millis(1500)));
        assert_eq!(parse_duration("-1s"), None);
        assert_eq!(parse_duration("soon"), None);
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig {
            budget: Duration::from_secs(3),
            snapshot_marks: vec![Duration::from_secs(1), Duration::from_secs(2)],
            ..Default::default()
        };
        assert!(cfg.validate().is_ok());
        cfg.snapshot_marks = vec![Duration::from_secs(2), Duration::from_secs(1)];
        assert!(cfg.validate().is_err());
        cfg.snapshot_marks = vec![Duration::from_secs(4)];
        assert!(cfg.validate().is_err());
        cfg.snapshot_marks = vec![Duration::from_secs(1), Duration::from_secs(1)];
        assert!(cfg.validate().is_err());
        assert_eq!(
            ClockMode::parse_virtual("steps:5"),
            Some(ClockMode::Virtual { per_step: Duration::from_millis(5) })
        );
        assert_eq!(ClockMode::parse_virtual("5"), None);
    }
}
