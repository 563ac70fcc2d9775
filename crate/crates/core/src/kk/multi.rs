//! KK-MS (ordered queue, top-k batch updates, √n reset) and KK-MS-DS
//! (growing starting area with decaying stiffness).

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;

use super::{KkModel, KkParams, KkSetup, NodeSolver};
use crate::engine::{Layout, LayoutAlgorithm, StepReport, CONVERGENCE_FRACTION, CONVERGENCE_WINDOW};
use crate::error::{LayoutError, MetricsError};
use crate::geometry::Point;
use crate::graph::{bfs_hops, connected_components, Graph};
use crate::rng::DetRng;

/// Queue entry ordered by `Δ` descending, then node ascending.
#[derive(Clone, Copy, Debug)]
struct QueueKey {
    delta: f64,
    node: usize,
}

impl PartialEq for QueueKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueKey {}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other.delta.total_cmp(&self.delta).then(self.node.cmp(&other.node))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueueStats {
    /// Resets triggered by the distinct-selection threshold.
    pub resets: u64,
    /// Every queue rebuild, including stale-queue refreshes and expansions.
    pub rebuilds: u64,
    pub distinct_selected: usize,
    pub reset_threshold: usize,
    pub k_top: usize,
    pub queue_len: usize,
}

/// Ordered-queue node selection shared by KK-MS and KK-MS-DS.
struct MultiSelect {
    solver: NodeSolver,
    queue: BTreeSet<QueueKey>,
    selected: Vec<bool>,
    distinct: usize,
    reset_threshold: usize,
    k_top_param: Option<usize>,
    k_top: usize,
    /// Updates since the last queue reset; stiffness multiplier is `γ^count`.
    update_counts: Vec<u32>,
    gamma: Option<f64>,
    resets: u64,
    rebuilds: u64,
    fresh: bool,
    fresh_converged: bool,
    last_selected: Vec<usize>,
}

impl MultiSelect {
    fn new(solver: NodeSolver, k_top: Option<usize>, gamma: Option<f64>) -> Self {
        let n = solver.model().node_count();
        Self {
            solver,
            queue: BTreeSet::new(),
            selected: vec![false; n],
            distinct: 0,
            reset_threshold: 1,
            k_top_param: k_top,
            k_top: 1,
            update_counts: vec![0; n],
            gamma,
            resets: 0,
            rebuilds: 0,
            fresh: false,
            fresh_converged: false,
            last_selected: Vec::new(),
        }
    }

    fn sigma(&self, i: usize) -> f64 {
        match self.gamma {
            Some(g) => g.powi(self.update_counts[i] as i32),
            None => 1.0,
        }
    }

    fn in_domain(&self, i: usize) -> bool {
        self.solver.active.as_ref().is_none_or(|a| a[i])
    }

    /// Clears the queue and recomputes `Δ` for every node in the domain.
    fn rebuild(&mut self, positions: &mut [Point]) {
        self.rebuilds += 1;
        self.queue.clear();
        self.selected.iter_mut().for_each(|s| *s = false);
        self.update_counts.iter_mut().for_each(|c| *c = 0);
        self.distinct = 0;
        let mut all_below = true;
        let mut size = 0usize;
        for i in 0..positions.len() {
            if !self.in_domain(i) {
                continue;
            }
            size += 1;
            let delta = self.solver.delta(i, positions);
            if delta >= self.solver.tolerance_for(i) {
                all_below = false;
            }
            self.queue.insert(QueueKey { delta, node: i });
        }
        let root = (size as f64).sqrt().ceil() as usize;
        self.reset_threshold = root.max(1);
        self.k_top = self.k_top_param.unwrap_or(root).max(1);
        self.fresh = true;
        self.fresh_converged = all_below;
    }

    fn stats(&self) -> QueueStats {
        QueueStats {
            resets: self.resets,
            rebuilds: self.rebuilds,
            distinct_selected: self.distinct,
            reset_threshold: self.reset_threshold,
            k_top: self.k_top,
            queue_len: self.queue.len(),
        }
    }

    fn step(&mut self, positions: &mut [Point]) -> StepReport {
        let stale_top = !self.fresh
            && self
                .queue
                .first()
                .is_some_and(|top| top.delta < self.solver.tolerance_for(top.node) * self.sigma(top.node));
        if self.queue.is_empty() || stale_top {
            self.rebuild(positions);
        }
        self.last_selected.clear();
        if self.fresh && self.fresh_converged {
            return StepReport {
                converged: true,
                ..Default::default()
            };
        }
        self.fresh = false;
        for _ in 0..self.k_top {
            match self.queue.pop_first() {
                Some(key) => self.last_selected.push(key.node),
                None => break,
            }
        }
        let mut report = StepReport::default();
        for &node in &self.last_selected {
            let outcome = self.solver.newton(node, positions);
            if outcome.moved {
                report.moved_nodes += 1;
            }
            report.max_displacement = report.max_displacement.max(outcome.displacement);
        }
        for idx in 0..self.last_selected.len() {
            let node = self.last_selected[idx];
            if self.gamma.is_some() {
                self.update_counts[node] += 1;
            }
            let delta = self.solver.delta(node, positions) * self.sigma(node);
            self.queue.insert(QueueKey { delta, node });
            if !self.selected[node] {
                self.selected[node] = true;
                self.distinct += 1;
            }
        }
        if self.distinct >= self.reset_threshold {
            self.rebuild(positions);
            self.resets += 1;
        }
        report
    }
}

fn build_solver(model: KkModel, params: &KkParams, active: Option<Vec<bool>>, seed: u64) -> NodeSolver {
    NodeSolver::new(Arc::new(model), active, params.max_inner, params.inner_tolerance, seed)
}

/// KK with multi-node selection from an ordered queue.
pub struct KkMs {
    params: KkParams,
    layout: Layout,
    select: MultiSelect,
}

impl KkMs {
    pub fn new(g: &Graph, layout: Layout, params: KkParams, seed: u64) -> Result<Self, LayoutError> {
        params.validate()?;
        let setup = KkSetup::new(g, layout, &params)?;
        let solver = build_solver(setup.model, &params, None, seed);
        let mut layout = setup.layout;
        let mut select = MultiSelect::new(solver, params.k_top, None);
        select.rebuild(&mut layout.positions);
        Ok(Self { params, layout, select })
    }

    pub fn model(&self) -> &KkModel {
        self.select.solver.model()
    }

    pub fn queue_stats(&self) -> QueueStats {
        self.select.stats()
    }

    /// Nodes updated by the most recent step, in pop order.
    pub fn last_selected(&self) -> &[usize] {
        &self.select.last_selected
    }
}

impl LayoutAlgorithm for KkMs {
    fn name(&self) -> &'static str {
        "kk-ms"
    }

    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn params(&self) -> Value {
        let mut v = serde_json::to_value(&self.params).expect("params serialize");
        strip_keys(&mut v, &["gamma", "epsilon", "stability_window", "expand_on_converge"]);
        v
    }

    fn step(&mut self) -> Result<StepReport, LayoutError> {
        Ok(self.select.step(&mut self.layout.positions))
    }
}

pub(crate) fn strip_keys(v: &mut Value, keys: &[&str]) {
    if let Value::Object(map) = v {
        for k in keys {
            map.remove(*k);
        }
    }
}

/// `mean(dev) / population_stddev(dev)` with `dev_i = |current_i − target_i|`.
///
/// Returns 0 when the deviations are all equal (including all zero) or the
/// lists are empty.
pub fn stability_ratio(current: &[f64], target: &[f64]) -> Result<f64, MetricsError> {
    if current.len() != target.len() {
        return Err(MetricsError::LengthMismatch(current.len(), target.len()));
    }
    if current.is_empty() {
        return Ok(0.0);
    }
    let n = current.len() as f64;
    let devs: Vec<f64> = current.iter().zip(target).map(|(a, b)| (a - b).abs()).collect();
    let mean = devs.iter().sum::<f64>() / n;
    let var = devs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd <= 1e-12 * mean.abs() || sd == 0.0 {
        return Ok(0.0);
    }
    Ok(mean / sd)
}

/// Starting area: in each component, the highest-degree node (ties to the
/// lowest index) and every node within two hops of it.
pub fn kkmsds_initial_active(g: &Graph) -> Vec<bool> {
    let mut active = vec![false; g.node_count()];
    for members in connected_components(g) {
        let start = members
            .iter()
            .copied()
            .max_by(|&a, &b| g.degree(a).cmp(&g.degree(b)).then(b.cmp(&a)))
            .expect("components are non-empty");
        let hops = bfs_hops(g, start);
        for &i in &members {
            if hops[i] <= 2 {
                active[i] = true;
            }
        }
    }
    active
}

/// KK-MS restricted to a growing active set, with per-node stiffness
/// multipliers `σ_i = γ^m` after `m` updates since the last queue reset.
pub struct KkMsDs {
    params: KkParams,
    layout: Layout,
    select: MultiSelect,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    active: Vec<bool>,
    active_count: usize,
    stable_steps: usize,
    quiet_steps: usize,
    expansions: u64,
    last_ratio: f64,
    placement: DetRng,
}

impl KkMsDs {
    pub fn new(g: &Graph, layout: Layout, params: KkParams, seed: u64) -> Result<Self, LayoutError> {
        params.validate()?;
        let setup = KkSetup::new(g, layout, &params)?;
        let active = kkmsds_initial_active(g);
        let solver = build_solver(setup.model, &params, Some(active.clone()), seed);
        let mut layout = setup.layout;
        let mut select = MultiSelect::new(solver, params.k_top, Some(params.gamma));
        select.rebuild(&mut layout.positions);
        Ok(Self {
            active_count: active.iter().filter(|&&a| a).count(),
            active,
            params,
            layout,
            select,
            edges: g.edges().to_vec(),
            adjacency: (0..g.node_count()).map(|i| g.neighbors(i).to_vec()).collect(),
            stable_steps: 0,
            quiet_steps: 0,
            expansions: 0,
            last_ratio: f64::NAN,
            placement: DetRng::derived(seed, 0x6473),
        })
    }

    pub fn model(&self) -> &KkModel {
        self.select.solver.model()
    }

    pub fn active_set(&self) -> &[bool] {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn is_fully_expanded(&self) -> bool {
        self.active_count == self.active.len()
    }

    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    /// Stiffness multiplier of node `i`.
    pub fn sigma(&self, i: usize) -> f64 {
        self.select.sigma(i)
    }

    pub fn queue_stats(&self) -> QueueStats {
        self.select.stats()
    }

    pub fn last_selected(&self) -> &[usize] {
        &self.select.last_selected
    }

    /// Stability ratio computed after the most recent step.
    pub fn last_ratio(&self) -> f64 {
        self.last_ratio
    }

    fn active_ratio(&self) -> f64 {
        let model = self.select.solver.model();
        let (current, target): (Vec<f64>, Vec<f64>) = self
            .edges
            .iter()
            .filter(|&&(u, v)| self.active[u] && self.active[v])
            .map(|&(u, v)| {
                let len = self.layout.positions[u].distance(self.layout.positions[v]);
                (len, model.hop_length(u))
            })
            .unzip();
        stability_ratio(&current, &target).expect("equal lengths")
    }

    /// Adds every inactive neighbour of the active set, placing each near its
    /// active neighbours. Returns the largest placement distance.
    fn expand(&mut self) -> f64 {
        let newcomers: Vec<usize> = (0..self.active.len())
            .filter(|&i| !self.active[i] && self.adjacency[i].iter().any(|&j| self.active[j]))
            .collect();
        let mut max_move: f64 = 0.0;
        for &i in &newcomers {
            let anchors: Vec<Point> = self.adjacency[i]
                .iter()
                .filter(|&&j| self.active[j])
                .map(|&j| self.layout.positions[j])
                .collect();
            let mean = anchors.iter().fold(Point::ZERO, |acc, &p| acc + p) * (1.0 / anchors.len() as f64);
            let l = self.select.solver.model().hop_length(i);
            let target = mean + self.placement.direction() * (0.25 * l);
            max_move = max_move.max(target.distance(self.layout.positions[i]));
            self.layout.positions[i] = target;
        }
        for &i in &newcomers {
            self.active[i] = true;
        }
        self.active_count += newcomers.len();
        self.select.solver.active = Some(self.active.clone());
        self.select.rebuild(&mut self.layout.positions);
        self.stable_steps = 0;
        self.quiet_steps = 0;
        self.expansions += 1;
        max_move
    }
}

impl LayoutAlgorithm for KkMsDs {
    fn name(&self) -> &'static str {
        "kk-ms-ds"
    }

    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn params(&self) -> Value {
        serde_json::to_value(&self.params).expect("params serialize")
    }

    fn step(&mut self) -> Result<StepReport, LayoutError> {
        let mut report = self.select.step(&mut self.layout.positions);
        let full = self.is_fully_expanded();

        self.last_ratio = self.active_ratio();
        if self.last_ratio < self.params.epsilon {
            self.stable_steps += 1;
        } else {
            self.stable_steps = 0;
        }
        let quiet_limit = CONVERGENCE_FRACTION * self.layout.bounds.diagonal();
        if report.max_displacement < quiet_limit {
            self.quiet_steps += 1;
        } else {
            self.quiet_steps = 0;
        }

        if !full {
            // The run loop stops after CONVERGENCE_WINDOW quiet steps, so a
            // settled partial layout must grow before that.
            let settled = report.converged || self.quiet_steps >= CONVERGENCE_WINDOW / 2;
            let stable = self.stable_steps >= self.params.stability_window;
            if stable || (self.params.expand_on_converge && settled) {
                let moved = self.expand();
                report.max_displacement = report.max_displacement.max(moved);
                report.converged = false;
            } else {
                report.converged = false;
            }
        }
        Ok(report)
    }
}
