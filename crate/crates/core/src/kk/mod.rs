//! Kamada–Kawai spring energy and its multi-node variants.
//!
//! Pairs in the same connected component are joined by springs of ideal
//! length `l_ij = L·d_ij` and stiffness `k_ij = K / d_ij²`, where `d_ij` is the
//! hop distance. Components never interact; each one is laid out in its own
//! cell of a grid over the canvas, largest component first.

mod multi;

pub use multi::{kkmsds_initial_active, stability_ratio, KkMs, KkMsDs, QueueStats};

use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;

use crate::engine::{Bounds, Layout, LayoutAlgorithm, StepReport};
use crate::error::{LayoutError, ParamError};
use crate::geometry::Point;
use crate::graph::{apsp_bfs, connected_components, DistanceMatrix, Graph};
use crate::params::{require, ParamMap, ParamReader};
use crate::rng::DetRng;

/// Nodes closer than this fraction of `L` are treated as coincident.
pub const COINCIDENT_FRACTION: f64 = 1e-9;
/// Jitter applied to separate coincident nodes, as a fraction of `L`.
pub const JITTER_FRACTION: f64 = 1e-6;
/// Maximum step halvings when enforcing energy descent.
pub const MAX_HALVINGS: u32 = 20;
/// Gradient-descent fallback step, as a fraction of `L`.
pub const FALLBACK_STEP_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KkParams {
    /// Fraction of the cell diagonal spanned by a component's hop diameter.
    #[serde(rename = "L_scale_fraction")]
    pub l_scale_fraction: f64,
    #[serde(rename = "K")]
    pub stiffness: f64,
    /// Batch size for the multi-node variants; `None` means `⌈√n⌉`.
    pub k_top: Option<usize>,
    pub gamma: f64,
    pub epsilon: f64,
    pub stability_window: usize,
    pub max_inner: usize,
    /// Gradient-magnitude tolerance, relative to `K·L`.
    pub inner_tolerance: f64,
    /// Let KK-MS-DS grow its active set once the current one has settled,
    /// even if the stability ratio never dropped below `epsilon`.
    pub expand_on_converge: bool,
}

impl Default for KkParams {
    fn default() -> Self {
        Self {
            l_scale_fraction: 0.9,
            stiffness: 1.0,
            k_top: None,
            gamma: 0.9,
            epsilon: 0.5,
            stability_window: 10,
            max_inner: 20,
            inner_tolerance: 1e-4,
            expand_on_converge: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum KkVariant {
    Classic,
    MultiSelect,
    DecayingStiffness,
}

impl KkParams {
    pub(crate) fn from_map(map: &ParamMap, variant: KkVariant) -> Result<Self, ParamError> {
        let name = match variant {
            KkVariant::Classic => "kk",
            KkVariant::MultiSelect => "kk-ms",
            KkVariant::DecayingStiffness => "kk-ms-ds",
        };
        let d = Self::default();
        let mut r = ParamReader::new(map, name);
        let mut p = Self {
            l_scale_fraction: r.f64("L_scale_fraction", d.l_scale_fraction)?,
            stiffness: r.f64("K", d.stiffness)?,
            max_inner: r.usize("max_inner", d.max_inner)?,
            inner_tolerance: r.f64("inner_tolerance", d.inner_tolerance)?,
            ..d
        };
        if variant != KkVariant::Classic {
            p.k_top = r.usize_opt("k_top")?;
        }
        if variant == KkVariant::DecayingStiffness {
            p.gamma = r.f64("gamma", p.gamma)?;
            p.epsilon = r.f64("epsilon", p.epsilon)?;
            p.stability_window = r.usize("stability_window", p.stability_window)?;
            p.expand_on_converge = r.bool("expand_on_converge", p.expand_on_converge)?;
        }
        r.finish()?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        require(
            self.l_scale_fraction > 0.0 && self.l_scale_fraction.is_finite(),
            "L_scale_fraction",
            "must be positive",
        )?;
        require(self.stiffness > 0.0 && self.stiffness.is_finite(), "K", "must be positive")?;
        require(self.k_top != Some(0), "k_top", "must be at least 1")?;
        require(self.gamma > 0.0 && self.gamma < 1.0, "gamma", "must be in (0, 1)")?;
        require(self.epsilon >= 0.0, "epsilon", "must be non-negative")?;
        require(self.stability_window >= 1, "stability_window", "must be at least 1")?;
        require(self.max_inner >= 1, "max_inner", "must be at least 1")?;
        require(self.inner_tolerance > 0.0, "inner_tolerance", "must be positive")?;
        Ok(())
    }
}

/// Spring lengths and stiffnesses derived from hop distances.
#[derive(Clone, Debug)]
pub struct KkModel {
    dist: DistanceMatrix,
    component_of: Vec<usize>,
    components: Vec<Vec<usize>>,
    /// Display length per hop (`L`) for each component.
    scale: Vec<f64>,
    stiffness: f64,
}

impl KkModel {
    /// Builds the model with explicit per-component hop lengths.
    pub fn with_scales(g: &Graph, scales: Vec<f64>, stiffness: f64) -> Self {
        let components = connected_components(g);
        assert_eq!(scales.len(), components.len(), "one scale per component");
        let mut component_of = vec![0; g.node_count()];
        for (c, members) in components.iter().enumerate() {
            for &i in members {
                component_of[i] = c;
            }
        }
        Self {
            dist: apsp_bfs(g),
            component_of,
            components,
            scale: scales,
            stiffness,
        }
    }

    /// Builds the model so each component's hop diameter spans
    /// `fraction` of the diagonal of its packing cell.
    pub fn for_canvas(g: &Graph, bounds: Bounds, fraction: f64, stiffness: f64) -> (Self, Vec<Cell>) {
        let components = connected_components(g);
        let cells = pack_cells(components.len(), bounds);
        let dist = apsp_bfs(g);
        let scales = components
            .iter()
            .zip(&cells)
            .map(|(members, cell)| {
                let diameter = members
                    .iter()
                    .flat_map(|&i| members.iter().map(move |&j| (i, j)))
                    .map(|(i, j)| dist.get(i, j))
                    .max()
                    .unwrap_or(0)
                    .max(1);
                fraction * cell.size.diagonal() / diameter as f64
            })
            .collect();
        let mut component_of = vec![0; g.node_count()];
        for (c, members) in components.iter().enumerate() {
            for &i in members {
                component_of[i] = c;
            }
        }
        let model = Self {
            dist,
            component_of,
            components,
            scale: scales,
            stiffness,
        };
        (model, cells)
    }

    pub fn node_count(&self) -> usize {
        self.component_of.len()
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component_of(&self, i: usize) -> usize {
        self.component_of[i]
    }

    /// `L` for the component containing `i`.
    pub fn hop_length(&self, i: usize) -> f64 {
        self.scale[self.component_of[i]]
    }

    pub fn stiffness_constant(&self) -> f64 {
        self.stiffness
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.dist
    }

    /// `l_ij`, or `None` across components and for `i == j`.
    pub fn ideal_length(&self, i: usize, j: usize) -> Option<f64> {
        match self.dist.hops(i, j) {
            Some(h) if h > 0 => Some(self.hop_length(i) * h as f64),
            _ => None,
        }
    }

    /// `k_ij`, or `None` across components and for `i == j`.
    pub fn spring_constant(&self, i: usize, j: usize) -> Option<f64> {
        match self.dist.hops(i, j) {
            Some(h) if h > 0 => Some(self.stiffness / (h as f64 * h as f64)),
            _ => None,
        }
    }

    /// `½ k_ij (|p_i − p_j| − l_ij)²`, zero for pairs without a spring.
    pub fn pair_energy(&self, i: usize, j: usize, positions: &[Point]) -> f64 {
        match (self.spring_constant(i, j), self.ideal_length(i, j)) {
            (Some(k), Some(l)) => spring_energy(k, l, positions[i].distance(positions[j])),
            _ => 0.0,
        }
    }
}

pub fn spring_energy(k: f64, l: f64, distance: f64) -> f64 {
    let dev = distance - l;
    0.5 * k * dev * dev
}

/// A rectangle of the canvas reserved for one component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub origin: Point,
    pub size: Bounds,
}

/// Splits the canvas into a near-square grid with one cell per component,
/// filled row by row in component order.
pub fn pack_cells(count: usize, bounds: Bounds) -> Vec<Cell> {
    if count <= 1 {
        return vec![Cell { origin: Point::ZERO, size: bounds }; count];
    }
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    let size = Bounds::new(bounds.width / cols as f64, bounds.height / rows as f64);
    (0..count)
        .map(|c| Cell {
            origin: Point::new((c % cols) as f64 * size.width, (c / cols) as f64 * size.height),
            size,
        })
        .collect()
}

/// Maps every component's nodes from the full canvas into its cell.
fn pack_layout(layout: &mut Layout, model: &KkModel, cells: &[Cell]) {
    if cells.len() <= 1 {
        return;
    }
    let b = layout.bounds;
    for (members, cell) in model.components().iter().zip(cells) {
        for &i in members {
            let p = layout.positions[i];
            layout.positions[i] = Point::new(
                cell.origin.x + p.x / b.width * cell.size.width,
                cell.origin.y + p.y / b.height * cell.size.height,
            );
        }
    }
}

/// Total energy `Σ_{i<j} ½ k_ij (|p_i − p_j| − l_ij)²` over in-component pairs.
pub fn kk_energy(positions: &[Point], model: &KkModel) -> f64 {
    let mut total = 0.0;
    for members in model.components() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                total += model.pair_energy(i, j, positions);
            }
        }
    }
    total
}

/// `(∂E/∂x_i, ∂E/∂y_i)`.
pub fn kk_gradient(i: usize, positions: &[Point], model: &KkModel) -> Point {
    gradient_at(model, None, i, positions)
}

fn gradient_at(model: &KkModel, active: Option<&[bool]>, i: usize, positions: &[Point]) -> Point {
    let pi = positions[i];
    let c = model.component_of(i);
    let mut g = Point::ZERO;
    for &j in &model.components()[c] {
        if j == i || active.is_some_and(|a| !a[j]) {
            continue;
        }
        g += Kk::contribution(model, i, j, pi, positions[j]);
    }
    g
}

/// Gradient magnitude at node `i` — the selection key `Δ_i`.
pub fn kk_delta(i: usize, positions: &[Point], model: &KkModel) -> f64 {
    kk_gradient(i, positions, model).norm()
}

pub(crate) struct Derivatives {
    pub gradient: Point,
    pub hxx: f64,
    pub hxy: f64,
    pub hyy: f64,
}

/// Per-node Newton–Raphson solver with energy-descent enforcement.
pub(crate) struct NodeSolver {
    model: Arc<KkModel>,
    pub(crate) active: Option<Vec<bool>>,
    max_inner: usize,
    /// Relative tolerance; multiplied by `K·L` of the node's component.
    tolerance: f64,
    jitter: DetRng,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct NewtonOutcome {
    pub moved: bool,
    pub displacement: f64,
}

impl NodeSolver {
    pub(crate) fn new(model: Arc<KkModel>, active: Option<Vec<bool>>, max_inner: usize, tolerance: f64, seed: u64) -> Self {
        Self {
            model,
            active,
            max_inner,
            tolerance,
            jitter: DetRng::derived(seed, 0x6b6b),
        }
    }

    pub(crate) fn model(&self) -> &KkModel {
        &self.model
    }

    fn is_active(&self, j: usize) -> bool {
        self.active.as_ref().is_none_or(|a| a[j])
    }

    pub(crate) fn tolerance_for(&self, i: usize) -> f64 {
        self.tolerance * self.model.stiffness * self.model.hop_length(i)
    }

    /// Spring partners of `i`: same component, active, not `i`.
    fn partners(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let c = self.model.component_of(i);
        self.model.components[c]
            .iter()
            .copied()
            .filter(move |&j| j != i && self.is_active(j))
    }

    pub(crate) fn local_energy(&self, i: usize, positions: &[Point]) -> f64 {
        self.partners(i).map(|j| self.model.pair_energy(i, j, positions)).sum()
    }

    /// Moves `i` off any partner it coincides with.
    fn separate(&mut self, i: usize, positions: &mut [Point]) {
        let l = self.model.hop_length(i);
        for _ in 0..8 {
            let pi = positions[i];
            let clash = self.partners(i).any(|j| pi.distance(positions[j]) < COINCIDENT_FRACTION * l);
            if !clash {
                return;
            }
            positions[i] = pi + self.jitter.direction() * (JITTER_FRACTION * l);
        }
    }

    pub(crate) fn derivatives(&self, i: usize, positions: &[Point]) -> Derivatives {
        let pi = positions[i];
        let (mut gx, mut gy, mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in self.partners(i) {
            let (Some(k), Some(l)) = (self.model.spring_constant(i, j), self.model.ideal_length(i, j)) else {
                continue;
            };
            let dx = pi.x - positions[j].x;
            let dy = pi.y - positions[j].y;
            let d = (dx * dx + dy * dy).sqrt();
            let d3 = d * d * d;
            gx += k * (dx - l * dx / d);
            gy += k * (dy - l * dy / d);
            hxx += k * (1.0 - l * dy * dy / d3);
            hyy += k * (1.0 - l * dx * dx / d3);
            hxy += k * l * dx * dy / d3;
        }
        Derivatives {
            gradient: Point::new(gx, gy),
            hxx,
            hxy,
            hyy,
        }
    }

    /// Current `Δ_i`, separating coincident nodes first.
    pub(crate) fn delta(&mut self, i: usize, positions: &mut [Point]) -> f64 {
        self.separate(i, positions);
        self.derivatives(i, positions).gradient.norm()
    }

    /// Newton iterations on node `i` until `Δ_i` drops below tolerance or
    /// `max_inner` is reached. Each accepted move strictly lowers the energy.
    pub(crate) fn newton(&mut self, i: usize, positions: &mut [Point]) -> NewtonOutcome {
        let start = positions[i];
        let tol = self.tolerance_for(i);
        let l = self.model.hop_length(i);
        let mut moved = false;
        for _ in 0..self.max_inner {
            self.separate(i, positions);
            let der = self.derivatives(i, positions);
            let g = der.gradient;
            let gnorm = g.norm();
            if !(gnorm >= tol) {
                break;
            }
            let det = der.hxx * der.hyy - der.hxy * der.hxy;
            let scale = der.hxx.abs() + der.hyy.abs() + der.hxy.abs();
            let mut step = if det.abs() > 1e-12 * scale * scale && det.is_finite() {
                Point::new(
                    (-g.x * der.hyy + g.y * der.hxy) / det,
                    (-g.y * der.hxx + g.x * der.hxy) / det,
                )
            } else {
                Point::ZERO
            };
            // Singular or non-descent Newton direction: plain gradient step.
            if !(step.dot(g) < 0.0) || !step.is_finite() {
                step = g * (-FALLBACK_STEP_FRACTION * l / gnorm);
            }
            if !self.descend(i, positions, step) {
                break;
            }
            moved = true;
        }
        NewtonOutcome {
            moved,
            displacement: positions[i].distance(start),
        }
    }

    /// Tries `step`, halving it until the local energy drops by more than the
    /// rounding noise of the local sum. Leaves the node in place on failure.
    fn descend(&self, i: usize, positions: &mut [Point], step: Point) -> bool {
        let origin = positions[i];
        let before = self.local_energy(i, positions);
        let terms = self.model.components[self.model.component_of(i)].len() as f64;
        let noise = 4.0 * terms * f64::EPSILON;
        let mut step = step;
        for _ in 0..=MAX_HALVINGS {
            positions[i] = origin + step;
            let after = self.local_energy(i, positions);
            if after * (1.0 + noise) < before * (1.0 - noise) {
                return true;
            }
            step = step * 0.5;
        }
        positions[i] = origin;
        false
    }
}

/// Initial layout and model shared by the three variants.
pub(crate) struct KkSetup {
    pub model: KkModel,
    pub layout: Layout,
}

impl KkSetup {
    pub(crate) fn new(g: &Graph, mut layout: Layout, params: &KkParams) -> Result<Self, LayoutError> {
        if layout.len() != g.node_count() {
            return Err(LayoutError::SizeMismatch {
                positions: layout.len(),
                nodes: g.node_count(),
            });
        }
        let (model, cells) = KkModel::for_canvas(g, layout.bounds, params.l_scale_fraction, params.stiffness);
        pack_layout(&mut layout, &model, &cells);
        Ok(Self { model, layout })
    }
}

/// Classic Kamada–Kawai: each step runs Newton on the node with the largest
/// `Δ` (ties to the lowest index). Gradients of all nodes are kept current
/// incrementally after every move.
pub struct Kk {
    params: KkParams,
    layout: Layout,
    solver: NodeSolver,
    gradients: Vec<Point>,
    steps_since_refresh: usize,
}

impl Kk {
    pub fn new(g: &Graph, layout: Layout, params: KkParams, seed: u64) -> Result<Self, LayoutError> {
        params.validate()?;
        let setup = KkSetup::new(g, layout, &params)?;
        let model = Arc::new(setup.model);
        let mut kk = Self {
            solver: NodeSolver::new(model, None, params.max_inner, params.inner_tolerance, seed),
            params,
            layout: setup.layout,
            gradients: Vec::new(),
            steps_since_refresh: 0,
        };
        kk.refresh_gradients();
        Ok(kk)
    }

    pub fn model(&self) -> &KkModel {
        self.solver.model()
    }

    fn refresh_gradients(&mut self) {
        let n = self.layout.len();
        self.gradients = (0..n)
            .map(|i| {
                self.solver.separate(i, &mut self.layout.positions);
                self.solver.derivatives(i, &self.layout.positions).gradient
            })
            .collect();
        self.steps_since_refresh = 0;
    }

    /// Spring force contribution of partner `m` at `p_m` to node `j`'s gradient.
    pub(crate) fn contribution(model: &KkModel, j: usize, m: usize, pj: Point, pm: Point) -> Point {
        let (Some(k), Some(l)) = (model.spring_constant(j, m), model.ideal_length(j, m)) else {
            return Point::ZERO;
        };
        let delta = pj - pm;
        let d = delta.norm();
        if d == 0.0 {
            return Point::ZERO;
        }
        Point::new(k * (delta.x - l * delta.x / d), k * (delta.y - l * delta.y / d))
    }

    /// Node that the next step will move, by argmax `Δ` with ties to the lowest index.
    pub fn select(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, g) in self.gradients.iter().enumerate() {
            let delta = g.norm();
            if best.is_none_or(|(_, b)| delta > b) {
                best = Some((i, delta));
            }
        }
        best
    }
}

impl LayoutAlgorithm for Kk {
    fn name(&self) -> &'static str {
        "kk"
    }

    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn params(&self) -> Value {
        serde_json::to_value(&self.params).expect("params serialize")
    }

    fn step(&mut self) -> Result<StepReport, LayoutError> {
        if self.steps_since_refresh >= self.layout.len().max(1) {
            self.refresh_gradients();
        }
        let Some((node, delta)) = self.select() else {
            return Ok(StepReport {
                converged: true,
                ..Default::default()
            });
        };
        if !(delta >= self.solver.tolerance_for(node)) {
            // Incremental gradients may drift; confirm on fresh values.
            self.refresh_gradients();
            match self.select() {
                Some((n, d)) if d >= self.solver.tolerance_for(n) => {}
                _ => {
                    return Ok(StepReport {
                        converged: true,
                        ..Default::default()
                    })
                }
            }
        }
        let (node, _) = self.select().expect("non-empty graph");
        let old = self.layout.positions[node];
        let outcome = self.solver.newton(node, &mut self.layout.positions);
        let new = self.layout.positions[node];
        let model = &self.solver.model;
        if old != new {
            let c = model.component_of(node);
            for &j in &model.components()[c] {
                if j == node {
                    continue;
                }
                let pj = self.layout.positions[j];
                self.gradients[j] -= Self::contribution(model, j, node, pj, old);
                self.gradients[j] += Self::contribution(model, j, node, pj, new);
            }
        }
        self.gradients[node] = self.solver.derivatives(node, &self.layout.positions).gradient;
        self.steps_since_refresh += 1;
        Ok(StepReport {
            moved_nodes: usize::from(outcome.moved),
            max_displacement: outcome.displacement,
            converged: false,
        })
    }
}

#[cfg(test)]
mod tests;
