//! ForceAtlas2-style forces with a capped, decaying step size.

use serde::Serialize;
use serde_json::Value;

use super::{default_k, degrees, fa2_attraction, fa2_gravity, fa2_repulsion, first_non_finite, unit_between};
use crate::engine::{Layout, LayoutAlgorithm, StepReport};
use crate::error::{LayoutError, ParamError};
use crate::geometry::Point;
use crate::graph::Graph;
use crate::params::{require, ParamMap, ParamReader};
use crate::rng::DetRng;

/// Step size never decays below this fraction of `step0`.
pub const STEP_FLOOR_FRACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fa2Params {
    pub k_r: f64,
    pub k_g: f64,
    pub strong_gravity: bool,
    /// Initial displacement cap; `None` means 10% of the canvas width.
    pub step0: Option<f64>,
    pub step_decay: f64,
    /// `None` means `10⁻³·√(area/n)`.
    pub min_distance: Option<f64>,
}

impl Default for Fa2Params {
    fn default() -> Self {
        Self {
            k_r: 1.0,
            k_g: 1.0,
            strong_gravity: false,
            step0: None,
            step_decay: 0.995,
            min_distance: None,
        }
    }
}

impl Fa2Params {
    pub fn from_map(map: &ParamMap) -> Result<Self, ParamError> {
        let d = Self::default();
        let mut r = ParamReader::new(map, "fa2");
        let p = Self {
            k_r: r.f64("k_r", d.k_r)?,
            k_g: r.f64("k_g", d.k_g)?,
            strong_gravity: r.bool("strong_gravity", d.strong_gravity)?,
            step0: r.f64_opt("step0")?,
            step_decay: r.f64("step_decay", d.step_decay)?,
            min_distance: r.f64_opt("min_distance")?,
        };
        r.finish()?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        require(self.k_r >= 0.0 && self.k_r.is_finite(), "k_r", "must be non-negative")?;
        require(self.k_g >= 0.0 && self.k_g.is_finite(), "k_g", "must be non-negative")?;
        let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
        require(positive(self.step0), "step0", "must be positive")?;
        require(positive(self.min_distance), "min_distance", "must be positive")?;
        require(self.step_decay > 0.0 && self.step_decay <= 1.0, "step_decay", "must be in (0, 1]")?;
        Ok(())
    }
}

pub struct Fa2 {
    params: Fa2Params,
    layout: Layout,
    edges: Vec<(usize, usize)>,
    degree: Vec<usize>,
    step: f64,
    step0: f64,
    min_distance: f64,
    iteration: u64,
    jitter: DetRng,
}

impl Fa2 {
    pub fn new(g: &Graph, layout: Layout, params: Fa2Params, seed: u64) -> Result<Self, LayoutError> {
        params.validate()?;
        if layout.len() != g.node_count() {
            return Err(LayoutError::SizeMismatch {
                positions: layout.len(),
                nodes: g.node_count(),
            });
        }
        let step0 = params.step0.unwrap_or(0.1 * layout.bounds.width);
        let min_distance = params
            .min_distance
            .unwrap_or(1e-3 * default_k(layout.bounds.area(), g.node_count()));
        Ok(Self {
            params,
            edges: g.edges().to_vec(),
            degree: degrees(g),
            step: step0,
            step0,
            min_distance,
            layout,
            iteration: 0,
            jitter: DetRng::derived(seed, 0x6661),
        })
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn displacements(&mut self) -> Vec<Point> {
        let pos = &self.layout.positions;
        let n = pos.len();
        let mut disp = vec![Point::ZERO; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (u, d) = unit_between(pos[i], pos[j], &mut self.jitter);
                let f = u * fa2_repulsion(self.degree[i], self.degree[j], d.max(self.min_distance), self.params.k_r);
                disp[i] -= f;
                disp[j] += f;
            }
        }
        for &(a, b) in &self.edges {
            let (u, d) = unit_between(pos[a], pos[b], &mut self.jitter);
            let f = u * fa2_attraction(d);
            disp[a] += f;
            disp[b] -= f;
        }
        let center = self.layout.bounds.center();
        for (i, p) in pos.iter().enumerate() {
            let delta = center - *p;
            let d = delta.norm();
            if d > 0.0 {
                let g = fa2_gravity(self.degree[i], self.params.k_g, d, self.params.strong_gravity);
                disp[i] += delta * (g / d);
            }
        }
        disp
    }
}

impl LayoutAlgorithm for Fa2 {
    fn name(&self) -> &'static str {
        "fa2"
    }

    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn params(&self) -> Value {
        let resolved = Fa2Params {
            step0: Some(self.step0),
            min_distance: Some(self.min_distance),
            ..self.params.clone()
        };
        serde_json::to_value(resolved).expect("params serialize")
    }

    fn step(&mut self) -> Result<StepReport, LayoutError> {
        let disp = self.displacements();
        if let Some(node) = first_non_finite(&disp) {
            return Err(LayoutError::NonFinite {
                algorithm: "fa2".to_string(),
                iteration: self.iteration,
                node,
            });
        }
        let cap = self.step;
        let mut report = StepReport::default();
        for (p, v) in self.layout.positions.iter_mut().zip(&disp) {
            let len = v.norm();
            if len == 0.0 {
                continue;
            }
            let target = self.layout.bounds.clamp(*p + *v * (len.min(cap) / len));
            let moved = target.distance(*p);
            if moved > 0.0 {
                report.moved_nodes += 1;
            }
            report.max_displacement = report.max_displacement.max(moved);
            *p = target;
        }
        self.step = (cap * self.params.step_decay).max(STEP_FLOOR_FRACTION * self.step0);
        self.iteration += 1;
        Ok(report)
    }
}
