//! Fruchterman–Reingold and its per-pair-distance variant.

use serde::Serialize;
use serde_json::Value;

use super::{default_k, first_non_finite, fr_attraction, fr_repulsion, frr_attraction, unit_between};
use crate::engine::{Layout, LayoutAlgorithm, StepReport};
use crate::error::{LayoutError, ParamError};
use crate::geometry::Point;
use crate::graph::Graph;
use crate::params::{require, ParamMap, ParamReader};
use crate::rng::DetRng;

/// Temperature never cools below this fraction of `k`.
pub const TEMPERATURE_FLOOR_FRACTION: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractionForm {
    /// `d²/k`
    Square,
    /// `d³/k`
    Cubic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKSource {
    /// Adjacent pairs use `weight × k`; unweighted graphs fall back to `k`.
    EdgeWeight,
    GlobalK,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrParams {
    /// Ideal distance; `None` means `√(area/n)`.
    pub k: Option<f64>,
    /// Initial temperature; `None` means 10% of the canvas width.
    pub t0: Option<f64>,
    pub cooling: f64,
    /// `None` means `10⁻³·k`.
    pub min_distance: Option<f64>,
    pub attraction: AttractionForm,
    pub pair_k_source: PairKSource,
}

impl FrParams {
    pub fn fr() -> Self {
        Self {
            k: None,
            t0: None,
            cooling: 0.995,
            min_distance: None,
            attraction: AttractionForm::Square,
            pair_k_source: PairKSource::GlobalK,
        }
    }

    pub fn frr() -> Self {
        Self {
            attraction: AttractionForm::Cubic,
            pair_k_source: PairKSource::EdgeWeight,
            ..Self::fr()
        }
    }

    /// Reads `fr` keys, or `frr` keys when `reinforced`.
    pub fn from_map(map: &ParamMap, reinforced: bool) -> Result<Self, ParamError> {
        let d = if reinforced { Self::frr() } else { Self::fr() };
        let mut r = ParamReader::new(map, if reinforced { "frr" } else { "fr" });
        let mut p = Self {
            k: r.f64_opt("k")?,
            t0: r.f64_opt("t0")?,
            cooling: r.f64("cooling", d.cooling)?,
            min_distance: r.f64_opt("min_distance")?,
            ..d
        };
        if reinforced {
            p.attraction = match r.string("attraction")? {
                None => p.attraction,
                Some("square") => AttractionForm::Square,
                Some("cubic") => AttractionForm::Cubic,
                Some(other) => return Err(invalid("attraction", format!("expected square or cubic, got {other}"))),
            };
            p.pair_k_source = match r.string("pair_k_source")? {
                None => p.pair_k_source,
                Some("edge_weight") => PairKSource::EdgeWeight,
                Some("global_k") => PairKSource::GlobalK,
                Some(other) => {
                    return Err(invalid("pair_k_source", format!("expected edge_weight or global_k, got {other}")))
                }
            };
        }
        r.finish()?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
        require(positive(self.k), "k", "must be positive")?;
        require(positive(self.t0), "t0", "must be positive")?;
        require(positive(self.min_distance), "min_distance", "must be positive")?;
        require(self.cooling > 0.0 && self.cooling <= 1.0, "cooling", "must be in (0, 1]")?;
        Ok(())
    }
}

fn invalid(key: &str, message: String) -> ParamError {
    ParamError::Invalid {
        key: key.to_string(),
        message,
    }
}

/// Spring-electrical stepper shared by `fr` and `frr`.
pub struct Fr {
    name: &'static str,
    params: FrParams,
    layout: Layout,
    edges: Vec<(usize, usize)>,
    /// Ideal distance per edge, parallel to `edges`.
    pair_k: Vec<f64>,
    k: f64,
    min_distance: f64,
    temperature: f64,
    floor: f64,
    iteration: u64,
    jitter: DetRng,
}

impl Fr {
    /// Plain FR; reports itself as `fr`.
    #[allow(clippy::self_named_constructors)]
    pub fn fr(g: &Graph, layout: Layout, params: FrParams, seed: u64) -> Result<Self, LayoutError> {
        Self::build("fr", g, layout, params, seed)
    }

    /// The per-pair variant; reports itself as `frr`.
    pub fn frr(g: &Graph, layout: Layout, params: FrParams, seed: u64) -> Result<Self, LayoutError> {
        Self::build("frr", g, layout, params, seed)
    }

    fn build(name: &'static str, g: &Graph, layout: Layout, params: FrParams, seed: u64) -> Result<Self, LayoutError> {
        params.validate()?;
        if layout.len() != g.node_count() {
            return Err(LayoutError::SizeMismatch {
                positions: layout.len(),
                nodes: g.node_count(),
            });
        }
        let k = params.k.unwrap_or_else(|| default_k(layout.bounds.area(), g.node_count()));
        let pair_k = match (params.pair_k_source, g.weights()) {
            (PairKSource::EdgeWeight, Some(w)) => w.iter().map(|&w| w * k).collect(),
            _ => vec![k; g.edge_count()],
        };
        let temperature = params.t0.unwrap_or(0.1 * layout.bounds.width);
        Ok(Self {
            name,
            min_distance: params.min_distance.unwrap_or(1e-3 * k),
            params,
            edges: g.edges().to_vec(),
            pair_k,
            k,
            floor: TEMPERATURE_FLOOR_FRACTION * k,
            temperature,
            layout,
            iteration: 0,
            jitter: DetRng::derived(seed, 0x6672),
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn ideal_distance(&self) -> f64 {
        self.k
    }

    fn attraction(&self, d: f64, k_pair: f64) -> f64 {
        match self.params.attraction {
            AttractionForm::Square => fr_attraction(d, k_pair),
            AttractionForm::Cubic => frr_attraction(d, k_pair),
        }
    }

    /// Net displacement of every node; positive magnitudes pull toward the partner.
    pub fn displacements(&mut self) -> Vec<Point> {
        let pos = &self.layout.positions;
        let n = pos.len();
        let mut disp = vec![Point::ZERO; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (u, d) = unit_between(pos[i], pos[j], &mut self.jitter);
                let f = u * fr_repulsion(d, self.k, self.min_distance);
                disp[i] += f;
                disp[j] -= f;
            }
        }
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let (u, d) = unit_between(pos[a], pos[b], &mut self.jitter);
            let kp = self.pair_k[e];
            let mut f = self.attraction(d, kp);
            if kp != self.k {
                // Adjacent pairs repel with their own ideal distance.
                f += fr_repulsion(d, kp, self.min_distance) - fr_repulsion(d, self.k, self.min_distance);
            }
            disp[a] += u * f;
            disp[b] -= u * f;
        }
        disp
    }
}

impl LayoutAlgorithm for Fr {
    fn name(&self) -> &'static str {
        self.name
    }

    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn params(&self) -> Value {
        let resolved = FrParams {
            k: Some(self.k),
            t0: Some(self.params.t0.unwrap_or(0.1 * self.layout.bounds.width)),
            min_distance: Some(self.min_distance),
            ..self.params.clone()
        };
        serde_json::to_value(resolved).expect("params serialize")
    }

    fn step(&mut self) -> Result<StepReport, LayoutError> {
        let disp = self.displacements();
        if let Some(node) = first_non_finite(&disp) {
            return Err(LayoutError::NonFinite {
                algorithm: self.name.to_string(),
                iteration: self.iteration,
                node,
            });
        }
        let t = self.temperature;
        let mut report = StepReport::default();
        for (p, v) in self.layout.positions.iter_mut().zip(&disp) {
            let len = v.norm();
            if len == 0.0 {
                continue;
            }
            let target = self.layout.bounds.clamp(*p + *v * (len.min(t) / len));
            let moved = target.distance(*p);
            if moved > 0.0 {
                report.moved_nodes += 1;
            }
            report.max_displacement = report.max_displacement.max(moved);
            *p = target;
        }
        self.temperature = (t * self.params.cooling).max(self.floor);
        self.iteration += 1;
        Ok(report)
    }
}
