//! Davidson–Harel style simulated annealing over an attraction/repulsion
//! energy.
//!
//! Two energy forms are available. `Potential` (the default) integrates the
//! FR force laws: `d³/(3k)` per edge and `-k²·ln d` per pair, so the net force
//! on a pair vanishes at `d = k` and the energy has a minimum there.
//! `ForceSum` adds the raw force magnitudes instead, `d²/k` per edge and
//! `-k²/d` per pair; that sum grows monotonically with distance and so drives
//! every layout toward collapse, and is kept for comparison only.

use serde::Serialize;
use serde_json::Value;

use crate::engine::{Layout, LayoutAlgorithm, StepReport};
use crate::error::{LayoutError, ParamError};
use crate::force::{default_k, fr_attraction, fr_repulsion};
use crate::geometry::Point;
use crate::graph::Graph;
use crate::params::{require, ParamMap, ParamReader};
use crate::rng::DetRng;

/// Pair distances below this fraction of `k` are evaluated at that distance.
pub const MIN_DISTANCE_FRACTION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyForm {
    Potential,
    ForceSum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "phi")]
pub enum AcceptanceMode {
    /// Accept uphill moves iff `u < p`.
    Metropolis,
    /// Accept uphill moves iff `p < φ`.
    Threshold(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DhParams {
    /// `None` means `|E₀|/n`, or 1 if the initial energy is zero.
    #[serde(rename = "T0")]
    pub t0: Option<f64>,
    pub cooling: f64,
    pub boltzmann_k: f64,
    /// `None` means 10% of the canvas diagonal.
    pub move_radius0: Option<f64>,
    pub radius_decay: f64,
    /// `None` means `√(area/n)`.
    pub fr_k: Option<f64>,
    pub acceptance_mode: AcceptanceMode,
    pub energy_form: EnergyForm,
}

impl Default for DhParams {
    fn default() -> Self {
        Self {
            t0: None,
            cooling: 0.95,
            boltzmann_k: 1.0,
            move_radius0: None,
            radius_decay: 0.98,
            fr_k: None,
            acceptance_mode: AcceptanceMode::Metropolis,
            energy_form: EnergyForm::Potential,
        }
    }
}

impl DhParams {
    pub fn from_map(map: &ParamMap) -> Result<Self, ParamError> {
        let d = Self::default();
        let mut r = ParamReader::new(map, "dh");
        let mut p = Self {
            t0: r.f64_opt("T0")?,
            cooling: r.f64("cooling", d.cooling)?,
            boltzmann_k: r.f64("boltzmann_k", d.boltzmann_k)?,
            move_radius0: r.f64_opt("move_radius0")?,
            radius_decay: r.f64("radius_decay", d.radius_decay)?,
            fr_k: r.f64_opt("fr_k")?,
            ..d
        };
        let phi = r.f64_opt("phi")?;
        p.acceptance_mode = match (r.string("acceptance_mode")?, phi) {
            (None | Some("metropolis"), None) => AcceptanceMode::Metropolis,
            (None | Some("threshold"), Some(phi)) => AcceptanceMode::Threshold(phi),
            (Some("threshold"), None) => return Err(invalid("phi", "required by acceptance_mode=threshold")),
            (Some("metropolis"), Some(_)) => return Err(invalid("phi", "only used by acceptance_mode=threshold")),
            (Some(other), _) => {
                return Err(invalid("acceptance_mode", &format!("expected metropolis or threshold, got {other}")))
            }
        };
        p.energy_form = match r.string("energy_form")? {
            None | Some("potential") => EnergyForm::Potential,
            Some("force_sum") => EnergyForm::ForceSum,
            Some(other) => return Err(invalid("energy_form", &format!("expected potential or force_sum, got {other}"))),
        };
        r.finish()?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
        require(positive(self.t0), "T0", "must be positive")?;
        require(self.cooling > 0.0 && self.cooling < 1.0, "cooling", "must be in (0, 1)")?;
        require(self.boltzmann_k > 0.0 && self.boltzmann_k.is_finite(), "boltzmann_k", "must be positive")?;
        require(positive(self.move_radius0), "move_radius0", "must be positive")?;
        require(self.radius_decay > 0.0 && self.radius_decay <= 1.0, "radius_decay", "must be in (0, 1]")?;
        require(positive(self.fr_k), "fr_k", "must be positive")?;
        if let AcceptanceMode::Threshold(phi) = self.acceptance_mode {
            require(phi.is_finite(), "phi", "must be finite")?;
        }
        Ok(())
    }
}

fn invalid(key: &str, message: &str) -> ParamError {
    ParamError::Invalid {
        key: key.to_string(),
        message: message.to_string(),
    }
}

/// Energy terms for one ideal distance `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DhEnergy {
    pub k: f64,
    pub form: EnergyForm,
}

impl DhEnergy {
    pub fn new(k: f64, form: EnergyForm) -> Self {
        Self { k, form }
    }

    fn guard(&self, d: f64) -> f64 {
        d.max(MIN_DISTANCE_FRACTION * self.k)
    }

    /// Contribution of an adjacent pair beyond its repulsion term.
    pub fn attraction(&self, d: f64) -> f64 {
        match self.form {
            EnergyForm::Potential => d * d * d / (3.0 * self.k),
            EnergyForm::ForceSum => fr_attraction(d, self.k),
        }
    }

    /// Contribution of any pair.
    pub fn repulsion(&self, d: f64) -> f64 {
        let d = self.guard(d);
        match self.form {
            EnergyForm::Potential => -(self.k * self.k) * d.ln(),
            EnergyForm::ForceSum => fr_repulsion(d, self.k, 0.0),
        }
    }
}

/// Attraction over edges plus repulsion over all unordered pairs.
pub fn dh_energy(positions: &[Point], g: &Graph, energy: DhEnergy) -> f64 {
    let mut e = 0.0;
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            e += energy.repulsion(positions[i].distance(positions[j]));
        }
    }
    for &(u, v) in g.edges() {
        e += energy.attraction(positions[u].distance(positions[v]));
    }
    e
}

/// Terms of the energy that involve node `i` when it sits at `at`.
fn node_energy(i: usize, at: Point, positions: &[Point], g: &Graph, energy: DhEnergy) -> f64 {
    let mut e = 0.0;
    for (j, &pj) in positions.iter().enumerate() {
        if j != i {
            e += energy.repulsion(at.distance(pj));
        }
    }
    for &j in g.neighbors(i) {
        e += energy.attraction(at.distance(positions[j]));
    }
    e
}

/// `E' - E` for moving node `i` to `new_pos`, from the terms involving `i` only.
pub fn dh_candidate_energy_delta(i: usize, new_pos: Point, positions: &[Point], g: &Graph, energy: DhEnergy) -> f64 {
    if new_pos == positions[i] {
        return 0.0;
    }
    node_energy(i, new_pos, positions, g, energy) - node_energy(i, positions[i], positions, g, energy)
}

/// Acceptance test for an energy change at temperature `t` given a uniform
/// draw `u` in `[0, 1)`.
pub fn dh_accept(delta: f64, t: f64, boltzmann_k: f64, mode: AcceptanceMode, u: f64) -> bool {
    if delta <= 0.0 {
        return true;
    }
    let p = if t > 0.0 { (-delta / (boltzmann_k * t)).exp() } else { 0.0 };
    match mode {
        AcceptanceMode::Metropolis => u < p,
        AcceptanceMode::Threshold(phi) => p < phi,
    }
}

pub struct Dh {
    params: DhParams,
    layout: Layout,
    graph: Graph,
    energy: DhEnergy,
    t0: f64,
    radius0: f64,
    sweeps: u64,
    current: f64,
    rng: DetRng,
}

impl Dh {
    pub fn new(g: &Graph, layout: Layout, params: DhParams, seed: u64) -> Result<Self, LayoutError> {
        params.validate()?;
        let n = g.node_count();
        if layout.len() != n {
            return Err(LayoutError::SizeMismatch {
                positions: layout.len(),
                nodes: n,
            });
        }
        let k = params.fr_k.unwrap_or_else(|| default_k(layout.bounds.area(), n));
        let energy = DhEnergy::new(k, params.energy_form);
        let mut layout = layout;
        let mut rng = DetRng::derived(seed, 0x6468);
        separate_coincident(&mut layout, k, &mut rng);
        let current = dh_energy(&layout.positions, g, energy);
        let t0 = params.t0.unwrap_or_else(|| {
            let t = current.abs() / n.max(1) as f64;
            if t > 0.0 && t.is_finite() {
                t
            } else {
                1.0
            }
        });
        let radius0 = params.move_radius0.unwrap_or(0.1 * layout.bounds.diagonal());
        Ok(Self {
            params,
            layout,
            graph: g.clone(),
            energy,
            t0,
            radius0,
            sweeps: 0,
            current,
            rng,
        })
    }

    /// `T₀·cooling^s` after `s` sweeps.
    pub fn temperature(&self) -> f64 {
        self.t0 * self.params.cooling.powi(self.sweeps.min(i32::MAX as u64) as i32)
    }

    pub fn move_radius(&self) -> f64 {
        self.radius0 * self.params.radius_decay.powi(self.sweeps.min(i32::MAX as u64) as i32)
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    pub fn energy_model(&self) -> DhEnergy {
        self.energy
    }

    /// Energy tracked through accepted deltas.
    pub fn tracked_energy(&self) -> f64 {
        self.current
    }
}

/// Nudges nodes that coincide exactly with an earlier node.
fn separate_coincident(layout: &mut Layout, k: f64, rng: &mut DetRng) {
    let n = layout.len();
    for i in 0..n {
        for _ in 0..8 {
            let pi = layout.positions[i];
            if !(0..i).any(|j| layout.positions[j] == pi) {
                break;
            }
            layout.positions[i] = layout.bounds.clamp(pi + rng.direction() * (1e-3 * k));
        }
    }
}

impl LayoutAlgorithm for Dh {
    fn name(&self) -> &'static str {
        "dh"
    }

    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn params(&self) -> Value {
        let resolved = DhParams {
            t0: Some(self.t0),
            move_radius0: Some(self.radius0),
            fr_k: Some(self.energy.k),
            ..self.params.clone()
        };
        serde_json::to_value(resolved).expect("params serialize")
    }

    /// One sweep of `n` proposals, then one cooling step.
    fn step(&mut self) -> Result<StepReport, LayoutError> {
        let n = self.layout.len();
        let t = self.temperature();
        let radius = self.move_radius();
        let mut report = StepReport::default();
        for _ in 0..n {
            let i = self.rng.below(n);
            let r = radius * self.rng.unit().sqrt();
            let angle = std::f64::consts::TAU * self.rng.unit();
            let old = self.layout.positions[i];
            let proposal = self
                .layout
                .bounds
                .clamp(Point::new(old.x + r * angle.cos(), old.y + r * angle.sin()));
            let u = self.rng.unit();
            let delta = dh_candidate_energy_delta(i, proposal, &self.layout.positions, &self.graph, self.energy);
            if !delta.is_finite() {
                return Err(LayoutError::NonFinite {
                    algorithm: "dh".to_string(),
                    iteration: self.sweeps,
                    node: i,
                });
            }
            if dh_accept(delta, t, self.params.boltzmann_k, self.params.acceptance_mode, u) {
                let moved = proposal.distance(old);
                if moved > 0.0 {
                    report.moved_nodes += 1;
                }
                report.max_displacement = report.max_displacement.max(moved);
                self.layout.positions[i] = proposal;
                self.current += delta;
            }
        }
        self.sweeps += 1;
        Ok(report)
    }
}
