//! Force laws of the spring-electrical family and the stepping algorithms
//! built on them.
//!
//! Every function returns a signed magnitude along the line joining the two
//! nodes: positive pulls the pair together, negative pushes it apart.

mod fa2;
mod fr;

pub use fa2::{Fa2, Fa2Params};
pub use fr::{AttractionForm, Fr, FrParams, PairKSource};

use crate::geometry::Point;
use crate::graph::Graph;
use crate::rng::DetRng;

/// Spring attraction `d²/k`.
pub fn fr_attraction(d: f64, k: f64) -> f64 {
    d * d / k
}

/// Electrical repulsion `-k²/d`, with `d` clamped to at least `min_distance`.
pub fn fr_repulsion(d: f64, k: f64, min_distance: f64) -> f64 {
    -(k * k) / d.max(min_distance)
}

/// Stronger attraction `d³/k` for a per-pair ideal distance.
pub fn frr_attraction(d: f64, k_pair: f64) -> f64 {
    d * d * d / k_pair
}

/// Logarithmic attraction `ln(1 + d)`.
pub fn fa2_attraction(d: f64) -> f64 {
    d.ln_1p()
}

/// Degree-weighted repulsion magnitude `k_r(deg₁+1)(deg₂+1)/d`.
pub fn fa2_repulsion(deg1: usize, deg2: usize, d: f64, k_r: f64) -> f64 {
    // Degree product first: exact in f64 and symmetric in the two nodes.
    k_r * ((deg1 as f64 + 1.0) * (deg2 as f64 + 1.0)) / d
}

/// Pull toward the canvas center: `k_g(deg+1)`, times the distance to the
/// center when `strong`.
pub fn fa2_gravity(deg: usize, k_g: f64, d_center: f64, strong: bool) -> f64 {
    let base = k_g * (deg as f64 + 1.0);
    if strong {
        base * d_center
    } else {
        base
    }
}

/// Default ideal distance `√(area/n)`.
pub fn default_k(area: f64, n: usize) -> f64 {
    (area / n.max(1) as f64).sqrt()
}

/// Unit vector from `from` to `to` and the distance between them. Coincident
/// points get a random direction and distance 0.
pub(crate) fn unit_between(from: Point, to: Point, jitter: &mut DetRng) -> (Point, f64) {
    let delta = to - from;
    let d = delta.norm();
    if d > 0.0 && d.is_finite() {
        (delta * (1.0 / d), d)
    } else {
        (jitter.direction(), 0.0)
    }
}

/// Checks a displacement batch, naming the first node that went non-finite.
pub(crate) fn first_non_finite(disp: &[Point]) -> Option<usize> {
    disp.iter().position(|p| !p.is_finite())
}

pub(crate) fn degrees(g: &Graph) -> Vec<usize> {
    (0..g.node_count()).map(|i| g.degree(i)).collect()
}
