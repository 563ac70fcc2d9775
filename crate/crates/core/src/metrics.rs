//! Layout quality measures: edge crossings and edge-length spread.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::engine::Layout;
use crate::error::MetricsError;
use crate::geometry::Point;
use crate::graph::Graph;

/// Absolute tolerance (canvas units squared) below which an orientation
/// determinant counts as collinear.
pub const COLLINEAR_EPS: f64 = 1e-12;

fn lex_less(a: Point, b: Point) -> bool {
    (a.x, a.y) < (b.x, b.y)
}

/// Sign of the turn from segment `a→b` to point `c`, evaluated on the
/// lexicographically ordered segment so the result does not depend on which
/// endpoint is listed first.
fn orientation(a: Point, b: Point, c: Point) -> i8 {
    let (lo, hi, flip) = if lex_less(b, a) { (b, a, -1) } else { (a, b, 1) };
    let det = (hi - lo).cross(c - lo);
    if det.abs() <= COLLINEAR_EPS {
        0
    } else if det > 0.0 {
        flip
    } else {
        -flip
    }
}

/// True iff the open interiors of `p1p2` and `p3p4` intersect, or the
/// segments are collinear with overlapping interiors. Touching only at an
/// endpoint is not a crossing, and zero-length segments never cross.
pub fn segments_cross(p1: Point, p2: Point, p3: Point, p4: Point) -> bool {
    if p1 == p2 || p3 == p4 {
        return false;
    }
    let o1 = orientation(p1, p2, p3);
    let o2 = orientation(p1, p2, p4);
    let o3 = orientation(p3, p4, p1);
    let o4 = orientation(p3, p4, p2);
    if o1 == 0 && o2 == 0 && o3 == 0 && o4 == 0 {
        return collinear_overlap(p1, p2, p3, p4);
    }
    o1 * o2 < 0 && o3 * o4 < 0
}

fn collinear_overlap(p1: Point, p2: Point, p3: Point, p4: Point) -> bool {
    // Project on the axis where the combined extent is largest.
    let span_x = p1.x.max(p2.x).max(p3.x).max(p4.x) - p1.x.min(p2.x).min(p3.x).min(p4.x);
    let span_y = p1.y.max(p2.y).max(p3.y).max(p4.y) - p1.y.min(p2.y).min(p3.y).min(p4.y);
    let key = |p: Point| if span_x >= span_y { p.x } else { p.y };
    let (a0, a1) = (key(p1).min(key(p2)), key(p1).max(key(p2)));
    let (b0, b1) = (key(p3).min(key(p4)), key(p3).max(key(p4)));
    a0.max(b0) < a1.min(b1)
}

fn edge_pair_crosses(g: &Graph, pos: &[Point], e: usize, f: usize) -> bool {
    let (a, b) = g.edges()[e];
    let (c, d) = g.edges()[f];
    if a == c || a == d || b == c || b == d {
        return false;
    }
    segments_cross(pos[a], pos[b], pos[c], pos[d])
}

/// Reference O(m²) count over unordered edge pairs that do not share a
/// graph endpoint.
pub fn count_crossings(g: &Graph, layout: &Layout) -> u64 {
    let m = g.edge_count();
    let mut count = 0;
    for e in 0..m {
        for f in (e + 1)..m {
            if edge_pair_crosses(g, &layout.positions, e, f) {
                count += 1;
            }
        }
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SweepCount {
    pub crossings: u64,
    /// Set when the grid was abandoned for the brute-force path.
    pub fell_back: bool,
}

/// Same value as [`count_crossings`], computed with uniform grid binning.
///
/// Every edge is registered in each cell its bounding box covers. A candidate
/// pair is tested only in the cell holding the lower corner of the
/// intersection of the two bounding boxes, so each pair is tested at most
/// once. Falls back to brute force when coordinates are non-finite or the
/// binning would cost more than the quadratic scan (long, overlapping edges).
pub fn count_crossings_sweep(g: &Graph, layout: &Layout) -> SweepCount {
    let m = g.edge_count();
    let pos = &layout.positions;
    let brute = || SweepCount {
        crossings: count_crossings(g, layout),
        fell_back: true,
    };
    if m < 2 {
        return SweepCount {
            crossings: 0,
            fell_back: false,
        };
    }
    if pos.iter().any(|p| !p.is_finite()) {
        return brute();
    }

    let (mut min, mut max) = (Point::new(f64::MAX, f64::MAX), Point::new(f64::MIN, f64::MIN));
    for &(u, v) in g.edges() {
        for p in [pos[u], pos[v]] {
            min = Point::new(min.x.min(p.x), min.y.min(p.y));
            max = Point::new(max.x.max(p.x), max.y.max(p.y));
        }
    }
    let extent = (max - min).x.max((max - min).y);
    if !(extent > 0.0) || !extent.is_finite() {
        return brute();
    }
    let side = ((m as f64).sqrt().ceil() as usize).clamp(1, 1024);
    let cell = extent / side as f64;
    let cell_of = |v: f64, lo: f64| (((v - lo) / cell) as usize).min(side - 1);

    let boxes: Vec<(Point, Point)> = g
        .edges()
        .iter()
        .map(|&(u, v)| {
            let (a, b) = (pos[u], pos[v]);
            (Point::new(a.x.min(b.x), a.y.min(b.y)), Point::new(a.x.max(b.x), a.y.max(b.y)))
        })
        .collect();

    let mut registrations = 0usize;
    for (lo, hi) in &boxes {
        let w = cell_of(hi.x, min.x) - cell_of(lo.x, min.x) + 1;
        let h = cell_of(hi.y, min.y) - cell_of(lo.y, min.y) + 1;
        registrations += w * h;
    }
    // Each registration may pair with every other edge in its cell; if cells
    // are this crowded the grid gains nothing.
    if registrations > 8 * m * side || registrations > m * m / 2 + 4 * m {
        return brute();
    }

    let mut cells: Vec<Vec<u32>> = vec![Vec::new(); side * side];
    for (e, (lo, hi)) in boxes.iter().enumerate() {
        for cy in cell_of(lo.y, min.y)..=cell_of(hi.y, min.y) {
            for cx in cell_of(lo.x, min.x)..=cell_of(hi.x, min.x) {
                cells[cy * side + cx].push(e as u32);
            }
        }
    }

    let mut count = 0u64;
    for (idx, members) in cells.iter().enumerate() {
        let (cx, cy) = (idx % side, idx / side);
        for (i, &e) in members.iter().enumerate() {
            let (elo, ehi) = boxes[e as usize];
            for &f in &members[i + 1..] {
                let (flo, fhi) = boxes[f as usize];
                if elo.x > fhi.x || flo.x > ehi.x || elo.y > fhi.y || flo.y > ehi.y {
                    continue;
                }
                let corner = Point::new(elo.x.max(flo.x), elo.y.max(flo.y));
                if cell_of(corner.x, min.x) != cx || cell_of(corner.y, min.y) != cy {
                    continue;
                }
                if edge_pair_crosses(g, pos, e as usize, f as usize) {
                    count += 1;
                }
            }
        }
    }
    SweepCount {
        crossings: count,
        fell_back: false,
    }
}

/// Mean and population standard deviation of drawn edge lengths.
pub fn edge_length_stddev(g: &Graph, layout: &Layout) -> Result<(f64, f64), MetricsError> {
    if g.edge_count() == 0 {
        return Err(MetricsError::NoEdges);
    }
    // Welford's running update.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &(u, v)) in g.edges().iter().enumerate() {
        let len = layout.positions[u].distance(layout.positions[v]);
        let delta = len - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (len - mean);
    }
    let var = (m2 / g.edge_count() as f64).max(0.0);
    Ok((mean, var.sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub crossings: u64,
    pub edge_length_mean: f64,
    pub edge_length_stddev: f64,
    pub edge_count: usize,
    #[serde(rename = "compute_time_ms", serialize_with = "ms")]
    pub compute_time: Duration,
}

fn ms<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1000.0)
}

/// Both measures for one layout. Edge-length statistics are zero when the
/// graph has no edges.
pub fn measure(g: &Graph, layout: &Layout) -> MetricsReport {
    let start = Instant::now();
    let crossings = count_crossings_sweep(g, layout).crossings;
    let (edge_length_mean, edge_length_stddev) = edge_length_stddev(g, layout).unwrap_or((0.0, 0.0));
    MetricsReport {
        crossings,
        edge_length_mean,
        edge_length_stddev,
        edge_count: g.edge_count(),
        compute_time: start.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Bounds;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn layout(points: &[(f64, f64)]) -> Layout {
        Layout::new(points.iter().map(|&(x, y)| p(x, y)).collect(), Bounds::new(10.0, 10.0))
    }

    #[test]
    fn predicate_examples() {
        assert!(segments_cross(p(0., 0.), p(2., 2.), p(0., 2.), p(2., 0.)));
        assert!(!segments_cross(p(0., 0.), p(1., 1.), p(1., 1.), p(2., 0.)));
        assert!(segments_cross(p(0., 0.), p(2., 0.), p(1., 0.), p(3., 0.)));
    }

    #[test]
    fn predicate_touching_and_degenerate() {
        // Endpoint on the other's interior (T junction).
        assert!(!segments_cross(p(0., 0.), p(2., 0.), p(1., 0.), p(1., 1.)));
        // Collinear, touching at one point only.
        assert!(!segments_cross(p(0., 0.), p(1., 0.), p(1., 0.), p(2., 0.)));
        // Collinear, disjoint.
        assert!(!segments_cross(p(0., 0.), p(1., 0.), p(2., 0.), p(3., 0.)));
        // Parallel, disjoint.
        assert!(!segments_cross(p(0., 0.), p(1., 0.), p(0., 1.), p(1., 1.)));
        // Zero-length.
        assert!(!segments_cross(p(1., 1.), p(1., 1.), p(0., 2.), p(2., 0.)));
        // Vertical collinear overlap.
        assert!(segments_cross(p(0., 0.), p(0., 2.), p(0., 1.), p(0., 3.)));
        // Containment.
        assert!(segments_cross(p(0., 0.), p(4., 4.), p(1., 1.), p(2., 2.)));
    }

    #[test]
    fn square_and_k4() {
        let square = layout(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]);
        let cycle = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(count_crossings(&cycle, &square), 0);
        assert_eq!(count_crossings_sweep(&cycle, &square).crossings, 0);
        let k4 = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)]).unwrap();
        assert_eq!(count_crossings(&k4, &square), 1);
        assert_eq!(count_crossings_sweep(&k4, &square).crossings, 1);
    }

    #[test]
    fn stddev_examples() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let l = layout(&[(0., 0.), (1., 0.), (0., 5.), (3., 5.)]);
        let (mean, sd) = edge_length_stddev(&g, &l).unwrap();
        assert!((mean - 2.0).abs() < 1e-15 && (sd - 1.0).abs() < 1e-15);

        let empty = Graph::from_edges(2, []).unwrap();
        assert_eq!(edge_length_stddev(&empty, &layout(&[(0., 0.), (1., 1.)])), Err(MetricsError::NoEdges));
    }

    #[test]
    fn regular_polygon_has_uniform_edges() {
        let n = 12;
        let g = Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
        let l = crate::engine::init_circular_layout(&g, Bounds::new(10.0, 10.0));
        let (mean, sd) = edge_length_stddev(&g, &l).unwrap();
        assert!(sd <= 1e-9 * mean, "{sd}");
    }
}
