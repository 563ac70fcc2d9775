//! Synthetic stand-ins for the benchmark dataset families.

use std::collections::HashMap;

use super::Graph;
use crate::error::GraphError;
use crate::rng::DetRng;

/// Largest node count any generator will produce.
pub const MAX_GENERATED_NODES: usize = 1 << 24;
pub const MAX_SIERPINSKI_ORDER: u32 = 12;
pub const MAX_GRID_NODES: usize = 1 << 22;

/// Complete `branching`-ary tree of the given depth.
///
/// Node 0 is the root and the children of node `i` are the contiguous range
/// `branching*i + 1 ..= branching*i + branching`.
pub fn generate_tree(branching: usize, depth: u32) -> Result<Graph, GraphError> {
    if branching == 0 {
        return Err(GraphError::InvalidArgument("branching must be at least 1".into()));
    }
    let too_large = || GraphError::TooLarge(format!("tree({branching}, {depth}) exceeds {MAX_GENERATED_NODES} nodes"));
    // Sum of branching^level for level in 0..=depth, with overflow checks.
    let mut count: usize = 0;
    let mut level_size: usize = 1;
    for level in 0..=depth {
        count = count.checked_add(level_size).ok_or_else(too_large)?;
        if level < depth {
            level_size = level_size.checked_mul(branching).ok_or_else(too_large)?;
        }
    }
    if count > MAX_GENERATED_NODES {
        return Err(too_large());
    }
    Graph::from_edges(count, (1..count).map(|v| ((v - 1) / branching, v)))
}

/// Sierpinski-gasket graph: three copies of the previous order glued at
/// their outer corners. Order 0 is a triangle.
pub fn generate_sierpinski(order: u32) -> Result<Graph, GraphError> {
    if order > MAX_SIERPINSKI_ORDER {
        return Err(GraphError::TooLarge(format!(
            "sierpinski order {order} exceeds {MAX_SIERPINSKI_ORDER}"
        )));
    }
    let side: i64 = 1 << order;
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut edges = Vec::new();
    subdivide(&mut index, &mut edges, (0, 0), (side, 0), (0, side), order);
    Graph::from_edges(index.len(), edges)
}

type Lattice = (i64, i64);

fn subdivide(
    index: &mut HashMap<Lattice, usize>,
    edges: &mut Vec<(usize, usize)>,
    a: Lattice,
    b: Lattice,
    c: Lattice,
    level: u32,
) {
    if level == 0 {
        let mut id = |p: Lattice| {
            let next = index.len();
            *index.entry(p).or_insert(next)
        };
        let (ia, ib, ic) = (id(a), id(b), id(c));
        edges.extend([(ia, ib), (ib, ic), (ic, ia)]);
        return;
    }
    let mid = |p: Lattice, q: Lattice| ((p.0 + q.0) / 2, (p.1 + q.1) / 2);
    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
    subdivide(index, edges, a, ab, ca, level - 1);
    subdivide(index, edges, ab, b, bc, level - 1);
    subdivide(index, edges, ca, bc, c, level - 1);
}

/// `width × height` lattice with each edge kept independently with
/// probability `keep_fraction`; isolated nodes are removed and the remaining
/// indices compacted in row-major order.
///
/// Edges are visited row-major, right neighbour before lower neighbour, one
/// uniform draw each from [`DetRng`] seeded with `seed`.
pub fn generate_grid_random(width: usize, height: usize, keep_fraction: f64, seed: u64) -> Result<Graph, GraphError> {
    if width < 2 || height < 2 {
        return Err(GraphError::InvalidArgument(format!(
            "grid dimensions must be at least 2x2, got {width}x{height}"
        )));
    }
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(GraphError::InvalidArgument(format!(
            "keep_fraction must be in (0, 1], got {keep_fraction}"
        )));
    }
    let nodes = width
        .checked_mul(height)
        .filter(|&n| n <= MAX_GRID_NODES)
        .ok_or_else(|| GraphError::TooLarge(format!("grid {width}x{height} exceeds {MAX_GRID_NODES} nodes")))?;

    let mut rng = DetRng::new(seed);
    let mut kept = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let id = r * width + c;
            if c + 1 < width && rng.unit() < keep_fraction {
                kept.push((id, id + 1));
            }
            if r + 1 < height && rng.unit() < keep_fraction {
                kept.push((id, id + width));
            }
        }
    }

    let mut used = vec![false; nodes];
    for &(u, v) in &kept {
        used[u] = true;
        used[v] = true;
    }
    let mut remap = vec![usize::MAX; nodes];
    let mut next = 0;
    for (old, &is_used) in used.iter().enumerate() {
        if is_used {
            remap[old] = next;
            next += 1;
        }
    }
    Graph::from_edges(next, kept.into_iter().map(|(u, v)| (remap[u], remap[v])))
}
