use std::collections::VecDeque;

use super::Graph;

/// Hop count for node pairs with no connecting path. Never do arithmetic on it.
pub const UNREACHABLE: u32 = u32::MAX;

/// All-pairs hop distances, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u32>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Raw entry; [`UNREACHABLE`] when no path exists.
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.d[i * self.n + j]
    }

    pub fn hops(&self, i: usize, j: usize) -> Option<u32> {
        match self.get(i, j) {
            UNREACHABLE => None,
            h => Some(h),
        }
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.d[i * self.n..(i + 1) * self.n]
    }
}

/// Single-source hop distances by breadth-first search.
pub fn bfs_hops(g: &Graph, source: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; g.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &v in g.neighbors(u) {
            if dist[v] == UNREACHABLE {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs shortest hop counts via one BFS per node.
pub fn apsp_bfs(g: &Graph) -> DistanceMatrix {
    let n = g.node_count();
    let mut d = Vec::with_capacity(n * n);
    for s in 0..n {
        d.extend(bfs_hops(g, s));
    }
    DistanceMatrix { n, d }
}

/// Connected components, largest first; ties ordered by smallest member.
/// Members of each component are sorted ascending.
pub fn connected_components(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut members = vec![start];
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for &v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    members.push(v);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    // Stable sort keeps discovery order (= smallest member order) among equal sizes.
    components.sort_by_key(|c| std::cmp::Reverse(c.len()));
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_tree;
    use crate::rng::DetRng;

    fn random_graph(seed: u64, max_n: usize) -> Graph {
        let mut rng = DetRng::new(seed);
        let n = 1 + rng.below(max_n);
        let p = rng.unit() * 0.3;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.unit() < p {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, edges).unwrap()
    }

    fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<u32>>> {
        let n = g.node_count();
        let mut d = vec![vec![None; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = Some(0);
        }
        for &(u, v) in g.edges() {
            d[u][v] = Some(1);
            d[v][u] = Some(1);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                        if d[i][j].is_none_or(|c| a + b < c) {
                            d[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
        d
    }

    #[test]
    fn path_and_isolated() {
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(apsp_bfs(&path).get(0, 2), 2);
        let isolated = Graph::from_edges(2, []).unwrap();
        let d = apsp_bfs(&isolated);
        assert_eq!(d.get(0, 1), UNREACHABLE);
        assert_eq!(d.hops(0, 1), None);
    }

    #[test]
    fn tree_root_to_leaves() {
        let d = apsp_bfs(&generate_tree(2, 2).unwrap());
        for leaf in 3..7 {
            assert_eq!(d.get(0, leaf), 2);
        }
    }

    #[test]
    fn matches_floyd_warshall() {
        for seed in 0..100 {
            let g = random_graph(seed, 30);
            let d = apsp_bfs(&g);
            let oracle = floyd_warshall(&g);
            let n = g.node_count();
            for i in 0..n {
                assert_eq!(d.get(i, i), 0);
                for j in 0..n {
                    assert_eq!(d.hops(i, j), oracle[i][j], "seed {seed} ({i},{j})");
                    assert_eq!(d.get(i, j), d.get(j, i));
                    for k in 0..n {
                        if let (Some(a), Some(b), Some(c)) = (d.hops(i, j), d.hops(i, k), d.hops(k, j)) {
                            assert!(a <= b + c);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn components_examples() {
        let path = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(connected_components(&path), vec![vec![0, 1, 2, 3]]);
        let two = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(connected_components(&two), vec![vec![0, 1], vec![2, 3]]);
        let mixed = Graph::from_edges(5, [(3, 4), (4, 1)]).unwrap();
        assert_eq!(connected_components(&mixed), vec![vec![1, 3, 4], vec![0], vec![2]]);
    }

    fn union_find_components(g: &Graph) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..g.node_count()).collect();
        fn root(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(u, v) in g.edges() {
            let (a, b) = (root(&mut parent, u), root(&mut parent, v));
            parent[a] = b;
        }
        (0..g.node_count()).map(|x| root(&mut parent, x)).collect()
    }

    #[test]
    fn components_match_union_find() {
        for seed in 0..100 {
            let g = random_graph(seed + 1000, 50);
            let comps = connected_components(&g);
            let roots = union_find_components(&g);
            let mut covered = vec![0; g.node_count()];
            for c in &comps {
                for &x in c {
                    covered[x] += 1;
                    assert_eq!(roots[x], roots[c[0]]);
                }
            }
            assert!(covered.iter().all(|&c| c == 1));
            let mut distinct = roots.clone();
            distinct.sort_unstable();
            distinct.dedup();
            assert_eq!(distinct.len(), comps.len(), "seed {seed}");
            assert!(comps.windows(2).all(|w| w[0].len() >= w[1].len()));
        }
    }
}
