use super::*;
use crate::engine::{init_random_layout, Bounds};
use crate::graph::{generate_grid_random, generate_tree};

fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn random_connected(seed: u64, n: usize) -> Graph {
    let mut rng = DetRng::new(seed);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.below(v), v)).collect();
    for _ in 0..n / 2 {
        let (a, b) = (rng.below(n), rng.below(n));
        edges.push((a, b));
    }
    Graph::from_edges(n, edges).unwrap()
}

fn random_positions(seed: u64, n: usize, extent: f64) -> Vec<Point> {
    let mut rng = DetRng::new(seed);
    (0..n).map(|_| pt(rng.unit() * extent, rng.unit() * extent)).collect()
}

/// Hop distances by repeated relaxation, independent of the BFS code.
fn hop_oracle(g: &Graph) -> Vec<Vec<Option<u32>>> {
    let n = g.node_count();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0u32);
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

fn naive_energy(g: &Graph, pos: &[Point], hop_length: f64, stiffness: f64) -> f64 {
    let d = hop_oracle(g);
    let mut e = 0.0;
    for i in 0..g.node_count() {
        for j in (i + 1)..g.node_count() {
            if let Some(h) = d[i][j] {
                let h = h as f64;
                let dist = ((pos[i].x - pos[j].x).powi(2) + (pos[i].y - pos[j].y).powi(2)).sqrt();
                e += 0.5 * (stiffness / (h * h)) * (dist - hop_length * h).powi(2);
            }
        }
    }
    e
}

#[test]
fn energy_two_node_cases() {
    let g = Graph::from_edges(2, [(0, 1)]).unwrap();
    let model = KkModel::with_scales(&g, vec![5.0], 1.0);
    assert_eq!(kk_energy(&[pt(0.0, 0.0), pt(3.0, 4.0)], &model), 0.0);
    let stiff = KkModel::with_scales(&g, vec![5.0], 2.0);
    assert_eq!(stiff.spring_constant(0, 1), Some(2.0));
    let e = kk_energy(&[pt(0.0, 0.0), pt(6.0, 0.0)], &stiff);
    assert!((e - 1.0).abs() < 1e-15);
}

#[test]
fn energy_matches_naive_summation() {
    for seed in 0..50 {
        let g = random_connected(seed, 8);
        let pos = random_positions(seed + 500, 8, 100.0);
        let model = KkModel::with_scales(&g, vec![12.5], 1.3);
        let fast = kk_energy(&pos, &model);
        let slow = naive_energy(&g, &pos, 12.5, 1.3);
        assert!((fast - slow).abs() <= 1e-12 * slow.abs(), "seed {seed}: {fast} vs {slow}");
    }
}

#[test]
fn cross_component_pairs_contribute_nothing() {
    let g = Graph::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
    let model = KkModel::with_scales(&g, vec![10.0, 20.0], 1.0);
    assert_eq!(model.ideal_length(0, 3), None);
    let pos = random_positions(3, 5, 50.0);
    let mut moved = pos.clone();
    moved[4] = pt(1e6, -1e6);
    let ga = kk_gradient(1, &pos, &model);
    assert_eq!(ga, kk_gradient(1, &moved, &model));
    let part_a: f64 = [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| model.pair_energy(i, j, &pos)).sum();
    let part_b = model.pair_energy(3, 4, &pos);
    assert!((kk_energy(&pos, &model) - (part_a + part_b)).abs() < 1e-12);
}

#[test]
fn gradient_at_equilibrium_and_symmetry() {
    let g = Graph::from_edges(2, [(0, 1)]).unwrap();
    let model = KkModel::with_scales(&g, vec![5.0], 1.0);
    assert_eq!(kk_gradient(0, &[pt(0.0, 0.0), pt(5.0, 0.0)], &model), Point::ZERO);
    let grad = kk_gradient(1, &[pt(0.0, 0.0), pt(8.0, 0.0)], &model);
    assert_eq!(grad.y, 0.0);
    assert!(grad.x > 0.0);
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..50u64 {
        let n = 3 + (seed as usize % 10);
        let g = random_connected(seed + 77, n);
        let hop = 10.0;
        let model = KkModel::with_scales(&g, vec![hop], 1.0);
        let pos = random_positions(seed + 900, n, 60.0);
        let h = 1e-6 * hop;
        for i in 0..n {
            let grad = kk_gradient(i, &pos, &model);
            let mut fd = [0.0; 2];
            for (axis, out) in fd.iter_mut().enumerate() {
                let mut plus = pos.clone();
                let mut minus = pos.clone();
                if axis == 0 {
                    plus[i].x += h;
                    minus[i].x -= h;
                } else {
                    plus[i].y += h;
                    minus[i].y -= h;
                }
                *out = (kk_energy(&plus, &model) - kk_energy(&minus, &model)) / (2.0 * h);
            }
            let scale = grad.norm().max(1e-3);
            assert!((grad.x - fd[0]).abs() <= 1e-5 * scale, "seed {seed} node {i}: {grad:?} vs {fd:?}");
            assert!((grad.y - fd[1]).abs() <= 1e-5 * scale, "seed {seed} node {i}: {grad:?} vs {fd:?}");
        }
    }
}

#[test]
fn newton_two_body_converges() {
    let g = Graph::from_edges(2, [(0, 1)]).unwrap();
    let l = 5.0;
    let model = Arc::new(KkModel::with_scales(&g, vec![l], 1.0));
    for start in [pt(1.0, 0.3), pt(9.0, -4.0), pt(0.2, 0.1), pt(-30.0, 17.0)] {
        let mut solver = NodeSolver::new(model.clone(), None, 20, 1e-9, 1);
        let mut pos = vec![pt(0.0, 0.0), start];
        solver.newton(1, &mut pos);
        assert_eq!(pos[0], pt(0.0, 0.0));
        assert!((pos[1].norm() - l).abs() <= 1e-6 * l, "from {start:?}: {:?}", pos[1]);
    }
}

#[test]
fn newton_leaves_settled_node() {
    let g = Graph::from_edges(2, [(0, 1)]).unwrap();
    let model = Arc::new(KkModel::with_scales(&g, vec![5.0], 1.0));
    let mut solver = NodeSolver::new(model, None, 20, 1e-4, 1);
    let mut pos = vec![pt(0.0, 0.0), pt(5.0, 0.0)];
    let outcome = solver.newton(1, &mut pos);
    assert!(!outcome.moved);
    assert_eq!(pos[1], pt(5.0, 0.0));
}

#[test]
fn newton_never_increases_energy() {
    for seed in 0..30 {
        let g = random_connected(seed + 40, 12);
        let model = Arc::new(KkModel::with_scales(&g, vec![10.0], 1.0));
        let mut solver = NodeSolver::new(model.clone(), None, 20, 1e-6, seed);
        let mut pos = random_positions(seed, 12, 80.0);
        let mut energy = kk_energy(&pos, &model);
        for round in 0..60 {
            solver.newton(round % 12, &mut pos);
            let next = kk_energy(&pos, &model);
            assert!(next <= energy * (1.0 + 1e-12), "seed {seed} round {round}: {energy} -> {next}");
            energy = next;
        }
    }
}

#[test]
fn coincident_nodes_are_separated() {
    let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    let layout = Layout::new(vec![pt(10.0, 10.0); 3], Bounds::new(100.0, 100.0));
    let mut kk = Kk::new(&g, layout, KkParams::default(), 5).unwrap();
    for _ in 0..50 {
        kk.step().unwrap();
    }
    assert!(kk.layout().positions.iter().all(|p| p.is_finite()));
    assert!(kk.layout().positions[0].distance(kk.layout().positions[2]) > 1.0);
}

#[test]
fn kk_selects_argmax_delta() {
    let g = random_connected(9, 15);
    let layout = init_random_layout(&g, Bounds::default(), 3);
    let mut kk = Kk::new(&g, layout, KkParams::default(), 3).unwrap();
    for _ in 0..40 {
        let pos = kk.layout().positions.clone();
        let deltas: Vec<f64> = (0..15).map(|i| kk_delta(i, &pos, kk.model())).collect();
        let (node, _) = kk.select().unwrap();
        let best = deltas.iter().cloned().fold(f64::MIN, f64::max);
        assert!((deltas[node] - best).abs() <= 1e-9 * best, "{} vs {best}", deltas[node]);
        kk.step().unwrap();
    }
}

#[test]
fn kk_cycle_untangles() {
    let n = 12;
    let g = Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
    let layout = init_random_layout(&g, Bounds::default(), 11);
    let mut kk = Kk::new(&g, layout, KkParams::default(), 11).unwrap();
    let mut converged = false;
    for _ in 0..20_000 {
        if kk.step().unwrap().converged {
            converged = true;
            break;
        }
    }
    assert!(converged);
    assert_eq!(crate::metrics::count_crossings(&g, kk.layout()), 0);
}

#[test]
fn multi_select_with_single_batch_matches_kk_first_choice() {
    for seed in 0..10 {
        let g = random_connected(seed + 300, 16);
        let layout = init_random_layout(&g, Bounds::default(), seed);
        let params = KkParams {
            k_top: Some(1),
            ..KkParams::default()
        };
        let mut kk = Kk::new(&g, layout.clone(), params.clone(), seed).unwrap();
        let mut ms = KkMs::new(&g, layout, params, seed).unwrap();
        let expected = kk.select().unwrap().0;
        kk.step().unwrap();
        ms.step().unwrap();
        assert_eq!(ms.last_selected(), &[expected]);
        assert_eq!(ms.layout().positions, kk.layout().positions);
    }
}

#[test]
fn multi_select_after_reset_matches_argmax() {
    let g = random_connected(5, 25);
    let layout = init_random_layout(&g, Bounds::default(), 2);
    let params = KkParams {
        k_top: Some(1),
        ..KkParams::default()
    };
    let mut ms = KkMs::new(&g, layout, params, 2).unwrap();
    let mut just_reset = true;
    for _ in 0..100 {
        let before = ms.queue_stats().resets;
        if just_reset {
            let pos = ms.layout().positions.clone();
            let deltas: Vec<f64> = (0..25).map(|i| kk_delta(i, &pos, ms.model())).collect();
            let best = (0..25).fold(0, |b, i| if deltas[i] > deltas[b] { i } else { b });
            ms.step().unwrap();
            assert_eq!(ms.last_selected(), &[best]);
        } else {
            ms.step().unwrap();
        }
        just_reset = ms.queue_stats().resets > before;
    }
}

#[test]
fn nine_nodes_reset_after_three_distinct() {
    let g = Graph::from_edges(9, (0..8).map(|i| (i, i + 1))).unwrap();
    let layout = init_random_layout(&g, Bounds::default(), 4);
    let params = KkParams {
        k_top: Some(1),
        ..KkParams::default()
    };
    let mut ms = KkMs::new(&g, layout, params, 4).unwrap();
    assert_eq!(ms.queue_stats().reset_threshold, 3);
    let mut distinct = std::collections::BTreeSet::new();
    loop {
        ms.step().unwrap();
        distinct.insert(ms.last_selected()[0]);
        if ms.queue_stats().resets == 1 {
            break;
        }
        assert!(distinct.len() < 3);
    }
    assert_eq!(distinct.len(), 3);
    assert_eq!(ms.queue_stats().distinct_selected, 0);
}

#[test]
fn multi_select_is_reproducible() {
    let g = generate_tree(3, 3).unwrap();
    let run = || {
        let layout = init_random_layout(&g, Bounds::default(), 8);
        let mut ms = KkMs::new(&g, layout, KkParams::default(), 8).unwrap();
        let mut seq = Vec::new();
        for _ in 0..50 {
            ms.step().unwrap();
            seq.extend_from_slice(ms.last_selected());
        }
        (seq, ms.layout().positions.clone())
    };
    assert_eq!(run(), run());
}

#[test]
fn stability_ratio_examples() {
    assert_eq!(stability_ratio(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    // Deviations {1, 3}: mean 2, population stddev 1.
    assert!((stability_ratio(&[2.0, 8.0], &[1.0, 5.0]).unwrap() - 2.0).abs() < 1e-15);
    assert_eq!(stability_ratio(&[1.3, 2.3, 0.3], &[1.0, 2.0, 0.0]).unwrap(), 0.0);
    assert!(stability_ratio(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn initial_active_examples() {
    let star = Graph::from_edges(6, (1..6).map(|i| (0, i))).unwrap();
    assert!(kkmsds_initial_active(&star).iter().all(|&a| a));

    let path = Graph::from_edges(7, (0..6).map(|i| (i, i + 1))).unwrap();
    let active = kkmsds_initial_active(&path);
    assert_eq!(active, vec![true, true, true, true, false, false, false]);

    let tree = generate_tree(6, 3).unwrap();
    let active = kkmsds_initial_active(&tree);
    // Node 1 is the lowest-index node of maximum degree 7.
    assert_eq!(tree.degree(1), 7);
    let oracle = hop_oracle(&tree);
    let expected: Vec<bool> = (0..tree.node_count()).map(|j| oracle[1][j].is_some_and(|h| h <= 2)).collect();
    assert_eq!(active, expected);
    assert_eq!(active.iter().filter(|&&a| a).count(), 49);
}

fn ds_params(epsilon: f64) -> KkParams {
    KkParams {
        epsilon,
        ..KkParams::default()
    }
}

#[test]
fn forced_expansion_every_window() {
    let g = generate_grid_random(8, 8, 1.0, 0).unwrap();
    let layout = init_random_layout(&g, Bounds::default(), 1);
    let mut ds = KkMsDs::new(&g, layout, ds_params(f64::INFINITY), 1).unwrap();
    let window = KkParams::default().stability_window;
    let mut sizes = vec![ds.active_count()];
    for step in 1..=200 {
        let before = ds.active_count();
        ds.step().unwrap();
        assert!(ds.active_count() >= before);
        if ds.active_count() > before {
            assert_eq!(step % window, 0, "expansion at step {step}");
            sizes.push(ds.active_count());
        }
        if ds.is_fully_expanded() {
            break;
        }
    }
    assert!(ds.is_fully_expanded(), "sizes {sizes:?}");
}

#[test]
fn zero_epsilon_blocks_expansion() {
    let g = generate_grid_random(10, 10, 1.0, 0).unwrap();
    let layout = init_random_layout(&g, Bounds::default(), 6);
    let params = KkParams {
        expand_on_converge: false,
        ..ds_params(0.0)
    };
    let mut ds = KkMsDs::new(&g, layout, params, 6).unwrap();
    let start = ds.active_count();
    for _ in 0..30 {
        ds.step().unwrap();
    }
    assert_eq!(ds.active_count(), start);
    assert_eq!(ds.expansions(), 0);
    assert!(!ds.is_fully_expanded());
}

#[test]
fn grid_reaches_full_active_set_before_convergence() {
    let g = generate_grid_random(10, 10, 1.0, 0).unwrap();
    let layout = init_random_layout(&g, Bounds::default(), 3);
    let mut ds = KkMsDs::new(&g, layout, KkParams::default(), 3).unwrap();
    let mut converged = false;
    for _ in 0..50_000 {
        if ds.step().unwrap().converged {
            converged = true;
            break;
        }
    }
    assert!(converged);
    assert!(ds.is_fully_expanded());
    assert_eq!(ds.active_count(), 100);
}

#[test]
fn sigma_decays_geometrically_between_resets() {
    let g = generate_grid_random(10, 10, 1.0, 0).unwrap();
    let layout = init_random_layout(&g, Bounds::default(), 9);
    let params = KkParams {
        k_top: Some(2),
        ..KkParams::default()
    };
    let gamma = params.gamma;
    let mut ds = KkMsDs::new(&g, layout, params, 9).unwrap();
    let mut counts = vec![0i32; 100];
    for _ in 0..300 {
        let before = ds.queue_stats();
        let expansions = ds.expansions();
        ds.step().unwrap();
        let after = ds.queue_stats();
        if after.resets != before.resets || ds.expansions() != expansions {
            // Rebuilt after this step's updates.
            counts.iter_mut().for_each(|c| *c = 0);
        } else {
            if after.rebuilds != before.rebuilds {
                // Stale queue refreshed before selection.
                counts.iter_mut().for_each(|c| *c = 0);
            }
            for &i in ds.last_selected() {
                counts[i] += 1;
            }
        }
        for (i, &m) in counts.iter().enumerate() {
            let s = ds.sigma(i);
            assert_eq!(s, gamma.powi(m), "node {i}");
            assert!(s > 0.0 && s <= 1.0);
        }
    }
}

#[test]
fn components_are_packed_into_cells() {
    let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
    let layout = init_random_layout(&g, Bounds::new(200.0, 100.0), 1);
    let kk = Kk::new(&g, layout, KkParams::default(), 1).unwrap();
    let cells = pack_cells(2, Bounds::new(200.0, 100.0));
    assert_eq!(cells.len(), 2);
    for (members, cell) in kk.model().components().iter().zip(&cells) {
        for &i in members {
            let p = kk.layout().positions[i];
            assert!(p.x >= cell.origin.x && p.x <= cell.origin.x + cell.size.width);
            assert!(p.y >= cell.origin.y && p.y <= cell.origin.y + cell.size.height);
        }
    }
}

#[test]
fn settled_partial_layout_grows() {
    let g = generate_grid_random(10, 10, 1.0, 0).unwrap();
    let layout = init_random_layout(&g, Bounds::default(), 6);
    let mut ds = KkMsDs::new(&g, layout, ds_params(0.0), 6).unwrap();
    let start = ds.active_count();
    for _ in 0..2_000 {
        ds.step().unwrap();
        if ds.expansions() > 0 {
            break;
        }
    }
    assert!(ds.active_count() > start);
}
