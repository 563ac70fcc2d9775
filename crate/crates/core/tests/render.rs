use fdl_core::engine::{init_random_layout, Bounds, Layout};
use fdl_core::graph::generate_grid_random;
use fdl_core::metrics::count_crossings;
use fdl_core::render::{render_svg, FitTransform, RenderStyle};
use fdl_core::{Graph, Point, RenderError};

fn circles(svg: &str) -> Vec<(f64, f64)> {
    let doc = roxmltree::Document::parse(svg).unwrap();
    doc.descendants()
        .filter(|n| n.has_tag_name("circle"))
        .map(|n| {
            let cx = n.attribute("cx").unwrap().parse().unwrap();
            let cy = n.attribute("cy").unwrap().parse().unwrap();
            (cx, cy)
        })
        .collect()
}

#[test]
fn single_node_at_center() {
    let g = Graph::from_edges(1, []).unwrap();
    let layout = Layout::new(vec![Point::new(3.0, 7.0)], Bounds::default());
    let svg = render_svg(&g, &layout, &RenderStyle::default()).unwrap();
    assert_eq!(circles(&svg), vec![(500.0, 500.0)]);
}

#[test]
fn coincident_nodes_render_at_center() {
    let g = Graph::from_edges(3, [(0, 1)]).unwrap();
    let layout = Layout::new(vec![Point::new(3.0, 7.0); 3], Bounds::default());
    let svg = render_svg(&g, &layout, &RenderStyle::default()).unwrap();
    assert_eq!(circles(&svg), vec![(500.0, 500.0); 3]);
}

#[test]
fn square_fills_margin_box() {
    let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
    let layout = Layout::new(
        vec![Point::new(10.0, 10.0), Point::new(30.0, 10.0), Point::new(30.0, 30.0), Point::new(10.0, 30.0)],
        Bounds::default(),
    );
    let style = RenderStyle {
        margin_fraction: 0.1,
        image_size: 1000,
        ..RenderStyle::default()
    };
    let svg = render_svg(&g, &layout, &style).unwrap();
    assert_eq!(circles(&svg), vec![(100.0, 100.0), (900.0, 100.0), (900.0, 900.0), (100.0, 900.0)]);
    assert!(svg.contains(r#"<circle cx="100.000" cy="100.000""#));
}

#[test]
fn deterministic_well_formed_and_ordered() {
    let g = generate_grid_random(6, 6, 0.7, 2).unwrap();
    let layout = init_random_layout(&g, Bounds::default(), 2);
    let style = RenderStyle::default();
    let a = render_svg(&g, &layout, &style).unwrap();
    assert_eq!(a, render_svg(&g, &layout, &style).unwrap());
    let doc = roxmltree::Document::parse(&a).unwrap();
    let tags: Vec<&str> = doc
        .descendants()
        .filter(|n| n.is_element())
        .map(|n| n.tag_name().name())
        .filter(|t| *t != "g")
        .collect();
    let lines = g.edge_count();
    assert_eq!(tags[0], "svg");
    assert_eq!(tags[1], "rect");
    assert!(tags[2..2 + lines].iter().all(|t| *t == "line"));
    assert!(tags[2 + lines..].iter().all(|t| *t == "circle"));
    assert_eq!(tags.len(), 2 + lines + g.node_count());
}

#[test]
fn edges_use_transformed_endpoints_and_keep_crossings() {
    let g = generate_grid_random(5, 5, 0.9, 4).unwrap();
    let layout = init_random_layout(&g, Bounds::new(300.0, 700.0), 4);
    let svg = render_svg(&g, &layout, &RenderStyle::default()).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let centers = circles(&svg);
    let lines: Vec<[f64; 4]> = doc
        .descendants()
        .filter(|n| n.has_tag_name("line"))
        .map(|n| ["x1", "y1", "x2", "y2"].map(|a| n.attribute(a).unwrap().parse().unwrap()))
        .collect();
    for (line, &(u, v)) in lines.iter().zip(g.edges()) {
        assert_eq!((line[0], line[1]), centers[u]);
        assert_eq!((line[2], line[3]), centers[v]);
    }
    let fit = FitTransform::fit(&layout.positions, 1000.0, 0.05);
    let image = Layout::new(layout.positions.iter().map(|&p| fit.apply(p)).collect(), Bounds::default());
    assert_eq!(count_crossings(&g, &layout), count_crossings(&g, &image));
}

#[test]
fn style_validation() {
    let g = Graph::from_edges(1, []).unwrap();
    let layout = Layout::new(vec![Point::ZERO], Bounds::default());
    for style in [
        RenderStyle {
            node_color: "red".into(),
            ..RenderStyle::default()
        },
        RenderStyle {
            margin_fraction: 0.5,
            ..RenderStyle::default()
        },
        RenderStyle {
            node_radius: 0.0,
            ..RenderStyle::default()
        },
    ] {
        assert!(matches!(render_svg(&g, &layout, &style), Err(RenderError::Style(_))));
    }
    let bad = Layout::new(vec![Point::new(f64::NAN, 0.0)], Bounds::default());
    assert_eq!(render_svg(&g, &bad, &RenderStyle::default()), Err(RenderError::NonFinite));
}
