//! Force-directed graph layout: seven algorithms behind one stepping
//! contract, a time-budgeted snapshot runner, layout aesthetics metrics and
//! deterministic SVG rendering.

// `!(x >= t)` is used on purpose so that NaN counts as failing the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod bench;
pub mod dh;
pub mod engine;
pub mod error;
pub mod force;
pub mod geometry;
pub mod graph;
pub mod kk;
pub mod metrics;
pub mod params;
pub mod render;
pub mod rng;

pub use algorithms::{run_algorithm, AlgorithmKind};
pub use engine::{Bounds, Layout, LayoutAlgorithm, RunConfig, RunRecord};
pub use error::{GraphError, LayoutError, MetricsError, ParamError, ParseError, RenderError};
pub use geometry::Point;
pub use graph::Graph;
