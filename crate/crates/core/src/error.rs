use thiserror::Error;

/// Error while reading a graph file, tagged with the 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("node {node} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("graph has no nodes")]
    Empty,
    #[error("graph too large: {0}")]
    TooLarge(String),
    #[error("invalid generator argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("unknown parameter `{key}` for {algorithm} (known: {known})")]
    Unknown {
        key: String,
        algorithm: &'static str,
        known: String,
    },
    #[error("parameter `{key}`: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("{algorithm}: non-finite coordinate at iteration {iteration}, node {node}")]
    NonFinite {
        algorithm: String,
        iteration: u64,
        node: usize,
    },
    #[error("layout has {positions} positions but graph has {nodes} nodes")]
    SizeMismatch { positions: usize, nodes: usize },
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("edge-length statistics need at least one edge")]
    NoEdges,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("invalid style: {0}")]
    Style(String),
    #[error("layout has {positions} positions but graph has {nodes} nodes")]
    SizeMismatch { positions: usize, nodes: usize },
    #[error("layout contains non-finite coordinates")]
    NonFinite,
}
