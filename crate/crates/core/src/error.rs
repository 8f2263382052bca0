use alloc::string::String;

/// Errors produced while building or querying a plan.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows for {ids} node ids")]
    NotSquare { ids: usize, rows: usize },
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("negative latency {value} between `{from}` and `{to}`")]
    NegativeEntry {
        from: String,
        to: String,
        value: f64,
    },
    #[error("latency between distinct nodes `{from}` and `{to}` must be positive")]
    ZeroDistance { from: String, to: String },
    #[error("latency between `{from}` and `{to}` is not a finite number")]
    NonFinite { from: String, to: String },
    #[error("network map has no nodes")]
    EmptyMap,
    #[error("node subset is empty")]
    EmptySubset,
    #[error("r_min must be positive, got {0}")]
    NonPositiveRMin(f64),
    #[error("level constant k must be at least 1, got {0}")]
    InvalidK(u32),
    #[error("level assignment covers {levels} nodes but the map has {nodes}")]
    LevelsMismatch { levels: usize, nodes: usize },
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("unknown instance (landmark {landmark}, ring {ring})")]
    UnknownInstance { landmark: usize, ring: u32 },
    #[error("instance member list is empty")]
    EmptyMembers,
    #[error("target sets of nodes {0} and {1} share no instance")]
    EmptyIntersection(usize, usize),
    #[error("oracle size guard: n = {n} exceeds {limit}")]
    SizeGuard { n: usize, limit: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
