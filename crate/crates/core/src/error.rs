use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown edge ({tx} -> {rx})")]
    UnknownEdge { tx: usize, rx: usize },

    #[error("infeasible {what}: {detail}")]
    Infeasible { what: &'static str, detail: String },

    #[error("zero SINR on active link ({tx} -> {rx})")]
    ZeroSinr { tx: usize, rx: usize },

    #[error("non-finite objective at iteration {iteration}: {dump}")]
    NonFinite { iteration: usize, dump: String },

    #[error("instance too large for brute force: {estimate:.3e} evaluations exceed the limit {limit:.0e}")]
    TooLarge { estimate: f64, limit: f64 },

    #[error("prefix sum for item {item} at node {node} is within {distance:.3e} of the kink; perturb the point")]
    KinkProximity {
        node: usize,
        item: usize,
        distance: f64,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::DegenerateGeometry(_) => "degenerate_geometry",
            Error::InvalidScenario(_) => "invalid_scenario",
            Error::UnknownEdge { .. } => "unknown_edge",
            Error::Infeasible { .. } => "infeasible",
            Error::ZeroSinr { .. } => "zero_sinr",
            Error::NonFinite { .. } => "non_finite",
            Error::TooLarge { .. } => "too_large",
            Error::KinkProximity { .. } => "kink_proximity",
            Error::Context { source, .. } => source.kind(),
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::Io(_) => "io",
        }
    }

    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
