use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("empty tree: all generation sizes are zero")]
    EmptyTree,
    #[error("profile cannot sustain coherence at height {height}: {reason}")]
    ProfileTooSmall { height: usize, reason: String },
    #[error("root has no father")]
    RootHasNoFather,
    #[error("vertex ({height},{index}) does not exist")]
    NoSuchVertex { height: usize, index: usize },
    #[error("cannot go {steps} steps up from height {height}")]
    AncestorOutOfRange { height: usize, steps: usize },
    #[error("enumeration would yield {count} trees, above the cap of {cap}")]
    EnumerationCap { count: String, cap: u64 },
    #[error("generation {height} has fewer than two vertices")]
    TooFewVertices { height: usize },
    #[error("invalid limit parameters: {0}")]
    InvalidParams(String),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("conditioning event fails: process extinct at generation {0}")]
    Extinct(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("mismatched ensembles: k = {0} vs k = {1}")]
    MismatchedK(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
