use thiserror::Error;

use crate::game::ValidationReport;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("dimension mismatch at `{path}`: {message}")]
    DimensionMismatch { path: String, message: String },
    #[error("invalid game:\n{0}")]
    Invalid(ValidationReport),
    #[error("stage {stage} out of range for horizon {horizon}")]
    StageOutOfRange { stage: usize, horizon: usize },
    #[error("unknown {kind} label '{label}'")]
    UnknownLabel { kind: &'static str, label: String },
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },
}

#[derive(Debug, Error)]
pub enum BeliefError {
    #[error("history of length {len} exceeds horizon {horizon}")]
    HistoryTooLong { len: usize, horizon: usize },
    #[error("invalid history entry at stage {stage}: {source}")]
    InvalidAction {
        stage: usize,
        #[source]
        source: GameError,
    },
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no equilibrium found among {profiles} support profiles (finite games always have one; this is a solver defect)")]
    NoEquilibrium { profiles: usize },
    #[error("unknown equilibrium selection rule '{0}'")]
    UnknownSelector(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed stage game: {0}")]
    MalformedView(String),
}

#[derive(Debug, Error)]
pub enum DynamicError {
    #[error("stage {stage}, state {state}: {source}")]
    Solver {
        stage: usize,
        state: usize,
        #[source]
        source: SolveError,
    },
    #[error(transparent)]
    Config(SolveError),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("parameter file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
    #[error("invalid experiment input: {0}")]
    InvalidInput(String),
    #[error("grid point {point}: {source}")]
    GridPoint {
        point: f64,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Dynamic(#[from] DynamicError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}
