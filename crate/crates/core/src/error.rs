use thiserror::Error;

/// Everything that can go wrong while building or running an HHL experiment.
#[derive(Debug, Error)]
pub enum HhlError {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("outcome {outcome} on qubit {qubit} has probability {probability:e}")]
    ZeroProbabilityBranch {
        qubit: usize,
        outcome: u8,
        probability: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("singular problem: smallest |eigenvalue| is {0:e}")]
    SingularProblem(f64),

    #[error("no eigenvalue estimate reached the relevance threshold {threshold}")]
    EmptyEstimates { threshold: f64 },

    #[error("aliasing detected: estimates at t0/2^l = {t0:.6} did not all decode to zero")]
    AliasingDetected { t0: f64 },

    #[error("inversion plan has no rotations")]
    EmptyPlan,

    #[error("degenerate run: ancilla success probability {0:e}")]
    DegenerateRun(f64),

    #[error("no shots survived post-selection on the HHL ancilla")]
    InsufficientShots,

    #[error("problem {problem}: {source}")]
    Experiment {
        problem: String,
        #[source]
        source: Box<HhlError>,
    },

    #[error("circuit needs {requested} qubits, simulator cap is {limit}")]
    Capacity { requested: usize, limit: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HhlError>;
