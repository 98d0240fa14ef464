use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty population")]
    EmptyPopulation,

    #[error("infinite divergence: q has zero mass on {0} where p > 0")]
    InfiniteDivergence(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("layout validation failed: {0}")]
    Layout(String),

    #[error("invalid persona: {0}")]
    Persona(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("pre-incident only: trajectory for {0} has no post-incident records")]
    PreIncidentOnly(String),

    #[error("classifier failure for {agent}: {reason}")]
    ClassifierFailure { agent: String, reason: String },

    #[error("length mismatch: {0} predictions vs {1} gold labels")]
    LengthMismatch(usize, usize),

    #[error("unbound placeholder: {0}")]
    UnboundPlaceholder(String),

    #[error("gateway configuration error: {0}")]
    GatewayConfig(String),

    #[error("chat request failed after {attempts} attempts (last status {status:?}): {message}")]
    ChatFailed {
        attempts: u32,
        status: Option<u16>,
        message: String,
    },

    #[error("replay cache miss for request {0}")]
    ReplayMiss(String),

    #[error("response parse error: {0}")]
    Parse(String),

    #[error("missing price entry for model {0}")]
    MissingPrice(String),

    #[error("iteration {iteration} aborted: {source}")]
    IterationAborted {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
