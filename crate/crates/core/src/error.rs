use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("configuration infeasible: {needed} objects do not fit in {available} interior cells")]
    Infeasible { needed: usize, available: usize },
    #[error("unsupported heterogeneity level {0} (at most 6 zones)")]
    UnsupportedHeterogeneity(usize),
    #[error("invalid agent id {agent} (n_agents = {n_agents})")]
    InvalidAgent { agent: usize, n_agents: usize },
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid action code {0}")]
    InvalidAction(u8),
    #[error("corrupt episode log: {0}")]
    CorruptLog(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("server error {code}: {message}")]
    Remote { code: u16, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by a configuration that cannot be instantiated.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_) | Error::Infeasible { .. } | Error::UnsupportedHeterogeneity(_)
        )
    }
}
