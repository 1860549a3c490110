use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("invalid compound set: {0}")]
    InvalidCompoundSet(String),

    #[error("channel {channel} has non-positive entry at ({input}, {output}); log metrics need strictly positive channels")]
    NonPositiveChannel { channel: usize, input: usize, output: usize },

    #[error("at least one metric is required")]
    EmptyMetrics,

    #[error("eps = {eps} is not admissible: min entry of 1 + eps*L is {min_factor}, need >= 1e-6")]
    InadmissibleEpsilon { eps: f64, min_factor: f64 },

    #[error("codebook of {requested} codewords exceeds the cap of {cap}")]
    CodebookTooLarge { requested: f64, cap: u64 },

    #[error("invalid simulation parameters: {0}")]
    InvalidSimulation(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}
