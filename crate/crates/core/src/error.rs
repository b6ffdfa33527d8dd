use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("{what} did not converge after {iterations} iterations (partial value {partial:e}, last increment {last_increment:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        partial: f64,
        last_increment: f64,
    },

    #[error("invalid system spec: {0}")]
    InvalidSpec(String),

    #[error("singular potential: Wronskian vanishes near x = {x}")]
    SingularPotential { x: f64 },

    #[error("construction failed at stage `{stage}`: {detail}")]
    Construction { stage: &'static str, detail: String },

    #[error("truncation too short: {required} levels required, {available} available")]
    Truncation { required: usize, available: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("insufficient support: {evaluable} of {total} interior points evaluable")]
    InsufficientSupport { evaluable: usize, total: usize },

    #[error("document error: {0}")]
    Document(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }
}
