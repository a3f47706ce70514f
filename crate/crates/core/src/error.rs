use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The input carries no usable signal (e.g. a zero-intensity field).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The stripped auxiliary beam has no intensity, so the
    /// intensity-to-probability formula is undefined.
    #[error("stripped auxiliary beam extinguished (i_aux = {i_aux:e})")]
    AuxExtinguished { i_aux: f64 },

    /// An extracted probability exceeded one by more than float noise.
    #[error("inconsistent probability estimate {value} (> 1)")]
    Inconsistent { value: f64 },

    /// A hidden variable model returned a response outside [-1, 1].
    #[error("hidden variable model `{model}` violated |response| <= 1 (got {value})")]
    ModelContract { model: String, value: f64 },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed ensemble data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
