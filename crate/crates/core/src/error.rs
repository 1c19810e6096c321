use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Caller supplied an argument outside an operation's domain.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line} near `{token}`: {message}")]
    Parse {
        line: usize,
        token: String,
        message: String,
    },

    /// A structurally well-formed object violates an invariant.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A user-supplied model function failed on a reachable value.
    #[error("model error at layer {layer}, position {position}: {message}")]
    Model {
        layer: usize,
        position: usize,
        message: String,
    },

    #[error("budget exceeded in {stage}: {message}")]
    Resource { stage: String, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown model `{name}`; available: {}", available.join(", "))]
    UnknownModel {
        name: String,
        available: Vec<String>,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn resource(stage: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Resource {
            stage: stage.into(),
            message: msg.into(),
        }
    }
}
