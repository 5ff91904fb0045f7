use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {name} {constraint}")]
    Parameter { name: &'static str, constraint: String },

    #[error("no active base station covers the requested location")]
    NoCoverage,

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("lambda* fit failed: {reason} (N(lo)={n_lo:e}, N(hi)={n_hi:e} on [{lo:e}, {hi:e}])")]
    Fit {
        reason: String,
        lo: f64,
        hi: f64,
        n_lo: f64,
        n_hi: f64,
    },

    #[error("model error: {0}")]
    Model(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, constraint: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            constraint: constraint.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
