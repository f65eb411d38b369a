use thiserror::Error;

/// Errors raised by the numerical parts of the model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numeric error at node {node}: {reason}")]
    Numeric { node: usize, reason: String },
    #[error("degenerate tree: probability of an unobservable column is {0}")]
    DegenerateTree(f64),
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error("the coalescent prior does not allow sampled ancestors")]
    SampledAncestorsUnsupported,
}

/// Errors raised while reading or writing the on-disk formats.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("newick: {message} at byte {position}")]
    Newick { position: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("unknown taxon `{0}`")]
    UnknownTaxon(String),
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ParseError {
    pub(crate) fn line(line: usize, message: impl Into<String>) -> Self {
        ParseError::Line {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
