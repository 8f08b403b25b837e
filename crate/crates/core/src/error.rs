use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point was outside the domain of a density or map.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller violated an API contract (bad size, order, dimension).
    #[error("usage error: {0}")]
    Usage(String),

    /// Density estimation was attempted on samples without spread.
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    /// Input the algorithm does not support (e.g. a non-monotone map).
    #[error("unsupported input: {0}")]
    Unsupported(String),

    /// Time integration produced a non-finite state or was misconfigured.
    #[error("integration error: {0}")]
    Integration(String),

    /// Map evaluation failed at an identified point.
    #[error("map evaluation failed at {location}: {source}")]
    MapEvaluation {
        location: String,
        #[source]
        source: Box<Error>,
    },

    /// Every ratio in a rejection batch was undefined.
    #[error("rejection sampling produced no usable ratios: {0}")]
    EmptyRejection(String),

    #[error("invalid config: {0}")]
    Config(String),

    /// A named stage of an experiment failed.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// True for errors that originate in the configuration rather than the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
