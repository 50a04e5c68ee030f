use thiserror::Error;

/// Errors produced by the cloak design pipeline.
#[derive(Debug, Error)]
pub enum CloakError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("empty cell partition: {0}")]
    EmptyPartition(String),
    #[error("mesh generation failed: {0}")]
    Meshing(String),
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("optimization failed: {0}")]
    Optimization(String),
    #[error("feasible set error: {0}")]
    FeasibleSet(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
}

impl CloakError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CloakError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, msg: impl Into<String>) -> Self {
        CloakError::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
