use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZhangError {
    #[error("lattice too large: {0}")]
    Size(String),
    #[error("invalid site index {0} (lattice has {1} sites)")]
    InvalidSite(usize, usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("negative energy {value} at site {site}")]
    NegativeEnergy { site: usize, value: f64 },
    #[error("internal consistency violated: {0}")]
    Internal(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("excitation sequence exhausted")]
    Exhausted,
    #[error("parse error: {0}")]
    Parse(String),
}

impl ZhangError {
    /// Process exit status the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ZhangError::Budget(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, ZhangError>;
