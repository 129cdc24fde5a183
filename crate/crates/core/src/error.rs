use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("budget exceeded for {what}: estimate {estimate} > budget {budget}")]
    BudgetExceeded {
        what: &'static str,
        estimate: u64,
        budget: u64,
    },
    #[error("LP infeasible: {0}")]
    Infeasible(String),
    #[error("LP unbounded: {0}")]
    Unbounded(String),
    #[error("iteration limit reached after {0} steps")]
    IterationLimit(usize),
    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
