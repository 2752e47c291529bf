use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("line {line}: {msg}")]
    MalformedEvent { line: usize, msg: String },
    #[error("only read-only operations can be amplified")]
    AmplifyModifying,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Glass(#[from] glass::Error),
}
