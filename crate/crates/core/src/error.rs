use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid scheme matrix: {0}")]
    InvalidScheme(String),

    #[error("capacity exceeded: {what} needs {needed}, cap is {cap}")]
    Capacity {
        what: &'static str,
        needed: u64,
        cap: u64,
    },

    #[error("tree order mismatch: tree has k={tree}, scheme has k={scheme}")]
    OrderMismatch { tree: u32, scheme: u32 },

    #[error("unknown vertex {0}")]
    UnknownVertex(usize),

    #[error("depth mismatch: {0}")]
    DepthMismatch(String),

    #[error("bound used outside its regime: {0}")]
    Regime(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
