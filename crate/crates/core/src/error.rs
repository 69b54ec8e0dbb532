use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is singular (det = {det:e})")]
    SingularMatrix { det: f64 },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("stopping section exceeds {cap} words at scale {r:e}")]
    ScaleTooSmall { r: f64, cap: usize },
    #[error("work budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("no strongly invariant multicone found within {0} iterations")]
    NotDominatedWithin(usize),
    #[error("cone iterates cover the projective line with at most {0} intervals")]
    ConeCollapse(usize),
    #[error("root is not bracketed: {0}")]
    NoBracket(String),
    #[error("wrong structure: {0}")]
    WrongStructure(String),
    #[error("root exceeds 2; solve the determinant equation instead")]
    NoRootInRange,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("word length {len} exceeds discretisation depth {depth}")]
    DepthExceeded { len: usize, depth: usize },
    #[error("open set is not forward invariant under map {0}")]
    NotForwardInvariant(usize),
    #[error("operation needs preset {expected}, got {got}")]
    WrongPreset { expected: String, got: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
