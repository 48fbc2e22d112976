use thiserror::Error;

#[derive(Debug, Error)]
pub enum SobexError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point ({0}, {1}) is not in the required region: {2}")]
    WrongRegion(f64, f64, String),
    #[error("quadrature did not converge (partial value {partial})")]
    Inconclusive { partial: f64 },
    #[error("no admissible path between the requested endpoints")]
    Disconnected,
    #[error("square count cap {0} exceeded during refinement")]
    RefinementBudget(usize),
    #[error("unknown square id {0}")]
    UnknownSquare(usize),
    #[error("curve leaves the decomposed region by more than the collar width")]
    CurveOutsideRegion,
    #[error("conformal solver failed: {0}")]
    Conformal(String),
    #[error("solver did not converge: residual {0}")]
    NonConvergence(f64),
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("unknown test-function family '{0}'")]
    UnknownFamily(String),
    #[error("chain bisection failed for exterior pair ({0}, {1})")]
    ChainBisection(usize, usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SobexError>;
