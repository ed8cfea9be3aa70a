use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inclusions {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("inclusion {0} is not strictly inside the outer domain")]
    Containment(usize),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),
    #[error("infeasible mesh resolution: {0}")]
    InfeasibleResolution(String),
    #[error("degenerate element {0}")]
    DegenerateElement(usize),
    #[error("coefficient for region {0} is not symmetric positive definite")]
    NotSpd(usize),
    #[error("coefficient sample at ({0}, {1}) is not symmetric")]
    NonSymmetric(f64, f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("exponent p = {0} must exceed n + 2")]
    Exponent(f64),
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("empty time window: {0}")]
    EmptyWindow(String),
    #[error("zero right-hand side with nonzero left-hand side")]
    ZeroRhs,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("config: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
