use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate reproduction law: all mass sits on k = {0}")]
    DegenerateLaw(u32),
    #[error("masses sum to {0}, which is not within 1e-9 of 1")]
    NotNormalized(f64),
    #[error("negative mass {mass} at offspring count {count}")]
    NegativeMass { count: u32, mass: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("memory parameter q = {0} must lie strictly inside (0, 1)")]
    InvalidMemory(f64),
    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("state space too large: {states} states exceed the limit of {limit}")]
    StateExplosion { states: u128, limit: u128 },
    #[error("expected population size vanishes at generation {0}")]
    ZeroPopulationMean(usize),
    #[error("series diverges: {0}")]
    SeriesDiverges(String),
    #[error("maximal weight attained at several support points {0:?}")]
    UnsupportedTie(Vec<u32>),
    #[error("population cap {cap} exceeded at generation {generation}")]
    PopulationCapExceeded { cap: u64, generation: usize },
    #[error("blow-up detected at t = {t}: state norm {norm:e}")]
    BlowUpDetected { t: f64, norm: f64 },
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
