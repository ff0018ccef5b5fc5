use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid time partition: need T > 0 and at least one slab")]
    InvalidPartition,
    #[error("cell on the coarsest level has no parent")]
    NoParent,
    #[error("cell id {0} out of range")]
    InvalidCell(usize),
    #[error("mesh level {0} does not exist")]
    InvalidLevel(usize),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("dense oracle limited to {limit} unknowns, requested {requested}")]
    OracleTooLarge { limit: usize, requested: usize },
    #[error("smoother patches are stale: built for {built}, used with {current}")]
    StalePatches { built: u64, current: u64 },
    #[error("transfer between incompatible levels: {0}")]
    LevelMismatch(String),
    #[error("Newton did not converge on slab {slab} after {iterations} steps (residual {residual:.3e})")]
    NewtonDiverged { slab: usize, iterations: usize, residual: f64 },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
