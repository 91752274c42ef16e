use thiserror::Error;

pub type Result<T, E = CpdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CpdError {
    #[error("electric field evaluated on the singular axis at ({0}, {1}, {2})")]
    AxisSingularity(f64, f64, f64),

    #[error("magnetic field vanishes at the linearisation point")]
    ZeroField,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corrupted spectral state: imaginary residue {residue:e} above tolerance")]
    CorruptedState { residue: f64 },

    #[error("non-finite state at step {step}")]
    Divergence { step: usize },

    #[error("implicit iteration did not converge within {iterations} iterations (step too large for this eps?)")]
    NoConvergence { iterations: usize },

    #[error("error metric undefined: reference state has zero norm")]
    UndefinedMetric,

    #[error("reference solution needs {needed} steps, above the cap of {cap}; use a larger eps")]
    BudgetExceeded { needed: u64, cap: u64 },

    #[error("slope fit needs at least 3 usable points, got {0}")]
    TooFewPoints(usize),

    #[error("bad coefficient file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
