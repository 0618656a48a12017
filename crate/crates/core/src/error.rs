use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("axis {axis} out of range for a distribution with {rank} axes")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("axis sets overlap on axis {0}")]
    OverlappingAxes(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("kernel row {row} sums to {sum} (expected 1)")]
    NonStochasticRow { row: String, sum: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sequence length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("type class of size {class_size} cannot hold {requested} distinct codewords")]
    TypeClassTooSmall { requested: u128, class_size: String },

    #[error("size guard exceeded: {what} needs {needed} evaluations (limit {limit}); set RACXPT_GUARD_OVERRIDE=1 to lift")]
    GuardExceeded { what: String, needed: f64, limit: f64 },

    #[error("packing resampling exhausted after {tries} tries (best log2 S = {best_log2_s:.3}, target {target_log2:.3})")]
    PackingExhausted { tries: usize, best_log2_s: f64, target_log2: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// True when the size guards have been lifted through the environment.
pub fn guard_overridden() -> bool {
    std::env::var("RACXPT_GUARD_OVERRIDE")
        .map(|v| !v.is_empty() && v != "0")
        .unwrap_or(false)
}

pub(crate) fn check_guard(what: &str, needed: f64, limit: f64) -> Result<()> {
    if needed > limit && !guard_overridden() {
        return Err(Error::GuardExceeded {
            what: what.to_string(),
            needed,
            limit,
        });
    }
    Ok(())
}
