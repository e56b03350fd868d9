use thiserror::Error;

/// Errors surfaced by the estimation, selection, simulation and backtest
/// routines. Solver non-convergence is deliberately *not* an error: fits
/// report it through their result types so callers can inspect diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("column {0} has zero dispersion under the requested scaling")]
    DegenerateColumn(usize),

    #[error("sample covariance diagonal entry {0} is not strictly positive")]
    ZeroDiagonalCovariance(usize),

    #[error("precision matrix diagonal entry {index} must be positive, got {value}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("residual for variable {0} has zero norm; partial variance undefined")]
    DegenerateResidual(usize),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("degrees of freedom must exceed 2 for the covariance to exist, got {0}")]
    InvalidDf(f64),

    #[error("could not reach the target condition number within {steps} bisection steps")]
    InfeasibleTarget { steps: usize },

    #[error("residual sum of squares for variable {0} is zero; BIC undefined")]
    ZeroRss(usize),

    #[error("cross-validation fold {0} is empty or too small")]
    FoldTooSmall(usize),

    #[error("budget denominator 1'\u{3a9}1 = {0} is degenerate")]
    DegenerateBudgetDenominator(f64),

    #[error("portfolio risk is zero; Sharpe ratio undefined")]
    ZeroRisk,

    #[error("estimation failed for rebalance window {window}: {source}")]
    WindowEstimationFailed {
        window: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
