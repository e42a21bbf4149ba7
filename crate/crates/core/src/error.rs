use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("non-positive rate: {name} = {value}")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("threshold {name} = {value} is not an integer")]
    NonIntegerThreshold { name: &'static str, value: f64 },
    #[error("threshold {name} = {value} is below 1")]
    ThresholdTooSmall { name: &'static str, value: f64 },
    #[error("query outside the admissible domain: {0}")]
    InvalidQuery(String),
    #[error("closed-form evaluation requires an exponential observation law")]
    NotClosedFormCapable,
    #[error("cumulative path for {which} never reaches its threshold")]
    NoCrossing { which: &'static str },
    #[error("constant term {0:.3e} is too small to invert the series")]
    SingularConstantTerm(f64),
    #[error("requested coefficient ({k}, {m}) exceeds truncation orders ({max_x}, {max_y})")]
    TruncationTooSmall {
        k: usize,
        m: usize,
        max_x: usize,
        max_y: usize,
    },
    #[error("grid of {grid} points is too coarse for order {order}")]
    GridTooCoarse { grid: usize, order: usize },
    #[error("poles {0} and {1} are too close for the partial-fraction inversion")]
    PolesTooClose(f64, f64),
    #[error("numeric Laplace inversion did not converge at t = {t} (spread {spread:.3e})")]
    NonConvergent { t: f64, spread: f64 },
    #[error("path exceeded {0} observations without both thresholds being crossed")]
    MaxObservationsExceeded(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, GameError>;
