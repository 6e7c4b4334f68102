use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arrival rate must be positive and finite, got {name} = {value}")]
    NonPositiveRate { name: &'static str, value: f64 },

    #[error("gap must be nonnegative and finite, got {name} = {value}")]
    NegativeGap { name: &'static str, value: f64 },

    #[error("vehicle sequence is not sorted by desired time at index {index}")]
    UnsortedInput { index: usize },

    #[error("vehicle {index} uses lane {lane}, but the conflict graph has {lanes} lanes")]
    UnknownLane {
        index: usize,
        lane: usize,
        lanes: usize,
    },

    #[error("invalid conflict graph: {0}")]
    InvalidGraph(String),

    #[error("no map region matched state ({t1}, {t2}) with gap {gap}")]
    NoRegionMatched { t1: f64, t2: f64, gap: f64 },

    #[error("no negative characteristic root: convergence margin {margin} is not positive")]
    NoNegativeRoot { margin: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
