use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A distribution or transform was constructed with a degenerate parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("threshold sequence is not nondecreasing: x_{index} = {prev} > x_{next_index} = {next}", next_index = index + 1)]
    NonMonotone { index: u64, prev: f64, next: f64 },

    #[error("threshold index {index} outside the sequence domain [{first}, {last}]")]
    IndexOutOfRange { index: u64, first: u64, last: u64 },

    #[error("threshold x_{index} is not a number")]
    NotANumber { index: u64 },

    /// `F(x_{n+k}) = 0` makes the run ratio undefined.
    #[error("run ratio undefined at n = {n}, k = {k}: F(x_(n+k)) = 0")]
    UndefinedRatio { n: u64, k: u64 },

    #[error("series term at n = {index} is negative or NaN ({value})")]
    NegativeTerm { index: u64, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }
}
