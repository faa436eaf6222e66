use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The log of a computed age exceeds what an `f64` can represent.
    #[error("age overflows f64 (log-age = {log_age})")]
    Overflow { log_age: f64 },

    #[error("root not bracketed on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// The simulator processed too many events without a single delivery.
    #[error("no delivery after {events} events (last delivery count {deliveries})")]
    EventCapExceeded { events: u64, deliveries: u64 },

    #[error("{0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
