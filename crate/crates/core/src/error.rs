use thiserror::Error;

/// Errors raised by the simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A dense object would exceed the configured qubit cap.
    #[error("{what} needs {qubits} qubits, above the dense cap of {cap}")]
    TooLarge {
        what: &'static str,
        qubits: usize,
        cap: usize,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A numerical check (normalization, hermiticity, positivity) failed.
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("gate wiring error: {0}")]
    Wiring(String),
    #[error("lie closure exceeded max dimension {max_dim}")]
    LieTruncated { max_dim: usize },
    /// A trained ansatz is not accurate enough to stand in for the exact propagator.
    #[error("ansatz refused: final loss {loss:e} above threshold {threshold:e}")]
    Refused { loss: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
