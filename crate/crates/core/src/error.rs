use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An oscillator is too close to resonance with the central system.
    #[error("resonance error: |omega_k - Omega| = {gap:e} rad/s is below the floor {floor:e} rad/s")]
    Resonance { gap: f64, floor: f64 },

    /// A Fock-space truncation is too small for the requested accuracy.
    #[error("truncation error: {what} needs dim >= {required}, got {dim}")]
    Truncation {
        what: &'static str,
        required: usize,
        dim: usize,
    },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("linear algebra failure: {0}")]
    LinAlg(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
