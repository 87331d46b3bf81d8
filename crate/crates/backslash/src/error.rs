//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its mathematical domain (non-finite, wrong sign,
    /// out of the supported interval).
    #[error("domain error: {0}")]
    Domain(String),

    /// A sample is too short or all-zero, so its moments carry no information.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A value does not fit the representable range of the target encoding.
    #[error("range error: {0}")]
    Range(String),

    /// A container is malformed: bad magic, unsupported version, inconsistent
    /// dimensions.
    #[error("format error: {0}")]
    Format(String),

    /// A bitstream or file ended in the middle of a unit that should be whole.
    #[error("truncated input: {0}")]
    Truncation(String),

    /// Decoded content is internally inconsistent (e.g. a rank index beyond
    /// the code table).
    #[error("corrupt data: {0}")]
    Corruption(String),

    /// Tensor/layer dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Training produced a non-finite or exploding cost; the run is aborted.
    #[error("training diverged at epoch {epoch}, batch {batch}: cost = {cost}")]
    Divergence { epoch: usize, batch: usize, cost: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
