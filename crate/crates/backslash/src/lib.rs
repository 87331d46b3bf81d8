//! Rate-constrained training and parameter entropy coding.
//!
//! The pieces fit together as a pipeline:
//!
//! * [`gg`] fits a generalized-Gaussian shape to a parameter tensor by
//!   matching sample moments against the comparison function.
//! * [`rate`] turns that shape into a differentiable rate measure and
//!   combines it with a task loss into the cost `J = D + lambda * R`.
//! * [`trainer`] descends that cost on a small feed-forward classifier,
//!   re-estimating the shape every batch.
//! * [`tensor`] stores parameter tensors ("GGRT" files), quantizes them to
//!   an integer grid, and prunes by magnitude.
//! * [`codec`] entropy-codes quantized tensors: values are ranked by
//!   frequency and the ranks are exp-Golomb coded, with Huffman and
//!   fixed-length baselines for rate reports.
//!
//! The `backslash` binary exposes the pipeline as subcommands; see the
//! crate README.

pub mod codec;
pub mod error;
pub mod gg;
mod numeric;
pub mod rate;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
