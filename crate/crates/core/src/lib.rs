//! Change detection on antenna-array snapshots that passed through a
//! saturating front end.
//!
//! The pipeline has three stages:
//!
//! 1. [`signal`] synthesizes a persistent high-power interferer plus a signal
//!    of interest that switches on at a known onset, and compresses the
//!    result with an element-wise `tanh`.
//! 2. [`classifier`] trains a small dense network to recognise snapshots the
//!    compression distorted the most, and deletes them from the stream.
//! 3. [`detector`] slides two adjacent windows over the (edited) stream and
//!    evaluates `tr(R̂_old⁻¹ R̂_new)`, which peaks when a new spatial source
//!    appears.
//!
//! [`evaluation`] ties these together over Monte-Carlo seeds and produces
//! ROC curves; [`io`] holds the file formats.

pub mod classifier;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod numerics;
pub mod signal;

pub use error::{Error, Result};
pub use num_complex::Complex64;
