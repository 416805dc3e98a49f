//! Uncertain shapelet transform.
//!
//! Time series whose measurements carry an uncertainty (`best ± δ`) are
//! classified by extracting discriminative subsequences (shapelets) with an
//! uncertainty-propagating squared Euclidean dissimilarity, turning each
//! series into a vector of uncertain distances to those shapelets, and
//! training a decision tree on an encoding of those vectors.
//!
//! * [`uncertain`]: uncertain values, propagation rules, ordering, UDISSIM.
//! * [`series`]: datasets, TSV I/O and the Gaussian noise protocol.
//! * [`shapelet`]: candidate scoring, top-k extraction, the transform.
//! * [`classify`]: feature encodings and the CART tree.
//! * [`pipeline`] and [`bench`]: end-to-end runs and the benchmark harness.

pub mod bench;
pub mod classify;
pub mod error;
pub mod label;
pub mod pipeline;
pub mod series;
pub mod shapelet;
pub mod uncertain;

pub use error::{Result, UstError};
pub use label::Label;
pub use pipeline::Mode;
pub use uncertain::{udissim, UncertainValue, UncertainVector};
