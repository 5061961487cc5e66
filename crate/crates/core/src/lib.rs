//! Hierarchical mid-level element mining for visual compatibility.
//!
//! Base level: per class, top-`k` binarized region activations are mined
//! for frequent index patterns; each pattern becomes an element with a
//! linear discriminant trained on the regions it covers. Top level: per
//! class pair, max-pooled element responses of both images are binarized,
//! joined with a compatibility label item, and mined for cross-class rules
//! predicting compatibility; each rule gets its own discriminant over the
//! concatenated responses. A pair's score is the best top-level response.

pub mod compat;
pub mod config;
pub mod corpus;
pub mod elements;
pub mod error;
pub mod eval;
pub mod exec;
pub mod features;
pub mod fraction;
pub mod miner;
pub mod pipeline;

mod textfmt;

pub use error::{Error, Result};
pub use exec::Exec;
pub use fraction::Fraction;
