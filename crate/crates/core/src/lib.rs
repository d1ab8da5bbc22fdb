//! Keyed block-wise image encryption that stays learnable.
//!
//! The [`cipher`] module holds the block-wise shuffling cipher. [`baseline`]
//! provides the naive shuffle and cat-map schemes it is compared against.
//! [`metrics`] measures how random the ciphertexts look, and [`probe`] checks
//! whether a small network can still learn from them.

pub mod baseline;
pub mod cipher;
pub mod dataset;
pub mod error;
pub mod image;
pub mod keystream;
pub mod metrics;
pub mod probe;
pub mod scheme;

pub use error::{Error, Result};
pub use image::ImageU8;
