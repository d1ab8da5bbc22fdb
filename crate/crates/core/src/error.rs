use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image {width}x{height} is not divisible into {block}x{block} blocks")]
    Dimension {
        width: usize,
        height: usize,
        block: usize,
    },

    #[error("pixel buffer holds {got} bytes, expected {expected} for {width}x{height} RGB")]
    BufferSize {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },

    #[error("expected {expected} blocks, got {got}")]
    CountMismatch { expected: usize, got: usize },

    #[error("expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("sequence of length {len} is not a permutation of 0..{len}")]
    NotAPermutation { len: usize },

    #[error("cat map needs a square image, got {width}x{height}")]
    NotSquare { width: usize, height: usize },

    #[error("file of {len} bytes is not a whole number of {record}-byte records")]
    BadLength { len: usize, record: usize },

    #[error("record {index} has label {label}, expected < {classes}")]
    BadLabel {
        index: usize,
        label: u8,
        classes: usize,
    },

    #[error("CIFAR records hold 32x32 images, got {width}x{height}")]
    BadDims { width: usize, height: usize },

    #[error("images in a sheet must share dimensions")]
    DimsMismatch,

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("image too small for adjacent-pixel pairs in this direction")]
    TooSmall,

    #[error("batch is empty")]
    EmptyBatch,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed key file: {0}")]
    KeyFormat(String),

    #[error("key is for scheme `{key}` but `{requested}` was requested")]
    SchemeMismatch { key: String, requested: String },

    #[error("malformed PPM: {0}")]
    Ppm(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
