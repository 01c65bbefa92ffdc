use thiserror::Error;

use crate::codec::CodecError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid simulation box: {0}")]
    InvalidBox(String),

    #[error("non-finite coordinate for particle {index}")]
    NonFinite { index: usize },

    #[error("particle {index} lies outside the box on open axis {axis}")]
    OutsideBox { index: usize, axis: usize },

    #[error("particle {index} has invalid interaction radius {radius}")]
    InvalidRadius { index: usize, radius: f64 },

    #[error("array `{name}` has length {found}, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("bits per dimension must be in 1..=21, got {0}")]
    InvalidBits(u32),

    #[error("grid coordinate {coord} out of range for {bits} bits")]
    GridOutOfRange { coord: u32, bits: u32 },

    #[error("invalid cluster parameters: {0}")]
    InvalidClusterParams(String),

    #[error("{kind} cluster index {index} out of range (count {count})")]
    ClusterOutOfRange {
        kind: &'static str,
        index: usize,
        count: usize,
    },

    #[error("empty particle range")]
    EmptyRange,

    #[error(
        "periodic axis {axis} has length {length} but the largest cutoff is {cutoff}; \
         the box must be at least twice the cutoff"
    )]
    BoxTooSmall {
        axis: usize,
        length: f64,
        cutoff: f64,
    },

    #[error("invalid build parameters: {0}")]
    InvalidBuildParams(String),

    #[error("store was built for {expected} particles, got {found}")]
    StoreMismatch { expected: usize, found: usize },

    #[error("query scale {query} exceeds the build radius scale {build}")]
    QueryExceedsBuild { query: f64, build: f64 },

    #[error("missing particle field `{0}`")]
    MissingField(String),

    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error("{n} particles exceed the brute-force oracle cap of {cap}")]
    OracleCap { n: usize, cap: usize },

    #[error(transparent)]
    Codec(#[from] CodecError),

    #[error("invalid store dump: {0}")]
    InvalidDump(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failure raised by a pair function.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("particles {i} and {j} coincide")]
    Coincident { i: usize, j: usize },

    #[error("{0}")]
    Other(String),
}
