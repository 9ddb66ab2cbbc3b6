use thiserror::Error;

use crate::permutation::Permutation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid theta context: {0}")]
    InvalidContext(String),

    #[error("argument magnitude e^{log_magnitude:.3} exceeds the configured bound e^{bound:.3}; rescale the parameters")]
    Range { log_magnitude: f64, bound: f64 },

    #[error("denominator theta({arg}) has modulus {modulus:e} below the pole threshold")]
    Pole { arg: String, modulus: f64 },

    #[error("resonant parameters: R-matrix denominator modulus {modulus:e} in {context}")]
    Resonance { context: String, modulus: f64 },

    #[error("descent choices disagree on row {row}: deviation {deviation:e}")]
    Consistency { row: Permutation, deviation: f64 },

    #[error("restriction matrix condition estimate {condition:e} exceeds 1/tol")]
    IllConditioned { condition: f64 },

    #[error("not a permutation of 1..{n}: {word:?}")]
    InvalidPermutation { n: usize, word: Vec<usize> },

    #[error("size mismatch: expected {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("no non-resonant parameter point found after {attempts} attempts")]
    ResamplingExhausted { attempts: usize },
}
