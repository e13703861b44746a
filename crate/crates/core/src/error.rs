use core::fmt;

/// Errors produced by the compounding pipeline and its building blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid dimensions are zero, mismatched, or too small for the request.
    Dimensions(&'static str),
    /// A pixel value is non-finite or outside [0, 1].
    Range { index: usize, value: f32 },
    /// A pyramid or request is internally inconsistent.
    Structure(&'static str),
    /// A parameter is outside its admissible range.
    Parameter(&'static str),
    /// The computation has no meaningful answer for this input.
    Degenerate(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dimensions(msg) => write!(f, "dimension error: {msg}"),
            Self::Range { index, value } => {
                write!(f, "value {value} at index {index} is outside [0, 1]")
            }
            Self::Structure(msg) => write!(f, "structural error: {msg}"),
            Self::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Self::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
