use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite result in {0}")]
    NonFinite(&'static str),

    #[error("orbit escaped at step {step} (|z| = {modulus:e})")]
    Escaped { step: usize, modulus: f64 },

    #[error("argument {re} + {im}i lies outside the domain of {what}")]
    Domain {
        what: &'static str,
        re: f64,
        im: f64,
    },

    #[error("accuracy target missed in {what}: {detail}")]
    Accuracy { what: &'static str, detail: String },

    #[error("quadrature step {step} too coarse for x = {x} (need step <= {limit})")]
    Aliasing { x: f64, step: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("instance too large: {0}")]
    Capacity(String),

    #[error("malformed input: {0}")]
    Decode(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, z: num_complex::Complex64) -> Error {
    Error::Domain {
        what,
        re: z.re,
        im: z.im,
    }
}
