use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("N must be even (got {0})")]
    OddGridSize(usize),
    #[error("N must be at least 8 (got {0})")]
    GridTooSmall(usize),
    #[error("box length must be positive and finite (got {0})")]
    BadLength(f64),
    #[error("field has {got} samples but the grid needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("exponent p must be >= 1 (got {0})")]
    BadExponent(f64),
    #[error("Lorentz exponent p must be > 1 (got {0})")]
    BadLorentzExponent(f64),
    #[error("zero field")]
    ZeroField,
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("radius must be positive (got {0})")]
    BadRadius(f64),
    #[error("quadrature did not reach relative tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },
    #[error("kernel tail never becomes bounded")]
    UnboundedTail,
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("sub-solve at mass {mass} did not converge")]
    NotConverged { mass: f64 },
    #[error("imaginary residue {0:e} after convolution; symbol and grid do not match")]
    ImaginaryResidue(f64),
    #[error("blowup suspected at t = {time}")]
    BlowupSuspected { time: f64 },
    #[error("not an HFLD file")]
    BadMagic,
    #[error("corrupt snapshot")]
    CorruptSnapshot,
    #[error("unsupported HFLD version {0}")]
    UnsupportedVersion(u32),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
