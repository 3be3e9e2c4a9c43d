//! Exit-code policy: 0 success, 2 usage/data problems, 1 internal faults.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad input data or configuration; exit code 2.
    Data(String),
    /// Unexpected internal failure; exit code 1.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Data(msg) | CliError::Internal(msg) => write!(f, "{msg}"),
        }
    }
}

macro_rules! data_error_from {
    ($($ty:ty),*) => {
        $(impl From<$ty> for CliError {
            fn from(err: $ty) -> Self {
                CliError::Data(err.to_string())
            }
        })*
    };
}

data_error_from!(
    respiro::io::IoError,
    respiro::signal::SignalError,
    respiro::quantizer::QuantizerError,
    respiro::ctmc::CtmcError,
    respiro::synth::SynthError,
    respiro::eval::EvalError,
    respiro::InvalidBounds,
    std::io::Error
);
