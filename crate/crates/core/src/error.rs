use std::fmt;

use thiserror::Error;

use crate::coherent::DecompositionResult;

/// Library module an error originated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Module {
    AngularMomentum,
    QuantumDrf,
    ClassicalWalk,
    CoherentAnalysis,
    Harness,
}

impl Module {
    pub fn tag(self) -> &'static str {
        match self {
            Module::AngularMomentum => "angular_momentum",
            Module::QuantumDrf => "quantum_drf",
            Module::ClassicalWalk => "classical_walk",
            Module::CoherentAnalysis => "coherent_analysis",
            Module::Harness => "harness",
        }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("[{module}] domain error: {message}")]
    Domain { module: Module, message: String },

    #[error("[{module}] accuracy error: {message}")]
    Accuracy { module: Module, message: String },

    #[error("[{module}] no convergence after {iterations} iterations (best residual {:.3e})", .best.residual)]
    Convergence { module: Module, iterations: usize, best: Box<DecompositionResult> },

    #[error("[{module}] internal consistency error: {message}")]
    Consistency { module: Module, message: String },
}

impl Error {
    pub fn module(&self) -> Module {
        match self {
            Error::Domain { module, .. }
            | Error::Accuracy { module, .. }
            | Error::Convergence { module, .. }
            | Error::Consistency { module, .. } => *module,
        }
    }

    pub(crate) fn domain(module: Module, message: impl Into<String>) -> Self {
        Error::Domain { module, message: message.into() }
    }

    pub(crate) fn accuracy(module: Module, message: impl Into<String>) -> Self {
        Error::Accuracy { module, message: message.into() }
    }

    pub(crate) fn consistency(module: Module, message: impl Into<String>) -> Self {
        Error::Consistency { module, message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
