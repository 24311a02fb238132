//! Simulation toolkit for the degradation of a quantum directional reference
//! frame under repeated use, and for the semi-classical random walk on the
//! sphere that reproduces its measurement fidelity.
//!
//! * [`angular_momentum`]: exact `j ⊗ 1/2` coupling, total-spin projectors and
//!   spin coherent-state populations.
//! * [`quantum`]: the measurement superoperator, fidelity, closed-form decay
//!   and measurement-record trajectories.
//! * [`classical`]: Legendre spectra on the sphere, the fixed-step walk, the
//!   classical fidelity and the fitted step size.
//! * [`coherent`]: non-negative least squares test of coherent-state
//!   decomposability.
//! * [`harness`]: the command-line front end.

pub mod angular_momentum;
pub mod classical;
pub mod coherent;
pub mod error;
pub mod harness;
pub mod legendre;
pub mod nnls;
pub mod quantum;
pub mod selftest;
pub mod tolerances;

pub use angular_momentum::{CouplingBranch, MagneticIndex, QubitState, SpinLabel};
pub use error::{Error, Module, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
