//! The quantum reference frame: a spin-`j` system used to measure a stream of
//! maximally mixed spin-1/2 probes via the total-spin projectors `Π_±`.

mod evolution;
mod kraus;
mod state;
mod trajectory;

pub use evolution::{
    apply_map, apply_map_n, closed_form_fidelity, evolve, outcome_probabilities, quantum_fidelity, FidelityEntry,
    FidelitySeries,
};
pub use kraus::{BandOperator, KrausSet};
pub use state::{FrameState, Representation};
pub use trajectory::{
    conditional_update, sample_trajectory, trajectory_batch, trajectory_rng, MeasurementRecord, TrajectoryStats,
    TrajectoryStep,
};
