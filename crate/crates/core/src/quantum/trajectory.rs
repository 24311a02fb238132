use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::evolution::{check_spin, half_sandwich_sum, outcome_probabilities, quantum_fidelity};
use super::kraus::KrausSet;
use super::state::FrameState;
use crate::angular_momentum::{CouplingBranch, SpinLabel};
use crate::error::{Error, Module, Result};
use crate::tolerances;

const MODULE: Module = Module::QuantumDrf;
const TRAJECTORIES_PER_CHUNK: usize = 256;

/// Outcomes of successive measurements and the probability each had when drawn.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MeasurementRecord {
    outcomes: Vec<CouplingBranch>,
    probabilities: Vec<f64>,
}

impl MeasurementRecord {
    pub fn push(&mut self, outcome: CouplingBranch, probability: f64) {
        self.outcomes.push(outcome);
        self.probabilities.push(probability);
    }

    pub fn outcomes(&self) -> &[CouplingBranch] {
        &self.outcomes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Probability of the whole record.
    pub fn joint_probability(&self) -> f64 {
        self.probabilities.iter().product()
    }
}

fn checked_probability(p: f64, branch: CouplingBranch) -> Result<f64> {
    if !(-tolerances::PROBABILITY_SLACK..=1.0 + tolerances::PROBABILITY_SLACK).contains(&p) || p.is_nan() {
        return Err(Error::consistency(MODULE, format!("outcome {} has probability {p}", branch.symbol())));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Lüders update for a kept outcome: returns `p_c` and
/// `ρ_c = (1/2) Σ_ab E_ab^c ρ E_ab^c† / p_c`.
pub fn conditional_update(state: &FrameState, kraus: &KrausSet, branch: CouplingBranch) -> Result<(f64, FrameState)> {
    check_spin(state, kraus)?;
    let p = checked_probability(outcome_probabilities(state, kraus)?[branch.index()], branch)?;
    if p == 0.0 {
        return Err(Error::consistency(
            MODULE,
            format!("cannot condition on outcome {} of probability zero", branch.symbol()),
        ));
    }
    let unnormalized = FrameState::from_repr(state.spin(), half_sandwich_sum(state, kraus.branch(branch)));
    Ok((p, unnormalized.scaled(1.0 / p)))
}

/// The generator for trajectory `index` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn run_trajectory<F>(
    kraus: &KrausSet,
    n_max: u64,
    rng: &mut ChaCha8Rng,
    mut observe: F,
) -> Result<(MeasurementRecord, FrameState)>
where
    F: FnMut(u64, &FrameState) -> Result<()>,
{
    let mut state = FrameState::highest_weight(kraus.spin());
    let mut record = MeasurementRecord::default();
    observe(0, &state)?;
    for n in 1..=n_max {
        let [p_plus, p_minus] = outcome_probabilities(&state, kraus)?;
        checked_probability(p_plus, CouplingBranch::Plus)?;
        checked_probability(p_minus, CouplingBranch::Minus)?;
        let draw: f64 = rng.random();
        let branch = if draw < p_plus { CouplingBranch::Plus } else { CouplingBranch::Minus };
        let (p, next) = conditional_update(&state, kraus, branch)?;
        record.push(branch, p);
        state = next;
        observe(n, &state)?;
    }
    Ok((record, state))
}

/// Samples one measurement record of length `n_max` starting from
/// `|j, j⟩⟨j, j|`, returning it with the record-conditioned final state.
pub fn sample_trajectory(spin: SpinLabel, n_max: u64, seed: u64) -> Result<(MeasurementRecord, FrameState)> {
    let kraus = KrausSet::build(spin)?;
    run_trajectory(&kraus, n_max, &mut trajectory_rng(seed, 0), |_, _| Ok(()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub n: u64,
    /// Mean of the conditional-state fidelity over trajectories.
    pub mean: f64,
    pub std_error: f64,
}

/// Per-step statistics of the conditional fidelity over many trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub spin: SpinLabel,
    pub samples: usize,
    pub seed: u64,
    pub steps: Vec<TrajectoryStep>,
}

/// Runs `samples` independent trajectories (trajectory `i` uses
/// [`trajectory_rng`]`(seed, i)`) and aggregates the conditional fidelity at
/// every step. The result does not depend on the thread schedule.
pub fn trajectory_batch(spin: SpinLabel, n_max: u64, samples: usize, seed: u64) -> Result<TrajectoryStats> {
    if samples == 0 {
        return Err(Error::domain(MODULE, "trajectory batch needs at least one sample"));
    }
    let kraus = KrausSet::build(spin)?;
    let steps = n_max as usize + 1;
    let chunks: Vec<(usize, usize)> = (0..samples)
        .step_by(TRAJECTORIES_PER_CHUNK)
        .map(|start| (start, (start + TRAJECTORIES_PER_CHUNK).min(samples)))
        .collect();

    let partials: Vec<(Vec<f64>, Vec<f64>)> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut sum = vec![0.0; steps];
            let mut sum_sq = vec![0.0; steps];
            for index in start..end {
                let mut rng = trajectory_rng(seed, index as u64);
                run_trajectory(&kraus, n_max, &mut rng, |n, state| {
                    let f = quantum_fidelity(state, &kraus)?;
                    sum[n as usize] += f;
                    sum_sq[n as usize] += f * f;
                    Ok(())
                })?;
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<_>>()?;

    let mut sum = vec![0.0; steps];
    let mut sum_sq = vec![0.0; steps];
    for (s, q) in &partials {
        for n in 0..steps {
            sum[n] += s[n];
            sum_sq[n] += q[n];
        }
    }
    let count = samples as f64;
    let steps = (0..steps)
        .map(|n| {
            let mean = sum[n] / count;
            let variance = if samples > 1 { ((sum_sq[n] - count * mean * mean) / (count - 1.0)).max(0.0) } else { 0.0 };
            TrajectoryStep { n: n as u64, mean, std_error: (variance / count).sqrt() }
        })
        .collect();
    Ok(TrajectoryStats { spin, samples, seed, steps })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    use super::*;
    use crate::angular_momentum::brute_force;

    fn spin(tj: u32) -> SpinLabel {
        SpinLabel::from_twice(tj)
    }

    #[test]
    fn first_step_probability_matches_coupled_space_trace() {
        for tj in 1..=10 {
            let s = spin(tj);
            let k = KrausSet::build(s).unwrap();
            let [p_plus, p_minus] = outcome_probabilities(&FrameState::highest_weight(s), &k).unwrap();
            // Tr[Π+ (|j,j⟩⟨j,j| ⊗ I/2)] straight from the spectral projector.
            let d = s.dim();
            let mut joint = DMatrix::<f64>::zeros(2 * d, 2 * d);
            joint[(2 * (d - 1), 2 * (d - 1))] = 0.5;
            joint[(2 * (d - 1) + 1, 2 * (d - 1) + 1)] = 0.5;
            let oracle = (brute_force::projector(s, CouplingBranch::Plus) * joint).trace();
            assert_abs_diff_eq!(p_plus, oracle, epsilon = 1e-12);
            assert_abs_diff_eq!(p_plus, f64::from(tj + 2) / (2.0 * f64::from(tj + 1)), epsilon = 1e-15);
            assert_abs_diff_eq!(p_plus + p_minus, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn trajectories_are_reproducible() {
        let a = sample_trajectory(spin(6), 40, 99).unwrap();
        let b = sample_trajectory(spin(6), 40, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.len(), 40);
        assert!(a.0.probabilities().iter().all(|p| (0.0..=1.0).contains(p)));
        a.1.check_invariants().unwrap();
        let c = sample_trajectory(spin(6), 40, 100).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn batch_independent_of_thread_count() {
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = single.install(|| trajectory_batch(spin(4), 10, 1000, 5).unwrap());
        let b = many.install(|| trajectory_batch(spin(4), 10, 1000, 5).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.steps[0].std_error, 0.0);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(trajectory_batch(spin(4), 3, 0, 1).is_err());
    }

    #[test]
    fn conditioning_on_minus_outcome_of_mixed_frame() {
        // p_- = 2j / (2(2j+1)) for the rotationally invariant state.
        let s = spin(1);
        let k = KrausSet::build(s).unwrap();
        let (p, st) = conditional_update(&FrameState::maximally_mixed(s), &k, CouplingBranch::Minus).unwrap();
        assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(st.trace(), 1.0, epsilon = 1e-15);
    }
}
