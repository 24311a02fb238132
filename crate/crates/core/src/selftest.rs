//! Structural invariant suite run by `--selftest`: each check sweeps
//! `2j = 1..=20` on randomised inputs drawn from a seeded generator.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::angular_momentum::{projector_matrix, CouplingBranch, SpinLabel};
use crate::classical::{
    classical_fidelity, classical_fidelity_by_quadrature, default_l_max, fitted_step, initial_spectrum, walk_evolve,
    WalkParameters, POSITIVITY_GRID,
};
use crate::quantum::{apply_map, closed_form_fidelity, evolve, FrameState, KrausSet, Representation};
use crate::tolerances;

/// Largest spin exercised by the suite, as `2j`.
pub const MAX_TWICE_J: u32 = 20;
const RANDOM_STATES_PER_SPIN: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst value of the checked quantity over all cases.
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} worst={:.3e} tol={:.1e} cases={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.cases
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl SelftestReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }
}

/// Folds per-case defects into one outcome; an error in any case fails it.
struct Check {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    cases: usize,
    errored: bool,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Check { name, tolerance, worst: 0.0, cases: 0, errored: false }
    }

    fn record(&mut self, defect: crate::Result<f64>) {
        self.cases += 1;
        match defect {
            Ok(d) if d.is_finite() => self.worst = self.worst.max(d),
            _ => self.errored = true,
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            passed: !self.errored && self.worst <= self.tolerance,
            worst: if self.errored { f64::INFINITY } else { self.worst },
            tolerance: self.tolerance,
            cases: self.cases,
        }
    }
}

fn spins() -> impl Iterator<Item = SpinLabel> {
    (1..=MAX_TWICE_J).map(SpinLabel::from_twice)
}

fn random_states(spin: SpinLabel, rng: &mut ChaCha8Rng) -> Vec<FrameState> {
    let mut states = vec![FrameState::highest_weight(spin), FrameState::maximally_mixed(spin)];
    for _ in 0..RANDOM_STATES_PER_SPIN {
        states.push(FrameState::random_dense(spin, rng));
        states.push(FrameState::random_diagonal(spin, rng));
    }
    states
}

pub fn run_selftest(seed: u64) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut kraus_completeness = Check::new("kraus_completeness", tolerances::STRUCTURAL);
    let mut projector_structure = Check::new("projector_structure", tolerances::STRUCTURAL);
    let mut trace_preservation = Check::new("trace_preservation", tolerances::STRUCTURAL);
    let mut hermiticity = Check::new("hermiticity", tolerances::STRUCTURAL);
    let mut positivity = Check::new("positivity", -tolerances::EIGENVALUE_FLOOR);
    let mut fixed_point = Check::new("maximally_mixed_fixed_point", tolerances::STRUCTURAL);
    let mut diagonal_closure = Check::new("diagonal_closure", 0.0);
    let mut decay_law = Check::new("decay_law", tolerances::ORACLE);
    let mut legendre_normalization = Check::new("legendre_normalization", tolerances::ORACLE);
    let mut distribution_positivity = Check::new("distribution_positivity", tolerances::DISTRIBUTION_POSITIVITY);
    let mut fidelity_routes = Check::new("classical_fidelity_routes", tolerances::ORACLE);

    for spin in spins() {
        let kraus = match KrausSet::build(spin) {
            Ok(k) => k,
            Err(e) => {
                kraus_completeness.record(Err(e));
                continue;
            }
        };
        kraus_completeness.record(Ok(kraus.completeness_defect()));

        projector_structure.record((|| {
            let plus = projector_matrix(spin, CouplingBranch::Plus)?;
            let minus = projector_matrix(spin, CouplingBranch::Minus)?;
            let identity = nalgebra::DMatrix::<f64>::identity(2 * spin.dim(), 2 * spin.dim());
            let complete = (&plus + &minus - &identity).amax();
            let idempotent = (&plus * &plus - &plus).amax().max((&minus * &minus - &minus).amax());
            let traces = (plus.trace() - f64::from(spin.twice_j() + 2))
                .abs()
                .max((minus.trace() - f64::from(spin.twice_j())).abs());
            Ok(complete.max(idempotent).max(traces))
        })());

        for state in random_states(spin, &mut rng) {
            let was_diagonal = state.representation() == Representation::Diagonal;
            match apply_map(&state, &kraus) {
                Ok(next) => {
                    trace_preservation.record(Ok((next.trace() - state.trace()).abs()));
                    hermiticity.record(Ok(next.hermiticity_defect()));
                    positivity.record(Ok((-next.min_eigenvalue()).max(0.0)));
                    if was_diagonal {
                        let dense = apply_map(&state.clone().into_dense(), &kraus);
                        diagonal_closure.record(dense.map(|d| d.max_coherence()));
                    }
                }
                Err(e) => trace_preservation.record(Err(e)),
            }
        }

        let mixed = FrameState::maximally_mixed(spin);
        fixed_point.record(apply_map(&mixed, &kraus).map(|m| m.max_abs_diff(&mixed)));
        fixed_point.record(apply_map(&mixed.clone().into_dense(), &kraus).map(|m| m.max_abs_diff(&mixed)));

        decay_law.record(evolve(spin, 50).map(|s| s.max_deviation()));
        decay_law.record(Ok((closed_form_fidelity(spin, 0) - (0.5 + spin.j() / spin.dim() as f64)).abs()));

        let l_max = default_l_max(spin);
        match initial_spectrum(spin, l_max) {
            Ok(spectrum) => {
                legendre_normalization.record(Ok((spectrum.coefficient(0) - 1.0).abs()));
                let c1 = 6.0 * spin.j() / spin.dim() as f64;
                legendre_normalization.record(Ok((spectrum.coefficient(1) - c1).abs()));
                distribution_positivity.record(Ok((-spectrum.min_density(POSITIVITY_GRID)).max(0.0)));
                let alpha = fitted_step(spin);
                for n in [0u64, 1, 7, 40] {
                    match WalkParameters::new(alpha, n) {
                        Ok(params) => {
                            let walked = walk_evolve(&spectrum, params);
                            legendre_normalization.record(Ok((walked.coefficient(0) - 1.0).abs()));
                            distribution_positivity.record(Ok((-walked.min_density(POSITIVITY_GRID)).max(0.0)));
                            let by_quadrature = classical_fidelity_by_quadrature(&walked);
                            fidelity_routes.record(Ok((classical_fidelity(&walked) - by_quadrature).abs()));
                        }
                        Err(e) => fidelity_routes.record(Err(e)),
                    }
                }
            }
            Err(e) => legendre_normalization.record(Err(e)),
        }
    }

    let checks = vec![
        kraus_completeness.finish(),
        projector_structure.finish(),
        trace_preservation.finish(),
        hermiticity.finish(),
        positivity.finish(),
        fixed_point.finish(),
        diagonal_closure.finish(),
        decay_law.finish(),
        legendre_normalization.finish(),
        distribution_positivity.finish(),
        fidelity_routes.finish(),
    ];
    SelftestReport { seed, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_is_deterministic() {
        let a = run_selftest(7);
        for check in &a.checks {
            assert!(check.passed, "{check}");
            assert!(check.cases > 0, "{check}");
        }
        assert_eq!(a, run_selftest(7));
    }
}
