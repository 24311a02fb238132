use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::kraus::{BandOperator, KrausSet};
use super::state::{FrameState, Repr};
use crate::angular_momentum::{CouplingBranch, QubitState, SpinLabel};
use crate::error::{Error, Module, Result};
use crate::tolerances;

const MODULE: Module = Module::QuantumDrf;

pub(crate) fn check_spin(state: &FrameState, kraus: &KrausSet) -> Result<()> {
    if state.spin() != kraus.spin() {
        return Err(Error::domain(MODULE, format!("state has {} but Kraus set has {}", state.spin(), kraus.spin())));
    }
    Ok(())
}

/// `(1/2) Σ_k E_k ρ E_k†` over the given operators, keeping the representation.
pub(crate) fn half_sandwich_sum(state: &FrameState, ops: &[BandOperator]) -> Repr {
    match state.repr() {
        Repr::Diagonal(p) => {
            let mut out = vec![0.0; p.len()];
            for op in ops {
                let e = op.values();
                for (r, slot) in out.iter_mut().enumerate() {
                    if let Some(c) = op.partner(r) {
                        *slot += 0.5 * e[r] * e[r] * p[c];
                    }
                }
            }
            Repr::Diagonal(out)
        }
        Repr::Dense(rho) => {
            let d = rho.nrows();
            let mut out = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
            for op in ops {
                let e = op.values();
                for r in 0..d {
                    let Some(cr) = op.partner(r) else { continue };
                    let er = 0.5 * e[r];
                    if er == 0.0 {
                        continue;
                    }
                    for s in 0..d {
                        if let Some(cs) = op.partner(s) {
                            out[(r, s)] += rho[(cr, cs)] * (er * e[s]);
                        }
                    }
                }
            }
            Repr::Dense(out)
        }
    }
}

/// One use of the frame with the outcome discarded:
/// `E(ρ) = (1/2) Σ_{c,a,b} E_ab^c ρ E_ab^c†`.
pub fn apply_map(state: &FrameState, kraus: &KrausSet) -> Result<FrameState> {
    check_spin(state, kraus)?;
    Ok(FrameState::from_repr(state.spin(), half_sandwich_sum(state, kraus.all())))
}

/// `n` successive applications of [`apply_map`].
pub fn apply_map_n(state: &FrameState, kraus: &KrausSet, n: u64) -> Result<FrameState> {
    check_spin(state, kraus)?;
    let mut current = state.clone();
    for _ in 0..n {
        current = apply_map(&current, kraus)?;
    }
    Ok(current)
}

/// `p_c = Tr[Π_c (ρ ⊗ I/2)] = (1/2) Σ_a Tr(E_aa^c ρ)`, indexed by
/// [`CouplingBranch::index`].
pub fn outcome_probabilities(state: &FrameState, kraus: &KrausSet) -> Result<[f64; 2]> {
    check_spin(state, kraus)?;
    let pops = state.populations();
    let mut out = [0.0; 2];
    for branch in CouplingBranch::ALL {
        out[branch.index()] = QubitState::ALL
            .iter()
            .map(|&a| {
                let e = kraus.operator(branch, a, a).values();
                0.5 * e.iter().zip(&pops).map(|(x, p)| x * p).sum::<f64>()
            })
            .sum();
    }
    Ok(out)
}

/// Quantum average measurement fidelity `F_Q = (1/2) Tr(ρ (E_00^+ + E_11^-))`.
pub fn quantum_fidelity(state: &FrameState, kraus: &KrausSet) -> Result<f64> {
    check_spin(state, kraus)?;
    let aligned = kraus.operator(CouplingBranch::Plus, QubitState::Up, QubitState::Up).values();
    let anti = kraus.operator(CouplingBranch::Minus, QubitState::Down, QubitState::Down).values();
    Ok(0.5 * state.populations().iter().zip(aligned.iter().zip(anti)).map(|(p, (x, y))| p * (x + y)).sum::<f64>())
}

/// `1/2 + j/(2j+1) · (1 - 2/(2j+1)²)^n`.
pub fn closed_form_fidelity(spin: SpinLabel, n: u64) -> f64 {
    let dim = spin.dim() as f64;
    let amplitude = spin.j() / dim;
    let base = 1.0 - 2.0 / (dim * dim);
    let decay = match i32::try_from(n) {
        Ok(k) => base.powi(k),
        Err(_) => base.powf(n as f64),
    };
    0.5 + amplitude * decay
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityEntry {
    pub n: u64,
    /// Fidelity of the iterated map.
    pub map: f64,
    /// Closed-form fidelity at the same step.
    pub closed: f64,
}

impl FidelityEntry {
    pub fn deviation(&self) -> f64 {
        (self.map - self.closed).abs()
    }
}

/// Fidelity of the degrading frame step by step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelitySeries {
    pub spin: SpinLabel,
    pub entries: Vec<FidelityEntry>,
}

impl FidelitySeries {
    pub fn max_deviation(&self) -> f64 {
        self.entries.iter().map(FidelityEntry::deviation).fold(0.0, f64::max)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].map <= w[0].map)
    }

    pub fn in_range(&self) -> bool {
        self.entries.iter().all(|e| e.map >= 0.5 - tolerances::STRUCTURAL && e.map <= 1.0 + tolerances::STRUCTURAL)
    }
}

/// Iterates the map from `|j, j⟩⟨j, j|` and records the fidelity against the
/// closed form for `n = 0..=n_max`.
pub fn evolve(spin: SpinLabel, n_max: u64) -> Result<FidelitySeries> {
    let kraus = KrausSet::build(spin)?;
    let mut state = FrameState::highest_weight(spin);
    let mut entries = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        if n > 0 {
            state = apply_map(&state, &kraus)?;
        }
        let entry = FidelityEntry { n, map: quantum_fidelity(&state, &kraus)?, closed: closed_form_fidelity(spin, n) };
        if entry.deviation() > tolerances::ORACLE {
            return Err(Error::consistency(
                MODULE,
                format!("map fidelity departs from closed form by {:.3e} at n = {n} ({spin})", entry.deviation()),
            ));
        }
        entries.push(entry);
    }
    Ok(FidelitySeries { spin, entries })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::angular_momentum::brute_force;
    use crate::quantum::Representation;

    fn spin(tj: u32) -> SpinLabel {
        SpinLabel::from_twice(tj)
    }

    /// `Tr_S Σ_c Π_c (ρ ⊗ I/2) Π_c` on the product space.
    fn brute_force_map(state: &FrameState) -> DMatrix<Complex64> {
        let s = state.spin();
        let d = s.dim();
        let rho = state.to_dense();
        let mut joint = DMatrix::from_element(2 * d, 2 * d, Complex64::new(0.0, 0.0));
        for r in 0..d {
            for c in 0..d {
                for q in 0..2 {
                    joint[(2 * r + q, 2 * c + q)] = rho[(r, c)] * 0.5;
                }
            }
        }
        let mut out = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for branch in CouplingBranch::ALL {
            let p = brute_force::projector(s, branch).map(|x| Complex64::new(x, 0.0));
            let post = &p * &joint * &p;
            for r in 0..d {
                for c in 0..d {
                    out[(r, c)] += post[(2 * r, 2 * c)] + post[(2 * r + 1, 2 * c + 1)];
                }
            }
        }
        out
    }

    #[test]
    fn map_matches_brute_force_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for tj in 1..=6 {
            let s = spin(tj);
            let k = KrausSet::build(s).unwrap();
            let rho = FrameState::random_dense(s, &mut rng);
            let ours = apply_map(&rho, &k).unwrap().to_dense();
            let oracle = brute_force_map(&rho);
            assert!((ours - oracle).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_is_fixed() {
        for tj in 1..=10 {
            let s = spin(tj);
            let k = KrausSet::build(s).unwrap();
            let mixed = FrameState::maximally_mixed(s);
            assert!(apply_map(&mixed, &k).unwrap().max_abs_diff(&mixed) <= 1e-12);
            let dense = mixed.clone().into_dense();
            assert!(apply_map(&dense, &k).unwrap().max_abs_diff(&dense) <= 1e-12);
        }
    }

    #[test]
    fn one_step_fidelity_matches_closed_form() {
        for tj in 1..=10 {
            let s = spin(tj);
            let k = KrausSet::build(s).unwrap();
            let one = apply_map(&FrameState::highest_weight(s), &k).unwrap();
            assert_abs_diff_eq!(quantum_fidelity(&one, &k).unwrap(), closed_form_fidelity(s, 1), epsilon = 1e-14);
        }
    }

    #[test]
    fn fidelity_examples() {
        let k = KrausSet::build(spin(2)).unwrap();
        let f = quantum_fidelity(&FrameState::highest_weight(spin(2)), &k).unwrap();
        assert_abs_diff_eq!(f, 5.0 / 6.0, epsilon = 1e-15);
        for tj in 1..=12 {
            let k = KrausSet::build(spin(tj)).unwrap();
            let f = quantum_fidelity(&FrameState::maximally_mixed(spin(tj)), &k).unwrap();
            assert_abs_diff_eq!(f, 0.5, epsilon = 1e-14);
        }
        let big = spin(200);
        let k = KrausSet::build(big).unwrap();
        let f = quantum_fidelity(&FrameState::highest_weight(big), &k).unwrap();
        assert!(1.0 - f < 1e-2);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_fidelity(spin(1), 0), 0.75);
        assert_eq!(closed_form_fidelity(spin(1), 1), 0.625);
        for tj in [1, 5, 40] {
            assert_abs_diff_eq!(closed_form_fidelity(spin(tj), u64::MAX), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn evolve_examples() {
        let series = evolve(spin(10), 100).unwrap();
        assert!(series.max_deviation() <= 1e-10);
        assert!(series.is_non_increasing());
        assert!(series.in_range());
        for tj in [1, 7, 30] {
            let s = evolve(spin(tj), 0).unwrap();
            assert_eq!(s.entries.len(), 1);
            assert_abs_diff_eq!(s.entries[0].map, 0.5 + spin(tj).j() / spin(tj).dim() as f64, epsilon = 1e-15);
        }
        assert!(evolve(spin(0), 3).is_err());
    }

    #[test]
    fn spin_mismatch_rejected() {
        let k = KrausSet::build(spin(3)).unwrap();
        let st = FrameState::highest_weight(spin(2));
        assert!(apply_map(&st, &k).is_err());
        assert!(quantum_fidelity(&st, &k).is_err());
        assert!(outcome_probabilities(&st, &k).is_err());
    }

    #[test]
    fn diagonal_closure_on_both_paths() {
        let s = spin(9);
        let k = KrausSet::build(s).unwrap();
        let diag = apply_map_n(&FrameState::highest_weight(s), &k, 25).unwrap();
        assert_eq!(diag.representation(), Representation::Diagonal);
        let dense = apply_map_n(&FrameState::highest_weight(s).into_dense(), &k, 25).unwrap();
        assert_eq!(dense.max_coherence(), 0.0);
        assert!(dense.max_abs_diff(&diag) <= 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn trace_and_positivity_preserved(tj in 1u32..=20, seed in any::<u64>(), dense in any::<bool>()) {
            let s = spin(tj);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = if dense { FrameState::random_dense(s, &mut rng) } else { FrameState::random_diagonal(s, &mut rng) };
            let k = KrausSet::build(s).unwrap();
            let out = apply_map(&rho, &k).unwrap();
            prop_assert!((out.trace() - 1.0).abs() <= 1e-12);
            prop_assert!(out.min_eigenvalue() >= -1e-10);
            prop_assert!(out.hermiticity_defect() <= 1e-12);
            let [p, m] = outcome_probabilities(&rho, &k).unwrap();
            prop_assert!((p + m - 1.0).abs() <= 1e-12);
        }
    }
}
