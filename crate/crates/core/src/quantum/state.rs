use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, RngExt};

use crate::angular_momentum::SpinLabel;
use crate::error::{Error, Module, Result};
use crate::tolerances;

const MODULE: Module = Module::QuantumDrf;

/// How a [`FrameState`] is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Populations only; off-diagonal entries are exactly zero.
    Diagonal,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Repr {
    Diagonal(Vec<f64>),
    Dense(DMatrix<Complex64>),
}

/// Density operator of the spin-`j` frame in the ascending `|j, m⟩` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameState {
    spin: SpinLabel,
    repr: Repr,
}

impl FrameState {
    /// The aligned frame `|j, j⟩⟨j, j|`.
    pub fn highest_weight(spin: SpinLabel) -> Self {
        let mut pops = vec![0.0; spin.dim()];
        pops[spin.dim() - 1] = 1.0;
        FrameState { spin, repr: Repr::Diagonal(pops) }
    }

    /// The rotationally invariant state `I / (2j + 1)`.
    pub fn maximally_mixed(spin: SpinLabel) -> Self {
        let d = spin.dim();
        FrameState { spin, repr: Repr::Diagonal(vec![1.0 / d as f64; d]) }
    }

    pub fn from_populations(spin: SpinLabel, populations: Vec<f64>) -> Result<Self> {
        if populations.len() != spin.dim() {
            return Err(Error::domain(
                MODULE,
                format!("{} populations supplied for a {}-dimensional frame", populations.len(), spin.dim()),
            ));
        }
        let state = FrameState { spin, repr: Repr::Diagonal(populations) };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn from_dense(spin: SpinLabel, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != spin.dim() || matrix.ncols() != spin.dim() {
            return Err(Error::domain(
                MODULE,
                format!("{}x{} matrix supplied for a {}-dimensional frame", matrix.nrows(), matrix.ncols(), spin.dim()),
            ));
        }
        let state = FrameState { spin, repr: Repr::Dense(matrix) };
        state.check_invariants()?;
        Ok(state)
    }

    /// A random full-rank density operator `G G† / Tr(G G†)`.
    pub fn random_dense<R: Rng + ?Sized>(spin: SpinLabel, rng: &mut R) -> Self {
        let d = spin.dim();
        let g = DMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
        });
        let mut rho = &g * g.adjoint();
        let trace = rho.trace().re;
        rho /= Complex64::new(trace, 0.0);
        // Symmetrise away rounding so the Hermiticity check is exact.
        let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        FrameState { spin, repr: Repr::Dense(rho) }
    }

    /// A random diagonal state with uniformly drawn, normalised populations.
    pub fn random_diagonal<R: Rng + ?Sized>(spin: SpinLabel, rng: &mut R) -> Self {
        let raw: Vec<f64> = (0..spin.dim()).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        FrameState { spin, repr: Repr::Diagonal(raw.into_iter().map(|p| p / total).collect()) }
    }

    pub(crate) fn from_repr(spin: SpinLabel, repr: Repr) -> Self {
        FrameState { spin, repr }
    }

    pub(crate) fn scaled(self, factor: f64) -> FrameState {
        let repr = match self.repr {
            Repr::Diagonal(p) => Repr::Diagonal(p.into_iter().map(|x| x * factor).collect()),
            Repr::Dense(m) => Repr::Dense(m * Complex64::new(factor, 0.0)),
        };
        FrameState { spin: self.spin, repr }
    }

    pub(crate) fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn spin(&self) -> SpinLabel {
        self.spin
    }

    pub fn representation(&self) -> Representation {
        match self.repr {
            Repr::Diagonal(_) => Representation::Diagonal,
            Repr::Dense(_) => Representation::Dense,
        }
    }

    /// Diagonal of the density operator over `m = -j, ..., j`.
    pub fn populations(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Diagonal(p) => p.clone(),
            Repr::Dense(m) => m.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match &self.repr {
            Repr::Diagonal(p) => DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                p.len(),
                p.iter().map(|&x| Complex64::new(x, 0.0)),
            )),
            Repr::Dense(m) => m.clone(),
        }
    }

    /// The same state stored densely.
    pub fn into_dense(self) -> Self {
        let dense = self.to_dense();
        FrameState { spin: self.spin, repr: Repr::Dense(dense) }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(p) => p.iter().sum(),
            Repr::Dense(m) => m.trace().re,
        }
    }

    /// Largest `|ρ - ρ†|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(_) => 0.0,
            Repr::Dense(m) => (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    /// Largest off-diagonal magnitude (exactly zero on the diagonal path).
    pub fn max_coherence(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(_) => 0.0,
            Repr::Dense(m) => {
                let d = m.nrows();
                (0..d)
                    .flat_map(|r| (0..d).filter(move |&c| c != r).map(move |c| (r, c)))
                    .map(|(r, c)| m[(r, c)].norm())
                    .fold(0.0, f64::max)
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(p) => p.iter().copied().fold(f64::INFINITY, f64::min),
            Repr::Dense(m) => {
                let hermitian = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
                SymmetricEigen::new(hermitian).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Hermitian, unit trace and positive semidefinite within tolerance.
    pub fn check_invariants(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > tolerances::STRUCTURAL {
            return Err(Error::domain(MODULE, format!("state is not Hermitian (defect {herm:.3e})")));
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > tolerances::STRUCTURAL {
            return Err(Error::domain(MODULE, format!("state trace is {trace}, expected 1")));
        }
        let min = self.min_eigenvalue();
        if min < tolerances::EIGENVALUE_FLOOR {
            return Err(Error::domain(MODULE, format!("state has negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Largest entrywise distance to another state of the same spin.
    pub fn max_abs_diff(&self, other: &FrameState) -> f64 {
        match (&self.repr, &other.repr) {
            (Repr::Diagonal(a), Repr::Diagonal(b)) => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
            _ => (self.to_dense() - other.to_dense()).iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn constructors_validate() {
        let s = SpinLabel::from_twice(2);
        assert!(FrameState::from_populations(s, vec![0.5, 0.5]).is_err());
        assert!(FrameState::from_populations(s, vec![0.5, 0.6, -0.1]).is_err());
        assert!(FrameState::from_populations(s, vec![0.2, 0.3, 0.5]).is_ok());
        let mut bad = DMatrix::from_element(3, 3, Complex64::new(0.0, 0.0));
        bad[(0, 1)] = Complex64::new(0.0, 0.1);
        bad[(0, 0)] = Complex64::new(1.0, 0.0);
        assert!(FrameState::from_dense(s, bad).is_err());
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for tj in 1..=12 {
            let s = SpinLabel::from_twice(tj);
            FrameState::random_dense(s, &mut rng).check_invariants().unwrap();
            FrameState::random_diagonal(s, &mut rng).check_invariants().unwrap();
        }
    }

    #[test]
    fn dense_round_trip_keeps_populations() {
        let s = SpinLabel::from_twice(3);
        let st = FrameState::highest_weight(s);
        let dense = st.clone().into_dense();
        assert_eq!(dense.representation(), Representation::Dense);
        assert_eq!(dense.populations(), st.populations());
        assert_eq!(dense.max_coherence(), 0.0);
    }
}
