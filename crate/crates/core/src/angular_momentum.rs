//! Exact coupling of a spin-`j` frame to a spin-1/2 probe.
//!
//! Spins and magnetic quantum numbers are stored doubled so that half-integers
//! are exact; all coupling arithmetic stays in integers until the final square
//! root. Condon-Shortley phases are used throughout.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};

const MODULE: Module = Module::AngularMomentum;

/// Above this `2j`, binomial weights are evaluated in log space.
const EXACT_BINOMIAL_LIMIT: u32 = 60;

/// A spin quantum number `j`, stored as `2j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpinLabel {
    twice_j: u32,
}

impl SpinLabel {
    pub const fn from_twice(twice_j: u32) -> Self {
        SpinLabel { twice_j }
    }

    pub const fn twice_j(self) -> u32 {
        self.twice_j
    }

    pub fn j(self) -> f64 {
        f64::from(self.twice_j) / 2.0
    }

    /// Dimension `2j + 1` of the spin-`j` space.
    pub const fn dim(self) -> usize {
        self.twice_j as usize + 1
    }

    /// Basis labels in ascending order `m = -j, ..., j`; position `i` in every
    /// vector or matrix of this crate corresponds to `m = -j + i`.
    pub fn magnetic_indices(self) -> impl Iterator<Item = MagneticIndex> {
        let tj = self.twice_j as i32;
        (0..=tj).map(move |i| MagneticIndex::from_twice(2 * i - tj))
    }

    /// Position of `m` in the ascending basis.
    pub fn index_of(self, m: MagneticIndex) -> Result<usize> {
        m.check_in(self)?;
        Ok(((m.twice_m + self.twice_j as i32) / 2) as usize)
    }

    /// The magnetic label at basis position `index`.
    pub fn magnetic_at(self, index: usize) -> Result<MagneticIndex> {
        if index > self.twice_j as usize {
            return Err(Error::domain(MODULE, format!("basis index {index} out of range for {self}")));
        }
        Ok(MagneticIndex::from_twice(2 * index as i32 - self.twice_j as i32))
    }

    /// Fails unless `2j ≥ 1`, i.e. both coupling branches exist.
    pub(crate) fn require_coupling(self, module: Module) -> Result<()> {
        if self.twice_j == 0 {
            return Err(Error::domain(module, "j = 0 has no j - 1/2 coupling branch; need 2j >= 1"));
        }
        Ok(())
    }
}

impl fmt::Display for SpinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice_j.is_multiple_of(2) {
            write!(f, "j={}", self.twice_j / 2)
        } else {
            write!(f, "j={}/2", self.twice_j)
        }
    }
}

/// A magnetic quantum number `m`, stored as `2m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MagneticIndex {
    twice_m: i32,
}

impl MagneticIndex {
    pub const fn from_twice(twice_m: i32) -> Self {
        MagneticIndex { twice_m }
    }

    pub const fn twice_m(self) -> i32 {
        self.twice_m
    }

    pub fn m(self) -> f64 {
        f64::from(self.twice_m) / 2.0
    }

    pub fn check_in(self, spin: SpinLabel) -> Result<()> {
        let tj = spin.twice_j as i32;
        if self.twice_m.abs() > tj || (self.twice_m - tj) % 2 != 0 {
            return Err(Error::domain(MODULE, format!("m = {}/2 is not a valid label for {spin}", self.twice_m)));
        }
        Ok(())
    }
}

/// Outcome of the total-spin measurement: `J = j + 1/2` or `J = j - 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingBranch {
    Plus,
    Minus,
}

impl CouplingBranch {
    pub const ALL: [CouplingBranch; 2] = [CouplingBranch::Plus, CouplingBranch::Minus];

    /// `2J` of the coupled multiplet, or `None` when it does not exist.
    pub fn twice_total(self, spin: SpinLabel) -> Option<u32> {
        match self {
            CouplingBranch::Plus => Some(spin.twice_j + 1),
            CouplingBranch::Minus => spin.twice_j.checked_sub(1),
        }
    }

    pub fn index(self) -> usize {
        match self {
            CouplingBranch::Plus => 0,
            CouplingBranch::Minus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            CouplingBranch::Plus => '+',
            CouplingBranch::Minus => '-',
        }
    }
}

/// Probe basis: `Up` is `|0⟩` (aligned with +z), `Down` is `|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitState {
    Up,
    Down,
}

impl QubitState {
    pub const ALL: [QubitState; 2] = [QubitState::Up, QubitState::Down];

    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            0 => Ok(QubitState::Up),
            1 => Ok(QubitState::Down),
            _ => Err(Error::domain(MODULE, format!("qubit basis index {index} is not 0 or 1"))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            QubitState::Up => 0,
            QubitState::Down => 1,
        }
    }

    /// `2s`, i.e. `+1` for up and `-1` for down.
    pub fn twice_s(self) -> i32 {
        match self {
            QubitState::Up => 1,
            QubitState::Down => -1,
        }
    }
}

/// An exact signed square root of a non-negative rational, `±√(num/den)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedSqrtRatio {
    negative: bool,
    num: u64,
    den: u64,
}

impl SignedSqrtRatio {
    pub fn new(negative: bool, num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = num.gcd(&den).max(1);
        let (num, den) = (num / g, den / g);
        SignedSqrtRatio { negative: negative && num != 0, num, den: if num == 0 { 1 } else { den } }
    }

    pub fn is_negative(self) -> bool {
        self.negative
    }

    /// The reduced `(num, den)` of the square.
    pub fn square(self) -> (u64, u64) {
        (self.num, self.den)
    }

    pub fn value(self) -> f64 {
        let magnitude = (self.num as f64 / self.den as f64).sqrt();
        if self.negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

impl std::ops::Mul for SignedSqrtRatio {
    type Output = SignedSqrtRatio;

    fn mul(self, other: SignedSqrtRatio) -> SignedSqrtRatio {
        SignedSqrtRatio::new(self.negative != other.negative, self.num * other.num, self.den * other.den)
    }
}

impl fmt::Display for SignedSqrtRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.negative { "-" } else { "" };
        write!(f, "{sign}√({}/{})", self.num, self.den)
    }
}

/// Clebsch-Gordan coefficient `⟨J, m + s | j, m; 1/2, s⟩` with `J = j ± 1/2`.
pub fn cg_coefficient(
    spin: SpinLabel,
    m: MagneticIndex,
    probe: QubitState,
    branch: CouplingBranch,
) -> Result<SignedSqrtRatio> {
    m.check_in(spin)?;
    let twice_total =
        branch.twice_total(spin).ok_or_else(|| Error::domain(MODULE, "the j - 1/2 branch does not exist for j = 0"))?;
    let tj = i64::from(spin.twice_j);
    let tm = i64::from(m.twice_m);
    let twice_coupled_m = tm + i64::from(probe.twice_s());
    if twice_coupled_m.abs() > i64::from(twice_total) {
        return Err(Error::domain(
            MODULE,
            format!("coupled M = {twice_coupled_m}/2 outside the J = {twice_total}/2 multiplet"),
        ));
    }
    // Squares over 2j + 1, in doubled units: (j + m + 1) = (tj + tm + 2) / 2, etc.
    let (negative, num) = match (branch, probe) {
        (CouplingBranch::Plus, QubitState::Up) => (false, tj + tm + 2),
        (CouplingBranch::Plus, QubitState::Down) => (false, tj - tm + 2),
        (CouplingBranch::Minus, QubitState::Up) => (true, tj - tm),
        (CouplingBranch::Minus, QubitState::Down) => (false, tj + tm),
    };
    Ok(SignedSqrtRatio::new(negative, num as u64, 2 * (tj as u64 + 1)))
}

/// Exact matrix element `⟨j, m_row| ⟨a| Π_c |b⟩ |j, m_col⟩`.
pub fn projector_element_exact(
    spin: SpinLabel,
    branch: CouplingBranch,
    a: QubitState,
    b: QubitState,
    m_row: MagneticIndex,
    m_col: MagneticIndex,
) -> Result<SignedSqrtRatio> {
    m_row.check_in(spin)?;
    m_col.check_in(spin)?;
    let twice_total =
        branch.twice_total(spin).ok_or_else(|| Error::domain(MODULE, "the j - 1/2 branch does not exist for j = 0"))?;
    let twice_coupled_m = m_row.twice_m + a.twice_s();
    if twice_coupled_m != m_col.twice_m + b.twice_s() || twice_coupled_m.unsigned_abs() > twice_total {
        return Ok(SignedSqrtRatio::new(false, 0, 1));
    }
    let left = cg_coefficient(spin, m_row, a, branch)?;
    let right = cg_coefficient(spin, m_col, b, branch)?;
    Ok(left * right)
}

/// Matrix element of the Kraus operator `E_ab^c = ⟨a|Π_c|b⟩` on the frame.
pub fn projector_element(
    spin: SpinLabel,
    branch: CouplingBranch,
    a: QubitState,
    b: QubitState,
    m_row: MagneticIndex,
    m_col: MagneticIndex,
) -> Result<f64> {
    projector_element_exact(spin, branch, a, b, m_row, m_col).map(SignedSqrtRatio::value)
}

/// `Π_c` on the full `(2j+1)·2` product space, basis index `2·i_m + a`.
pub fn projector_matrix(spin: SpinLabel, branch: CouplingBranch) -> Result<DMatrix<f64>> {
    spin.require_coupling(MODULE)?;
    let d = spin.dim();
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    for (row_m, m_row) in spin.magnetic_indices().enumerate() {
        for (col_m, m_col) in spin.magnetic_indices().enumerate() {
            for a in QubitState::ALL {
                for b in QubitState::ALL {
                    out[(2 * row_m + a.index(), 2 * col_m + b.index())] =
                        projector_element(spin, branch, a, b, m_row, m_col)?;
                }
            }
        }
    }
    Ok(out)
}

/// Populations over `m = -j, ..., j` of the stretched state `|j, j⟩` rotated
/// by polar angle `theta`: `C(2j, j+m) cos²ʲ⁺²ᵐ(θ/2) sin²ʲ⁻²ᵐ(θ/2)`.
pub fn coherent_populations(spin: SpinLabel, theta: f64) -> Result<Vec<f64>> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::domain(MODULE, format!("polar angle {theta} outside [0, pi]")));
    }
    let cos_theta = theta.cos();
    let up = 0.5 * (1.0 + cos_theta);
    let down = 0.5 * (1.0 - cos_theta);
    let n = spin.twice_j;

    if n <= EXACT_BINOMIAL_LIMIT {
        let mut binomial: u128 = 1;
        let mut out = Vec::with_capacity(spin.dim());
        for k in 0..=n {
            out.push(binomial as f64 * up.powi(k as i32) * down.powi((n - k) as i32));
            binomial = binomial * u128::from(n - k) / u128::from(k + 1);
        }
        return Ok(out);
    }

    let (ln_up, ln_down) = (up.ln(), down.ln());
    Ok((0..=n)
        .map(|k| {
            let up_part = if k == 0 { 0.0 } else { f64::from(k) * ln_up };
            let down_part = if k == n { 0.0 } else { f64::from(n - k) * ln_down };
            let exponent = statrs::function::factorial::ln_binomial(u64::from(n), u64::from(k)) + up_part + down_part;
            exponent.exp()
        })
        .collect())
}
