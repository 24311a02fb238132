use nalgebra::DMatrix;

use crate::angular_momentum::{projector_element, CouplingBranch, QubitState, SpinLabel};
use crate::error::{Module, Result};

/// A frame operator with at most one non-zero diagonal: entry `(r, r + offset)`
/// is `values[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandOperator {
    offset: isize,
    values: Vec<f64>,
}

impl BandOperator {
    /// Column minus row of the populated diagonal.
    pub fn offset(&self) -> isize {
        self.offset
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if col as isize - row as isize == self.offset {
            self.values[row]
        } else {
            0.0
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| self.get(r, c))
    }

    /// Column index paired with `row`, when it is inside the space.
    #[inline]
    pub(crate) fn partner(&self, row: usize) -> Option<usize> {
        let col = row as isize + self.offset;
        (0..self.dim() as isize).contains(&col).then_some(col as usize)
    }
}

/// The Kraus operators `E_ab^c = ⟨a|Π_c|b⟩` of one frame-probe measurement.
///
/// All eight `(c, a, b)` combinations are kept; diagonal ones (`a = b`) and the
/// single-step shifts (`a ≠ b`) are each banded.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    spin: SpinLabel,
    ops: Vec<BandOperator>,
}

fn slot(branch: CouplingBranch, a: QubitState, b: QubitState) -> usize {
    4 * branch.index() + 2 * a.index() + b.index()
}

impl KrausSet {
    pub fn build(spin: SpinLabel) -> Result<Self> {
        spin.require_coupling(Module::QuantumDrf)?;
        let d = spin.dim();
        let mut ops = Vec::with_capacity(8);
        for branch in CouplingBranch::ALL {
            for a in QubitState::ALL {
                for b in QubitState::ALL {
                    // m_row + s_a = m_col + s_b
                    let offset = ((a.twice_s() - b.twice_s()) / 2) as isize;
                    let mut values = vec![0.0; d];
                    for (row, value) in values.iter_mut().enumerate() {
                        let col = row as isize + offset;
                        if col < 0 || col >= d as isize {
                            continue;
                        }
                        *value = projector_element(
                            spin,
                            branch,
                            a,
                            b,
                            spin.magnetic_at(row)?,
                            spin.magnetic_at(col as usize)?,
                        )?;
                    }
                    ops.push(BandOperator { offset, values });
                }
            }
        }
        Ok(KrausSet { spin, ops })
    }

    pub fn spin(&self) -> SpinLabel {
        self.spin
    }

    pub fn operator(&self, branch: CouplingBranch, a: QubitState, b: QubitState) -> &BandOperator {
        &self.ops[slot(branch, a, b)]
    }

    /// Operators of one measurement outcome.
    pub fn branch(&self, branch: CouplingBranch) -> &[BandOperator] {
        let start = 4 * branch.index();
        &self.ops[start..start + 4]
    }

    pub fn all(&self) -> &[BandOperator] {
        &self.ops
    }

    pub fn iter(&self) -> impl Iterator<Item = (CouplingBranch, QubitState, QubitState, &BandOperator)> {
        CouplingBranch::ALL.into_iter().flat_map(move |c| {
            QubitState::ALL
                .into_iter()
                .flat_map(move |a| QubitState::ALL.into_iter().map(move |b| (c, a, b, self.operator(c, a, b))))
        })
    }

    /// Largest entry of `(1/2) Σ E† E - I`.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.spin.dim();
        let mut sum = DMatrix::<f64>::zeros(d, d);
        for op in &self.ops {
            let e = op.to_dense();
            sum += e.transpose() * &e;
        }
        (sum * 0.5 - DMatrix::<f64>::identity(d, d)).amax()
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::angular_momentum::brute_force;

    const UP: QubitState = QubitState::Up;
    const DOWN: QubitState = QubitState::Down;

    #[test]
    fn spin_half_diagonal_plus_operator() {
        let k = KrausSet::build(SpinLabel::from_twice(1)).unwrap();
        let e = k.operator(CouplingBranch::Plus, UP, UP);
        assert_eq!(e.offset(), 0);
        assert_eq!(e.values(), &[0.5, 1.0]);
        let oracle = brute_force::projector(SpinLabel::from_twice(1), CouplingBranch::Plus);
        // ⟨0|Π+|0⟩ block of the brute-force projector.
        assert_abs_diff_eq!(oracle[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle[(2, 2)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn blocks_match_brute_force_projector() {
        for tj in 1..=6 {
            let s = SpinLabel::from_twice(tj);
            let k = KrausSet::build(s).unwrap();
            for (c, a, b, op) in k.iter() {
                let oracle = brute_force::projector(s, c);
                for r in 0..s.dim() {
                    for col in 0..s.dim() {
                        let expected = oracle[(2 * r + a.index(), 2 * col + b.index())];
                        assert_abs_diff_eq!(op.get(r, col), expected, epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn diagonal_blocks_sum_to_identity() {
        for tj in 1..=10 {
            let k = KrausSet::build(SpinLabel::from_twice(tj)).unwrap();
            for a in QubitState::ALL {
                let sum = k.operator(CouplingBranch::Plus, a, a).to_dense()
                    + k.operator(CouplingBranch::Minus, a, a).to_dense();
                let d = tj as usize + 1;
                assert!((sum - DMatrix::<f64>::identity(d, d)).amax() <= 1e-15);
            }
            let shift = k.operator(CouplingBranch::Plus, UP, DOWN).to_dense()
                + k.operator(CouplingBranch::Minus, UP, DOWN).to_dense();
            assert!(shift.amax() <= 1e-15);
        }
    }

    #[test]
    fn trace_preservation_sum() {
        let k = KrausSet::build(SpinLabel::from_twice(2)).unwrap();
        assert!(k.completeness_defect() <= 1e-14);
        for tj in 1..=20 {
            assert!(KrausSet::build(SpinLabel::from_twice(tj)).unwrap().completeness_defect() <= 1e-12);
        }
    }

    #[test]
    fn j_zero_rejected() {
        assert!(KrausSet::build(SpinLabel::from_twice(0)).is_err());
    }

    #[test]
    fn band_structure() {
        let k = KrausSet::build(SpinLabel::from_twice(4)).unwrap();
        assert_eq!(k.operator(CouplingBranch::Plus, UP, DOWN).offset(), 1);
        assert_eq!(k.operator(CouplingBranch::Minus, DOWN, UP).offset(), -1);
        assert_eq!(k.operator(CouplingBranch::Minus, DOWN, DOWN).offset(), 0);
        assert_eq!(k.all().len(), 8);
    }
}
