//! Lawson-Hanson active-set solver for `min ‖A x − b‖₂` subject to `x ≥ 0`.

use nalgebra::{DMatrix, DVector};

use crate::tolerances;

/// Singular values below this fraction of the largest are treated as zero
/// in the passive-set least-squares solves.
const RANK_CUTOFF: f64 = 1e-13;

/// Outcome of a solve: the feasible iterate and its optimality diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: Vec<f64>,
    /// `‖A x − b‖₂`.
    pub residual: f64,
    /// Largest violation of the optimality conditions: `|g_j|` on the free
    /// set and `max(g_j, 0)` on the bound set, where `g = Aᵀ(b − A x)`.
    pub kkt_violation: f64,
    /// Number of variables admitted to the free set.
    pub iterations: usize,
}

/// The iteration cap was hit; `best` is the last (and lowest-residual) iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct NnlsFailure {
    pub iterations: usize,
    pub best: NnlsSolution,
}

fn gradient(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    a.tr_mul(&(b - a * x))
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(passive);
    let svd = sub.svd(true, true);
    let cutoff = RANK_CUTOFF * svd.singular_values.max();
    svd.solve(b, cutoff).expect("both singular bases were requested")
}

fn finish(a: &DMatrix<f64>, b: &DVector<f64>, x: DVector<f64>, iterations: usize) -> NnlsSolution {
    let g = gradient(a, b, &x);
    let kkt_violation =
        x.iter().zip(g.iter()).map(|(&xj, &gj)| if xj > 0.0 { gj.abs() } else { gj.max(0.0) }).fold(0.0, f64::max);
    let residual = (b - a * &x).norm();
    NnlsSolution { x: x.iter().copied().collect(), residual, kkt_violation, iterations }
}

/// Solves the problem by the Lawson-Hanson active-set method.
///
/// A bound variable enters the free set when its gradient component exceeds
/// [`tolerances::KKT`]; ties go to the lowest index. A variable whose first
/// free-set solve would make it non-positive is held back until the iterate
/// moves, which prevents cycling on degenerate problems. At most
/// `10 × columns` variables are admitted before giving up.
pub fn solve(a: &DMatrix<f64>, b: &[f64]) -> Result<NnlsSolution, NnlsFailure> {
    assert_eq!(a.nrows(), b.len(), "matrix rows and right-hand side length differ");
    let cols = a.ncols();
    let b = DVector::from_column_slice(b);
    let cap = 10 * cols;

    let mut x = DVector::<f64>::zeros(cols);
    let mut passive = vec![false; cols];
    let mut blocked = vec![false; cols];
    let mut iterations = 0;

    loop {
        let g = gradient(a, &b, &x);
        let entering = (0..cols).filter(|&j| !passive[j] && !blocked[j] && g[j] > tolerances::KKT).fold(
            None,
            |best: Option<usize>, j| match best {
                Some(k) if g[k] >= g[j] => Some(k),
                _ => Some(j),
            },
        );
        let Some(t) = entering else {
            return Ok(finish(a, &b, x, iterations));
        };
        if iterations == cap {
            return Err(NnlsFailure { iterations, best: finish(a, &b, x, iterations) });
        }
        iterations += 1;
        passive[t] = true;

        let mut first = true;
        loop {
            let indices: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
            let z_free = solve_passive(a, &b, &indices);
            let mut z = DVector::<f64>::zeros(cols);
            for (k, &j) in indices.iter().enumerate() {
                z[j] = z_free[k];
            }

            if first && z[t] <= 0.0 {
                passive[t] = false;
                blocked[t] = true;
                break;
            }
            first = false;

            if indices.iter().all(|&j| z[j] > 0.0) {
                x = z;
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            // Step toward z until the first free variable hits zero.
            let (step, hit) = indices
                .iter()
                .filter(|&&j| z[j] <= 0.0)
                .map(|&j| (x[j] / (x[j] - z[j]), j))
                .fold((f64::INFINITY, usize::MAX), |acc, cur| if cur.0 < acc.0 { cur } else { acc });
            x += (&z - &x) * step;
            x[hit] = 0.0;
            blocked.iter_mut().for_each(|b| *b = false);
            for &j in &indices {
                if x[j] <= 0.0 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
}
