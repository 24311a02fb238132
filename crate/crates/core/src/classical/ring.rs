//! Grid-space averaging over the ring of points one step away. Used as an
//! oracle for the Legendre eigenvalue relation, so it deliberately avoids
//! any spectral machinery.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Module, Result};
use crate::tolerances;

const MODULE: Module = Module::ClassicalWalk;

/// Values of an azimuthally symmetric function on the uniform polar grid
/// `θ_i = i π / (N - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDistribution {
    values: Vec<f64>,
}

impl TabulatedDistribution {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain(MODULE, "a tabulated distribution needs at least two grid points"));
        }
        Ok(TabulatedDistribution { values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(points: usize, f: F) -> Result<Self> {
        let points = points.max(2);
        Self::from_values((0..points).map(|i| f(PI * i as f64 / (points - 1) as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        PI / (self.values.len() - 1) as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        PI * i as f64 / (self.values.len() - 1) as f64
    }

    /// `∫ (sin θ dθ / 2) p(θ)` by the trapezoid rule.
    pub fn mass(&self) -> f64 {
        let h = self.spacing();
        let n = self.values.len();
        (0..n)
            .map(|i| {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                w * h * 0.5 * self.theta(i).sin() * self.values[i]
            })
            .sum()
    }
}

/// Cubic spline with zero slope at both poles, where every smooth
/// azimuthally symmetric function is stationary in θ.
struct PolarSpline<'a> {
    values: &'a [f64],
    second: Vec<f64>,
    h: f64,
}

impl<'a> PolarSpline<'a> {
    fn new(values: &'a [f64], h: f64) -> Self {
        let n = values.len();
        // Tridiagonal system for second derivatives, solved by the Thomas algorithm.
        let mut diag = vec![4.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0;
        diag[n - 1] = 2.0;
        let scale = 6.0 / (h * h);
        rhs[0] = scale * (values[1] - values[0]);
        rhs[n - 1] = scale * (values[n - 2] - values[n - 1]);
        for i in 1..n - 1 {
            rhs[i] = scale * (values[i + 1] - 2.0 * values[i] + values[i - 1]);
        }
        for i in 1..n {
            let factor = 1.0 / diag[i - 1];
            diag[i] -= factor;
            rhs[i] -= factor * rhs[i - 1];
        }
        let mut second = vec![0.0; n];
        second[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            second[i] = (rhs[i] - second[i + 1]) / diag[i];
        }
        PolarSpline { values, second, h }
    }

    fn eval(&self, theta: f64) -> f64 {
        let n = self.values.len();
        let i = ((theta / self.h).floor() as usize).min(n - 2);
        let left = theta - i as f64 * self.h;
        let right = self.h - left;
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        (m0 * right.powi(3) + m1 * left.powi(3)) / (6.0 * self.h)
            + (y0 / self.h - m0 * self.h / 6.0) * right
            + (y1 / self.h - m1 * self.h / 6.0) * left
    }
}

/// One step of the walk applied in grid space: each output point is the
/// average of `p` over the ring at angular distance `alpha`, with
/// `cos θ' = cos θ cos α + sin θ sin α cos ψ` and a trapezoid rule in `ψ`.
pub fn ring_average(p: &TabulatedDistribution, alpha: f64) -> Result<TabulatedDistribution> {
    if p.len() < tolerances::MIN_RING_GRID {
        return Err(Error::accuracy(
            MODULE,
            format!("ring average needs at least {} grid points, got {}", tolerances::MIN_RING_GRID, p.len()),
        ));
    }
    if !(alpha > 0.0 && alpha < PI) {
        return Err(Error::domain(MODULE, format!("ring step {alpha} must lie strictly between 0 and pi")));
    }
    let spline = PolarSpline::new(&p.values, p.spacing());
    let nodes = tolerances::RING_AZIMUTH_NODES;
    // The integrand is even in ψ, so fold the periodic trapezoid onto [0, π].
    let half = nodes / 2;
    let azimuth: Vec<(f64, f64)> = (0..=half)
        .map(|k| {
            let weight = if k == 0 || k == half { 1.0 } else { 2.0 };
            ((2.0 * PI * k as f64 / nodes as f64).cos(), weight / nodes as f64)
        })
        .collect();
    let (cos_a, sin_a) = (alpha.cos(), alpha.sin());

    let values = (0..p.len())
        .into_par_iter()
        .map(|i| {
            let theta = p.theta(i);
            let (a, b) = (theta.cos() * cos_a, theta.sin() * sin_a);
            azimuth.iter().map(|&(cos_psi, w)| w * spline.eval((a + b * cos_psi).clamp(-1.0, 1.0).acos())).sum()
        })
        .collect();
    TabulatedDistribution::from_values(values)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::legendre::{legendre, GaussRule};

    #[test]
    fn uniform_is_invariant() {
        let p = TabulatedDistribution::from_fn(2048, |_| 1.0).unwrap();
        let out = ring_average(&p, 0.8).unwrap();
        for v in out.values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn first_legendre_eigenvalue() {
        let p = TabulatedDistribution::from_fn(4096, |t| t.cos()).unwrap();
        let alpha = 0.37;
        let out = ring_average(&p, alpha).unwrap();
        for i in 0..out.len() {
            assert_abs_diff_eq!(out.values()[i], alpha.cos() * p.values()[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn eigen_relation_for_low_orders() {
        for l in [2, 5] {
            let p = TabulatedDistribution::from_fn(4096, |t| legendre(l, t.cos())).unwrap();
            let out = ring_average(&p, 0.5).unwrap();
            let lambda = legendre(l, 0.5f64.cos());
            for i in 0..out.len() {
                assert_abs_diff_eq!(out.values()[i], lambda * p.values()[i], epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn polar_spike_spreads_to_ring() {
        let sigma: f64 = 0.01;
        let alpha = 0.6;
        let p = TabulatedDistribution::from_fn(4096, |t| (-t * t / (2.0 * sigma * sigma)).exp()).unwrap();
        let out = ring_average(&p, alpha).unwrap();
        let (peak_index, peak) =
            out.values().iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert!((out.theta(peak_index) - alpha).abs() < 2.0 * sigma);
        for i in 0..out.len() {
            if (out.theta(i) - alpha).abs() > 8.0 * sigma {
                assert!(out.values()[i].abs() < 1e-6 * peak, "leak at θ={}", out.theta(i));
            }
        }
        // Averaging conserves total probability. The spike's own mass is
        // taken by Gauss-Legendre, since the trapezoid is poor at the pole.
        let spike_mass = GaussRule::new(400)
            .integrate(0.0, 20.0 * sigma, |t| 0.5 * t.sin() * (-t * t / (2.0 * sigma * sigma)).exp());
        assert_abs_diff_eq!(out.mass(), spike_mass, epsilon = 1e-6 * spike_mass);
    }

    #[test]
    fn guards() {
        let coarse = TabulatedDistribution::from_fn(1000, |_| 1.0).unwrap();
        assert!(matches!(ring_average(&coarse, 0.5), Err(Error::Accuracy { .. })));
        let fine = TabulatedDistribution::from_fn(2048, |_| 1.0).unwrap();
        assert!(ring_average(&fine, 0.0).is_err());
        assert!(ring_average(&fine, PI).is_err());
        assert!(TabulatedDistribution::from_values(vec![1.0]).is_err());
    }
}
