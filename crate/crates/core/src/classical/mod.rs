//! Semi-classical frame: an azimuthally symmetric distribution of frame
//! directions on the sphere, expanded as `p(θ) = Σ c_l P_l(cos θ)` and
//! normalised under the measure `sin θ dθ / 2`, undergoing a random walk of
//! fixed angular step.

mod ring;

use std::f64::consts::PI;

use serde::Serialize;

pub use ring::{ring_average, TabulatedDistribution};

use crate::angular_momentum::SpinLabel;
use crate::error::{Error, Module, Result};
use crate::legendre::{legendre_table, GaussRule};
use crate::tolerances;

const MODULE: Module = Module::ClassicalWalk;

/// Polar grid used for positivity checks unless a caller asks otherwise.
pub const POSITIVITY_GRID: usize = 4096;

/// Truncated Legendre coefficients `c_0..=c_{l_max}` of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendreSpectrum {
    coeffs: Vec<f64>,
}

impl LegendreSpectrum {
    /// Requires at least `c_0` and `|c_0 - 1| ≤ 1e-10`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let Some(&c0) = coeffs.first() else {
            return Err(Error::domain(MODULE, "a spectrum needs at least the l = 0 coefficient"));
        };
        if (c0 - 1.0).abs() > tolerances::ORACLE {
            return Err(Error::domain(MODULE, format!("c_0 = {c0} but a normalised distribution has c_0 = 1")));
        }
        Ok(LegendreSpectrum { coeffs })
    }

    /// The uniform distribution, `c_0 = 1` and nothing else.
    pub fn uniform(l_max: usize) -> Self {
        let mut coeffs = vec![0.0; l_max + 1];
        coeffs[0] = 1.0;
        LegendreSpectrum { coeffs }
    }

    pub fn l_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficient(&self, l: usize) -> f64 {
        self.coeffs.get(l).copied().unwrap_or(0.0)
    }

    /// `p` at `x = cos θ`.
    pub fn density_at_cos(&self, x: f64) -> f64 {
        let mut table = vec![0.0; self.coeffs.len()];
        legendre_table(x, &mut table);
        self.coeffs.iter().zip(&table).map(|(c, p)| c * p).sum()
    }

    pub fn density(&self, theta: f64) -> f64 {
        self.density_at_cos(theta.cos())
    }

    /// Smallest reconstructed density on `points` uniformly spaced polar angles.
    pub fn min_density(&self, points: usize) -> f64 {
        let points = points.max(2);
        let mut table = vec![0.0; self.coeffs.len()];
        (0..points)
            .map(|i| {
                let theta = PI * i as f64 / (points - 1) as f64;
                legendre_table(theta.cos(), &mut table);
                self.coeffs.iter().zip(&table).map(|(c, p)| c * p).sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the reconstruction stays above `-allowance` on the grid.
    pub fn is_positive(&self, points: usize, allowance: f64) -> bool {
        self.min_density(points) >= -allowance
    }
}

/// Step angle and number of steps of a walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkParameters {
    alpha: f64,
    steps: u64,
}

impl WalkParameters {
    pub fn new(alpha: f64, steps: u64) -> Result<Self> {
        if !(0.0..=PI).contains(&alpha) {
            return Err(Error::domain(MODULE, format!("step angle {alpha} outside [0, pi]")));
        }
        Ok(WalkParameters { alpha, steps })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// Default truncation: `max(4j + 16, 64)`.
pub fn default_l_max(spin: SpinLabel) -> usize {
    (2 * spin.twice_j() as usize + 16).max(64)
}

/// `(4j + 1) [cos(θ/2)]^{8j}` written in `x = cos θ`.
fn initial_density_at_cos(spin: SpinLabel, x: f64) -> f64 {
    let four_j = 2 * spin.twice_j() as i32;
    f64::from(four_j + 1) * (0.5 * (1.0 + x)).powi(four_j)
}

/// Legendre spectrum of the initial distribution `(4j + 1)[cos(θ/2)]^{8j}`,
/// matched in angular spread to `|j, j⟩`.
pub fn initial_spectrum(spin: SpinLabel, l_max: usize) -> Result<LegendreSpectrum> {
    initial_spectrum_with_order(spin, l_max, 2 * spin.twice_j() as usize + l_max + 8)
}

/// [`initial_spectrum`] with an explicit Gauss-Legendre order.
pub fn initial_spectrum_with_order(spin: SpinLabel, l_max: usize, order: usize) -> Result<LegendreSpectrum> {
    if l_max < 1 {
        return Err(Error::domain(MODULE, "truncation order l_max must be at least 1"));
    }
    let rule = GaussRule::new(order);
    let mut coeffs = vec![0.0; l_max + 1];
    let mut table = vec![0.0; l_max + 1];
    for (x, w) in rule.iter() {
        let weight = 0.5 * w * initial_density_at_cos(spin, x);
        legendre_table(x, &mut table);
        for (c, p) in coeffs.iter_mut().zip(&table) {
            *c += weight * p;
        }
    }
    for (l, c) in coeffs.iter_mut().enumerate() {
        *c *= (2 * l + 1) as f64;
    }
    let c0 = coeffs[0];
    if (c0 - 1.0).abs() > tolerances::NORMALIZATION_ACCURACY {
        return Err(Error::accuracy(
            MODULE,
            format!("quadrature of order {order} gives c_0 = {c0} for {spin}; the rule is too short"),
        ));
    }
    LegendreSpectrum::new(coeffs)
}

/// `n` steps of the walk: `c_l ↦ c_l [P_l(cos α)]^n`.
pub fn walk_evolve(spectrum: &LegendreSpectrum, params: WalkParameters) -> LegendreSpectrum {
    let mut eigen = vec![0.0; spectrum.coeffs.len()];
    legendre_table(params.alpha.cos(), &mut eigen);
    let coeffs = spectrum
        .coeffs
        .iter()
        .zip(&eigen)
        .map(|(c, lambda)| {
            let factor = match i32::try_from(params.steps) {
                Ok(n) => lambda.powi(n),
                Err(_) => lambda.powf(params.steps as f64),
            };
            c * factor
        })
        .collect();
    LegendreSpectrum { coeffs }
}

/// Classical average measurement fidelity from the two lowest coefficients,
/// `(c_0 + c_1/3) / 2`.
pub fn classical_fidelity(spectrum: &LegendreSpectrum) -> f64 {
    0.5 * (spectrum.coefficient(0) + spectrum.coefficient(1) / 3.0)
}

/// The same fidelity by direct quadrature of `∫ (sin θ dθ/2) p(θ) cos²(θ/2)`
/// against the reconstructed density.
pub fn classical_fidelity_by_quadrature(spectrum: &LegendreSpectrum) -> f64 {
    let rule = GaussRule::new(spectrum.l_max() / 2 + 2);
    rule.integrate(-1.0, 1.0, |x| 0.5 * spectrum.density_at_cos(x) * 0.5 * (1.0 + x))
}

/// Step angle that makes the walk reproduce the quantum decay:
/// `cos α = 1 - 2/(2j+1)²`.
pub fn fitted_step(spin: SpinLabel) -> f64 {
    let dim = spin.dim() as f64;
    (1.0 - 2.0 / (dim * dim)).acos()
}

/// `1/2 + j/(2j+1) cosⁿα`.
pub fn classical_fidelity_closed(spin: SpinLabel, alpha: f64, n: u64) -> f64 {
    let decay = match i32::try_from(n) {
        Ok(k) => alpha.cos().powi(k),
        Err(_) => alpha.cos().powf(n as f64),
    };
    0.5 + spin.j() / spin.dim() as f64 * decay
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalEntry {
    pub n: u64,
    /// `c_1` after `n` steps.
    pub c1: f64,
    /// Fidelity through spectrum, walk and coefficient formula.
    pub pipeline: f64,
    pub closed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalSeries {
    pub spin: SpinLabel,
    pub alpha: f64,
    pub l_max: usize,
    pub entries: Vec<ClassicalEntry>,
}

impl ClassicalSeries {
    pub fn max_deviation(&self) -> f64 {
        self.entries.iter().map(|e| (e.pipeline - e.closed).abs()).fold(0.0, f64::max)
    }
}

/// Classical fidelity for `n = 0..=n_max` computed through the Legendre
/// pipeline, checked against the closed form.
pub fn classical_fidelity_series(spin: SpinLabel, alpha: f64, n_max: u64) -> Result<ClassicalSeries> {
    classical_fidelity_series_with(spin, alpha, n_max, default_l_max(spin))
}

pub fn classical_fidelity_series_with(
    spin: SpinLabel,
    alpha: f64,
    n_max: u64,
    l_max: usize,
) -> Result<ClassicalSeries> {
    let initial = initial_spectrum(spin, l_max)?;
    let mut entries = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let evolved = walk_evolve(&initial, WalkParameters::new(alpha, n)?);
        let entry = ClassicalEntry {
            n,
            c1: evolved.coefficient(1),
            pipeline: classical_fidelity(&evolved),
            closed: classical_fidelity_closed(spin, alpha, n),
        };
        if (entry.pipeline - entry.closed).abs() > tolerances::ORACLE {
            return Err(Error::consistency(
                MODULE,
                format!("pipeline fidelity {} departs from closed form {} at n = {n}", entry.pipeline, entry.closed),
            ));
        }
        entries.push(entry);
    }
    Ok(ClassicalSeries { spin, alpha, l_max, entries })
}

/// Moments of the polar angle under the initial distribution:
/// `(⟨θ⟩, ⟨θ²⟩)` with respect to `sin θ dθ / 2`.
pub fn polar_moments(spin: SpinLabel) -> (f64, f64) {
    let rule = GaussRule::new(4 * spin.twice_j() as usize + 256);
    let mut first = 0.0;
    let mut second = 0.0;
    let mut mass = 0.0;
    for (x, w) in rule.iter() {
        let theta = 0.5 * PI * (x + 1.0);
        let weight = 0.5 * PI * w * 0.5 * theta.sin() * initial_density_at_cos(spin, theta.cos());
        mass += weight;
        first += weight * theta;
        second += weight * theta * theta;
    }
    (first / mass, second / mass)
}

/// Angular variance of the initial distribution along a fixed transverse
/// axis, `⟨θ²⟩ / 2`: the spread of the tilt component `θ cos φ`, which is the
/// classical counterpart of `(ΔJ_x)² / ⟨J_z⟩² = 1/(2j)`.
pub fn angular_variance(spin: SpinLabel) -> Result<f64> {
    spin.require_coupling(MODULE)?;
    Ok(0.5 * polar_moments(spin).1)
}

/// Largest gap between `[cos(θ/2)]^{8j}` and `exp(-jθ²)` over
/// `θ ∈ [0, j^{-1/4}]`, sampled at `samples` points.
pub fn gaussian_approximation_gap(spin: SpinLabel, samples: usize) -> f64 {
    let j = spin.j();
    let upper = j.powf(-0.25).min(PI);
    let eight_j = 4 * spin.twice_j() as i32;
    let samples = samples.max(2);
    (0..samples)
        .map(|i| {
            let theta = upper * i as f64 / (samples - 1) as f64;
            ((theta / 2.0).cos().powi(eight_j) - (-j * theta * theta).exp()).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn spin(tj: u32) -> SpinLabel {
        SpinLabel::from_twice(tj)
    }

    #[test]
    fn initial_coefficients() {
        for tj in 0..=100 {
            let s = spin(tj);
            let spectrum = initial_spectrum(s, default_l_max(s)).unwrap();
            assert_abs_diff_eq!(spectrum.coefficient(0), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(spectrum.coefficient(1), 3.0 * f64::from(tj) / f64::from(tj + 1), epsilon = 1e-10);
        }
        assert_abs_diff_eq!(initial_spectrum(spin(2), 8).unwrap().coefficient(1), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(initial_spectrum(spin(1), 8).unwrap().coefficient(1), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn spin_half_c1_by_direct_integral() {
        // ∫_{-1}^{1} dx/2 · 3 ((1+x)/2)² · x = 1/2, so c_1 = 3/2.
        let rule = GaussRule::new(4);
        let c1 = 3.0 * rule.integrate(-1.0, 1.0, |x| 0.5 * 3.0 * (0.5 * (1.0 + x)).powi(2) * x);
        assert_abs_diff_eq!(c1, 1.5, epsilon = 1e-14);
    }

    #[test]
    fn spectrum_truncates_exactly_beyond_polynomial_degree() {
        // p^(0) is a polynomial of degree 4j in cos θ.
        let spectrum = initial_spectrum(spin(6), 40).unwrap();
        for l in 13..=40 {
            assert!(spectrum.coefficient(l).abs() < 1e-12, "l={l}");
        }
        assert!(spectrum.coefficient(12).abs() > 1e-6);
    }

    #[test]
    fn under_resolved_quadrature_reports_accuracy_error() {
        let err = initial_spectrum_with_order(spin(100), 16, 3).unwrap_err();
        assert!(matches!(err, Error::Accuracy { .. }));
        assert!(initial_spectrum(spin(4), 0).is_err());
    }

    #[test]
    fn walk_examples() {
        let spectrum = initial_spectrum(spin(8), 64).unwrap();
        assert_eq!(walk_evolve(&spectrum, WalkParameters::new(0.0, 57).unwrap()), spectrum);
        for n in [0, 1, 5, 400] {
            let out = walk_evolve(&spectrum, WalkParameters::new(0.7, n).unwrap());
            assert_eq!(out.coefficient(0), spectrum.coefficient(0));
            assert_abs_diff_eq!(
                out.coefficient(1),
                spectrum.coefficient(1) * 0.7f64.cos().powi(n as i32),
                epsilon = 1e-14
            );
        }
        assert!(WalkParameters::new(-0.1, 1).is_err());
        assert!(WalkParameters::new(3.2, 1).is_err());
    }

    #[test]
    fn fidelity_examples() {
        assert_eq!(classical_fidelity(&LegendreSpectrum::uniform(10)), 0.5);
        for tj in 1..=20 {
            let s = spin(tj);
            let f = classical_fidelity(&initial_spectrum(s, default_l_max(s)).unwrap());
            assert_abs_diff_eq!(f, 0.5 + s.j() / s.dim() as f64, epsilon = 1e-12);
        }
        // Truncated delta at the north pole: c_l = 2l + 1 gives F = (1 + 1) / 2.
        for l_max in [1, 10, 100] {
            let delta = LegendreSpectrum::new((0..=l_max).map(|l| (2 * l + 1) as f64).collect()).unwrap();
            assert_abs_diff_eq!(classical_fidelity(&delta), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn fitted_step_examples() {
        assert_abs_diff_eq!(fitted_step(spin(1)), PI / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fitted_step(spin(20)), (1.0 - 2.0 / 441.0f64).acos(), epsilon = 1e-15);
        for tj in 100..=400 {
            let ratio = fitted_step(spin(tj)) * f64::from(tj + 1) / 2.0;
            assert!((ratio - 1.0).abs() < 0.01, "2j={tj} ratio={ratio}");
        }
    }

    #[test]
    fn series_examples() {
        let s = spin(10);
        let fitted = classical_fidelity_series(s, fitted_step(s), 200).unwrap();
        for e in &fitted.entries {
            assert_abs_diff_eq!(e.pipeline, crate::quantum::closed_form_fidelity(s, e.n), epsilon = 1e-10);
        }
        let flat = classical_fidelity_series(s, PI / 2.0, 20).unwrap();
        for e in &flat.entries[1..] {
            assert_abs_diff_eq!(e.pipeline, 0.5, epsilon = 1e-15);
        }
        let still = classical_fidelity_series(s, 0.0, 20).unwrap();
        for e in &still.entries {
            assert_abs_diff_eq!(e.pipeline, 0.5 + 5.0 / 11.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn variance_and_gaussian_limit() {
        let v = angular_variance(spin(200)).unwrap() * 200.0;
        assert!((0.95..=1.05).contains(&v), "{v}");
        assert!(gaussian_approximation_gap(spin(200), 20001) < 0.02);
        let small = angular_variance(spin(1)).unwrap();
        assert!(small.is_finite() && small > 0.0);
        assert!(angular_variance(spin(0)).is_err());
    }

    #[test]
    fn positivity_of_fitted_walk() {
        for tj in [1, 4, 11, 20] {
            let s = spin(tj);
            let initial = initial_spectrum(s, default_l_max(s)).unwrap();
            let limit = (10.0 * s.j() * s.j()).ceil() as u64;
            for n in [0, 1, limit / 3, limit] {
                let out = walk_evolve(&initial, WalkParameters::new(fitted_step(s), n).unwrap());
                assert!(out.is_positive(POSITIVITY_GRID, tolerances::DISTRIBUTION_POSITIVITY), "2j={tj} n={n}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn walk_preserves_normalization_and_shrinks(tj in 1u32..40, alpha in 0.01..3.13f64, n in 1u64..500) {
            let s = spin(tj);
            let initial = initial_spectrum(s, default_l_max(s)).unwrap();
            let out = walk_evolve(&initial, WalkParameters::new(alpha, n).unwrap());
            prop_assert_eq!(out.coefficient(0), initial.coefficient(0));
            for l in 1..=out.l_max() {
                prop_assert!(out.coefficient(l).abs() <= initial.coefficient(l).abs());
            }
            prop_assert!(out.coefficient(1).abs() < initial.coefficient(1).abs());
        }

        #[test]
        fn two_fidelity_routes_agree(tj in 1u32..40, alpha in 0.0..PI, n in 0u64..200) {
            let s = spin(tj);
            let initial = initial_spectrum(s, default_l_max(s)).unwrap();
            let out = walk_evolve(&initial, WalkParameters::new(alpha, n).unwrap());
            prop_assert!((classical_fidelity(&out) - classical_fidelity_by_quadrature(&out)).abs() <= 1e-10);
        }
    }
}
