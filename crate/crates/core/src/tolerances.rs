//! Numerical tolerances used across the library, the self-test and the
//! acceptance suite. Every threshold lives here; nothing else hard-codes one.

/// Exact structural identities: completeness, trace preservation, Hermiticity,
/// fixed points, record averaging.
pub const STRUCTURAL: f64 = 1e-12;

/// Agreement with a closed form after long iteration (up to ~1000 steps of
/// double-precision accumulation).
pub const ORACLE: f64 = 1e-10;

/// Smallest admissible eigenvalue of a density operator.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Slack allowed on outcome probabilities before they are declared
/// inconsistent.
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// A quadrature-derived `c_0` further than this from one means the rule was
/// too short for the integrand.
pub const NORMALIZATION_ACCURACY: f64 = 1e-8;

/// Allowed negativity of a reconstructed (truncated) Legendre distribution.
pub const DISTRIBUTION_POSITIVITY: f64 = 1e-6;

/// Pointwise agreement of the grid ring-average with the Legendre eigenvalue.
pub const RING_AVERAGE: f64 = 1e-7;

/// Minimum number of polar grid points accepted by the ring-average oracle.
pub const MIN_RING_GRID: usize = 2048;

/// Azimuthal trapezoid nodes used by the ring-average oracle.
pub const RING_AZIMUTH_NODES: usize = 1024;

/// Reduced-gradient threshold for the NNLS optimality conditions.
pub const KKT: f64 = 1e-10;

/// Coherent decomposition residual above which a state is reported as not a
/// mixture of coherent states.
pub const NON_CONVEX_RESIDUAL: f64 = 1e-6;

/// Maximum relative change of the decomposition residual under grid
/// refinement for the verdict to count as stable.
pub const GRID_STABILITY: f64 = 0.10;

/// Sum-to-one check applied to target population vectors.
pub const POPULATION_SUM: f64 = 1e-10;
