//! Numerical tolerances and statistical thresholds, in one place.
//!
//! Floating tolerances are fixed properties of the algorithms. Statistical
//! thresholds are calibrated to the sample sizes the experiments prescribe;
//! the underlying results are limit statements with no finite-sample band.

// Geometry and quantization

/// Distance below a split plane within which a coordinate is snapped onto
/// the plane before the lower-closed lookup.
pub const SNAP: f64 = 1e-12;

/// Distance to a split plane at which a step is flagged as a boundary hazard.
pub const HAZARD: f64 = 1e-9;

/// Integrality test for the Weyl closed form.
pub const INTEGRALITY: f64 = 1e-9;

/// Allowed deviation of a cell's total measure from 1.
pub const CELL_MEASURE: f64 = 1e-9;

/// Number of quasi-random points used to check unique coverage of a cell.
pub const CELL_COVERAGE_SAMPLES: usize = 100_000;

/// Above this many boxes a Jordan set switches from a flat scan to a slab index.
pub const FLAT_SCAN_LIMIT: usize = 64;

// Linear algebra

/// `|| L L^{-1} - I ||_inf` bound for a quantized system.
pub const INVERSE_RESIDUAL: f64 = 1e-10;

/// Residual bound for matrix powers in a power stack.
pub const POWER_RESIDUAL: f64 = 1e-8;

/// Relative bound for trajectory recurrences against direct evaluation.
pub const RECURRENCE_RELATIVE: f64 = 1e-6;

/// Neutral-system identities (`Phi = L Phi L^T`, block orthogonality).
pub const NEUTRAL_IDENTITY: f64 = 1e-8;

// Enumeration guards

/// Maximum number of bounding-box candidates for a single preimage.
pub const PREIMAGE_CANDIDATES: u64 = 1_000_000;

/// Largest row count for exhaustive resonance search.
pub const EXHAUSTIVE_RESONANCE_ROWS: usize = 4;

/// Random draws for resonance search above the exhaustive limit.
pub const RANDOM_RESONANCE_DRAWS: u64 = 2_000_000;

// Statistical thresholds

/// Chi-square p-value above which binned errors pass as uniform.
pub const UNIFORMITY_P_VALUE: f64 = 0.001;

/// Largest allowed absolute deviation of a single bin frequency.
pub const UNIFORMITY_MAX_BIN_DEVIATION: f64 = 0.01;

/// Constant part of the independence sup-norm threshold `4/sqrt(#P) + c`.
pub const INDEPENDENCE_SLACK: f64 = 0.01;

/// Mixing and frequency-preservation gap.
pub const MIXING_GAP: f64 = 0.01;

/// Relative gap between consecutive rescaled cardinality averages.
pub const MARTINGALE_GAP: f64 = 0.02;

/// Tail-frequency gap in the central limit experiments.
pub const CLT_TAIL_GAP: f64 = 0.02;

/// Kolmogorov-Smirnov distance to the Wiener max-modulus oracle.
pub const MAX_DEVIATION_KS: f64 = 0.05;

/// Distance between joint and product-of-marginal CDFs across blocks.
pub const BLOCK_INDEPENDENCE_KS: f64 = 0.07;

/// Paths and steps of the simulated planar Wiener oracle.
pub const WIENER_PATHS: usize = 100_000;
pub const WIENER_STEPS: usize = 1_000;
