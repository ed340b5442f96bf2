//! Numerical tolerances shared across modules.
//!
//! All thresholds live here so that checks in tests, reports and the CLI agree.

/// Hermiticity, unit trace and PSD slack for density operators, channels and POVMs.
pub const VALIDATION: f64 = 1e-10;

/// Relative eigenvalue cutoff defining the support of a PSD operator.
pub const RANK_REL: f64 = 1e-10;

/// Absolute floor for the support cutoff.
pub const RANK_FLOOR: f64 = 1e-12;

/// Probability below which an outcome (or ensemble member) counts as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-12;

/// Sum tolerance for classical distributions.
pub const DISTRIBUTION: f64 = 1e-12;

/// Schmidt coefficients below this fraction of the largest are not counted.
pub const SCHMIDT_REL: f64 = 1e-8;

/// Singular-value cutoff for fixed-point nullspaces.
pub const NULLSPACE: f64 = 1e-9;

/// Mixture-consistency tolerance for an ensemble against its average state.
pub const MIXTURE: f64 = 1e-9;

/// Round-trip and commutation deviations.
pub const ROUNDTRIP: f64 = 1e-9;

/// Joint-statistics equivalence deviation.
pub const EQUIVALENCE: f64 = 1e-10;

/// Fixed-algebra reconstruction error.
pub const RECONSTRUCTION: f64 = 1e-8;

/// Purity slack for post-selected block factors.
pub const PURITY: f64 = 1e-8;

/// Commutator norm above which two states count as noncommuting.
pub const COMMUTATOR: f64 = 1e-8;

/// Default cap on the total dimension of any constructed matrix.
pub const MAX_DIM: usize = 4096;
