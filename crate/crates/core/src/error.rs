//! Error type shared by every numerical operation in the crate.
//!
//! The variants mirror the distinct failure modes of the toolkit: invalid
//! caller input, physical breakdown of the packet ansatz (width collapse),
//! integrator breakdown, and diagnostics that refuse to run outside their
//! regime of validity.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SchError>;

#[derive(Debug, Clone, Error)]
pub enum SchError {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A field or scalar that must be finite is NaN or infinite.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    /// The density integrates to (numerically) zero, so ρ-weighted means
    /// are undefined.
    #[error("vanishing density: ∫ρ dx = {norm:.3e} is below {floor:.3e}")]
    VanishingDensity { norm: f64, floor: f64 },

    /// The packet width reached zero or went negative. The width equation
    /// repels a(t) from zero for ℏ > 0, so this indicates either corrupted
    /// state or dynamics too stiff for the requested tolerance. The state is
    /// reported, never clamped.
    #[error("width collapse: a = {a:.6e} at t = {t:.6e}")]
    WidthCollapse { t: f64, a: f64 },

    /// The potential evaluator returned a non-finite value or derivative.
    #[error("potential evaluation failed at q = {q:.6e}, t = {t:.6e}")]
    PotentialEvaluation { q: f64, t: f64 },

    /// The adaptive integrator underflowed its minimum step size.
    #[error("stiff or singular dynamics: step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StiffDynamics { t: f64, h: f64 },

    /// The redundant quadrature route for the action disagrees with the
    /// integrator-carried value beyond tolerance.
    #[error("action inconsistency: |ΔS₀| = {deviation:.3e} at t = {t:.6e} exceeds {tolerance:.1e}")]
    ActionInconsistency {
        t: f64,
        deviation: f64,
        tolerance: f64,
    },

    /// A complex field is identically zero, so no polar decomposition exists.
    #[error("null field: cannot decompose an identically zero wave function")]
    NullField,

    /// Two fields or grids that must share a discretization do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The kernel integrand has not decayed at the velocity-window edges.
    #[error(
        "velocity window too narrow: edge envelope {edge_ratio:.3e} of peak exceeds {limit:.1e} \
         (window [{v_min:.3e}, {v_max:.3e}])"
    )]
    VelocityWindowTooNarrow {
        v_min: f64,
        v_max: f64,
        edge_ratio: f64,
        limit: f64,
    },

    /// Kernel evaluation requested below the resolvable-time floor, where the
    /// kernel approaches a distribution on any fixed grid.
    #[error(
        "causality-limit regime: t = {t:.3e} ≤ t_min = {t_min:.3e}; use delta_limit_check there"
    )]
    CausalityLimit { t: f64, t_min: f64 },

    /// One oracle step moved the norm by more than the stability guard allows.
    #[error("unstable step, reduce dt: one-step norm drift {drift:.3e} at t = {t:.6e}")]
    UnstableStep { t: f64, drift: f64 },
}

impl SchError {
    /// Convenience constructor for precondition failures.
    pub fn invalid(msg: impl Into<String>) -> Self {
        SchError::InvalidInput(msg.into())
    }

    pub fn non_finite(context: impl Into<String>) -> Self {
        SchError::NonFinite {
            context: context.into(),
        }
    }
}
