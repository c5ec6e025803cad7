//! External potentials V(x, t) with first and second spatial derivatives.
//!
//! The packet-moment equations only consume V′ and V″ along the trajectory,
//! while the grid solver consumes V itself, so each evaluation returns all
//! three at once.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SchError};

/// Value and first two spatial derivatives of the potential at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSample {
    pub v: f64,
    pub dv: f64,
    pub ddv: f64,
}

/// Callback signature for user-defined potentials: (x, t) ↦ (V, V′, V″).
pub type PotentialFn = dyn Fn(f64, f64) -> (f64, f64, f64) + Send + Sync;

/// The external potential models understood by the toolkit.
#[derive(Clone)]
pub enum PotentialModel {
    /// V = 0.
    Free,
    /// Constant force f: V = −f·x.
    Linear { force: f64 },
    /// V = ½ m ω² x².
    Harmonic { mass: f64, omega: f64 },
    /// V = Σ_k c_k x^k with coefficients in ascending order.
    Polynomial { coeffs: Vec<f64> },
    /// Arbitrary user-supplied (V, V′, V″).
    Custom { f: Arc<PotentialFn> },
}

impl fmt::Debug for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Free => write!(f, "Free"),
            Self::Linear { force } => write!(f, "Linear {{ force: {force} }}"),
            Self::Harmonic { mass, omega } => {
                write!(f, "Harmonic {{ mass: {mass}, omega: {omega} }}")
            }
            Self::Polynomial { coeffs } => write!(f, "Polynomial {{ coeffs: {coeffs:?} }}"),
            Self::Custom { .. } => write!(f, "Custom {{ .. }}"),
        }
    }
}

impl PotentialModel {
    /// Harmonic oscillator with validated parameters.
    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(SchError::invalid("harmonic potential needs mass > 0"));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(SchError::invalid("harmonic potential needs omega > 0"));
        }
        Ok(Self::Harmonic { mass, omega })
    }

    /// Polynomial potential; coefficients must be finite.
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SchError::invalid("polynomial coefficients must be finite"));
        }
        Ok(Self::Polynomial { coeffs })
    }

    /// Wrap a user callback returning (V, V′, V″).
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64, f64) -> (f64, f64, f64) + Send + Sync + 'static,
    {
        Self::Custom { f: Arc::new(f) }
    }

    /// Evaluate (V, V′, V″) at position `x` and time `t`.
    pub fn eval(&self, x: f64, t: f64) -> Result<PotentialSample> {
        let (v, dv, ddv) = match self {
            Self::Free => (0.0, 0.0, 0.0),
            Self::Linear { force } => (-force * x, -force, 0.0),
            Self::Harmonic { mass, omega } => {
                let k = mass * omega * omega;
                (0.5 * k * x * x, k * x, k)
            }
            Self::Polynomial { coeffs } => horner_with_derivatives(coeffs, x),
            Self::Custom { f } => f(x, t),
        };
        if !(v.is_finite() && dv.is_finite() && ddv.is_finite()) {
            return Err(SchError::PotentialEvaluation { q: x, t });
        }
        Ok(PotentialSample { v, dv, ddv })
    }

    /// Global coefficients (k₀, k₁, k₂) with V = k₀ + k₁x + ½k₂x², when the
    /// potential is exactly quadratic and time-independent. Quadratic
    /// potentials make the packet width independent of the initial velocity,
    /// which the propagator exploits to integrate the width system once
    /// instead of once per quadrature node.
    pub fn quadratic_coefficients(&self) -> Option<(f64, f64, f64)> {
        match self {
            Self::Free => Some((0.0, 0.0, 0.0)),
            Self::Linear { force } => Some((0.0, -force, 0.0)),
            Self::Harmonic { mass, omega } => Some((0.0, 0.0, mass * omega * omega)),
            Self::Polynomial { coeffs } => {
                if coeffs.iter().skip(3).all(|&c| c == 0.0) {
                    let c = |k: usize| coeffs.get(k).copied().unwrap_or(0.0);
                    Some((c(0), c(1), 2.0 * c(2)))
                } else {
                    None
                }
            }
            Self::Custom { .. } => None,
        }
    }

    /// True when V″ is independent of x (free, linear, harmonic, or a
    /// polynomial of degree ≤ 2).
    pub fn is_quadratic(&self) -> bool {
        self.quadratic_coefficients().is_some()
    }
}

/// Horner evaluation of p, p′, p″ in a single pass.
fn horner_with_derivatives(coeffs: &[f64], x: f64) -> (f64, f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    let mut ddp = 0.0;
    for &c in coeffs.iter().rev() {
        ddp = ddp * x + 2.0 * dp;
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp, ddp)
}
