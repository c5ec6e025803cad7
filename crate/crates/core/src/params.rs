//! Physical run parameters and packet initial conditions.

use crate::error::{Result, SchError};

/// Convention for the width-friction term in the uniform-phase rate Ṡ₀.
///
/// The friction contribution to Ṡ₀ involves the packet average of the
/// quadratic phase term. Averaging (x−q)² over the Gaussian density gives a²,
/// but the published closed form carries the term with weight 1 instead.
/// Both conventions are implemented; they differ only by a spatially uniform
/// phase, so densities, velocities and the quadratic residual conditions are
/// identical. The Hamilton–Jacobi zeroth-order coefficient c₀, evaluated with
/// the phase mean taken by explicit quadrature, vanishes only under
/// `Corrected` (see `residuals::hamilton_jacobi_residual`), which is how the
/// discrepancy is adjudicated empirically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanActionVariant {
    /// Width-friction term weighted by 1 (as printed in the source model).
    Paper,
    /// Width-friction term weighted by the Gaussian second moment a².
    Corrected,
}

impl MeanActionVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeanActionVariant::Paper => "paper",
            MeanActionVariant::Corrected => "corrected",
        }
    }
}

impl std::str::FromStr for MeanActionVariant {
    type Err = SchError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(MeanActionVariant::Paper),
            "corrected" => Ok(MeanActionVariant::Corrected),
            other => Err(SchError::invalid(format!(
                "unknown mean-action variant {other:?}; expected \"paper\" or \"corrected\""
            ))),
        }
    }
}

/// Mass, ℏ, friction strength ν and the mean-action convention.
///
/// Units are natural: m and ℏ are explicit parameters, defaulting to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    pub mass: f64,
    pub hbar: f64,
    pub nu: f64,
    pub variant: MeanActionVariant,
}

impl PhysicsParams {
    pub fn new(mass: f64, hbar: f64, nu: f64, variant: MeanActionVariant) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(SchError::invalid(format!("mass must be positive, got {mass}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(SchError::invalid(format!("hbar must be positive, got {hbar}")));
        }
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(SchError::invalid(format!(
                "friction nu must be non-negative, got {nu}"
            )));
        }
        Ok(PhysicsParams {
            mass,
            hbar,
            nu,
            variant,
        })
    }

    /// Natural units (m = ℏ = 1) with the given friction.
    pub fn natural(nu: f64, variant: MeanActionVariant) -> Result<Self> {
        PhysicsParams::new(1.0, 1.0, nu, variant)
    }

    pub fn with_variant(mut self, variant: MeanActionVariant) -> Self {
        self.variant = variant;
        self
    }
}

/// Initial center, velocity, width and width rate of a Gaussian packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConditions {
    pub x0: f64,
    pub v0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl InitialConditions {
    pub fn new(x0: f64, v0: f64, a0: f64, b0: f64) -> Result<Self> {
        for (name, v) in [("x0", x0), ("v0", v0), ("a0", a0), ("b0", b0)] {
            if !v.is_finite() {
                return Err(SchError::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        if a0 <= 0.0 {
            return Err(SchError::invalid(format!(
                "initial width a0 must be positive, got {a0}"
            )));
        }
        Ok(InitialConditions { x0, v0, a0, b0 })
    }
}

/// Equilibrium width of the frictionless harmonic packet, √(ℏ/2mω).
pub fn harmonic_equilibrium_width(params: &PhysicsParams, omega: f64) -> f64 {
    (params.hbar / (2.0 * params.mass * omega)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_mass_and_width() {
        assert!(PhysicsParams::new(0.0, 1.0, 0.0, MeanActionVariant::Paper).is_err());
        assert!(PhysicsParams::new(1.0, -1.0, 0.0, MeanActionVariant::Paper).is_err());
        assert!(PhysicsParams::new(1.0, 1.0, -0.1, MeanActionVariant::Paper).is_err());
        assert!(InitialConditions::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(InitialConditions::new(0.0, 0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn variant_round_trips_through_strings() {
        for v in [MeanActionVariant::Paper, MeanActionVariant::Corrected] {
            assert_eq!(v.as_str().parse::<MeanActionVariant>().unwrap(), v);
        }
        assert!("neither".parse::<MeanActionVariant>().is_err());
    }

    #[test]
    fn equilibrium_width_matches_closed_form() {
        let p = PhysicsParams::natural(0.0, MeanActionVariant::Paper).unwrap();
        assert!((harmonic_equilibrium_width(&p, 1.0) - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
