//! Closed-form Gaussian packet fields built from a [`PacketState`].
//!
//! Density, phase, the assembled complex wavefunction, the two velocity
//! fields of the Madelung picture, and the Bohm quantum potential. All are
//! exact functions of the five packet degrees of freedom; no grid
//! differentiation is involved (the `residuals` module does the numerical
//! cross-checks).

use num_complex::Complex64;

use crate::dynamics::PacketState;
use crate::error::{Result, SchError};
use crate::grid::{ComplexField, Grid, RealField};
use crate::params::PhysicsParams;

fn require_width(state: &PacketState) -> Result<()> {
    if state.a > 0.0 && state.a.is_finite() {
        Ok(())
    } else {
        Err(SchError::WidthCollapse {
            t: state.t,
            a: state.a,
        })
    }
}

/// Normalized Gaussian density ρ(x) = (2πa²)^{−1/2} exp(−(x−q)²/2a²).
pub fn density(state: &PacketState, grid: &Grid) -> Result<RealField> {
    require_width(state)?;
    let (q, a) = (state.q, state.a);
    let norm = (2.0 * std::f64::consts::PI * a * a).sqrt().recip();
    Ok(RealField::from_fn(*grid, |x| {
        let u = x - q;
        norm * (-u * u / (2.0 * a * a)).exp()
    }))
}

/// Phase field S(x) = S₀ + (m q̇/ℏ)(x−q) + (m/2ℏ)(ȧ/a − ν/2)(x−q)².
pub fn phase(state: &PacketState, grid: &Grid, params: &PhysicsParams) -> Result<RealField> {
    require_width(state)?;
    let (q, a) = (state.q, state.a);
    let lin = params.mass * state.qdot / params.hbar;
    let quad = 0.5 * params.mass / params.hbar * (state.adot / a - 0.5 * params.nu);
    let s0 = state.s0;
    Ok(RealField::from_fn(*grid, |x| {
        let u = x - q;
        s0 + lin * u + quad * u * u
    }))
}

/// The packet wavefunction ψ = √ρ · e^{iS}, assembled by composing
/// [`density`] and [`phase`] exactly (same floating-point operations).
pub fn evaluate_packet(
    state: &PacketState,
    grid: &Grid,
    params: &PhysicsParams,
) -> Result<ComplexField> {
    let rho = density(state, grid)?;
    let s = phase(state, grid, params)?;
    let values = rho
        .values
        .iter()
        .zip(&s.values)
        .map(|(&r, &ph)| Complex64::from_polar(r.sqrt(), ph))
        .collect();
    ComplexField::new(*grid, values)
}

/// Velocity field of the probability flux:
/// v_qu(x) = (ȧ/a − ν/2)(x−q) + q̇ = (ℏ/m) ∂S/∂x.
pub fn quantum_velocity(
    state: &PacketState,
    grid: &Grid,
    params: &PhysicsParams,
) -> Result<RealField> {
    require_width(state)?;
    let slope = state.adot / state.a - 0.5 * params.nu;
    let (q, qdot) = (state.q, state.qdot);
    Ok(RealField::from_fn(*grid, |x| slope * (x - q) + qdot))
}

/// Convective velocity ϑ_qu(x) = (ȧ/a)(x−q) + q̇, the field that closes the
/// source-free continuity equation. Differs from [`quantum_velocity`] by the
/// diffusive drift (ν/2)(x−q).
pub fn convective_velocity(
    state: &PacketState,
    grid: &Grid,
    _params: &PhysicsParams,
) -> Result<RealField> {
    require_width(state)?;
    let slope = state.adot / state.a;
    let (q, qdot) = (state.q, state.qdot);
    Ok(RealField::from_fn(*grid, |x| slope * (x - q) + qdot))
}

/// Bohm quantum potential of the Gaussian packet:
/// V_qu(x) = ℏ²/(4ma²) − (ℏ²/8ma⁴)(x−q)².
pub fn quantum_potential(
    state: &PacketState,
    grid: &Grid,
    params: &PhysicsParams,
) -> Result<RealField> {
    require_width(state)?;
    let (q, a) = (state.q, state.a);
    let h2m = params.hbar * params.hbar / params.mass;
    let center = h2m / (4.0 * a * a);
    let curv = h2m / (8.0 * a * a * a * a);
    Ok(RealField::from_fn(*grid, |x| {
        let u = x - q;
        center - curv * u * u
    }))
}
