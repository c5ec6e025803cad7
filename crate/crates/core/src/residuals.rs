//! Numerical certification of the Gaussian packet against the identities it
//! is supposed to satisfy: the logarithmic density identity, the continuity
//! equation in both its convective and friction forms, and the
//! Hamilton–Jacobi coefficient conditions. Every check recomputes its
//! ingredients by quadrature or finite differences rather than trusting the
//! closed forms being validated.

use crate::dynamics::{ode_rhs, PacketState};
use crate::error::Result;
use crate::fd;
use crate::grid::{Grid, RealField};
use crate::packet::{density, quantum_velocity};
use crate::params::{MeanActionVariant, PhysicsParams};
use crate::potential::PotentialModel;
use crate::quad::expectation;

/// Density mask for residual maxima: points below this fraction of the peak
/// are outside the packet's effective support.
pub const SUPPORT_MASK: f64 = 1e-10;

/// ρ-weighted mean of ln ρ by quadrature. For the Gaussian packet the
/// analytic value is −½ln(2πa²) − ½.
pub fn mean_log_density(state: &PacketState, grid: &Grid) -> Result<f64> {
    let rho = density(state, grid)?;
    let log_rho = RealField::new(
        *grid,
        rho.values.iter().map(|&r| r.max(1e-300).ln()).collect(),
    )?;
    expectation(&rho, &log_rho)
}

/// Max-norm residual of the logarithmic identity
/// ln ρ − ⟨ln ρ⟩ = −(a²/2ρ) ∂²ρ/∂x², over the effective support.
///
/// ⟨ln ρ⟩ is computed by quadrature and ∂²ρ/∂x² by the O(h⁶) central
/// stencil: the identity itself is exact for the Gaussian, so the returned
/// number measures pure discretization error, and at n = 2048 on ±8a the
/// O(h²) stencil's truncation (∼5e−3 near the mask edge) would swamp the
/// identity check while the O(h⁶) stencil keeps it below 1e−9.
pub fn log_identity_residual(state: &PacketState, grid: &Grid) -> Result<f64> {
    let rho = density(state, grid)?;
    let mean_ln = mean_log_density(state, grid)?;
    let d2rho = fd::second_derivative_o6(&rho)?;
    let peak = rho.values.iter().cloned().fold(0.0f64, f64::max);
    let a2 = state.a * state.a;
    let mut max_res = 0.0f64;
    for i in 0..grid.n {
        let r = rho.values[i];
        if r > SUPPORT_MASK * peak {
            let lhs = r.ln() - mean_ln;
            let rhs = -0.5 * a2 / r * d2rho.values[i];
            max_res = max_res.max((lhs - rhs).abs());
        }
    }
    Ok(max_res)
}

/// Max-norm residual of the source-free continuity equation
/// ∂ρ/∂t + ∂(ρ ϑ_qu)/∂x = 0, with both terms expanded analytically through
/// the chain rule in (q̇, ȧ). The convective field ϑ_qu is constructed to
/// cancel the time derivative exactly, so the residual is floating-point
/// cancellation noise — independent of the grid resolution.
pub fn continuity_residual(
    state: &PacketState,
    grid: &Grid,
    params: &PhysicsParams,
    potential: &PotentialModel,
) -> Result<f64> {
    // The identity involves only the kinematic state; the potential enters
    // the dynamics that produced (q̇, ȧ) but not the identity itself. It is
    // accepted (and validated) here so the call shape matches the other
    // residuals and misuse with an inconsistent model still type-checks.
    let _ = potential.eval(state.q, state.t)?;
    let rho = density(state, grid)?;
    let PacketState {
        q, qdot, a, adot, ..
    } = *state;
    let _ = params;
    let mut max_res = 0.0f64;
    for i in 0..grid.n {
        let u = grid.point(i) - q;
        let r = rho.values[i];
        // ∂ρ/∂t = ρ [−ȧ/a + u q̇/a² + u² ȧ/a³]
        let drho_dt = r * (-adot / a + u * qdot / (a * a) + u * u * adot / (a * a * a));
        // ∂(ρϑ)/∂x = ρ′ϑ + ρϑ′ with ρ′ = −(u/a²)ρ, ϑ = (ȧ/a)u + q̇.
        let theta = adot / a * u + qdot;
        let dflux_dx = r * (-u / (a * a) * theta + adot / a);
        max_res = max_res.max((drho_dt + dflux_dx).abs());
    }
    Ok(max_res)
}

/// Max-norm residual of the friction form of the continuity equation,
/// ∂ρ/∂t + ∂(ρ v_qu)/∂x = −ν ρ (ln ρ − ⟨ln ρ⟩), with ⟨ln ρ⟩ by quadrature.
/// Coincides with [`continuity_residual`] at ν = 0.
pub fn friction_continuity_residual(
    state: &PacketState,
    grid: &Grid,
    params: &PhysicsParams,
) -> Result<f64> {
    let rho = density(state, grid)?;
    let v = quantum_velocity(state, grid, params)?;
    let mean_ln = mean_log_density(state, grid)?;
    let PacketState {
        q, qdot, a, adot, ..
    } = *state;
    let nu = params.nu;
    let mut max_res = 0.0f64;
    for i in 0..grid.n {
        let u = grid.point(i) - q;
        let r = rho.values[i];
        let drho_dt = r * (-adot / a + u * qdot / (a * a) + u * u * adot / (a * a * a));
        // ∂(ρv)/∂x with v affine: ρ′v + ρ·v′, v′ = ȧ/a − ν/2.
        let dflux_dx = r * (-u / (a * a) * v.values[i] + (adot / a - 0.5 * nu));
        let source = -nu * r * (r.max(1e-300).ln() - mean_ln);
        max_res = max_res.max((drho_dt + dflux_dx - source).abs());
    }
    Ok(max_res)
}

/// Coefficients (c0, c1, c2) of the quadratic expansion of the quantum
/// Hamilton–Jacobi residual ℏ[∂S/∂t + ν(S − ⟨S⟩)] + ½m v_qu² + V + V_qu
/// in powers of (x − q).
///
/// The time derivatives of the phase coefficients come from the packet ODEs
/// under the requested `variant`; ⟨S⟩ is reduced to ⟨(x−q)²⟩ computed by
/// explicit quadrature over `grid` rather than its closed form a². For a
/// state generated under the same variant, c1 and c2 vanish identically and
/// c0 vanishes under the variant that reads the mean phase term as
/// ρ-weighted (`corrected`); under `paper` the leftover is
/// (νm/2)(ȧ/a − ν/2)(1 − ⟨(x−q)²⟩), reported for adjudication.
pub fn hamilton_jacobi_residual(
    state: &PacketState,
    grid: &Grid,
    params: &PhysicsParams,
    potential: &PotentialModel,
    variant: MeanActionVariant,
) -> Result<(f64, f64, f64)> {
    let params = params.with_variant(variant);
    let rhs = ode_rhs(state, potential, &params)?;
    let [_, qddot, _, addot, s0dot] = rhs;
    let PacketState {
        t, q, qdot, a, adot, ..
    } = *state;
    let m = params.mass;
    let hbar = params.hbar;
    let nu = params.nu;
    let pot = potential.eval(q, t)?;

    // Phase coefficients S = S₀ + k₁u + k₂u² and their time derivatives.
    let beta = adot / a - 0.5 * nu;
    let k1 = m * qdot / hbar;
    let k2 = 0.5 * m / hbar * beta;
    let k1dot = m * qddot / hbar;
    let k2dot = 0.5 * m / hbar * (addot / a - (adot / a) * (adot / a));

    // ⟨(x−q)²⟩ by quadrature (enters through ℏν⟨S⟩).
    let rho = density(state, grid)?;
    let u2 = RealField::from_fn(*grid, |x| (x - q) * (x - q));
    let mean_u2 = expectation(&rho, &u2)?;

    let c0 = hbar * (s0dot - k1 * qdot) - hbar * nu * k2 * mean_u2
        + 0.5 * m * qdot * qdot
        + pot.v
        + hbar * hbar / (4.0 * m * a * a);
    let c1 = hbar * (k1dot - 2.0 * k2 * qdot) + hbar * nu * k1 + m * qdot * beta + pot.dv;
    let c2 = hbar * k2dot + hbar * nu * k2 + 0.5 * m * beta * beta + 0.5 * pot.ddv
        - hbar * hbar / (8.0 * m * a * a * a * a);
    Ok((c0, c1, c2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate_trajectory;
    use crate::params::InitialConditions;

    fn params(nu: f64, variant: MeanActionVariant) -> PhysicsParams {
        PhysicsParams::natural(nu, variant).unwrap()
    }

    fn unit_state() -> PacketState {
        PacketState {
            t: 0.0,
            q: 0.0,
            qdot: 0.3,
            a: 1.0,
            adot: 0.1,
            s0: 0.0,
        }
    }

    #[test]
    fn mean_log_density_matches_the_gaussian_closed_form() {
        let g = Grid::for_packet(0.0, 0.0, 1.0, 2048).unwrap();
        let mean = mean_log_density(&unit_state(), &g).unwrap();
        let exact = -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5;
        assert!((mean - exact).abs() < 1e-8, "got {mean}, want {exact}");
    }

    #[test]
    fn log_identity_holds_to_discretization_accuracy() {
        let g = Grid::for_packet(0.0, 0.0, 1.0, 2048).unwrap();
        let res = log_identity_residual(&unit_state(), &g).unwrap();
        assert!(res < 1e-6, "residual {res}");
    }

    #[test]
    fn log_identity_residual_is_translation_invariant() {
        let shift = 3.7;
        let s0 = unit_state();
        let s1 = PacketState {
            q: s0.q + shift,
            ..s0
        };
        let g0 = Grid::for_packet(s0.q, s0.q, s0.a, 2048).unwrap();
        let g1 = Grid::for_packet(s1.q, s1.q, s1.a, 2048).unwrap();
        let r0 = log_identity_residual(&s0, &g0).unwrap();
        let r1 = log_identity_residual(&s1, &g1).unwrap();
        // The residual is pure stencil-truncation noise, and rounding of the
        // shifted grid coordinates perturbs it at the ~20% level; only a
        // systematic position dependence would be a real failure.
        assert!(
            (r0 - r1).abs() < 0.5 * r0.max(r1),
            "residual depends on position: {r0} vs {r1}"
        );
    }

    #[test]
    fn continuity_residual_is_cancellation_noise_for_all_friction_strengths() {
        for nu in [0.0, 0.3, 1.0] {
            let p = params(nu, MeanActionVariant::Corrected);
            let ic = InitialConditions::new(0.5, 1.0, 0.8, -0.1).unwrap();
            let v = PotentialModel::harmonic(1.0, 1.0).unwrap();
            let rec = integrate_trajectory(&ic, &v, &p, &[0.0, 0.7], 1e-10).unwrap();
            let state = rec.last();
            let g = Grid::for_packet(state.q, state.q, state.a, 1024).unwrap();
            let res = continuity_residual(state, &g, &p, &v).unwrap();
            assert!(res < 1e-10, "nu={nu}: residual {res}");
        }
    }

    #[test]
    fn continuity_residual_does_not_grow_with_resolution() {
        let p = params(0.3, MeanActionVariant::Corrected);
        let v = PotentialModel::Free;
        let s = unit_state();
        let g1 = Grid::for_packet(s.q, s.q, s.a, 512).unwrap();
        let g2 = Grid::for_packet(s.q, s.q, s.a, 1024).unwrap();
        let r1 = continuity_residual(&s, &g1, &p, &v).unwrap();
        let r2 = continuity_residual(&s, &g2, &p, &v).unwrap();
        assert!(r2 <= r1 * 10.0 + 1e-15, "r1={r1}, r2={r2}");
    }

    #[test]
    fn friction_form_reduces_to_convective_form_at_zero_nu() {
        let p = params(0.0, MeanActionVariant::Corrected);
        let s = unit_state();
        let g = Grid::for_packet(s.q, s.q, s.a, 1024).unwrap();
        let r_conv = continuity_residual(&s, &g, &p, &PotentialModel::Free).unwrap();
        let r_fric = friction_continuity_residual(&s, &g, &p).unwrap();
        assert!((r_conv - r_fric).abs() < 1e-13);
    }

    #[test]
    fn friction_form_closes_with_quadrature_mean() {
        for nu in [0.3, 1.0] {
            let p = params(nu, MeanActionVariant::Corrected);
            let s = unit_state();
            let g = Grid::for_packet(s.q, s.q, s.a, 2048).unwrap();
            let res = friction_continuity_residual(&s, &g, &p).unwrap();
            assert!(res < 1e-10, "nu={nu}: residual {res}");
        }
    }

    #[test]
    fn hamilton_jacobi_coefficients_vanish_under_the_consistent_variant() {
        let p = params(0.3, MeanActionVariant::Corrected);
        let ic = InitialConditions::new(1.0, 0.0, 0.9, 0.0).unwrap();
        let v = PotentialModel::harmonic(1.0, 1.0).unwrap();
        let rec = integrate_trajectory(&ic, &v, &p, &[0.0, 1.0], 1e-10).unwrap();
        let state = rec.last();
        let g = Grid::for_packet(state.q, state.q, state.a, 2048).unwrap();
        let (c0, c1, c2) =
            hamilton_jacobi_residual(state, &g, &p, &v, MeanActionVariant::Corrected).unwrap();
        assert!(c0.abs() < 1e-8, "c0 = {c0}");
        assert!(c1.abs() < 1e-8, "c1 = {c1}");
        assert!(c2.abs() < 1e-8, "c2 = {c2}");
    }

    #[test]
    fn paper_variant_leftover_matches_its_closed_form() {
        let p = params(0.3, MeanActionVariant::Paper);
        let ic = InitialConditions::new(1.0, 0.0, 0.9, 0.0).unwrap();
        let v = PotentialModel::harmonic(1.0, 1.0).unwrap();
        let rec = integrate_trajectory(&ic, &v, &p, &[0.0, 1.0], 1e-10).unwrap();
        let state = rec.last();
        let g = Grid::for_packet(state.q, state.q, state.a, 2048).unwrap();
        let (c0, c1, c2) =
            hamilton_jacobi_residual(state, &g, &p, &v, MeanActionVariant::Paper).unwrap();
        // c1, c2 do not involve the mean phase term.
        assert!(c1.abs() < 1e-8, "c1 = {c1}");
        assert!(c2.abs() < 1e-8, "c2 = {c2}");
        let beta = state.adot / state.a - 0.5 * p.nu;
        let expected = 0.5 * p.nu * p.mass * beta * (1.0 - state.a * state.a);
        assert!(
            (c0 - expected).abs() < 1e-8,
            "c0 = {c0}, closed form {expected}"
        );
        // And it is genuinely nonzero for this trajectory.
        assert!(c0.abs() > 1e-4, "expected a visible leftover, got {c0}");
    }
}
