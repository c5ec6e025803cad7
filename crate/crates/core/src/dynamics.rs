//! Time evolution of the Gaussian packet's five degrees of freedom.
//!
//! The packet is fully described by its center q(t), center velocity q̇(t),
//! width a(t), width velocity ȧ(t), and phase offset S₀(t). Under the
//! logarithmic-friction Schrödinger equation these obey
//!
//!   q̈  = −ν q̇ − V′(q, t)/m
//!   ä  = −a (V″(q, t)/m − ν²/4) + ℏ²/(4 m² a³)
//!   Ṡ₀ = (1/ℏ) [ ½ m q̇² + (ν m/2)(ȧ/a − ν/2)·W − V(q, t) − ℏ²/(4 m a²) ]
//!
//! where W is 1 under [`MeanActionVariant::Paper`] and a² under
//! [`MeanActionVariant::Corrected`] (the two readings of the ρ-weighted mean
//! of the quadratic phase; see `residuals` for the check that discriminates
//! them). The friction constant ν damps the center motion but enters the
//! width equation only through the ν²/4 frequency shift.

use crate::error::{Result, SchError};
use crate::params::{InitialConditions, MeanActionVariant, PhysicsParams};
use crate::potential::PotentialModel;
use crate::rk::{Dopri5, StepStats, Tolerances};

/// Width floor below which the ODE right-hand side refuses to evaluate:
/// a ≤ 0 is outside the model, and denormal widths overflow ℏ²/a³.
const WIDTH_FLOOR: f64 = 1e-100;

/// Quadrature cross-check tolerance for [`classical_action`].
pub const ACTION_CONSISTENCY_TOL: f64 = 1e-9;

/// The five packet degrees of freedom at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketState {
    pub t: f64,
    /// Packet center ⟨x⟩.
    pub q: f64,
    /// Center velocity.
    pub qdot: f64,
    /// Packet width (standard deviation of ρ).
    pub a: f64,
    /// Width velocity.
    pub adot: f64,
    /// Phase offset S₀(t) = S(q(t), t), dimensionless.
    pub s0: f64,
}

impl PacketState {
    /// The state at t = 0 implied by a set of initial conditions:
    /// S₀(0) = m v₀ x₀ / ℏ.
    pub fn initial(ic: &InitialConditions, params: &PhysicsParams) -> Self {
        Self {
            t: 0.0,
            q: ic.x0,
            qdot: ic.v0,
            a: ic.a0,
            adot: ic.b0,
            s0: params.mass * ic.v0 * ic.x0 / params.hbar,
        }
    }

    fn from_vector(t: f64, y: &[f64; 5]) -> Self {
        Self {
            t,
            q: y[0],
            qdot: y[1],
            a: y[2],
            adot: y[3],
            s0: y[4],
        }
    }

    fn to_vector(self) -> [f64; 5] {
        [self.q, self.qdot, self.a, self.adot, self.s0]
    }
}

/// Packet states at caller-requested times plus integrator work counters.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub states: Vec<PacketState>,
    pub stats: StepStats,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &PacketState {
        self.states.last().expect("TrajectoryRecord is never empty")
    }
}

/// Time derivative (q̇, q̈, ȧ, ä, Ṡ₀) of the packet state.
pub fn ode_rhs(
    state: &PacketState,
    potential: &PotentialModel,
    params: &PhysicsParams,
) -> Result<[f64; 5]> {
    let PacketState {
        t, q, qdot, a, adot, ..
    } = *state;
    if a < WIDTH_FLOOR {
        return Err(SchError::WidthCollapse { t, a });
    }
    let m = params.mass;
    let hbar = params.hbar;
    let nu = params.nu;
    let pot = potential.eval(q, t)?;

    let qddot = -nu * qdot - pot.dv / m;
    let addot = -a * (pot.ddv / m - 0.25 * nu * nu) + hbar * hbar / (4.0 * m * m * a * a * a);
    let w = match params.variant {
        MeanActionVariant::Paper => 1.0,
        MeanActionVariant::Corrected => a * a,
    };
    let s0dot = (0.5 * m * qdot * qdot + 0.5 * nu * m * (adot / a - 0.5 * nu) * w
        - pot.v
        - hbar * hbar / (4.0 * m * a * a))
        / hbar;
    Ok([qdot, qddot, adot, addot, s0dot])
}

/// Integrate the packet ODEs from t = 0 and report the state at each
/// requested time. `times` must start at exactly 0 and increase strictly;
/// the first reported state reproduces the initial conditions without any
/// integration error. `tol` is the relative local error target per step.
pub fn integrate_trajectory(
    ic: &InitialConditions,
    potential: &PotentialModel,
    params: &PhysicsParams,
    times: &[f64],
    tol: f64,
) -> Result<TrajectoryRecord> {
    if times.is_empty() {
        return Err(SchError::invalid("integrate_trajectory: empty time list"));
    }
    if times[0] != 0.0 {
        return Err(SchError::invalid(
            "integrate_trajectory: times must start at 0",
        ));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SchError::invalid(
            "integrate_trajectory: times must increase strictly",
        ));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(SchError::invalid("integrate_trajectory: tol must be > 0"));
    }

    let initial = PacketState::initial(ic, params);
    let tolerances = Tolerances {
        rtol: tol,
        atol: tol * 1e-2,
    };
    let mut ode = Dopri5::new(0.0, initial.to_vector(), tolerances)?;
    let mut rhs = |t: f64, y: &[f64; 5]| ode_rhs(&PacketState::from_vector(t, y), potential, params);

    let mut states = Vec::with_capacity(times.len());
    states.push(initial);
    for &t in &times[1..] {
        ode.advance_to(t, &mut rhs)?;
        let state = PacketState::from_vector(t, ode.state());
        if state.a < WIDTH_FLOOR {
            return Err(SchError::WidthCollapse { t, a: state.a });
        }
        states.push(state);
    }
    Ok(TrajectoryRecord {
        states,
        stats: ode.stats(),
    })
}

/// Recompute S₀ at each recorded time by quadrature of the action integrand
/// along the trajectory, as an independent check on the integrated value.
///
/// Uses the end-point-corrected trapezoid rule
/// ∫ g dt ≈ h/2 (g₀ + g₁) + h²/12 (ġ₀ − ġ₁), O(h⁴) per interval, where ġ is
/// obtained by the chain rule through the packet ODEs (plus a finite
/// difference for any explicit time dependence of the potential). Fails with
/// an inconsistency error if the quadrature and the carried S₀ disagree by
/// more than [`ACTION_CONSISTENCY_TOL`] at any recorded time — for smooth
/// potentials and record spacing ≲ 0.02 that signals an integrator bug, not
/// quadrature error.
pub fn classical_action(
    record: &TrajectoryRecord,
    potential: &PotentialModel,
    params: &PhysicsParams,
) -> Result<Vec<f64>> {
    if record.states.is_empty() {
        return Err(SchError::invalid("classical_action: empty record"));
    }
    let mut out = Vec::with_capacity(record.states.len());
    let mut acc = record.states[0].s0;
    out.push(acc);
    let mut prev = integrand_with_slope(&record.states[0], potential, params)?;
    for pair in record.states.windows(2) {
        let cur = integrand_with_slope(&pair[1], potential, params)?;
        let h = pair[1].t - pair[0].t;
        acc += 0.5 * h * (prev.0 + cur.0) + h * h / 12.0 * (prev.1 - cur.1);
        out.push(acc);
        prev = cur;
    }
    for (s, q) in record.states.iter().zip(&out) {
        let deviation = (s.s0 - q).abs();
        if deviation > ACTION_CONSISTENCY_TOL {
            return Err(SchError::ActionInconsistency {
                t: s.t,
                deviation,
                tolerance: ACTION_CONSISTENCY_TOL,
            });
        }
    }
    Ok(out)
}

/// (Ṡ₀, S̈₀) at a recorded state. S̈₀ follows from differentiating the action
/// integrand along the flow; ∂V/∂t is sampled by a central difference so
/// that explicitly time-dependent custom potentials stay supported (for the
/// built-in time-independent models the difference is exactly zero).
fn integrand_with_slope(
    state: &PacketState,
    potential: &PotentialModel,
    params: &PhysicsParams,
) -> Result<(f64, f64)> {
    let rhs = ode_rhs(state, potential, params)?;
    let [_, qddot, _, addot, s0dot] = rhs;
    let PacketState {
        t, q, qdot, a, adot, ..
    } = *state;
    let m = params.mass;
    let hbar = params.hbar;
    let nu = params.nu;
    let pot = potential.eval(q, t)?;

    let dt = 1e-6 * (1.0 + t.abs());
    let v_plus = potential.eval(q, t + dt)?.v;
    let v_minus = potential.eval(q, t - dt)?.v;
    let dv_dt_explicit = (v_plus - v_minus) / (2.0 * dt);

    let mean_phase_rate = match params.variant {
        // d/dt [(ȧ/a − ν/2)] = ä/a − (ȧ/a)²
        MeanActionVariant::Paper => addot / a - (adot / a) * (adot / a),
        // d/dt [(ȧ/a − ν/2) a²] = ä a + ȧ² − ν a ȧ
        MeanActionVariant::Corrected => addot * a + adot * adot - nu * a * adot,
    };
    let s0ddot = (m * qdot * qddot + 0.5 * nu * m * mean_phase_rate
        - pot.dv * qdot
        - dv_dt_explicit
        + hbar * hbar * adot / (2.0 * m * a * a * a))
        / hbar;
    Ok((s0dot, s0ddot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{InitialConditions, PhysicsParams};

    fn natural() -> PhysicsParams {
        PhysicsParams::natural(0.0, MeanActionVariant::Corrected).unwrap()
    }

    fn with_nu(nu: f64) -> PhysicsParams {
        PhysicsParams::natural(nu, MeanActionVariant::Corrected).unwrap()
    }

    #[test]
    fn rhs_of_the_resting_free_packet() {
        // Unit mass and ℏ, no friction, V ≡ 0, packet (q=0, q̇=1, a=1, ȧ=0):
        // q̈ = 0, ä = ℏ²/4 = 0.25, Ṡ₀ = ½ − ¼ = 0.25.
        let state = PacketState {
            t: 0.0,
            q: 0.0,
            qdot: 1.0,
            a: 1.0,
            adot: 0.0,
            s0: 0.0,
        };
        let rhs = ode_rhs(&state, &PotentialModel::Free, &natural()).unwrap();
        assert_eq!(rhs[0], 1.0);
        assert_eq!(rhs[1], 0.0);
        assert_eq!(rhs[2], 0.0);
        assert!((rhs[3] - 0.25).abs() < 1e-15);
        assert!((rhs[4] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn harmonic_equilibrium_width_is_a_fixed_point() {
        // a_eq = √(ℏ/2mω): the quantum pressure exactly balances the trap.
        let params = natural();
        let a_eq = (0.5f64).sqrt();
        let state = PacketState {
            t: 0.0,
            q: 0.0,
            qdot: 0.0,
            a: a_eq,
            adot: 0.0,
            s0: 0.0,
        };
        let v = PotentialModel::harmonic(1.0, 1.0).unwrap();
        let rhs = ode_rhs(&state, &v, &params).unwrap();
        assert!(rhs[3].abs() < 1e-15, "ä = {}", rhs[3]);
    }

    #[test]
    fn friction_term_decelerates_the_center() {
        let state = PacketState {
            t: 0.0,
            q: 0.0,
            qdot: 1.0,
            a: 1.0,
            adot: 0.0,
            s0: 0.0,
        };
        let rhs = ode_rhs(&state, &PotentialModel::Free, &with_nu(0.5)).unwrap();
        assert!((rhs[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_width_is_a_collapse_error() {
        let state = PacketState {
            t: 1.0,
            q: 0.0,
            qdot: 0.0,
            a: -0.5,
            adot: 0.0,
            s0: 0.0,
        };
        match ode_rhs(&state, &PotentialModel::Free, &natural()) {
            Err(SchError::WidthCollapse { t, a }) => {
                assert_eq!(t, 1.0);
                assert_eq!(a, -0.5);
            }
            other => panic!("expected WidthCollapse, got {other:?}"),
        }
    }

    #[test]
    fn force_free_center_moves_ballistically() {
        let ic = InitialConditions::new(0.0, 1.0, 1.0, 0.0).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| 0.2 * k as f64).collect();
        let rec =
            integrate_trajectory(&ic, &PotentialModel::Free, &natural(), &times, 1e-10).unwrap();
        for s in &rec.states {
            assert!((s.q - s.t).abs() < 1e-12, "t={}, q={}", s.t, s.q);
        }
    }

    #[test]
    fn damped_free_center_matches_closed_form() {
        // q̈ + ν q̇ = 0 ⇒ q(t) = (v₀/ν)(1 − e^{−νt}); at ν = 0.5, v₀ = 1,
        // t = 2: q = 2(1 − e^{−1}).
        let ic = InitialConditions::new(0.0, 1.0, 1.0, 0.0).unwrap();
        let rec = integrate_trajectory(
            &ic,
            &PotentialModel::Free,
            &with_nu(0.5),
            &[0.0, 2.0],
            1e-12,
        )
        .unwrap();
        let expected = 2.0 * (1.0 - (-1.0f64).exp());
        assert!(
            (rec.last().q - expected).abs() < 1e-9,
            "q(2) = {}, want {expected}",
            rec.last().q
        );
    }

    #[test]
    fn free_width_spreads_like_the_textbook_gaussian() {
        // a(t) = a₀ √(1 + (ℏt/2ma₀²)²); a(2) = √2 for a₀ = m = ℏ = 1.
        let ic = InitialConditions::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let rec =
            integrate_trajectory(&ic, &PotentialModel::Free, &natural(), &[0.0, 2.0], 1e-12)
                .unwrap();
        assert!(
            (rec.last().a - 2.0f64.sqrt()).abs() < 1e-9,
            "a(2) = {}",
            rec.last().a
        );
    }

    #[test]
    fn initial_phase_offset_is_m_v0_x0_over_hbar() {
        let ic = InitialConditions::new(2.0, 3.0, 1.0, 0.0).unwrap();
        let rec =
            integrate_trajectory(&ic, &PotentialModel::Free, &natural(), &[0.0], 1e-10).unwrap();
        assert_eq!(rec.states[0].s0, 6.0);
    }

    #[test]
    fn free_phase_offset_matches_closed_form() {
        // For the resting free packet Ṡ₀ = −1/(4 + t²), so
        // S₀(t) = −½ arctan(t/2); S₀(2) = −π/8.
        let ic = InitialConditions::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let rec =
            integrate_trajectory(&ic, &PotentialModel::Free, &natural(), &[0.0, 2.0], 1e-12)
                .unwrap();
        let expected = -std::f64::consts::FRAC_PI_8;
        assert!(
            (rec.last().s0 - expected).abs() < 1e-9,
            "S0(2) = {}, want {expected}",
            rec.last().s0
        );
    }

    #[test]
    fn reported_times_are_exact_and_first_state_is_the_ic() {
        let ic = InitialConditions::new(0.5, -0.25, 0.8, 0.1).unwrap();
        let times = [0.0, 0.3, 0.7, 1.0];
        let v = PotentialModel::harmonic(1.0, 1.0).unwrap();
        let rec = integrate_trajectory(&ic, &v, &with_nu(0.3), &times, 1e-10).unwrap();
        assert_eq!(rec.times(), times.to_vec());
        let first = &rec.states[0];
        assert_eq!(first.q, 0.5);
        assert_eq!(first.qdot, -0.25);
        assert_eq!(first.a, 0.8);
        assert_eq!(first.adot, 0.1);
        assert!(rec.stats.accepted > 0);
        assert!(rec.stats.max_error_ratio <= 1.0);
    }

    #[test]
    fn misordered_or_misanchored_times_are_rejected() {
        let ic = InitialConditions::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let v = PotentialModel::Free;
        let p = natural();
        assert!(integrate_trajectory(&ic, &v, &p, &[], 1e-10).is_err());
        assert!(integrate_trajectory(&ic, &v, &p, &[0.1, 0.2], 1e-10).is_err());
        assert!(integrate_trajectory(&ic, &v, &p, &[0.0, 0.2, 0.2], 1e-10).is_err());
        assert!(integrate_trajectory(&ic, &v, &p, &[0.0, 0.2], 0.0).is_err());
    }

    #[test]
    fn width_collapse_during_integration_is_diagnosed() {
        // With ℏ ≈ 0 the quantum pressure cannot stop the width from
        // reaching zero in a stiff trap: a(t) ≈ cos(ωt) hits zero at π/2ω.
        let params = PhysicsParams::new(1.0, 1e-120, 0.0, MeanActionVariant::Corrected).unwrap();
        let ic = InitialConditions::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let v = PotentialModel::harmonic(1.0, 1.0).unwrap();
        match integrate_trajectory(&ic, &v, &params, &[0.0, 3.0], 1e-10) {
            Err(SchError::WidthCollapse { t, .. }) => {
                assert!((t - std::f64::consts::FRAC_PI_2).abs() < 0.1, "t = {t}");
            }
            other => panic!("expected WidthCollapse, got {other:?}"),
        }
    }

    #[test]
    fn potential_failure_during_integration_is_diagnosed() {
        // The potential stops being evaluable at q > 1; the trajectory
        // reaches that point near t = 1 and the model error must surface.
        let v = PotentialModel::custom(|x, _| {
            if x > 1.0 {
                (f64::NAN, 0.0, 0.0)
            } else {
                (0.0, 0.0, 0.0)
            }
        });
        let ic = InitialConditions::new(0.0, 1.0, 1.0, 0.0).unwrap();
        match integrate_trajectory(&ic, &v, &natural(), &[0.0, 2.0], 1e-10) {
            Err(SchError::PotentialEvaluation { q, .. }) => assert!(q > 1.0),
            other => panic!("expected PotentialEvaluation, got {other:?}"),
        }
    }

    #[test]
    fn quadrature_action_confirms_the_integrated_phase() {
        let ic = InitialConditions::new(1.0, 0.0, 0.9, 0.05).unwrap();
        let v = PotentialModel::harmonic(1.0, 1.0).unwrap();
        let times: Vec<f64> = (0..=300).map(|k| 0.01 * k as f64).collect();
        for variant in [MeanActionVariant::Paper, MeanActionVariant::Corrected] {
            let params = PhysicsParams::new(1.0, 1.0, 0.3, variant).unwrap();
            let rec = integrate_trajectory(&ic, &v, &params, &times, 1e-12).unwrap();
            let s = classical_action(&rec, &v, &params).unwrap();
            for (state, sq) in rec.states.iter().zip(&s) {
                assert!(
                    (state.s0 - sq).abs() <= ACTION_CONSISTENCY_TOL,
                    "t={}: ode {} vs quad {}",
                    state.t,
                    state.s0,
                    sq
                );
            }
        }
    }

    #[test]
    fn corrupted_phase_history_fails_the_action_check() {
        let ic = InitialConditions::new(0.0, 1.0, 1.0, 0.0).unwrap();
        let times: Vec<f64> = (0..=50).map(|k| 0.02 * k as f64).collect();
        let params = natural();
        let mut rec =
            integrate_trajectory(&ic, &PotentialModel::Free, &params, &times, 1e-12).unwrap();
        rec.states[30].s0 += 1e-6;
        match classical_action(&rec, &PotentialModel::Free, &params) {
            Err(SchError::ActionInconsistency { deviation, .. }) => {
                assert!(deviation > 1e-7);
            }
            other => panic!("expected ActionInconsistency, got {other:?}"),
        }
    }
}
