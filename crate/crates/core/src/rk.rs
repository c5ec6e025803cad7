//! Adaptive Dormand–Prince 5(4) integrator for small fixed-dimension ODE
//! systems.
//!
//! The right-hand side returns a `Result`, so model-level failures (for
//! example a collapsing packet width making the ODE singular) surface as
//! typed errors instead of NaN pollution. The integrator reacts to a failing
//! stage like it reacts to a failed error test: reject, shrink, retry — and
//! reports the model's own error if the step size underflows.

use crate::error::{Result, SchError};

/// Relative/absolute error tolerances for the embedded 5(4) pair.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

/// Counters describing the work performed by an integration.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evaluations: u64,
    /// Largest weighted error norm among accepted steps, in units of the
    /// tolerance (≤ 1 by construction of the step controller).
    pub max_error_ratio: f64,
}

/// Minimum admissible step relative to the local time scale.
const H_FLOOR_REL: f64 = 1e-14;
/// Hard cap on accepted + rejected steps per `advance_to` call.
const MAX_STEPS: u64 = 50_000_000;
/// Step-size safety factor and growth clamps for the I controller.
const SAFETY: f64 = 0.9;
const SHRINK_MIN: f64 = 0.2;
const GROW_MAX: f64 = 5.0;

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
/// Fifth-order weights; row 7 of A equals B (FSAL).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Difference between the fifth- and embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive integrator state for a D-dimensional first-order system.
#[derive(Debug, Clone)]
pub struct Dopri5<const D: usize> {
    t: f64,
    y: [f64; D],
    h: f64,
    /// FSAL cache: f(t, y) at the current state, when known.
    k1: Option<[f64; D]>,
    tol: Tolerances,
    stats: StepStats,
}

impl<const D: usize> Dopri5<D> {
    pub fn new(t0: f64, y0: [f64; D], tol: Tolerances) -> Result<Self> {
        if !t0.is_finite() || y0.iter().any(|v| !v.is_finite()) {
            return Err(SchError::non_finite("Dopri5 initial state"));
        }
        if !(tol.rtol > 0.0 && tol.atol > 0.0) {
            return Err(SchError::invalid("Dopri5 tolerances must be positive"));
        }
        Ok(Self {
            t: t0,
            y: y0,
            h: 0.0,
            k1: None,
            tol,
            stats: StepStats::default(),
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64; D] {
        &self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    /// Weighted RMS error norm with per-component scale atol + rtol·max(|y|).
    fn error_norm(&self, y_new: &[f64; D], err: &[f64; D]) -> f64 {
        let mut acc = 0.0;
        for i in 0..D {
            let sc = self.tol.atol + self.tol.rtol * self.y[i].abs().max(y_new[i].abs());
            let r = err[i] / sc;
            acc += r * r;
        }
        (acc / D as f64).sqrt()
    }

    /// Hairer-style starting step size from the magnitudes of y, f, and an
    /// Euler probe of the second derivative.
    fn initial_step<F>(&mut self, t_target: f64, rhs: &mut F) -> Result<f64>
    where
        F: FnMut(f64, &[f64; D]) -> Result<[f64; D]>,
    {
        let span = t_target - self.t;
        let t0 = self.t;
        let y0 = self.y;
        let f0 = self.eval(rhs, t0, &y0)?;
        let sc: Vec<f64> = (0..D)
            .map(|i| self.tol.atol + self.tol.rtol * y0[i].abs())
            .collect();
        let d0 = rms_scaled(&y0, &sc);
        let d1 = rms_scaled(&f0, &sc);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(span);
        // Probe the curvature with one Euler step.
        let mut y1 = y0;
        for i in 0..D {
            y1[i] += h0 * f0[i];
        }
        let h1 = match self.eval(rhs, t0 + h0, &y1) {
            Ok(f1) => {
                let mut diff = [0.0; D];
                for i in 0..D {
                    diff[i] = f1[i] - f0[i];
                }
                let d2 = rms_scaled(&diff, &sc) / h0;
                let d_max = d1.max(d2);
                if d_max <= 1e-15 {
                    (h0 * 1e-3).max(1e-6)
                } else {
                    (0.01 / d_max).powf(0.2)
                }
            }
            // A failing probe just means the guess was too bold.
            Err(_) => h0 * 1e-2,
        };
        self.k1 = Some(f0);
        Ok((100.0 * h0).min(h1).min(span).max(span * H_FLOOR_REL))
    }

    fn eval<F>(&mut self, rhs: &mut F, t: f64, y: &[f64; D]) -> Result<[f64; D]>
    where
        F: FnMut(f64, &[f64; D]) -> Result<[f64; D]>,
    {
        self.stats.rhs_evaluations += 1;
        let f = rhs(t, y)?;
        if f.iter().any(|v| !v.is_finite()) {
            return Err(SchError::non_finite("ODE right-hand side"));
        }
        Ok(f)
    }

    /// Advance the state to exactly `t_target` (which must not precede the
    /// current time), adapting the step size to the configured tolerances.
    pub fn advance_to<F>(&mut self, t_target: f64, rhs: &mut F) -> Result<()>
    where
        F: FnMut(f64, &[f64; D]) -> Result<[f64; D]>,
    {
        if !t_target.is_finite() {
            return Err(SchError::non_finite("integration target time"));
        }
        if t_target < self.t {
            return Err(SchError::invalid(format!(
                "integration target {t_target} precedes current time {}",
                self.t
            )));
        }
        if t_target == self.t {
            return Ok(());
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(t_target, rhs)?;
        }
        let mut steps: u64 = 0;
        // Retain the model's own diagnosis across rejected stages so that an
        // eventual underflow reports the root cause, not just "stiff".
        let mut last_model_error: Option<SchError> = None;
        while self.t < t_target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(SchError::StiffDynamics {
                    t: self.t,
                    h: self.h,
                });
            }
            let h_floor = H_FLOOR_REL * self.t.abs().max(1.0);
            if self.h < h_floor {
                return Err(last_model_error.unwrap_or(SchError::StiffDynamics {
                    t: self.t,
                    h: self.h,
                }));
            }
            let h = self.h.min(t_target - self.t);
            match self.try_step(h, rhs) {
                Ok(StepOutcome::Accepted { scale }) => {
                    self.h = h * scale;
                }
                Ok(StepOutcome::Rejected { scale }) => {
                    self.stats.rejected += 1;
                    self.h *= scale;
                }
                Err(e) => {
                    self.stats.rejected += 1;
                    last_model_error = Some(e);
                    self.h *= 0.5;
                    // The cached slope is still valid (state unchanged),
                    // so the retry reuses it.
                }
            }
        }
        Ok(())
    }

    fn try_step<F>(&mut self, h: f64, rhs: &mut F) -> Result<StepOutcome>
    where
        F: FnMut(f64, &[f64; D]) -> Result<[f64; D]>,
    {
        let t = self.t;
        let y = self.y;
        let k1 = match self.k1 {
            Some(k) => k,
            None => {
                let k = self.eval(rhs, t, &y)?;
                self.k1 = Some(k);
                k
            }
        };

        let stage = |y0: &[f64; D], coeffs: &[f64], ks: &[&[f64; D]]| -> [f64; D] {
            let mut out = *y0;
            for (c, k) in coeffs.iter().zip(ks) {
                for i in 0..D {
                    out[i] += h * c * k[i];
                }
            }
            out
        };

        let y2 = stage(&y, &A2, &[&k1]);
        let k2 = self.eval(rhs, t + C[1] * h, &y2)?;
        let y3 = stage(&y, &A3, &[&k1, &k2]);
        let k3 = self.eval(rhs, t + C[2] * h, &y3)?;
        let y4 = stage(&y, &A4, &[&k1, &k2, &k3]);
        let k4 = self.eval(rhs, t + C[3] * h, &y4)?;
        let y5 = stage(&y, &A5, &[&k1, &k2, &k3, &k4]);
        let k5 = self.eval(rhs, t + C[4] * h, &y5)?;
        let y6 = stage(&y, &A6, &[&k1, &k2, &k3, &k4, &k5]);
        let k6 = self.eval(rhs, t + C[5] * h, &y6)?;
        // Seventh stage at t + h with the fifth-order solution (FSAL).
        let y_new = stage(&y, &B, &[&k1, &k2, &k3, &k4, &k5, &k6]);
        let k7 = self.eval(rhs, t + h, &y_new)?;

        let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let mut err = [0.0; D];
        for (c, k) in E.iter().zip(ks) {
            for i in 0..D {
                err[i] += h * c * k[i];
            }
        }
        let norm = self.error_norm(&y_new, &err);
        if !norm.is_finite() {
            return Ok(StepOutcome::Rejected { scale: 0.5 });
        }
        let scale = (SAFETY * norm.powf(-0.2)).clamp(SHRINK_MIN, GROW_MAX);
        if norm <= 1.0 {
            self.t = t + h;
            self.y = y_new;
            self.k1 = Some(k7);
            self.stats.accepted += 1;
            self.stats.max_error_ratio = self.stats.max_error_ratio.max(norm);
            Ok(StepOutcome::Accepted { scale })
        } else {
            Ok(StepOutcome::Rejected {
                scale: scale.min(1.0),
            })
        }
    }
}

enum StepOutcome {
    Accepted { scale: f64 },
    Rejected { scale: f64 },
}

fn rms_scaled<const D: usize>(v: &[f64; D], sc: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..D {
        let r = v[i] / sc[i];
        acc += r * r;
    }
    (acc / D as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let mut ode = Dopri5::new(0.0, [1.0], Tolerances::default()).unwrap();
        ode.advance_to(1.0, &mut |_t, y: &[f64; 1]| Ok([-y[0]]))
            .unwrap();
        let exact = (-1.0f64).exp();
        assert!(
            (ode.state()[0] - exact).abs() < 1e-9,
            "got {}, want {exact}",
            ode.state()[0]
        );
        assert!(ode.stats().accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_closes_its_orbit() {
        let mut ode = Dopri5::new(0.0, [1.0, 0.0], Tolerances::default()).unwrap();
        let mut rhs = |_t: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        ode.advance_to(2.0 * std::f64::consts::PI, &mut rhs).unwrap();
        assert!((ode.state()[0] - 1.0).abs() < 1e-8);
        assert!(ode.state()[1].abs() < 1e-8);
    }

    #[test]
    fn repeated_targets_hit_each_time_exactly() {
        let mut ode = Dopri5::new(0.0, [1.0], Tolerances::default()).unwrap();
        let mut rhs = |_t: f64, y: &[f64; 1]| Ok([-2.0 * y[0]]);
        for k in 1..=10 {
            let t = k as f64 * 0.1;
            ode.advance_to(t, &mut rhs).unwrap();
            assert_eq!(ode.time(), t);
            let exact = (-2.0 * t).exp();
            assert!((ode.state()[0] - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let run = |rtol: f64| {
            let tol = Tolerances { rtol, atol: rtol * 1e-2 };
            let mut ode = Dopri5::new(0.0, [0.0, 1.0], tol).unwrap();
            // Stiff-ish driven oscillator with known solution y = sin(5t)/5.
            ode.advance_to(3.0, &mut |_t, y: &[f64; 2]| Ok([y[1], -25.0 * y[0]]))
                .unwrap();
            (ode.state()[0] - (15.0f64).sin() / 5.0).abs()
        };
        let coarse = run(1e-5);
        let fine = run(1e-11);
        assert!(fine < coarse * 1e-2, "coarse={coarse}, fine={fine}");
    }

    #[test]
    fn model_error_surfaces_when_steps_underflow() {
        let mut ode = Dopri5::new(0.0, [1.0], Tolerances::default()).unwrap();
        let mut rhs = |_t: f64, _y: &[f64; 1]| -> Result<[f64; 1]> {
            Err(SchError::WidthCollapse { t: 0.0, a: 0.0 })
        };
        match ode.advance_to(1.0, &mut rhs) {
            Err(SchError::WidthCollapse { .. }) => {}
            other => panic!("expected the model error, got {other:?}"),
        }
    }

    #[test]
    fn backwards_target_is_rejected() {
        let mut ode = Dopri5::new(1.0, [1.0], Tolerances::default()).unwrap();
        assert!(ode
            .advance_to(0.5, &mut |_t, y: &[f64; 1]| Ok([y[0]]))
            .is_err());
    }

    #[test]
    fn non_finite_rhs_is_caught() {
        let mut ode = Dopri5::new(0.0, [1.0], Tolerances::default()).unwrap();
        let mut rhs = |_t: f64, _y: &[f64; 1]| Ok([f64::NAN]);
        assert!(ode.advance_to(1.0, &mut rhs).is_err());
    }
}
