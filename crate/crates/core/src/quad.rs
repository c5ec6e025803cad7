//! Quadrature: composite trapezoid sums on grids, ρ-weighted expectations,
//! and Gauss–Legendre nodes for the velocity integrals of the propagator.

use num_complex::Complex64;

use crate::error::{Result, SchError};
use crate::grid::{ComplexField, RealField};

/// A density whose integral falls below this floor cannot normalize an
/// expectation value.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Composite trapezoid integral of a real field over its grid.
pub fn trapezoid_integral(f: &RealField) -> Result<f64> {
    if !f.is_finite() {
        return Err(SchError::non_finite("trapezoid_integral input"));
    }
    Ok(f.values
        .iter()
        .enumerate()
        .map(|(i, v)| f.grid.weight(i) * v)
        .sum())
}

/// Composite trapezoid integral of a complex field over its grid.
pub fn trapezoid_integral_complex(f: &ComplexField) -> Result<Complex64> {
    if !f.is_finite() {
        return Err(SchError::non_finite("trapezoid_integral_complex input"));
    }
    Ok(f.values
        .iter()
        .enumerate()
        .map(|(i, v)| f.grid.weight(i) * v)
        .sum())
}

/// ρ-weighted mean ⟨f⟩ = ∫ρ f dx / ∫ρ dx over a shared grid.
///
/// The density must be pointwise non-negative (up to roundoff) and have a
/// non-vanishing integral.
pub fn expectation(rho: &RealField, f: &RealField) -> Result<f64> {
    if !rho.grid.compatible(&f.grid) {
        return Err(SchError::GridMismatch(
            "expectation: density and observable live on different grids".into(),
        ));
    }
    if !rho.is_finite() || !f.is_finite() {
        return Err(SchError::non_finite("expectation input"));
    }
    let peak = rho.values.iter().cloned().fold(0.0_f64, f64::max);
    if rho.values.iter().any(|&r| r < -1e-12 * peak.max(1.0)) {
        return Err(SchError::invalid(
            "expectation: density has negative samples beyond roundoff",
        ));
    }
    let mut norm = 0.0;
    let mut weighted = 0.0;
    for i in 0..rho.grid.n {
        let w = rho.grid.weight(i) * rho.values[i];
        norm += w;
        weighted += w * f.values[i];
    }
    if norm < DENSITY_FLOOR {
        return Err(SchError::VanishingDensity {
            norm,
            floor: DENSITY_FLOOR,
        });
    }
    Ok(weighted / norm)
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1],
/// computed by Newton iteration on the Legendre recurrence. Deterministic and
/// accurate to roundoff for the desk-scale n used here.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(SchError::invalid("gauss_legendre needs n >= 2"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// (P_n(x), P_n′(x)) via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}
