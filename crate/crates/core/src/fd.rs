//! Central finite-difference stencils on uniform grids.
//!
//! Second- and sixth-order second derivatives plus a second-order first
//! derivative. Interior points use symmetric stencils; points too close to a
//! bounded edge fall back to the nearest interior stencil (evaluated at a
//! shifted center), which keeps the output defined everywhere while the
//! callers mask out the far tails anyway. Periodic grids wrap instead.

use crate::error::{Result, SchError};
use crate::grid::{GridKind, RealField};

/// Second derivative by the 3-point stencil (f₋₁ − 2f₀ + f₊₁)/h², O(h²).
pub fn second_derivative(f: &RealField) -> Result<RealField> {
    stencil_apply(f, &[1.0, -2.0, 1.0], 2)
}

/// Second derivative by the 7-point stencil, O(h⁶). Used where the O(h²)
/// truncation error would drown the quantity under test.
pub fn second_derivative_o6(f: &RealField) -> Result<RealField> {
    let c = [
        1.0 / 90.0,
        -3.0 / 20.0,
        1.5,
        -49.0 / 18.0,
        1.5,
        -3.0 / 20.0,
        1.0 / 90.0,
    ];
    stencil_apply(f, &c, 2)
}

/// First derivative by the symmetric 2-point stencil (f₊₁ − f₋₁)/2h, O(h²).
pub fn first_derivative(f: &RealField) -> Result<RealField> {
    stencil_apply(f, &[-0.5, 0.0, 0.5], 1)
}

/// Apply a symmetric stencil with h^power normalization.
fn stencil_apply(f: &RealField, coeffs: &[f64], power: i32) -> Result<RealField> {
    let n = f.grid.n;
    let half = coeffs.len() / 2;
    if n < coeffs.len() {
        return Err(SchError::invalid(format!(
            "finite difference needs at least {} points, grid has {n}",
            coeffs.len()
        )));
    }
    if !f.is_finite() {
        return Err(SchError::non_finite("finite-difference input"));
    }
    let scale = f.grid.dx().powi(power).recip();
    let mut out = vec![0.0; n];
    match f.grid.kind {
        GridKind::Periodic => {
            for i in 0..n {
                let mut acc = 0.0;
                for (k, &c) in coeffs.iter().enumerate() {
                    let j = (i + n + k - half) % n;
                    acc += c * f.values[j];
                }
                out[i] = acc * scale;
            }
        }
        GridKind::Bounded => {
            for i in 0..n {
                // Clamp the stencil center into the interior near the edges.
                let center = i.clamp(half, n - 1 - half);
                let mut acc = 0.0;
                for (k, &c) in coeffs.iter().enumerate() {
                    acc += c * f.values[center + k - half];
                }
                out[i] = acc * scale;
            }
        }
    }
    RealField::new(f.grid, out)
}
