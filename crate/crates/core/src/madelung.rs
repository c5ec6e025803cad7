//! Polar (Madelung) decomposition ψ = √ρ · e^{iS} of sampled complex fields.
//!
//! The phase is returned as a continuous (unwrapped) representative:
//! unwrapping starts at the amplitude peak, where the phase is most
//! trustworthy, and proceeds outward choosing at each neighbor the 2π
//! representative nearest to the previous point. Below the amplitude floor
//! the phase carries the last reliable value forward, so downstream
//! logarithms never see branch noise from numerically empty tails.

use crate::error::{Result, SchError};
use crate::grid::{ComplexField, RealField};
use crate::quad::trapezoid_integral;

/// Amplitudes below this floor carry no usable phase information.
pub const AMPLITUDE_FLOOR: f64 = 1e-150;

/// Density and unwrapped phase of a complex field.
#[derive(Debug, Clone)]
pub struct MadelungPair {
    /// |ψ|², renormalized to unit integral over the grid.
    pub rho: RealField,
    /// Continuous phase representative (dimensionless).
    pub s: RealField,
}

/// Decompose a field into normalized density and unwrapped phase.
pub fn madelung_decompose(field: &ComplexField) -> Result<MadelungPair> {
    if !field.is_finite() {
        return Err(SchError::non_finite("madelung_decompose input"));
    }
    let n = field.grid.n;
    let amp: Vec<f64> = field.values.iter().map(|z| z.norm()).collect();
    let (i_peak, peak) = amp
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    if peak == 0.0 {
        return Err(SchError::NullField);
    }

    let mut rho: Vec<f64> = amp.iter().map(|&a| a * a).collect();
    let rho_field = RealField::new(field.grid, rho.clone())?;
    let total = trapezoid_integral(&rho_field)?;
    if !(total > 0.0) {
        // An amplitude so small that |ψ|² underflows everywhere carries no
        // density information either.
        return Err(SchError::NullField);
    }
    for r in &mut rho {
        *r /= total;
    }

    let raw: Vec<f64> = field.values.iter().map(|z| z.arg()).collect();
    let mut s = vec![0.0; n];
    s[i_peak] = raw[i_peak];
    // Unwrap outward from the peak in both directions.
    let mut carry = s[i_peak];
    for i in (i_peak + 1)..n {
        carry = continue_phase(carry, raw[i], amp[i]);
        s[i] = carry;
    }
    carry = s[i_peak];
    for i in (0..i_peak).rev() {
        carry = continue_phase(carry, raw[i], amp[i]);
        s[i] = carry;
    }

    Ok(MadelungPair {
        rho: RealField::new(field.grid, rho)?,
        s: RealField::new(field.grid, s)?,
    })
}

/// Nearest-2π-representative continuation; amplitudes under the floor keep
/// the previous phase.
fn continue_phase(prev: f64, raw: f64, amp: f64) -> f64 {
    if amp < AMPLITUDE_FLOOR {
        prev
    } else {
        let k = ((prev - raw) / std::f64::consts::TAU).round();
        raw + std::f64::consts::TAU * k
    }
}
