//! Uniform spatial grids and the real/complex fields that live on them.
//!
//! Two grid conventions are supported:
//! * `Bounded` — endpoints included, dx = (x_max − x_min)/(n − 1); used by
//!   quadrature, residual checks and the propagator.
//! * `Periodic` — right endpoint excluded, dx = (x_max − x_min)/n; used by the
//!   split-step Fourier oracle.

use num_complex::Complex64;

use crate::error::{Result, SchError};

pub const MIN_GRID_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Bounded,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub kind: GridKind,
}

impl Grid {
    fn validate(x_min: f64, x_max: f64, n: usize) -> Result<()> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(SchError::invalid("grid bounds must be finite"));
        }
        if x_max <= x_min {
            return Err(SchError::invalid(format!(
                "grid needs x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n < MIN_GRID_POINTS {
            return Err(SchError::invalid(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {n}"
            )));
        }
        Ok(())
    }

    pub fn bounded(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        Self::validate(x_min, x_max, n)?;
        Ok(Grid {
            x_min,
            x_max,
            n,
            kind: GridKind::Bounded,
        })
    }

    pub fn periodic(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        Self::validate(x_min, x_max, n)?;
        Ok(Grid {
            x_min,
            x_max,
            n,
            kind: GridKind::Periodic,
        })
    }

    /// Bounded grid sized so that a Gaussian packet stays numerically interior:
    /// the domain covers the center range extended by 8 widths on each side,
    /// putting the boundary density below ~1e−12 of the peak (e^{−32}).
    pub fn for_packet(q_lo: f64, q_hi: f64, a_max: f64, n: usize) -> Result<Self> {
        if !(a_max.is_finite() && a_max > 0.0) {
            return Err(SchError::invalid("packet width bound must be positive"));
        }
        let (lo, hi) = if q_lo <= q_hi { (q_lo, q_hi) } else { (q_hi, q_lo) };
        Grid::bounded(lo - 8.0 * a_max, hi + 8.0 * a_max, n)
    }

    pub fn dx(&self) -> f64 {
        match self.kind {
            GridKind::Bounded => (self.x_max - self.x_min) / (self.n as f64 - 1.0),
            GridKind::Periodic => (self.x_max - self.x_min) / self.n as f64,
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Trapezoid quadrature weight of point `i` (periodic grids weight every
    /// point equally; the excluded right endpoint is identified with the left).
    pub fn weight(&self, i: usize) -> f64 {
        match self.kind {
            GridKind::Bounded if i == 0 || i == self.n - 1 => 0.5 * self.dx(),
            _ => self.dx(),
        }
    }

    /// Two grids are interchangeable for field arithmetic if bounds, size and
    /// kind agree to tight relative precision.
    pub fn compatible(&self, other: &Grid) -> bool {
        let scale = (self.x_max - self.x_min).abs().max(1.0);
        self.n == other.n
            && self.kind == other.kind
            && (self.x_min - other.x_min).abs() <= 1e-12 * scale
            && (self.x_max - other.x_max).abs() <= 1e-12 * scale
    }
}

/// Real-valued samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(SchError::GridMismatch(format!(
                "field has {} samples for a {}-point grid",
                values.len(),
                grid.n
            )));
        }
        Ok(RealField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n).map(|i| f(grid.point(i))).collect();
        RealField { grid, values }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Complex-valued samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(SchError::GridMismatch(format!(
                "field has {} samples for a {}-point grid",
                values.len(),
                grid.n
            )));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n).map(|i| f(grid.point(i))).collect();
        ComplexField { grid, values }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Pointwise |ψ|².
    pub fn abs_squared(&self) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }
}
