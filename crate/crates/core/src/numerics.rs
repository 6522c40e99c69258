//! Uniform 1-D grids, sampled fields and the trapezoidal quadrature shared by
//! every other module.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which physical axis a grid samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Position,
    Momentum,
}

/// Uniform sampling `origin + i * spacing` for `0 <= i < n_points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_points: usize,
    origin: f64,
    spacing: f64,
    axis: AxisKind,
}

impl Grid1D {
    pub fn new(n_points: usize, origin: f64, spacing: f64, axis: AxisKind) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::config(format!(
                "grid needs at least 2 points, got {n_points}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::config(format!(
                "grid spacing must be positive and finite, got {spacing}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::config(format!("grid origin must be finite, got {origin}")));
        }
        Ok(Grid1D {
            n_points,
            origin,
            spacing,
            axis,
        })
    }

    /// Grid whose sample `n_points / 2` sits exactly on `center`.
    pub fn centered(n_points: usize, spacing: f64, center: f64, axis: AxisKind) -> Result<Self> {
        let origin = center - (n_points / 2) as f64 * spacing;
        Self::new(n_points, origin, spacing, axis)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn axis(&self) -> AxisKind {
        self.axis
    }

    /// Coordinate of sample `i`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn coords(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.coord(i))
    }

    /// Last sample coordinate.
    pub fn end(&self) -> f64 {
        self.coord(self.n_points - 1)
    }

    /// `(n_points - 1) * spacing`.
    pub fn extent(&self) -> f64 {
        (self.n_points - 1) as f64 * self.spacing
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.origin && x <= self.end()
    }

    /// Same sample count, spacing and origin, up to rounding in the last bits.
    pub fn matches(&self, other: &Grid1D) -> bool {
        let tol = 1e-12 * self.spacing;
        self.n_points == other.n_points
            && self.axis == other.axis
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
            && (self.origin - other.origin).abs() <= tol * self.n_points as f64
    }

    /// Same grid with every coordinate multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::domain(format!("axis scale factor must be positive, got {factor}")));
        }
        Self::new(self.n_points, self.origin * factor, self.spacing * factor, self.axis)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::config(format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(RealField { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.coords().map(f).collect();
        RealField { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::config(format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.coords().map(f).collect();
        ComplexField { grid, values }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        ComplexField {
            values: vec![Complex64::new(0.0, 0.0); grid.n_points()],
            grid,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// Pointwise `|ψ|²`.
    pub fn modulus_squared(&self) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// Pointwise product with another field on the same grid.
    pub fn multiply(&self, other: &ComplexField) -> Result<ComplexField> {
        if !self.grid.matches(&other.grid) {
            return Err(Error::config("pointwise product of fields on different grids"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(ComplexField {
            grid: self.grid,
            values,
        })
    }

    /// Largest pointwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Trapezoidal rule over uniformly spaced samples.
pub(crate) fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => spacing * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Running trapezoidal integral; the first entry is zero.
pub(crate) fn cumulative_trapezoid(values: &[f64], spacing: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * spacing * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(values.len());
    out
}

/// Trapezoidal integral of the field over its grid extent.
pub fn quadrature(field: &RealField) -> f64 {
    trapezoid(field.values(), field.grid().spacing())
}

/// `∫ |ψ|²` by the trapezoidal rule.
pub fn l2_norm_squared(field: &ComplexField) -> f64 {
    let spacing = field.grid().spacing();
    match field.values() {
        [] | [_] => 0.0,
        [first, inner @ .., last] => {
            spacing
                * (0.5 * (first.norm_sqr() + last.norm_sqr())
                    + inner.iter().map(|v| v.norm_sqr()).sum::<f64>())
        }
    }
}

/// Piecewise-linear interpolation of the field at `x`.
pub fn linear_interpolate(field: &RealField, x: f64) -> Result<f64> {
    let grid = field.grid();
    if !grid.contains(x) {
        return Err(Error::domain(format!(
            "interpolation point {x} outside grid [{}, {}]",
            grid.origin(),
            grid.end()
        )));
    }
    let t = (x - grid.origin()) / grid.spacing();
    let i = (t.floor() as usize).min(grid.n_points() - 2);
    let frac = t - i as f64;
    let v = field.values();
    Ok(v[i] + frac * (v[i + 1] - v[i]))
}
