//! Monge (Wasserstein-1) distance between densities on a shared 1-D grid.
//!
//! Two routes are provided. The production path integrates the absolute
//! difference of the cumulative distributions; the quantile route integrates
//! the absolute difference of the generalized inverses and exists to
//! cross-check the first. In one dimension the optimal plan moves mass along
//! the line without reordering, which is why both agree.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{cumulative_trapezoid, trapezoid, Grid1D, RealField};

/// Normalization tolerance for densities.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Largest probability mass allowed in either edge band of a grid.
pub const EDGE_MASS_TOL: f64 = 1e-8;
/// Negative samples down to this magnitude are rounding noise and get clamped.
const NEGATIVE_DUST: f64 = 1e-14;

/// Nonnegative samples integrating to one over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDensity {
    grid: Grid1D,
    values: Vec<f64>,
}

impl ProbabilityDensity {
    /// Wraps samples that are already normalized.
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        let density = Self::checked(grid, values)?;
        let mass = trapezoid(&density.values, grid.spacing());
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::domain(format!("density integrates to {mass}, not 1")));
        }
        Ok(density)
    }

    /// Normalizes nonnegative samples by their trapezoidal integral.
    pub fn from_unnormalized(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        let mut density = Self::checked(grid, values)?;
        let mass = trapezoid(&density.values, grid.spacing());
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::domain(format!("cannot normalize a density of total mass {mass}")));
        }
        density.values.iter_mut().for_each(|v| *v /= mass);
        Ok(density)
    }

    pub fn from_field(field: RealField) -> Result<Self> {
        let grid = *field.grid();
        Self::from_unnormalized(grid, field.into_values())
    }

    fn checked(grid: Grid1D, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::config(format!(
                "density has {} values for a grid of {} points",
                values.len(),
                grid.n_points()
            )));
        }
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::domain(format!("density sample {i} is not finite")));
            }
            if *v < 0.0 {
                if *v < -NEGATIVE_DUST * peak.max(1.0) {
                    return Err(Error::domain(format!("density sample {i} is negative ({v})")));
                }
                *v = 0.0;
            }
        }
        Ok(ProbabilityDensity { grid, values })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.values, self.grid.spacing())
    }

    pub fn mean(&self) -> f64 {
        let g = self.grid;
        let w: Vec<f64> = self.values.iter().enumerate().map(|(i, v)| g.coord(i) * v).collect();
        trapezoid(&w, g.spacing())
    }

    pub fn std_dev(&self) -> f64 {
        let g = self.grid;
        let mean = self.mean();
        let w: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (g.coord(i) - mean).powi(2) * v)
            .collect();
        trapezoid(&w, g.spacing()).sqrt()
    }

    /// Probability mass in the lower and upper edge bands (the outermost
    /// 0.1% of samples, at least two on each side).
    pub fn edge_mass(&self) -> (f64, f64) {
        let n = self.values.len();
        let band = (n / 1000).max(2).min(n);
        let h = self.grid.spacing();
        (
            trapezoid(&self.values[..band], h),
            trapezoid(&self.values[n - band..], h),
        )
    }

    /// Errors when either edge band carries more than [`EDGE_MASS_TOL`].
    pub fn check_tails(&self) -> Result<()> {
        let (lo, hi) = self.edge_mass();
        if lo > EDGE_MASS_TOL || hi > EDGE_MASS_TOL {
            return Err(Error::Truncation { leaked: lo + hi });
        }
        Ok(())
    }

    /// The same density expressed on the axis `p -> factor * p`.
    pub fn rescale_axis(&self, factor: f64) -> Result<Self> {
        let grid = self.grid.scaled(factor)?;
        Ok(ProbabilityDensity {
            grid,
            values: self.values.iter().map(|v| v / factor).collect(),
        })
    }

    pub fn to_field(&self) -> RealField {
        RealField::new(self.grid, self.values.clone()).expect("length matches grid")
    }
}

/// Monotone cumulative distribution sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FiducialCDF {
    grid: Grid1D,
    values: Vec<f64>,
}

impl FiducialCDF {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_field(&self) -> RealField {
        RealField::new(self.grid, self.values.clone()).expect("length matches grid")
    }
}

/// Running trapezoidal integral of the density, clamped to `[0, 1]` and
/// rescaled so the final sample is exactly one.
pub fn cdf(density: &ProbabilityDensity) -> FiducialCDF {
    let mut values = cumulative_trapezoid(density.values(), density.grid().spacing());
    let total = *values.last().expect("grid has at least two points");
    let mut running = 0.0f64;
    for v in values.iter_mut() {
        // max with the running value keeps monotonicity after the division
        running = running.max((*v / total).clamp(0.0, 1.0));
        *v = running;
    }
    if let Some(last) = values.last_mut() {
        *last = 1.0;
    }
    FiducialCDF {
        grid: *density.grid(),
        values,
    }
}

/// Smallest `p` with `F(p) >= λ`, linearly interpolated between the
/// bracketing samples. On a plateau this is the plateau's left edge.
pub fn inverse_cdf(cdf: &FiducialCDF, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!("quantile level {lambda} outside (0, 1)")));
    }
    Ok(quantile_unchecked(cdf, lambda))
}

fn quantile_unchecked(cdf: &FiducialCDF, lambda: f64) -> f64 {
    let v = &cdf.values;
    let g = &cdf.grid;
    let j = v.partition_point(|&f| f < lambda);
    if j == 0 {
        return g.origin();
    }
    if j >= v.len() {
        return g.end();
    }
    let (lo, hi) = (v[j - 1], v[j]);
    g.coord(j - 1) + (lambda - lo) / (hi - lo) * g.spacing()
}

fn check_pair(p1: &ProbabilityDensity, p2: &ProbabilityDensity) -> Result<()> {
    if !p1.grid().matches(p2.grid()) {
        return Err(Error::config("densities are sampled on different grids"));
    }
    p1.check_tails()?;
    p2.check_tails()
}

/// `∫ |F₁(p) − F₂(p)| dp` by the trapezoidal rule. Cells where the two CDFs
/// cross are split at the crossing, so the rule stays exact for the
/// piecewise-linear interpolants.
pub fn monge_distance_cdf(p1: &ProbabilityDensity, p2: &ProbabilityDensity) -> Result<f64> {
    check_pair(p1, p2)?;
    let f1 = cdf(p1);
    let f2 = cdf(p2);
    let diff: Vec<f64> = f1.values.iter().zip(&f2.values).map(|(a, b)| a - b).collect();
    Ok(abs_trapezoid(&diff, p1.grid().spacing()))
}

fn abs_trapezoid(g: &[f64], h: f64) -> f64 {
    g.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if a * b >= 0.0 {
                0.5 * h * (a.abs() + b.abs())
            } else {
                0.5 * h * (a * a + b * b) / (a.abs() + b.abs())
            }
        })
        .sum()
}

/// Midpoint rule for `∫₀¹ |F₁⁻¹(λ) − F₂⁻¹(λ)| dλ` with `n_quantiles` cells.
pub fn monge_distance_quantile(
    p1: &ProbabilityDensity,
    p2: &ProbabilityDensity,
    n_quantiles: usize,
) -> Result<f64> {
    if n_quantiles < 100 {
        return Err(Error::domain(format!("need at least 100 quantiles, got {n_quantiles}")));
    }
    check_pair(p1, p2)?;
    let f1 = cdf(p1);
    let f2 = cdf(p2);
    let step = 1.0 / n_quantiles as f64;
    let sum: f64 = (0..n_quantiles)
        .map(|m| {
            let lambda = (m as f64 + 0.5) * step;
            (quantile_unchecked(&f1, lambda) - quantile_unchecked(&f2, lambda)).abs()
        })
        .sum();
    Ok(sum * step)
}

/// Relative disagreement between two estimates of one distance; `floor` sets
/// the scale below which both count as zero.
pub fn formulation_gap(quantile: f64, cdf: f64, floor: f64) -> f64 {
    (quantile - cdf).abs() / cdf.abs().max(quantile.abs()).max(floor)
}

fn check_scales(d: f64, hbar: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::domain(format!("slit separation must be positive, got {d}")));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::domain(format!("hbar must be positive, got {hbar}")));
    }
    Ok(())
}

/// `⟨|ħk + (ħ/d) sin θ|⟩` over one period of θ, in closed form.
///
/// With `A = ħ/d` and `B = ħ|k|`: `B` when `B >= A`, otherwise
/// `(2/π)[√(A² − B²) + B·arcsin(B/A)]`.
pub fn sinusoidal_average(k: f64, d: f64, hbar: f64) -> Result<f64> {
    check_scales(d, hbar)?;
    if !k.is_finite() {
        return Err(Error::domain(format!("phase kick must be finite, got {k}")));
    }
    let amp = hbar / d;
    let offset = hbar * k.abs();
    if offset >= amp {
        return Ok(offset);
    }
    let ratio = offset / amp;
    Ok(2.0 / PI * (amp * (1.0 - ratio * ratio).sqrt() + offset * ratio.asin()))
}

/// Composite Simpson estimate of the same average, split at the sign
/// changes of the integrand so every panel is smooth.
pub fn sinusoidal_average_by_quadrature(k: f64, d: f64, hbar: f64, panels: usize) -> Result<f64> {
    check_scales(d, hbar)?;
    let amp = hbar / d;
    let offset = hbar * k;
    let mut breaks = vec![0.0, 2.0 * PI];
    if offset.abs() < amp {
        let root = (-offset / amp).asin();
        breaks.push(root.rem_euclid(2.0 * PI));
        breaks.push((PI - root).rem_euclid(2.0 * PI));
    }
    breaks.sort_by(f64::total_cmp);
    let f = |t: f64| (offset + amp * t.sin()).abs();
    let panels = panels.max(2) + panels % 2;
    let total: f64 = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let h = (w[1] - w[0]) / panels as f64;
            let inner: f64 = (1..panels)
                .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(w[0] + i as f64 * h))
                .sum();
            h / 3.0 * (f(w[0]) + f(w[1]) + inner)
        })
        .sum();
    Ok(total / (2.0 * PI))
}

/// Smallest possible disturbance `2ħ/(πd)`.
pub fn minimum_disturbance(d: f64, hbar: f64) -> Result<f64> {
    check_scales(d, hbar)?;
    Ok(2.0 * hbar / (PI * d))
}
