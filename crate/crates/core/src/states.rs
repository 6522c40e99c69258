//! Slit profiles, the twin-slit state `2^{-1/2}[φ_a(q) + φ_a(q − d)]` and the
//! closed-form momentum densities that go with it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{l2_norm_squared, ComplexField, Grid1D};
use crate::transport::ProbabilityDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `(2πa²)^{-1/4} exp(−q²/4a²)`
    Gaussian,
    /// Constant amplitude on `|q| < a√3`, which has the same second moment.
    Tophat,
}

/// Single-slit amplitude profile of width `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitProfile {
    kind: ProfileKind,
    a: f64,
}

impl SlitProfile {
    pub fn new(kind: ProfileKind, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::config(format!("slit width a must be positive, got {a}")));
        }
        Ok(SlitProfile { kind, a })
    }

    pub fn gaussian(a: f64) -> Result<Self> {
        Self::new(ProfileKind::Gaussian, a)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    fn tophat_half_width(&self) -> f64 {
        self.a * 3f64.sqrt()
    }

    /// Analytic amplitude `φ_a(q)` (real and even).
    pub fn amplitude(&self, q: f64) -> f64 {
        match self.kind {
            ProfileKind::Gaussian => {
                (2.0 * PI * self.a * self.a).powf(-0.25) * (-q * q / (4.0 * self.a * self.a)).exp()
            }
            ProfileKind::Tophat => {
                let w = self.tophat_half_width();
                if q.abs() < w {
                    (2.0 * w).sqrt().recip()
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed-form `E(p) = |φ̃_a(p)|²`, unit integral over the real line.
    pub fn momentum_envelope(&self, p: f64, hbar: f64) -> f64 {
        match self.kind {
            ProfileKind::Gaussian => {
                let a = self.a;
                (2.0 / PI).sqrt() * a / hbar * (-2.0 * a * a * p * p / (hbar * hbar)).exp()
            }
            ProfileKind::Tophat => {
                let w = self.tophat_half_width();
                let x = p * w / hbar;
                let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                w / (PI * hbar) * sinc * sinc
            }
        }
    }
}

/// Twin-slit preparation: slits at `q = 0` and `q = d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinSlitSpec {
    profile: SlitProfile,
    d: f64,
    hbar: f64,
}

impl TwinSlitSpec {
    pub fn new(profile: SlitProfile, d: f64, hbar: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::config(format!("slit separation d must be positive, got {d}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::config(format!("hbar must be positive, got {hbar}")));
        }
        Ok(TwinSlitSpec { profile, d, hbar })
    }

    /// Gaussian slits with `ħ = 1`.
    pub fn gaussian(a: f64, d: f64) -> Result<Self> {
        Self::new(SlitProfile::gaussian(a)?, d, 1.0)
    }

    pub fn profile(&self) -> &SlitProfile {
        &self.profile
    }

    pub fn a(&self) -> f64 {
        self.profile.a
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Separation-to-width ratio; the small-`a` analysis assumes it is large.
    pub fn d_over_a(&self) -> f64 {
        self.d / self.profile.a
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::new(SlitProfile::new(self.profile.kind, a)?, self.d, self.hbar)
    }
}

fn check_position_coverage(grid: &Grid1D, lo: f64, hi: f64) -> Result<()> {
    if grid.origin() > lo || grid.end() < hi {
        return Err(Error::config(format!(
            "position grid [{}, {}] does not cover [{lo}, {hi}]",
            grid.origin(),
            grid.end()
        )));
    }
    Ok(())
}

fn check_momentum_coverage(spec: &TwinSlitSpec, grid: &Grid1D) -> Result<()> {
    let reach = 8.0 * spec.hbar / (2.0 * spec.a());
    if grid.origin() > -reach || grid.end() < reach {
        return Err(Error::config(format!(
            "momentum grid [{}, {}] does not cover the envelope ±{reach}",
            grid.origin(),
            grid.end()
        )));
    }
    Ok(())
}

fn normalize(mut field: ComplexField) -> Result<(ComplexField, f64)> {
    let norm2 = l2_norm_squared(&field);
    if !(norm2 > 0.0 && norm2.is_finite()) {
        return Err(Error::config("profile is not resolved by the grid (zero norm)"));
    }
    field.scale(Complex64::new(norm2.sqrt().recip(), 0.0));
    Ok((field, norm2))
}

/// Samples `φ_a(q)` centered at `q = 0`, renormalized to unit norm.
pub fn build_slit_profile(profile: &SlitProfile, grid: &Grid1D) -> Result<ComplexField> {
    let margin = 10.0 * profile.a;
    check_position_coverage(grid, -margin, margin)?;
    let field = ComplexField::from_fn(*grid, |q| Complex64::new(profile.amplitude(q), 0.0));
    Ok(normalize(field)?.0)
}

/// Twin-slit state together with the squared norm of the analytic
/// (unnormalized) superposition, `1 + ∫φ_a(q)φ_a(q − d) dq`.
pub fn build_twin_slit_with_norm(spec: &TwinSlitSpec, grid: &Grid1D) -> Result<(ComplexField, f64)> {
    let margin = 10.0 * spec.a();
    check_position_coverage(grid, -margin, spec.d + margin)?;
    let profile = spec.profile;
    let d = spec.d;
    let field = ComplexField::from_fn(*grid, |q| {
        Complex64::new(
            std::f64::consts::FRAC_1_SQRT_2 * (profile.amplitude(q) + profile.amplitude(q - d)),
            0.0,
        )
    });
    normalize(field)
}

pub fn build_twin_slit(spec: &TwinSlitSpec, grid: &Grid1D) -> Result<ComplexField> {
    Ok(build_twin_slit_with_norm(spec, grid)?.0)
}

/// `E(p)` on the given grid, normalized by quadrature.
pub fn envelope(spec: &TwinSlitSpec, momentum_grid: &Grid1D) -> Result<ProbabilityDensity> {
    check_momentum_coverage(spec, momentum_grid)?;
    let values = momentum_grid
        .coords()
        .map(|p| spec.profile.momentum_envelope(p, spec.hbar))
        .collect();
    ProbabilityDensity::from_unnormalized(*momentum_grid, values)
}

/// `(1 + cos(pd/ħ)) E(p)` on the given grid, normalized by quadrature.
pub fn analytic_momentum_density_initial(
    spec: &TwinSlitSpec,
    momentum_grid: &Grid1D,
) -> Result<ProbabilityDensity> {
    let fringe_step = 2.0 * PI * spec.hbar / (16.0 * spec.d);
    if momentum_grid.spacing() >= fringe_step {
        return Err(Error::config(format!(
            "momentum spacing {} does not resolve fringes (needs < {fringe_step})",
            momentum_grid.spacing()
        )));
    }
    check_momentum_coverage(spec, momentum_grid)?;
    let values = momentum_grid
        .coords()
        .map(|p| (1.0 + (p * spec.d / spec.hbar).cos()) * spec.profile.momentum_envelope(p, spec.hbar))
        .collect();
    ProbabilityDensity::from_unnormalized(*momentum_grid, values)
}
