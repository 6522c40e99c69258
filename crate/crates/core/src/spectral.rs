//! Continuum-normalized transform between position and momentum representations.
//!
//! The forward kernel is `(2πħ)^{-1/2} exp(-i p q / ħ)`. On conjugate grids
//! (`Δp Δq = 2πħ / n`) the sampled sum factorizes into a pre-ramp, a plain DFT
//! and a post-ramp, so the output approximates the continuum integral rather
//! than the origin-at-zero discrete transform.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::numerics::{AxisKind, ComplexField, Grid1D};

/// Paired position/momentum grids plus cached FFT kernels.
#[derive(Clone)]
pub struct TransformPlan {
    position_grid: Grid1D,
    momentum_grid: Grid1D,
    hbar: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TransformPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformPlan")
            .field("position_grid", &self.position_grid)
            .field("momentum_grid", &self.momentum_grid)
            .field("hbar", &self.hbar)
            .finish()
    }
}

impl TransformPlan {
    /// Builds the conjugate momentum grid for `position_grid`; `p = 0` sits at
    /// index `n / 2`.
    pub fn new(position_grid: Grid1D, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::config(format!("hbar must be positive, got {hbar}")));
        }
        if position_grid.axis() != AxisKind::Position {
            return Err(Error::config("transform plan needs a position-axis grid"));
        }
        let n = position_grid.n_points();
        let dp = 2.0 * PI * hbar / (n as f64 * position_grid.spacing());
        let momentum_grid = Grid1D::centered(n, dp, 0.0, AxisKind::Momentum)?;
        let mut planner = FftPlanner::new();
        Ok(TransformPlan {
            position_grid,
            momentum_grid,
            hbar,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    /// Position grid of `n_points` samples with spacing `extent / n_points`,
    /// centered on `center`.
    pub fn with_extent(n_points: usize, extent: f64, center: f64, hbar: f64) -> Result<Self> {
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::config(format!("position extent must be positive, got {extent}")));
        }
        let grid = Grid1D::centered(n_points, extent / n_points as f64, center, AxisKind::Position)?;
        Self::new(grid, hbar)
    }

    pub fn position_grid(&self) -> &Grid1D {
        &self.position_grid
    }

    pub fn momentum_grid(&self) -> &Grid1D {
        &self.momentum_grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Sampling adequacy for a twin-slit state with slit width `a` and
    /// separation `d`: the momentum grid must reach `±8·ħ/(2a)` and resolve the
    /// fringe period `2πħ/d` with at least 16 samples.
    pub fn check_sampling(&self, a: f64, d: f64) -> Result<()> {
        let envelope_reach = 8.0 * self.hbar / (2.0 * a);
        let half_extent = self.momentum_grid.origin().abs().min(self.momentum_grid.end().abs());
        if half_extent < envelope_reach {
            return Err(Error::config(format!(
                "momentum grid reaches ±{half_extent:.6e} but the envelope needs ±{envelope_reach:.6e}; \
                 refine the position spacing"
            )));
        }
        let fringe_step = 2.0 * PI * self.hbar / d / 16.0;
        let dp = self.momentum_grid.spacing();
        if dp >= fringe_step {
            return Err(Error::config(format!(
                "momentum spacing {dp:.6e} does not resolve fringes (needs < {fringe_step:.6e}); \
                 enlarge the position extent"
            )));
        }
        Ok(())
    }

    /// `ψ̃(p_j) ≈ (2πħ)^{-1/2} Σ_i exp(-i p_j q_i / ħ) ψ(q_i) Δq`.
    pub fn to_momentum(&self, psi_q: &ComplexField) -> Result<ComplexField> {
        if !psi_q.grid().matches(&self.position_grid) {
            return Err(Error::config("field is not sampled on the plan's position grid"));
        }
        let n = self.position_grid.n_points();
        let half = n / 2;
        let mut buf: Vec<Complex64> = psi_q
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| v * unit_phase(2.0 * PI * ((half * i) % n) as f64 / n as f64))
            .collect();
        self.forward.process(&mut buf);

        let q0 = self.position_grid.origin();
        let scale = self.position_grid.spacing() / (2.0 * PI * self.hbar).sqrt();
        for (j, v) in buf.iter_mut().enumerate() {
            let p = self.momentum_grid.coord(j);
            *v *= unit_phase(-p * q0 / self.hbar) * scale;
        }
        ComplexField::new(self.momentum_grid, buf)
    }

    /// Exact inverse of [`TransformPlan::to_momentum`] on the sampled grids.
    pub fn to_position(&self, psi_p: &ComplexField) -> Result<ComplexField> {
        if !psi_p.grid().matches(&self.momentum_grid) {
            return Err(Error::config("field is not sampled on the plan's momentum grid"));
        }
        let n = self.position_grid.n_points();
        let half = n / 2;
        let q0 = self.position_grid.origin();
        let mut buf: Vec<Complex64> = psi_p
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| v * unit_phase(self.momentum_grid.coord(j) * q0 / self.hbar))
            .collect();
        self.inverse.process(&mut buf);

        let scale = self.momentum_grid.spacing() / (2.0 * PI * self.hbar).sqrt();
        for (i, v) in buf.iter_mut().enumerate() {
            *v *= unit_phase(-2.0 * PI * ((half * i) % n) as f64 / n as f64) * scale;
        }
        ComplexField::new(self.position_grid, buf)
    }
}

#[inline]
fn unit_phase(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::l2_norm_squared;

    fn gaussian(a: f64, center: f64) -> impl Fn(f64) -> Complex64 {
        let norm = (2.0 * PI * a * a).powf(-0.25);
        move |q| Complex64::new(norm * (-(q - center).powi(2) / (4.0 * a * a)).exp(), 0.0)
    }

    fn gaussian_plan() -> TransformPlan {
        TransformPlan::with_extent(4096, 24.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn conjugate_grid_condition() {
        let plan = TransformPlan::with_extent(1024, 40.0, 0.5, 1.0).unwrap();
        let dq = plan.position_grid().spacing();
        let dp = plan.momentum_grid().spacing();
        assert!((dp * dq * 1024.0 - 2.0 * PI).abs() < 1e-12);
        assert_eq!(plan.momentum_grid().coord(512), 0.0);
        assert_eq!(plan.position_grid().coord(512), 0.5);
    }

    #[test]
    fn gaussian_maps_to_closed_form() {
        let a = 1.0;
        let plan = gaussian_plan();
        let psi = ComplexField::from_fn(*plan.position_grid(), gaussian(a, 0.0));
        let out = plan.to_momentum(&psi).unwrap();
        // (2a²/π)^{1/4} exp(-a² p²), σ_p = 1/(2a)
        let amp = (2.0 * a * a / PI).powf(0.25);
        let exact = ComplexField::from_fn(*plan.momentum_grid(), |p| Complex64::new(amp * (-a * a * p * p).exp(), 0.0));
        assert!(out.max_abs_diff(&exact) < 1e-8);
    }

    #[test]
    fn gaussian_matches_direct_quadrature() {
        // Independent check of the phase conventions: direct sum of the kernel
        // at a handful of momenta, off-center so the ramps matter.
        let plan = TransformPlan::with_extent(4096, 24.0, 1.3, 1.0).unwrap();
        let psi = ComplexField::from_fn(*plan.position_grid(), gaussian(1.0, 1.7));
        let out = plan.to_momentum(&psi).unwrap();
        let mg = plan.momentum_grid();
        let qg = plan.position_grid();
        for step in 0..20 {
            let j = mg.n_points() / 2 - 10 + step;
            let p = mg.coord(j);
            let direct: Complex64 = qg
                .coords()
                .zip(psi.values())
                .map(|(q, v)| v * unit_phase(-p * q) * qg.spacing())
                .sum::<Complex64>()
                / (2.0 * PI).sqrt();
            assert!((direct - out.values()[j]).norm() < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn round_trip_and_zero() {
        let plan = gaussian_plan();
        let psi = ComplexField::from_fn(*plan.position_grid(), gaussian(1.0, 0.0));
        let back = plan.to_position(&plan.to_momentum(&psi).unwrap()).unwrap();
        assert!(back.max_abs_diff(&psi) < 1e-10);

        let zero = ComplexField::zeros(*plan.position_grid());
        let z = plan.to_momentum(&zero).unwrap();
        assert!(z.values().iter().all(|v| v.norm() == 0.0));
        let zp = plan.to_position(&ComplexField::zeros(*plan.momentum_grid())).unwrap();
        assert!(zp.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn parseval() {
        let plan = gaussian_plan();
        let psi = ComplexField::from_fn(*plan.position_grid(), |q| {
            gaussian(0.7, -2.0)(q) * unit_phase(3.0 * q) + gaussian(0.4, 3.0)(q) * 0.5
        });
        let before = l2_norm_squared(&psi);
        let after = l2_norm_squared(&plan.to_momentum(&psi).unwrap());
        assert!(((after - before) / before).abs() < 1e-10);
    }

    #[test]
    fn linearity() {
        let plan = TransformPlan::with_extent(2048, 20.0, 0.0, 1.0).unwrap();
        let f = ComplexField::from_fn(*plan.position_grid(), gaussian(0.5, -1.0));
        let g = ComplexField::from_fn(*plan.position_grid(), |q| gaussian(1.0, 2.0)(q) * unit_phase(q));
        let (alpha, beta) = (Complex64::new(0.3, -2.0), Complex64::new(-1.1, 0.4));
        let combo = ComplexField::new(
            *plan.position_grid(),
            f.values().iter().zip(g.values()).map(|(x, y)| alpha * x + beta * y).collect(),
        )
        .unwrap();
        let lhs = plan.to_momentum(&combo).unwrap();
        let ft = plan.to_momentum(&f).unwrap();
        let gt = plan.to_momentum(&g).unwrap();
        let rhs = ComplexField::new(
            *plan.momentum_grid(),
            ft.values().iter().zip(gt.values()).map(|(x, y)| alpha * x + beta * y).collect(),
        )
        .unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn shift_leaves_density_invariant() {
        let plan = gaussian_plan();
        let a = ComplexField::from_fn(*plan.position_grid(), gaussian(0.8, 0.0));
        let b = ComplexField::from_fn(*plan.position_grid(), gaussian(0.8, 2.37));
        let da = plan.to_momentum(&a).unwrap().modulus_squared();
        let db = plan.to_momentum(&b).unwrap().modulus_squared();
        let worst = da.values().iter().zip(db.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-12);
    }

    #[test]
    fn modulation_translates_density() {
        // k chosen as a whole number of momentum steps so the comparison is sample-exact.
        let plan = gaussian_plan();
        let dp = plan.momentum_grid().spacing();
        let shift_steps = 19;
        let k = shift_steps as f64 * dp;
        let base = ComplexField::from_fn(*plan.position_grid(), gaussian(1.0, 0.0));
        let kicked = ComplexField::from_fn(*plan.position_grid(), |q| gaussian(1.0, 0.0)(q) * unit_phase(k * q));
        let d0 = plan.to_momentum(&base).unwrap().modulus_squared();
        let d1 = plan.to_momentum(&kicked).unwrap().modulus_squared();
        let n = d0.values().len();
        for j in shift_steps..n {
            assert!((d1.values()[j] - d0.values()[j - shift_steps]).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_is_config_error() {
        let plan = gaussian_plan();
        let other = TransformPlan::with_extent(4096, 30.0, 0.0, 1.0).unwrap();
        let psi = ComplexField::zeros(*other.position_grid());
        assert!(matches!(plan.to_momentum(&psi), Err(Error::Config(_))));
        let psi_p = ComplexField::zeros(*other.momentum_grid());
        assert!(matches!(plan.to_position(&psi_p), Err(Error::Config(_))));
    }

    #[test]
    fn sampling_rules() {
        // a = 0.01: envelope needs ±400; d = 1: spacing below 2π/16.
        let good = TransformPlan::with_extent(1 << 16, 40.0, 0.5, 1.0).unwrap();
        assert!(good.check_sampling(0.01, 1.0).is_ok());
        let coarse = TransformPlan::with_extent(1 << 12, 40.0, 0.5, 1.0).unwrap();
        assert!(matches!(coarse.check_sampling(0.01, 1.0), Err(Error::Config(_))));
        let short = TransformPlan::with_extent(1 << 16, 10.0, 0.5, 1.0).unwrap();
        assert!(matches!(short.check_sampling(0.01, 1.0), Err(Error::Config(_))));
    }
}
