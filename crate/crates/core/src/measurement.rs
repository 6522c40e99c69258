//! Which-slit measurement operators `O_ξ(q)`, outcomes and the resulting
//! momentum density.
//!
//! Which-slit operators vanish around the slit at `q = d` and keep the slit at
//! `q = 0`. For small slit width only the imaginary part of the linear
//! coefficient of `ln O_ξ` survives in the final momentum density, as a
//! translation by `ħ·Im(α)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{l2_norm_squared, ComplexField, Grid1D};
use crate::spectral::TransformPlan;
use crate::transport::ProbabilityDensity;

/// Outcomes with probability below this are treated as impossible.
pub const IMPOSSIBLE_OUTCOME_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementOperator {
    /// No measurement: `O = 1`.
    Identity,
    /// Indicator of `q < cut`.
    HardMask { cut: f64 },
    /// Logistic edge `1 / (1 + exp((q − cut)/softness))`.
    SmoothMask { cut: f64, softness: f64 },
    /// `exp(αq + βq²)` on `q < cut`, rescaled so the largest modulus on the
    /// grid is one.
    ExponentialFamily { alpha: Complex64, beta: Complex64, cut: f64 },
}

impl MeasurementOperator {
    /// Pure phase kick `exp(i k q)` on `q < cut`.
    pub fn phase_kick(k: f64, cut: f64) -> Self {
        MeasurementOperator::ExponentialFamily {
            alpha: Complex64::new(0.0, k),
            beta: Complex64::new(0.0, 0.0),
            cut,
        }
    }

    /// `Im(α)`; zero for the mask kinds.
    pub fn k(&self) -> f64 {
        match self {
            MeasurementOperator::ExponentialFamily { alpha, .. } => alpha.im,
            _ => 0.0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MeasurementOperator::Identity => "identity",
            MeasurementOperator::HardMask { .. } => "hard_mask",
            MeasurementOperator::SmoothMask { .. } => "smooth_mask",
            MeasurementOperator::ExponentialFamily { .. } => "exponential_family",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("operator parameter {name} must be finite")))
            }
        };
        match *self {
            MeasurementOperator::Identity => Ok(()),
            MeasurementOperator::HardMask { cut } => finite(cut, "cut"),
            MeasurementOperator::SmoothMask { cut, softness } => {
                finite(cut, "cut")?;
                if !(softness > 0.0 && softness.is_finite()) {
                    return Err(Error::config(format!("softness must be positive, got {softness}")));
                }
                Ok(())
            }
            MeasurementOperator::ExponentialFamily { alpha, beta, cut } => {
                finite(cut, "cut")?;
                finite(alpha.re, "alpha_re")?;
                finite(alpha.im, "alpha_im")?;
                finite(beta.re, "beta_re")?;
                finite(beta.im, "beta_im")
            }
        }
    }

    /// Largest `|O_ξ(q)|` over `|q − d| <= 5a`, i.e. how much of the excluded
    /// slit survives.
    pub fn excluded_slit_residual(&self, grid: &Grid1D, d: f64, a: f64) -> f64 {
        let values = evaluate_operator(self, grid);
        grid.coords()
            .zip(values.values())
            .filter(|(q, _)| (q - d).abs() <= 5.0 * a)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Samples `O_ξ(q)` on the grid.
pub fn evaluate_operator(op: &MeasurementOperator, grid: &Grid1D) -> ComplexField {
    match *op {
        MeasurementOperator::Identity => ComplexField::from_fn(*grid, |_| Complex64::new(1.0, 0.0)),
        MeasurementOperator::HardMask { cut } => {
            ComplexField::from_fn(*grid, |q| Complex64::new(if q < cut { 1.0 } else { 0.0 }, 0.0))
        }
        MeasurementOperator::SmoothMask { cut, softness } => ComplexField::from_fn(*grid, |q| {
            // 1/(1+e^x) written to stay finite for large |x|
            let x = (q - cut) / softness;
            let v = if x > 0.0 {
                let e = (-x).exp();
                e / (1.0 + e)
            } else {
                1.0 / (1.0 + x.exp())
            };
            Complex64::new(v, 0.0)
        }),
        MeasurementOperator::ExponentialFamily { alpha, beta, cut } => {
            // Work with ln O so that growing real parts never overflow.
            let log_modulus = |q: f64| alpha.re * q + beta.re * q * q;
            let cap = grid
                .coords()
                .filter(|&q| q < cut)
                .map(log_modulus)
                .fold(f64::NEG_INFINITY, f64::max);
            ComplexField::from_fn(*grid, |q| {
                if q < cut {
                    let phase = alpha.im * q + beta.im * q * q;
                    Complex64::from_polar((log_modulus(q) - cap).exp(), phase)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        }
    }
}

/// Normalized post-measurement state and the probability of the result.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub psi_f: ComplexField,
    pub probability: f64,
    pub operator: MeasurementOperator,
}

/// Applies already-sampled operator values to `psi_i`.
pub fn apply_operator_field(
    op: MeasurementOperator,
    op_values: &ComplexField,
    psi_i: &ComplexField,
) -> Result<MeasurementOutcome> {
    let mut psi_f = op_values.multiply(psi_i)?;
    let probability = l2_norm_squared(&psi_f);
    if !(probability >= IMPOSSIBLE_OUTCOME_THRESHOLD) {
        return Err(Error::ImpossibleOutcome {
            probability,
            threshold: IMPOSSIBLE_OUTCOME_THRESHOLD,
        });
    }
    psi_f.scale(Complex64::new(probability.sqrt().recip(), 0.0));
    Ok(MeasurementOutcome {
        psi_f,
        probability,
        operator: op,
    })
}

/// `ψ_f = O_ξψ_i / √N_ξ` with `N_ξ = ∫|O_ξψ_i|² dq`.
pub fn apply_measurement(op: &MeasurementOperator, psi_i: &ComplexField) -> Result<MeasurementOutcome> {
    op.validate()?;
    let values = evaluate_operator(op, psi_i.grid());
    apply_operator_field(*op, &values, psi_i)
}

/// `|ψ̃_f(p)|²`, normalized by quadrature.
pub fn final_momentum_density(outcome: &MeasurementOutcome, plan: &TransformPlan) -> Result<ProbabilityDensity> {
    let psi_p = plan.to_momentum(&outcome.psi_f)?;
    ProbabilityDensity::from_field(psi_p.modulus_squared())
}
