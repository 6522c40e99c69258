//! End-to-end runs: build the twin-slit state, measure, transform, and
//! compare momentum densities. Sweeps, convergence studies, the bound battery
//! and the self-test suite are built on [`run_single`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result, Stage, StageExt};
use crate::measurement::{apply_measurement, final_momentum_density, MeasurementOperator};
use crate::numerics::{l2_norm_squared, AxisKind, ComplexField, Grid1D};
use crate::spectral::TransformPlan;
use crate::states::{analytic_momentum_density_initial, build_twin_slit, TwinSlitSpec};
use crate::transport::{
    formulation_gap, minimum_disturbance, monge_distance_cdf, monge_distance_quantile, sinusoidal_average,
    sinusoidal_average_by_quadrature, ProbabilityDensity,
};

pub const DEFAULT_GRID_POINTS: usize = 16384;
/// Quantile cells used for the cross-check formulation.
pub const QUANTILE_CELLS: usize = 100_000;
/// Relative slack on `d·Δp >= 2ħ/π` for finite slit width.
pub const BOUND_TOLERANCE: f64 = 0.02;
/// Largest grid the convergence refinement will request.
pub const MAX_GRID_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: TwinSlitSpec,
    pub operator: MeasurementOperator,
    /// Power of two.
    pub grid_points: usize,
    pub position_extent: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Defaults: 16384 points, extent `40·max(a, d)`, seed 0.
    pub fn new(spec: TwinSlitSpec, operator: MeasurementOperator) -> Self {
        ExperimentConfig {
            position_extent: default_extent(&spec),
            spec,
            operator,
            grid_points: DEFAULT_GRID_POINTS,
            seed: 0,
        }
    }

    pub fn with_grid(mut self, grid_points: usize, position_extent: f64) -> Self {
        self.grid_points = grid_points;
        self.position_extent = position_extent;
        self
    }

    pub fn with_operator(&self, operator: MeasurementOperator) -> Self {
        ExperimentConfig {
            operator,
            ..self.clone()
        }
    }

    pub fn hbar(&self) -> f64 {
        self.spec.hbar()
    }

    /// Grid sanity and sampling adequacy; returns the transform plan.
    pub fn plan(&self) -> Result<TransformPlan> {
        if !self.grid_points.is_power_of_two() || self.grid_points < 2 {
            return Err(Error::config(format!(
                "grid_points must be a power of two, got {}",
                self.grid_points
            )));
        }
        let (a, d) = (self.spec.a(), self.spec.d());
        let needed = d + 20.0 * a;
        if !(self.position_extent >= needed) {
            return Err(Error::config(format!(
                "position extent {} must cover both slits with a 10a margin ({needed})",
                self.position_extent
            )));
        }
        let plan = TransformPlan::with_extent(self.grid_points, self.position_extent, 0.5 * d, self.hbar())?;
        plan.check_sampling(a, d)?;
        Ok(plan)
    }
}

pub fn default_extent(spec: &TwinSlitSpec) -> f64 {
    40.0 * spec.a().max(spec.d())
}

/// Outcome of one run; `product = d · monge` and `bound = 2ħ/(πd)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisturbanceResult {
    pub d: f64,
    pub a: f64,
    pub k: f64,
    pub monge: f64,
    pub bound: f64,
    pub product: f64,
    pub outcome_probability: f64,
    pub formulation_gap: f64,
}

impl DisturbanceResult {
    /// `d·Δp >= (2ħ/π)(1 − BOUND_TOLERANCE)`.
    pub fn satisfies_bound(&self, hbar: f64) -> bool {
        self.product >= 2.0 * hbar / PI * (1.0 - BOUND_TOLERANCE)
    }
}

/// Initial and final momentum densities on the run's momentum grid.
pub struct Densities {
    pub initial: ProbabilityDensity,
    pub final_: ProbabilityDensity,
    pub probability: f64,
}

fn densities_with_plan(config: &ExperimentConfig, plan: &TransformPlan) -> Result<Densities> {
    let psi_i = build_twin_slit(&config.spec, plan.position_grid()).at(Stage::State)?;
    let outcome = apply_measurement(&config.operator, &psi_i).at(Stage::Measurement)?;
    let final_ = final_momentum_density(&outcome, plan).at(Stage::Transform)?;
    let initial = analytic_momentum_density_initial(&config.spec, plan.momentum_grid()).at(Stage::InitialDensity)?;
    Ok(Densities {
        initial,
        final_,
        probability: outcome.probability,
    })
}

pub fn densities(config: &ExperimentConfig) -> Result<Densities> {
    let plan = config.plan().at(Stage::Grid)?;
    densities_with_plan(config, &plan)
}

fn run_with_plan(config: &ExperimentConfig, plan: &TransformPlan) -> Result<DisturbanceResult> {
    let dens = densities_with_plan(config, plan)?;
    let (d, hbar) = (config.spec.d(), config.hbar());
    let monge = monge_distance_cdf(&dens.final_, &dens.initial).at(Stage::Transport)?;
    let by_quantile = monge_distance_quantile(&dens.final_, &dens.initial, QUANTILE_CELLS).at(Stage::Transport)?;
    let bound = minimum_disturbance(d, hbar).at(Stage::Transport)?;
    Ok(DisturbanceResult {
        d,
        a: config.spec.a(),
        k: config.operator.k(),
        monge,
        bound,
        product: d * monge,
        outcome_probability: dens.probability,
        // distances below 1e−8·ħ/d count as zero
        formulation_gap: formulation_gap(by_quantile, monge, 1e-8 * hbar / d),
    })
}

/// State → measurement → momentum density → Monge distance to the initial
/// density.
pub fn run_single(config: &ExperimentConfig) -> Result<DisturbanceResult> {
    let plan = config.plan().at(Stage::Grid)?;
    run_with_plan(config, &plan)
}

fn cut_of(op: &MeasurementOperator, d: f64) -> f64 {
    match *op {
        MeasurementOperator::HardMask { cut }
        | MeasurementOperator::SmoothMask { cut, .. }
        | MeasurementOperator::ExponentialFamily { cut, .. } => cut,
        MeasurementOperator::Identity => 0.5 * d,
    }
}

/// One run per `k`, each with the phase-kick operator `α = i·k`. Per-point
/// failures are returned in place.
pub fn sweep_k(config: &ExperimentConfig, k_values: &[f64]) -> Result<Vec<Result<DisturbanceResult>>> {
    if k_values.len() < 3 {
        return Err(Error::config(format!("k sweep needs at least 3 values, got {}", k_values.len())));
    }
    let plan = config.plan().at(Stage::Grid)?;
    let cut = cut_of(&config.operator, config.spec.d());
    Ok(k_values
        .par_iter()
        .map(|&k| run_with_plan(&config.with_operator(MeasurementOperator::phase_kick(k, cut)), &plan))
        .collect())
}

/// Grid for slit width `a`: position spacing at most `a/8` and momentum
/// spacing at most `ħa/d²`, never coarser than the base configuration.
pub fn refined_for(config: &ExperimentConfig, a: f64) -> Result<ExperimentConfig> {
    let spec = config.spec.with_a(a)?;
    let (d, hbar) = (spec.d(), spec.hbar());
    let dq_target = a / 8.0;
    let dp_target = hbar * a / (d * d);
    let extent = config
        .position_extent
        .max(default_extent(&spec))
        .max(2.0 * PI * hbar / dp_target);
    let wanted = (extent / dq_target).ceil() as usize;
    let grid_points = config.grid_points.max(wanted.next_power_of_two());
    if grid_points > MAX_GRID_POINTS {
        return Err(Error::config(format!(
            "slit width {a} needs {grid_points} grid points (limit {MAX_GRID_POINTS})"
        )));
    }
    Ok(ExperimentConfig {
        spec,
        grid_points,
        position_extent: extent,
        ..config.clone()
    })
}

/// Runs the configured operator at each slit width, refining the grid per
/// point. `a_values` must be strictly decreasing.
pub fn convergence_study(config: &ExperimentConfig, a_values: &[f64]) -> Result<Vec<Result<DisturbanceResult>>> {
    if a_values.is_empty() {
        return Err(Error::config("convergence study needs at least one slit width"));
    }
    if a_values.iter().any(|a| !(*a > 0.0)) || a_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("slit widths must be positive and strictly decreasing"));
    }
    Ok(a_values
        .iter()
        .map(|&a| refined_for(config, a).at(Stage::Grid).and_then(|c| run_single(&c)))
        .collect())
}

/// Least-squares slope of `ln error` against `ln a`.
pub fn fitted_order(a_values: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = a_values.iter().map(|a| a.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentComparison {
    pub mean_i: f64,
    pub mean_f: f64,
    pub std_i: f64,
    pub std_f: f64,
}

/// First and second moments of the initial and final momentum densities.
pub fn moment_comparison(config: &ExperimentConfig) -> Result<MomentComparison> {
    let dens = densities(config)?;
    Ok(MomentComparison {
        mean_i: dens.initial.mean(),
        mean_f: dens.final_.mean(),
        std_i: dens.initial.std_dev(),
        std_f: dens.final_.std_dev(),
    })
}

/// Which-slit operators for the bound check, deterministic in `seed`:
/// hard masks with cuts across `[0.3, 0.7]·d`, smooth masks with softness up
/// to `0.05·d`, pure phase kicks over `k ∈ [−5, 5]/d`, and phase kicks with
/// random real `α` and `β` on top.
pub fn bound_battery(d: f64, seed: u64) -> Vec<MeasurementOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops = Vec::with_capacity(242);
    for i in 0..=40 {
        ops.push(MeasurementOperator::HardMask {
            cut: d * (0.3 + 0.4 * i as f64 / 40.0),
        });
    }
    for _ in 0..40 {
        ops.push(MeasurementOperator::SmoothMask {
            cut: d * rng.random_range(0.3..=0.7),
            softness: d * rng.random_range(0.005..=0.05),
        });
    }
    for i in 0..=120 {
        let k = (-5.0 + 10.0 * i as f64 / 120.0) / d;
        ops.push(MeasurementOperator::phase_kick(k, 0.5 * d));
    }
    // Real parts stay small enough that the amplitude cap over a 40·d window
    // leaves the kept slit with non-negligible probability.
    for _ in 0..40 {
        ops.push(MeasurementOperator::ExponentialFamily {
            alpha: Complex64::new(rng.random_range(-0.5..=0.5) / d, rng.random_range(-5.0..=5.0) / d),
            beta: Complex64::new(rng.random_range(-2.0..=0.0) / (d * d), 0.0),
            cut: d * rng.random_range(0.3..=0.7),
        });
    }
    ops
}

/// Runs every battery operator on the configured state and grid.
pub fn bound_check(config: &ExperimentConfig) -> Result<Vec<(MeasurementOperator, Result<DisturbanceResult>)>> {
    let plan = config.plan().at(Stage::Grid)?;
    let ops = bound_battery(config.spec.d(), config.seed);
    Ok(ops
        .par_iter()
        .map(|op| (*op, run_with_plan(&config.with_operator(*op), &plan)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> SelfTestCheck {
    SelfTestCheck {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Random mixture of 1–3 Gaussians with centers in `[-4, 4]` and widths in
/// `[0.3, 1.5]`, normalized on `grid`.
pub fn random_mixture(rng: &mut impl Rng, grid: &Grid1D) -> ProbabilityDensity {
    let parts: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=3))
        .map(|_| {
            (
                rng.random_range(0.2..1.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(0.3..1.5),
            )
        })
        .collect();
    let values = grid
        .coords()
        .map(|x| {
            parts
                .iter()
                .map(|(w, mu, s)| w * (-(x - mu).powi(2) / (2.0 * s * s)).exp() / s)
                .sum()
        })
        .collect();
    ProbabilityDensity::from_unnormalized(*grid, values).expect("mixture is positive")
}

/// Metric axioms, Parseval and the closed-form sinusoidal average, on
/// seeded random inputs.
pub fn selftest(seed: u64) -> Result<Vec<SelfTestCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let grid = Grid1D::new(4001, -20.0, 0.01, AxisKind::Momentum)?;
    let (mut worst_sym, mut worst_tri, mut worst_id) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    for _ in 0..20 {
        let a = random_mixture(&mut rng, &grid);
        let b = random_mixture(&mut rng, &grid);
        let c = random_mixture(&mut rng, &grid);
        let ab = monge_distance_cdf(&a, &b)?;
        let ba = monge_distance_cdf(&b, &a)?;
        let bc = monge_distance_cdf(&b, &c)?;
        let ac = monge_distance_cdf(&a, &c)?;
        worst_sym = worst_sym.max((ab - ba).abs());
        worst_tri = worst_tri.max(ac - ab - bc);
        worst_id = worst_id.max(monge_distance_cdf(&a, &a)?.abs());
    }
    checks.push(check("metric-symmetry", worst_sym <= 1e-12, format!("max |D(a,b) - D(b,a)| = {worst_sym:e}")));
    checks.push(check("metric-triangle", worst_tri <= 1e-8, format!("max D(a,c) - D(a,b) - D(b,c) = {worst_tri:e}")));
    checks.push(check("metric-identity", worst_id <= 1e-12, format!("max D(a,a) = {worst_id:e}")));

    let plan = TransformPlan::with_extent(1 << 14, 40.0, 0.5, 1.0)?;
    let mut worst_parseval = 0.0f64;
    for a in [0.05, 0.02] {
        let spec = TwinSlitSpec::gaussian(a, 1.0)?;
        let psi = build_twin_slit(&spec, plan.position_grid())?;
        let n0 = l2_norm_squared(&psi);
        worst_parseval = worst_parseval.max((l2_norm_squared(&plan.to_momentum(&psi)?) - n0).abs() / n0);
    }
    for _ in 0..5 {
        let (c, w, k) = (rng.random_range(-5.0..5.0), rng.random_range(0.2..2.0), rng.random_range(-10.0..10.0));
        let psi = ComplexField::from_fn(*plan.position_grid(), |q: f64| {
            Complex64::from_polar((-(q - c).powi(2) / (4.0 * w * w)).exp(), k * q)
        });
        let n0 = l2_norm_squared(&psi);
        worst_parseval = worst_parseval.max((l2_norm_squared(&plan.to_momentum(&psi)?) - n0).abs() / n0);
    }
    checks.push(check("parseval", worst_parseval <= 1e-10, format!("max relative norm change = {worst_parseval:e}")));

    let mut worst_avg = 0.0f64;
    for _ in 0..50 {
        let (k, d) = (rng.random_range(-5.0..5.0), rng.random_range(0.2..5.0));
        let closed = sinusoidal_average(k, d, 1.0)?;
        worst_avg = worst_avg.max((closed - sinusoidal_average_by_quadrature(k, d, 1.0, 4096)?).abs());
    }
    checks.push(check(
        "sinusoidal-average",
        worst_avg <= 1e-8,
        format!("max |closed form - quadrature| = {worst_avg:e}"),
    ));
    Ok(checks)
}
