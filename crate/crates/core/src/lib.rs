//! Numerical study of the which-slit measurement disturbance for a particle
//! prepared in a twin-slit superposition.
//!
//! The pipeline builds the twin-slit wavefunction on a uniform position grid,
//! applies a which-slit measurement operator, transforms to momentum space and
//! compares the pre- and post-measurement momentum densities with the 1-D
//! Monge (Wasserstein-1) distance. For a slit separation `d` the distance never
//! drops below `2ħ/(πd)`.
//!
//! Modules, bottom-up:
//!
//! * [`numerics`]: grids, sampled fields, trapezoidal quadrature, interpolation.
//! * [`spectral`]: continuum-normalized position/momentum transform.
//! * [`states`]: slit profiles, the twin-slit state and its analytic momentum forms.
//! * [`measurement`]: which-slit operators, outcomes and final momentum densities.
//! * [`transport`]: densities, CDFs and the Monge distance (two formulations).
//! * [`experiments`]: end-to-end runs, sweeps, convergence studies, bound battery.
//! * [`cli`]: run manifests, result files and the command executor.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod measurement;
pub mod numerics;
pub mod spectral;
pub mod states;
pub mod transport;

pub use error::{Error, Result, Stage};
pub use experiments::{DisturbanceResult, ExperimentConfig};
pub use measurement::{MeasurementOperator, MeasurementOutcome};
pub use numerics::{AxisKind, ComplexField, Grid1D, RealField};
pub use spectral::TransformPlan;
pub use states::{ProfileKind, SlitProfile, TwinSlitSpec};
pub use transport::{FiducialCDF, ProbabilityDensity};
