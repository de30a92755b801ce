//! Spin-J dynamical-decoupling toolkit for tensor-shift (Lorentz-violation)
//! searches: spin operators and rotations, the DD sequence and its fringe,
//! noise models, sensitivity analysis, sidereal harmonic fits and a
//! Monte Carlo experiment simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod halfint;
pub mod io;
pub mod linalg;
pub mod noise;
pub mod sensitivity;
pub mod sequence;
pub mod sidereal;
pub mod species;
pub mod spin;
pub mod wigner;

pub use error::{Error, Result};
pub use experiment::{estimate_kappa, run_experiment, simulate_point, Calibration, LineSync, MeasurementRecord, RunConfig};
pub use halfint::HalfInt;
pub use linalg::{CMatrix, Operator, OperatorKind};
pub use noise::{NoiseModel, NoiseTrace, StaticKappaBudget, TimeGrid};
pub use sensitivity::{optimal_working_point, Probe, SensitivityReport};
pub use sequence::{fringe_grid, fringe_probability, Fringe, FringeGrid, PulseMode, PulseSchedule, SequenceConfig};
pub use sidereal::{bound_c02, fit_harmonics, Confidence, HarmonicFit, KappaSample, SiderealModel};
pub use species::IonSpecies;
pub use spin::SpinSystem;
