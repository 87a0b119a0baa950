//! Simulation and stability analysis for dispatchable current-source virtual
//! oscillator control (dCVOC) of grid-following converters.
//!
//! The closed loop is an averaged, quasi-static phasor model in the
//! grid-referenced αβ frame: a controller (dCVOC, dVOC, droop GFM or a
//! PLL-based GFL baseline) drives a single converter connected to a stiff
//! grid through a series R–L impedance.
//!
//! ```
//! use dcvoc::{analysis, network::GridModel, controllers::DcvocParams};
//!
//! let grid = GridModel::new(1.0, 0.2, 0.25, dcvoc::OMEGA_NOMINAL).unwrap();
//! let params = DcvocParams::nominal(std::f64::consts::FRAC_PI_2);
//! let eq = analysis::solve_equilibrium(&params, &grid, 1.0).unwrap();
//! assert!((eq.i_s.a1 - 1.1388).abs() < 1e-4);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod controllers;
pub mod error;
pub mod frame;
pub mod network;
pub mod simulation;

pub use error::{Error, Result};
pub use frame::{apparent_power, rotate, rotated_power, Mat2, Rot2, Vec2};

/// Nominal angular frequency, 2π·50 rad/s.
pub const OMEGA_NOMINAL: f64 = 2.0 * std::f64::consts::PI * 50.0;

/// Smallest admissible current magnitude (pu) for the current-forming laws.
pub const I_FLOOR: f64 = 1e-3;
