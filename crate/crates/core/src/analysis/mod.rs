//! Equilibria, the global-stability certificate, the slow/fast decomposition
//! and numerical Lyapunov verification for dCVOC.

pub mod certificate;
pub mod equilibrium;
pub mod lyapunov;
pub mod roa;
pub mod slow_fast;

pub use certificate::{check_stability_condition, lvrt_p_min, StabilityReport};
pub use equilibrium::{solve_equilibrium, steady_power, EquilibriumResult};
pub use lyapunov::{lyapunov, lyapunov_decrease_scan, LyapunovScan, LyapunovValue};
pub use roa::{draw_initial, roa_from_points, roa_sample, RoaOptions, RoaResult, RoaSample};
pub use slow_fast::{dzs_dx, quasi_steady_zs, reduced_slow_rhs, slow_manifold_current, SlowFastDecomposition};
