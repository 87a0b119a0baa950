//! Global-stability certificate.
//!
//! The printed parameter condition is
//! `√(p_ref² + q_ref²) cos(π/2 − φ) > i_ref² Z_g cos(π/2 + φ_g − φ)`.
//! The boundary-layer (fast current) subsystem additionally needs
//! `p^ref_φ > Z_g cos(π/2 + φ_g − φ)`, i.e. `a < 0` in the slow/fast
//! coordinates; that margin is reported separately.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use crate::analysis::equilibrium::eq14_margin;
use crate::controllers::DcvocParams;
use crate::network::GridModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityReport {
    pub equilibrium_exists: bool,
    pub eq14_margin: f64,
    pub eq11_lhs: f64,
    pub eq11_rhs: f64,
    pub eq11_margin: f64,
    pub epsilon: f64,
    pub condition_holds: bool,
    /// `p^ref_φ − Z_g cos(π/2 + φ_g − φ)`; positive when the current
    /// subsystem is contracting for frozen `ω_Δ`.
    pub boundary_layer_margin: f64,
}

impl StabilityReport {
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "equilibrium_exists = {}", self.equilibrium_exists);
        let _ = writeln!(s, "eq14_margin = {:.12e}", self.eq14_margin);
        let _ = writeln!(s, "eq11_lhs = {:.12e}", self.eq11_lhs);
        let _ = writeln!(s, "eq11_rhs = {:.12e}", self.eq11_rhs);
        let _ = writeln!(s, "eq11_margin = {:.12e}", self.eq11_margin);
        let _ = writeln!(s, "boundary_layer_margin = {:.12e}", self.boundary_layer_margin);
        let _ = writeln!(s, "epsilon = {:.12e}", self.epsilon);
        let _ = writeln!(s, "condition_holds = {}", self.condition_holds);
        s
    }
}

pub fn check_stability_condition(params: &DcvocParams, grid: &GridModel) -> StabilityReport {
    let z = grid.impedance();
    let margin14 = eq14_margin(params, grid);
    let scale = params.p_ref.hypot(params.q_ref).max(1.0);
    let equilibrium_exists = margin14 > 1e-12 * scale;
    let lhs = params.p_ref.hypot(params.q_ref) * (FRAC_PI_2 - params.phi).cos();
    let rhs = params.i_ref * params.i_ref * z.zg * (FRAC_PI_2 + z.phig - params.phi).cos();
    let epsilon = params.epsilon();
    let p_phi_ref = params.rotated_reference().map(|v| v.a1).unwrap_or(f64::NAN);
    StabilityReport {
        equilibrium_exists,
        eq14_margin: margin14,
        eq11_lhs: lhs,
        eq11_rhs: rhs,
        eq11_margin: lhs - rhs,
        epsilon,
        condition_holds: lhs > rhs && equilibrium_exists && epsilon > 0.0,
        boundary_layer_margin: p_phi_ref - z.zg * (FRAC_PI_2 + z.phig - params.phi).cos(),
    }
}

/// Smallest LVRT active-power floor `p_min` that keeps the current
/// subsystem contracting for every reference the schedule can produce.
///
/// Inside LVRT the references are `k_s (p_0, q_0)` with
/// `p_0² + q_0² = i_max²`, `q_0 ≤ √(i_max² − p_min²)` and `k_s ≤ ks_max`,
/// so `p^ref_φ = (p_0 sin φ − q_0 cos φ) / (k_s i_max²)` and the
/// requirement becomes
/// `p_0 sin φ − √(i_max² − p_0²) cos φ > ks_max i_max² Z_g sin(φ − φ_g)`.
/// The root is found by bisection and inflated by `1 + margin`.
pub fn lvrt_p_min(i_max: f64, phi: f64, grid: &GridModel, ks_max: f64, margin: f64) -> f64 {
    let z = grid.impedance();
    let need = ks_max * i_max * i_max * z.zg * (phi - z.phig).sin();
    let g = |p0: f64| p0 * phi.sin() - (i_max * i_max - p0 * p0).max(0.0).sqrt() * phi.cos() - need.max(0.0);
    if g(0.0) > 0.0 {
        return 0.0;
    }
    if g(i_max) <= 0.0 {
        return i_max;
    }
    let (mut lo, mut hi) = (0.0, i_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi * (1.0 + margin)).min(i_max)
}
