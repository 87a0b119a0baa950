//! Closed-form dCVOC equilibrium.
//!
//! At `ω_Δ = 0` the current law vanishes iff `u = S_ref i`. With
//! `u = [u_g; 0] + Z_g e^{Jφ_g} i` this gives
//! `i_s = −(Z_g e^{Jφ_g} − S_ref)^{−1} [u_g; 0]`, independent of φ.

use std::fmt::Write as _;

use crate::controllers::DcvocParams;
use crate::error::{Error, Result};
use crate::frame::{apparent_power, Mat2, Vec2};
use crate::network::GridModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumResult {
    pub i_s: Vec2,
    pub omega_delta_s: f64,
    pub u_s: Vec2,
    pub p_s: f64,
    pub q_s: f64,
    pub i_mag_s: f64,
    /// Determinant of `S_ref − Z_g e^{Jφ_g}`; zero means no equilibrium.
    pub det: f64,
}

impl EquilibriumResult {
    /// Flat `key = value` lines.
    pub fn to_kv(&self, prefix: &str) -> String {
        let mut s = String::new();
        for (k, v) in [
            ("i_s_alpha", self.i_s.a1),
            ("i_s_beta", self.i_s.a2),
            ("i_mag_s", self.i_mag_s),
            ("omega_delta_s", self.omega_delta_s),
            ("u_s_alpha", self.u_s.a1),
            ("u_s_beta", self.u_s.a2),
            ("u_mag_s", self.u_s.norm()),
            ("p_s", self.p_s),
            ("q_s", self.q_s),
            ("det", self.det),
        ] {
            let _ = writeln!(s, "{prefix}{k} = {v:.12e}");
        }
        s
    }
}

/// `|i_ref² (R_g + jL_g) − (p_ref + j q_ref)|`.
pub fn eq14_margin(params: &DcvocParams, grid: &GridModel) -> f64 {
    let ir2 = params.i_ref * params.i_ref;
    (Vec2::new(grid.rg, grid.lg).scale(ir2) - Vec2::new(params.p_ref, params.q_ref)).norm()
}

pub fn solve_equilibrium(params: &DcvocParams, grid: &GridModel, ug: f64) -> Result<EquilibriumResult> {
    let margin = eq14_margin(params, grid);
    let scale = params.p_ref.hypot(params.q_ref).max(params.i_ref * params.i_ref * grid.rg.hypot(grid.lg));
    if !(margin > 1e-12 * scale.max(1e-300)) {
        return Err(Error::NoEquilibrium(margin));
    }
    let z = Mat2::from_complex(Vec2::new(grid.rg, grid.lg));
    let sref = Mat2::from_complex(params.s_ref());
    let m = z - sref;
    let det = (sref - z).det();
    let i_s = -m.solve(Vec2::new(ug, 0.0)).ok_or(Error::NoEquilibrium(margin))?;
    let u_s = grid.terminal_voltage_at(i_s, ug);
    let (p_s, q_s) = apparent_power(u_s, i_s);
    Ok(EquilibriumResult { i_s, omega_delta_s: 0.0, u_s, p_s, q_s, i_mag_s: i_s.norm(), det })
}

/// `p_s + j q_s = u_s² i_ref² (p_ref + j q_ref) / (p_ref² + q_ref²)` and
/// `i_s = u_s i_ref² / √(p_ref² + q_ref²)`.
pub fn steady_power(u_mag_s: f64, p_ref: f64, q_ref: f64, i_ref: f64) -> Result<(f64, f64, f64)> {
    let s2 = p_ref * p_ref + q_ref * q_ref;
    if !(s2 > 0.0) {
        return Err(Error::ZeroReference);
    }
    let k = u_mag_s * u_mag_s * i_ref * i_ref / s2;
    Ok((k * p_ref, k * q_ref, u_mag_s * i_ref * i_ref / s2.sqrt()))
}
