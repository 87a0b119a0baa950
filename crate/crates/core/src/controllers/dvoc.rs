//! Dispatchable virtual oscillator control (grid-forming).
//!
//! ```text
//! θ̇_u = ω_0 + kp (p^ref_φ − p_φ)
//! u̇/u = kp (q^ref_φ − q_φ) + kv (u_ref² − u²) / u_ref²
//! ```
//!
//! with powers rotated by `e^{j(π/2−φ)}` and scaled by `u²` (resp. `u_ref²`).
//! In vector form `du/dt = c u` with the complex coefficient
//! `c = [kp (q^ref_φ − q_φ) + kv (…)] + j kp (p^ref_φ − p_φ)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frame::{apparent_power, rotated_power, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DvocParams {
    pub kp: f64,
    pub kv: f64,
    pub phi: f64,
    pub p_ref: f64,
    pub q_ref: f64,
    pub u_ref: f64,
    pub omega0: f64,
}

impl DvocParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kp >= 0.0) || !(self.kv > 0.0) || !(self.u_ref > 0.0) {
            return Err(invalid("dvoc needs kp >= 0, kv > 0, u_ref > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DvocState {
    pub u: Vec2,
}

/// Per-unit-time derivative of the terminal voltage vector.
pub fn dvoc_rhs(state: DvocState, i_measured: Vec2, params: &DvocParams) -> Result<Vec2> {
    let u = state.u;
    let u2 = u.norm_sq();
    if !(u2 > 0.0) || !u2.is_finite() {
        return Err(Error::DegenerateVoltage(u2.sqrt()));
    }
    let (p, q) = apparent_power(u, i_measured);
    let (p_phi, q_phi) = rotated_power(p, q, params.phi, u2)?;
    let (pr_phi, qr_phi) = rotated_power(params.p_ref, params.q_ref, params.phi, params.u_ref * params.u_ref)?;
    let ur2 = params.u_ref * params.u_ref;
    let radial = params.kp * (qr_phi - q_phi) + params.kv * (ur2 - u2) / ur2;
    let angular = params.kp * (pr_phi - p_phi);
    Ok(Vec2::new(radial, angular).cmul(u))
}
