//! Droop-controlled grid-forming reference law.
//!
//! ```text
//! θ̇_u = ω_0 + kp (p_ref − p)
//! u̇   = kp (q_ref − q) + kv (u_ref − u)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frame::{apparent_power, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroopGfmParams {
    pub kp: f64,
    pub kv: f64,
    pub p_ref: f64,
    pub q_ref: f64,
    pub u_ref: f64,
    pub omega0: f64,
}

impl DroopGfmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kp >= 0.0) || !(self.kv > 0.0) || !(self.u_ref > 0.0) {
            return Err(invalid("droop needs kp >= 0, kv > 0, u_ref > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DroopGfmState {
    pub theta_u: f64,
    pub u: f64,
}

impl DroopGfmState {
    pub fn voltage(&self) -> Vec2 {
        Vec2::from_polar(self.u, self.theta_u)
    }
}

/// Returns `(θ̇_u, u̇)` with the deviation terms scaled by `omega_b`.
pub fn droop_gfm_rhs(
    state: DroopGfmState,
    i_measured: Vec2,
    params: &DroopGfmParams,
    omega_b: f64,
) -> Result<(f64, f64)> {
    if !(state.u > 0.0) {
        return Err(Error::DegenerateVoltage(state.u));
    }
    let (p, q) = apparent_power(state.voltage(), i_measured);
    let theta_dot = params.omega0 + omega_b * params.kp * (params.p_ref - p);
    let u_dot = omega_b * (params.kp * (params.q_ref - q) + params.kv * (params.u_ref - state.u));
    Ok((theta_dot, u_dot))
}
