//! Dispatchable current-source virtual oscillator control.
//!
//! Vector form in the grid-referenced αβ frame:
//!
//! ```text
//! di/dt   = kp (e^{J(π/2−φ)} u − S^ref_Δ i)
//! dω_Δ/dt = (kplli/kp) ‖i‖ (q_φ − q^ref_φ)
//! ```
//!
//! with `S^ref_Δ = [[p^ref_φ, −(q^ref_φ − ω_Δ)], [q^ref_φ − ω_Δ, p^ref_φ]]`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frame::{apparent_power, rotate, rotated_power, Rot2, Vec2};
use crate::{I_FLOOR, OMEGA_NOMINAL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcvocParams {
    pub kp: f64,
    pub kplli: f64,
    /// Power rotation angle φ (rad).
    pub phi: f64,
    pub p_ref: f64,
    pub q_ref: f64,
    pub i_ref: f64,
    pub i_max: f64,
    /// Nominal frequency ω_0 (rad/s).
    pub omega0: f64,
}

impl DcvocParams {
    /// kp = kplli = 20, p_ref = 1, q_ref = 0, i_ref = 1, i_max = 1.2.
    pub fn nominal(phi: f64) -> Self {
        DcvocParams {
            kp: 20.0,
            kplli: 20.0,
            phi,
            p_ref: 1.0,
            q_ref: 0.0,
            i_ref: 1.0,
            i_max: 1.2,
            omega0: OMEGA_NOMINAL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.kp, self.kplli, self.phi, self.p_ref, self.q_ref, self.i_ref, self.i_max, self.omega0]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(invalid("dcvoc parameters must be finite"));
        }
        if !(self.kp > 0.0) || !(self.kplli > 0.0) {
            return Err(invalid("dcvoc gains kp and kplli must be > 0"));
        }
        if !(self.i_ref > 0.0) {
            return Err(invalid("i_ref must be > 0"));
        }
        if !(self.i_max > I_FLOOR) {
            return Err(invalid(format!("i_max = {} must exceed the current floor {I_FLOOR}", self.i_max)));
        }
        Ok(())
    }

    /// Singular-perturbation parameter `ε = kplli / kp²`.
    pub fn epsilon(&self) -> f64 {
        self.kplli / (self.kp * self.kp)
    }

    /// Same gains with new references and `i_ref = √(p² + q²)`.
    pub fn with_refs(&self, p_ref: f64, q_ref: f64) -> Self {
        DcvocParams { p_ref, q_ref, i_ref: p_ref.hypot(q_ref), ..*self }
    }

    /// `S_ref = (p_ref + j q_ref) / i_ref²` as a complex vector.
    pub fn s_ref(&self) -> Vec2 {
        Vec2::new(self.p_ref, self.q_ref).scale(1.0 / (self.i_ref * self.i_ref))
    }

    /// `(p^ref_φ, q^ref_φ)`.
    pub fn rotated_reference(&self) -> Result<Vec2> {
        let (p, q) = rotated_power(self.p_ref, self.q_ref, self.phi, self.i_ref * self.i_ref)?;
        Ok(Vec2::new(p, q))
    }

    pub fn rotation(&self) -> Rot2 {
        Rot2::new(FRAC_PI_2 - self.phi)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DcvocState {
    pub i: Vec2,
    pub omega_delta: f64,
}

impl DcvocState {
    pub fn new(i: Vec2, omega_delta: f64) -> Self {
        DcvocState { i, omega_delta }
    }

    pub fn axpy(self, h: f64, d: DcvocDeriv) -> Self {
        DcvocState { i: self.i + d.di.scale(h), omega_delta: self.omega_delta + h * d.d_omega_delta }
    }

    pub fn is_finite(&self) -> bool {
        self.i.is_finite() && self.omega_delta.is_finite()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DcvocDeriv {
    pub di: Vec2,
    pub d_omega_delta: f64,
}

impl DcvocDeriv {
    pub fn scale(self, k: f64) -> Self {
        DcvocDeriv { di: self.di.scale(k), d_omega_delta: k * self.d_omega_delta }
    }
}

fn check_floor(mag: f64) -> Result<()> {
    if mag < I_FLOOR || !mag.is_finite() {
        return Err(Error::CurrentFloor { mag, floor: I_FLOOR });
    }
    Ok(())
}

/// Closed-loop derivative in per-unit time for a given terminal voltage `u`.
pub fn dcvoc_rhs(state: DcvocState, u: Vec2, params: &DcvocParams) -> Result<DcvocDeriv> {
    let i = state.i;
    let mag = i.norm();
    check_floor(mag)?;
    let sref = params.rotated_reference()?;
    let s_delta = Vec2::new(sref.a1, sref.a2 - state.omega_delta);
    let di = (rotate(params.rotation(), u) - s_delta.cmul(i)).scale(params.kp);
    let (p, q) = apparent_power(u, i);
    let (_, q_phi) = rotated_power(p, q, params.phi, mag * mag)?;
    let d_omega_delta = params.kplli / params.kp * mag * (q_phi - sref.a2);
    Ok(DcvocDeriv { di, d_omega_delta })
}

/// Polar coordinates `i = i_mag e^{jδ}` with the frequency integrator `ξ`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DcvocPolar {
    pub delta: f64,
    pub i_mag: f64,
    pub xi: f64,
}

impl DcvocPolar {
    /// Uses `ω_Δ = (kplli ξ + (ω_0 − ω_g)/ω_b) / kp`.
    pub fn from_cartesian(s: DcvocState, params: &DcvocParams, omega_g: f64, omega_b: f64) -> Self {
        DcvocPolar {
            delta: s.i.angle(),
            i_mag: s.i.norm(),
            xi: (params.kp * s.omega_delta - (params.omega0 - omega_g) / omega_b) / params.kplli,
        }
    }

    pub fn to_cartesian(self, params: &DcvocParams, omega_g: f64, omega_b: f64) -> DcvocState {
        DcvocState {
            i: Vec2::from_polar(self.i_mag, self.delta),
            omega_delta: (params.kplli * self.xi + (params.omega0 - omega_g) / omega_b) / params.kp,
        }
    }

    pub fn axpy(self, h: f64, d: DcvocPolar) -> Self {
        DcvocPolar { delta: self.delta + h * d.delta, i_mag: self.i_mag + h * d.i_mag, xi: self.xi + h * d.xi }
    }
}

/// Polar form in physical time:
///
/// ```text
/// dδ/dt = (ω_0 − ω_g) + ω_b [kp (q_φ − q^ref_φ) + kplli ξ]
/// di/dt = ω_b kp (p_φ − p^ref_φ) i
/// dξ/dt = ω_b i (q_φ − q^ref_φ)
/// ```
pub fn dcvoc_rhs_polar(s: DcvocPolar, u: Vec2, params: &DcvocParams, omega_g: f64, omega_b: f64) -> Result<DcvocPolar> {
    check_floor(s.i_mag)?;
    let i = Vec2::from_polar(s.i_mag, s.delta);
    let (p, q) = apparent_power(u, i);
    let (p_phi, q_phi) = rotated_power(p, q, params.phi, s.i_mag * s.i_mag)?;
    let sref = params.rotated_reference()?;
    Ok(DcvocPolar {
        delta: (params.omega0 - omega_g) + omega_b * (params.kp * (q_phi - sref.a2) + params.kplli * s.xi),
        i_mag: omega_b * params.kp * (p_phi - sref.a1) * s.i_mag,
        xi: omega_b * s.i_mag * (q_phi - sref.a2),
    })
}

/// Removes the outward radial component of `di` once `‖i‖ ≥ i_max`
/// (up to a relative slack of 1e-9).
/// Returns the projected derivative and whether the projection was active.
pub fn saturate(state: DcvocState, rhs: DcvocDeriv, i_max: f64) -> (DcvocDeriv, bool) {
    if state.i.norm() < i_max * (1.0 - 1e-9) {
        return (rhs, false);
    }
    project_outward(state, rhs)
}

/// Removes the outward radial component of `di` regardless of `‖i‖`.
pub fn project_outward(state: DcvocState, rhs: DcvocDeriv) -> (DcvocDeriv, bool) {
    let mag = state.i.norm();
    if mag == 0.0 {
        return (rhs, false);
    }
    let ih = state.i.scale(1.0 / mag);
    let radial = rhs.di.dot(ih);
    if radial <= 0.0 {
        return (rhs, false);
    }
    let di = rhs.di - ih.scale(radial);
    (DcvocDeriv { di, ..rhs }, true)
}
