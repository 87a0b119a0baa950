//! Two-time-scale decomposition of the dCVOC closed loop.
//!
//! With `τ = (kplli/kp) t`, `ε = kplli/kp²`, `x = ω_Δ` and `z = i − i_s`,
//! the current is fast and the frequency state slow. Freezing `x`, the
//! current settles at `i = z_0(x) u_{g,φ}` where
//!
//! ```text
//! z_0(x) u_{g,φ} = e^{J(π/2−φ)} u_g / (a² + (b+x)²) · [−a; b+x]
//! a = Z_g cos(π/2 + φ_g − φ) − p^ref_φ
//! b = Z_g sin(π/2 + φ_g − φ) − q^ref_φ
//! ```
//!
//! On that manifold `q_φ − q^ref_φ = −x`, so the reduced system is
//! `dx/dτ = −‖z_0 u_{g,φ}‖ x = −u_g x / √(a² + (b+x)²)`.

use std::f64::consts::FRAC_PI_2;

use crate::controllers::DcvocParams;
use crate::error::{Error, Result};
use crate::frame::{Rot2, Vec2};
use crate::network::GridModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlowFastDecomposition {
    pub a: f64,
    pub b: f64,
    /// `kplli / kp`, the factor mapping `t` to `τ`.
    pub tau_scale: f64,
    pub epsilon: f64,
}

impl SlowFastDecomposition {
    pub fn new(params: &DcvocParams, grid: &GridModel) -> Result<Self> {
        let z = grid.impedance();
        let sref = params.rotated_reference()?;
        let ang = FRAC_PI_2 + z.phig - params.phi;
        Ok(SlowFastDecomposition {
            a: z.zg * ang.cos() - sref.a1,
            b: z.zg * ang.sin() - sref.a2,
            tau_scale: params.kplli / params.kp,
            epsilon: params.epsilon(),
        })
    }

    fn denom(&self, x: f64) -> Result<f64> {
        let d = self.a * self.a + (self.b + x) * (self.b + x);
        if !(d > 0.0) {
            return Err(Error::SingularBoundaryLayer(d));
        }
        Ok(d)
    }
}

fn ug_phi(ug: f64, phi: f64) -> Vec2 {
    Rot2::new(FRAC_PI_2 - phi).phasor().scale(ug)
}

/// Boundary-layer equilibrium current `z_0(x) u_{g,φ}` for frozen `x`.
pub fn slow_manifold_current(x: f64, d: &SlowFastDecomposition, ug: f64, phi: f64) -> Result<Vec2> {
    let den = d.denom(x)?;
    Ok(ug_phi(ug, phi).cmul(Vec2::new(-d.a, d.b + x)).scale(1.0 / den))
}

/// `z_s(x) = z_0(x) u_{g,φ} − i_s`, with `i_s = z_0(0) u_{g,φ}`.
pub fn quasi_steady_zs(x: f64, d: &SlowFastDecomposition, ug: f64, phi: f64) -> Result<Vec2> {
    Ok(slow_manifold_current(x, d, ug, phi)? - slow_manifold_current(0.0, d, ug, phi)?)
}

/// `∂z_s/∂x = u_{g,φ} (2a(b+x) + j(a² − (b+x)²)) / (a² + (b+x)²)²`.
pub fn dzs_dx(x: f64, d: &SlowFastDecomposition, ug: f64, phi: f64) -> Result<Vec2> {
    let den = d.denom(x)?;
    let w = d.b + x;
    let num = Vec2::new(2.0 * d.a * w, d.a * d.a - w * w);
    Ok(ug_phi(ug, phi).cmul(num).scale(1.0 / (den * den)))
}

/// Reduced slow dynamics `f_s(x) = −u_g x / √(a² + (b+x)²)` in τ-time.
pub fn reduced_slow_rhs(x: f64, d: &SlowFastDecomposition, ug: f64) -> Result<f64> {
    Ok(-ug * x / d.denom(x)?.sqrt())
}
