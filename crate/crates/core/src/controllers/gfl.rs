//! Conventional PLL-based grid-following control with a PI power loop.
//!
//! ```text
//! θ̇_i = ω_0 + k_pllp u_q + k_plli ∫u_q dt
//! i   = k_pp (p_ref − p) + k_pi ∫(p_ref − p) dt
//! ```
//!
//! The current is injected ideally along `θ_i`. Because `p` depends on the
//! injected current through the line, the magnitude is the consistent root
//! of that algebraic loop, clamped to `[0, i_max]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frame::{apparent_power, Vec2};
use crate::network::GridModel;
use crate::OMEGA_NOMINAL;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PllGflParams {
    pub kpllp: f64,
    pub kplli: f64,
    pub kpp: f64,
    pub kpi: f64,
    pub p_ref: f64,
    pub omega0: f64,
    pub i_max: f64,
    /// Bound (pu) on the PLL frequency correction; the PLL integrator holds
    /// while the bound is active. `None` leaves the PLL unlimited.
    pub pll_limit: Option<f64>,
}

impl PllGflParams {
    /// kpllp = 0.5, kplli = 20, kpp = 0.5, kpi = 20, p_ref = 1, i_max = 1.2,
    /// no PLL limit.
    pub fn baseline() -> Self {
        PllGflParams {
            kpllp: 0.5,
            kplli: 20.0,
            kpp: 0.5,
            kpi: 20.0,
            p_ref: 1.0,
            omega0: OMEGA_NOMINAL,
            i_max: 1.2,
            pll_limit: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.kpllp, self.kplli, self.kpp, self.kpi].iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(invalid("gfl gains must be finite and > 0"));
        }
        if !(self.i_max > 0.0) || !self.p_ref.is_finite() || !self.omega0.is_finite() {
            return Err(invalid("gfl i_max must be > 0 and references finite"));
        }
        if self.pll_limit.is_some_and(|l| !(l > 0.0)) {
            return Err(invalid("gfl pll_limit must be > 0"));
        }
        Ok(())
    }
}

/// `θ_i` is measured from the grid voltage angle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PllGflState {
    pub theta: f64,
    pub xi_pll: f64,
    pub xi_p: f64,
}

impl PllGflState {
    pub fn axpy(self, h: f64, d: PllGflState) -> Self {
        PllGflState {
            theta: self.theta + h * d.theta,
            xi_pll: self.xi_pll + h * d.xi_pll,
            xi_p: self.xi_p + h * d.xi_p,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.xi_pll.is_finite() && self.xi_p.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurrentCommand {
    /// Clamped magnitude actually injected.
    pub mag: f64,
    /// Unclamped loop solution, used for anti-windup.
    pub raw: f64,
}

impl CurrentCommand {
    pub fn saturated(&self, i_max: f64) -> bool {
        self.raw >= i_max
    }
}

/// Solves `I = k_pp (p_ref − p(I)) + k_pi ξ_p` with `p(I) = u_g I cos θ + R_g I²`.
pub fn gfl_current_command(state: &PllGflState, grid: &GridModel, ug: f64, params: &PllGflParams) -> CurrentCommand {
    let a = params.kpp * grid.rg;
    let b = 1.0 + params.kpp * ug * state.theta.cos();
    let c = params.kpp * params.p_ref + params.kpi * state.xi_p;
    let raw = if a > 0.0 {
        let disc = b * b + 4.0 * a * c;
        if disc < 0.0 {
            -b / (2.0 * a)
        } else if b > 0.0 {
            2.0 * c / (b + disc.sqrt())
        } else {
            (-b + disc.sqrt()) / (2.0 * a)
        }
    } else {
        c / b
    };
    let mag = if raw.is_nan() { 0.0 } else { raw.clamp(0.0, params.i_max) };
    CurrentCommand { mag, raw }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PllGflDeriv {
    /// `θ` rate is relative to the grid frame.
    pub d: PllGflState,
    pub i_command: Vec2,
    pub u_q: f64,
    /// Absolute PLL frequency `θ̇_i` (rad/s).
    pub theta_dot_abs: f64,
    pub p: f64,
}

/// Derivatives in physical time for a given terminal voltage and command.
pub fn pll_gfl_rhs(
    state: &PllGflState,
    u: Vec2,
    cmd: CurrentCommand,
    params: &PllGflParams,
    omega_g: f64,
    omega_b: f64,
) -> PllGflDeriv {
    let (s, c) = state.theta.sin_cos();
    let u_q = -u.a1 * s + u.a2 * c;
    let raw_pll = params.kpllp * u_q + params.kplli * state.xi_pll;
    let lim = params.pll_limit.unwrap_or(f64::INFINITY);
    let pll = raw_pll.clamp(-lim, lim);
    let pll_frozen = (raw_pll >= lim && u_q > 0.0) || (raw_pll <= -lim && u_q < 0.0);
    let i_command = Vec2::new(cmd.mag * c, cmd.mag * s);
    let (p, _) = apparent_power(u, i_command);
    let err = params.p_ref - p;
    let frozen = (cmd.raw >= params.i_max && err > 0.0) || (cmd.raw <= 0.0 && err < 0.0);
    PllGflDeriv {
        d: PllGflState {
            theta: (params.omega0 - omega_g) + omega_b * pll,
            xi_pll: if pll_frozen { 0.0 } else { omega_b * u_q },
            xi_p: if frozen { 0.0 } else { omega_b * err },
        },
        i_command,
        u_q,
        theta_dot_abs: params.omega0 + omega_b * pll,
        p,
    }
}

/// Locked steady state for a given grid voltage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GflSteadyState {
    pub state: PllGflState,
    pub i_mag: f64,
    pub p: f64,
    /// False when no operating point with `p = p_ref` exists within `i_max`;
    /// the state is then the maximum-power point.
    pub exact: bool,
}

/// Finds the smallest current with `p = p_ref` and `u_q = 0`
/// (`sin θ = L_g I / u_g`), then back-computes the integrators.
pub fn gfl_steady_state(params: &PllGflParams, grid: &GridModel, ug: f64, omega_b: f64) -> GflSteadyState {
    let (rg, lg) = (grid.rg, grid.lg);
    let i_hi = if lg > 0.0 { params.i_max.min(ug / lg) } else { params.i_max };
    let power = |i: f64| {
        let s = (lg * i / ug).clamp(-1.0, 1.0);
        ug * i * (1.0 - s * s).sqrt() + rg * i * i
    };
    let n = 4000;
    let grid_pt = |k: usize| i_hi * k as f64 / n as f64;
    let bracket = (0..n).find(|&k| power(grid_pt(k)) < params.p_ref && power(grid_pt(k + 1)) >= params.p_ref);
    let (i_mag, exact) = match bracket {
        Some(k) => {
            let (mut lo, mut hi) = (grid_pt(k), grid_pt(k + 1));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if power(mid) < params.p_ref {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            (0.5 * (lo + hi), true)
        }
        None => {
            let k = (0..=n).max_by(|&a, &b| power(grid_pt(a)).total_cmp(&power(grid_pt(b)))).unwrap_or(n);
            (grid_pt(k), false)
        }
    };
    let theta = (lg * i_mag / ug).clamp(-1.0, 1.0).asin();
    let p = power(i_mag);
    let xi_p = (i_mag - params.kpp * (params.p_ref - p)) / params.kpi;
    let xi_pll = -(params.omega0 - grid.omega_g) / (omega_b * params.kplli);
    GflSteadyState { state: PllGflState { theta, xi_pll, xi_p }, i_mag, p, exact }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_cmd() -> CurrentCommand {
        CurrentCommand { mag: 1.0, raw: 1.0 }
    }

    #[test]
    fn locked_pll() {
        let p = PllGflParams::baseline();
        let d = pll_gfl_rhs(&PllGflState::default(), Vec2::new(1.0, 0.0), unit_cmd(), &p, p.omega0, 1.0);
        assert_eq!(d.u_q, 0.0);
        assert_eq!(d.theta_dot_abs, p.omega0);
        assert_eq!(d.d.theta, 0.0);
    }

    #[test]
    fn quadrature_error() {
        let p = PllGflParams::baseline();
        let s = PllGflState { theta: 0.0, xi_pll: 0.3, xi_p: 0.0 };
        let d = pll_gfl_rhs(&s, Vec2::new(0.0, 1.0), unit_cmd(), &p, p.omega0, 1.0);
        assert_eq!(d.u_q, 1.0);
        assert_abs_diff_eq!(d.theta_dot_abs, p.omega0 + p.kpllp + p.kplli * 0.3, epsilon = 1e-12);
    }

    #[test]
    fn pll_limit_clamps_and_holds_integrator() {
        let p = PllGflParams { pll_limit: Some(0.1), ..PllGflParams::baseline() };
        let s = PllGflState { theta: 0.0, xi_pll: 0.3, xi_p: 0.0 };
        let d = pll_gfl_rhs(&s, Vec2::new(0.0, 1.0), unit_cmd(), &p, p.omega0, 1.0);
        assert_abs_diff_eq!(d.theta_dot_abs, p.omega0 + 0.1, epsilon = 1e-12);
        assert_eq!(d.d.xi_pll, 0.0);
        // An error pulling back off the bound still integrates.
        let d = pll_gfl_rhs(&s, Vec2::new(0.0, -0.1), unit_cmd(), &p, p.omega0, 1.0);
        assert_eq!(d.d.xi_pll, -0.1);
        assert!(PllGflParams { pll_limit: Some(0.0), ..p }.validate().is_err());
    }

    #[test]
    fn command_solves_algebraic_loop() {
        let p = PllGflParams::baseline();
        let grid = GridModel::new(1.0, 0.2, 0.25, OMEGA_NOMINAL).unwrap();
        let s = PllGflState { theta: 0.3, xi_pll: 0.0, xi_p: 0.04 };
        let cmd = gfl_current_command(&s, &grid, 1.0, &p);
        let i = Vec2::from_polar(cmd.mag, s.theta);
        let u = grid.terminal_voltage_at(i, 1.0);
        let (pw, _) = apparent_power(u, i);
        assert_abs_diff_eq!(cmd.mag, p.kpp * (p.p_ref - pw) + p.kpi * s.xi_p, epsilon = 1e-12);
    }

    #[test]
    fn command_clamps_and_freezes_integrator() {
        let p = PllGflParams::baseline();
        let grid = GridModel::new(0.2, 0.2, 0.25, OMEGA_NOMINAL).unwrap();
        let s = PllGflState { theta: 0.0, xi_pll: 0.0, xi_p: 1.0 };
        let cmd = gfl_current_command(&s, &grid, 0.2, &p);
        assert!(cmd.raw > p.i_max);
        assert_eq!(cmd.mag, p.i_max);
        let u = grid.terminal_voltage_at(Vec2::new(cmd.mag, 0.0), 0.2);
        let d = pll_gfl_rhs(&s, u, cmd, &p, p.omega0, 1.0);
        assert_eq!(d.d.xi_p, 0.0);

        let low = PllGflState { theta: 0.0, xi_pll: 0.0, xi_p: -1.0 };
        let cmd = gfl_current_command(&low, &grid, 0.2, &p);
        assert_eq!(cmd.mag, 0.0);
    }

    #[test]
    fn steady_state_case2_delivers_reference() {
        let p = PllGflParams::baseline();
        let grid = GridModel::new(1.0, 0.2, 0.25, OMEGA_NOMINAL).unwrap();
        let ss = gfl_steady_state(&p, &grid, 1.0, OMEGA_NOMINAL);
        assert!(ss.exact);
        let cmd = gfl_current_command(&ss.state, &grid, 1.0, &p);
        assert_abs_diff_eq!(cmd.mag, ss.i_mag, epsilon = 1e-9);
        let i = Vec2::from_polar(cmd.mag, ss.state.theta);
        let u = grid.terminal_voltage_at(i, 1.0);
        let d = pll_gfl_rhs(&ss.state, u, cmd, &p, grid.omega_g, OMEGA_NOMINAL);
        assert_abs_diff_eq!(d.p, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d.u_q, 0.0, epsilon = 1e-12);
        assert!(d.d.xi_p.abs() < 1e-6 && d.d.theta.abs() < 1e-9);
    }

    #[test]
    fn steady_state_case1_has_no_unit_power_point() {
        let p = PllGflParams::baseline();
        let grid = GridModel::new(1.0, 0.05, 0.65, OMEGA_NOMINAL).unwrap();
        let ss = gfl_steady_state(&p, &grid, 1.0, OMEGA_NOMINAL);
        assert!(!ss.exact);
        assert!(ss.p < 0.9);
    }
}
