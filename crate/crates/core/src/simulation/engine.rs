use crate::analysis::solve_equilibrium;
use crate::controllers::gfl::gfl_steady_state;
use crate::controllers::{
    dcvoc_rhs, droop_gfm_rhs, dvoc_rhs, gfl_current_command, lvrt_refs_split, pll_gfl_rhs, project_outward, saturate,
    DcvocDeriv, DcvocParams, DcvocState, DroopGfmState, DvocState, LvrtMonitor, PllGflState,
};
use crate::error::{Error, Result};
use crate::frame::{apparent_power, Vec2};
use crate::network::GridModel;

use super::classify::{classify, equilibrium_newton};
use super::{
    Classification, ControllerSpec, ControllerState, RunOutcome, Sample, Scenario, TimeSeries, DIVERGENCE_CAP,
};

/// Grid voltage and active references for one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    pub t: f64,
    pub ug: f64,
    pub p_ref: f64,
    pub q_ref: f64,
    pub in_lvrt: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub state: ControllerState,
    /// Saturation projection or clamp was active during the step.
    pub saturated: bool,
    /// Largest magnitude among the non-angle states and the per-unit
    /// frequency channel, used for the divergence cap.
    pub monitor: f64,
}

/// Stateful driver for one scenario. The only state carried between steps
/// besides the controller state is the LVRT latch.
pub struct Simulator<'a> {
    sc: &'a Scenario,
    grid: GridModel,
    in_lvrt: bool,
}

fn rk4<S: Copy, D: Copy>(
    s: S,
    h: f64,
    axpy: impl Fn(S, f64, D) -> S,
    mut f: impl FnMut(S) -> Result<D>,
) -> Result<(S, D)> {
    let k1 = f(s)?;
    let k2 = f(axpy(s, h / 2.0, k1))?;
    let k3 = f(axpy(s, h / 2.0, k2))?;
    let k4 = f(axpy(s, h, k3))?;
    let next = axpy(axpy(axpy(axpy(s, h / 6.0, k1), h / 3.0, k2), h / 3.0, k3), h / 6.0, k4);
    Ok((next, k1))
}

/// `(u − u_g) / (R_g + jL_g)`.
fn line_current(grid: &GridModel, u: Vec2, ug: f64) -> Vec2 {
    let z = Vec2::new(grid.rg, grid.lg);
    (u - Vec2::new(ug, 0.0)).cmul(z.conj()).scale(1.0 / z.norm_sq())
}

impl<'a> Simulator<'a> {
    pub fn new(sc: &'a Scenario) -> Result<Self> {
        sc.validate()?;
        Ok(Simulator { sc, grid: sc.grid.snapped(sc.dt), in_lvrt: false })
    }

    pub fn scenario(&self) -> &Scenario {
        self.sc
    }

    /// Grid with event edges snapped to the step grid.
    pub fn grid(&self) -> &GridModel {
        &self.grid
    }

    pub fn time(&self, k: u64) -> f64 {
        k as f64 * self.sc.dt
    }

    /// Evaluates the LVRT schedule at the start of step `k` and latches its flag.
    pub fn operating_point(&mut self, state: &ControllerState, k: u64) -> OperatingPoint {
        let t = self.time(k);
        let ug = self.grid.ug_at(t);
        let (p0, q0) = self.sc.controller.base_refs();
        let mut op = OperatingPoint { t, ug, p_ref: p0, q_ref: q0, in_lvrt: false };
        if let (Some(cfg), ControllerState::Dcvoc(s)) = (&self.sc.lvrt, state) {
            let u_mag = self.grid.terminal_voltage_at(s.i, ug).norm();
            let detect = match cfg.monitor {
                LvrtMonitor::Split => ug,
                LvrtMonitor::Terminal => u_mag,
            };
            let r = lvrt_refs_split(detect, u_mag, cfg, p0, q0, self.in_lvrt);
            self.in_lvrt = r.in_lvrt;
            op.p_ref = r.p_ref;
            op.q_ref = r.q_ref;
            op.in_lvrt = r.in_lvrt;
        }
        op
    }

    fn dcvoc_params(&self, base: &DcvocParams, op: &OperatingPoint) -> DcvocParams {
        if op.in_lvrt {
            base.with_refs(op.p_ref, op.q_ref)
        } else {
            *base
        }
    }

    /// One fixed step from `op.t` to `op.t + dt`.
    pub fn step(&self, state: &ControllerState, op: &OperatingPoint) -> Result<StepReport> {
        let h = self.sc.dt;
        let wb = self.sc.omega_b;
        let grid = &self.grid;
        let ug = op.ug;
        let omega_g = grid.omega_g;
        match (&self.sc.controller, *state) {
            (ControllerSpec::Dcvoc(base), ControllerState::Dcvoc(s)) => {
                let params = self.dcvoc_params(base, op);
                // The active set is fixed for the whole step.
                let on_bound = s.i.norm() >= params.i_max * (1.0 - 1e-9);
                let mut saturated = false;
                let (mut next, _) = rk4(s, h, DcvocState::axpy, |x: DcvocState| -> Result<DcvocDeriv> {
                    let u = grid.terminal_voltage_at(x.i, ug);
                    let d = dcvoc_rhs(x, u, &params)?;
                    if !on_bound {
                        return Ok(d.scale(wb));
                    }
                    let (d, sat) = project_outward(x, d);
                    saturated |= sat;
                    Ok(d.scale(wb))
                })?;
                let mag = next.i.norm();
                if mag > params.i_max {
                    next.i = next.i.scale(params.i_max / mag);
                    saturated = true;
                }
                Ok(StepReport {
                    state: ControllerState::Dcvoc(next),
                    saturated,
                    monitor: next.i.max_abs().max(next.omega_delta.abs()),
                })
            }
            (ControllerSpec::Gfl(p), ControllerState::Gfl(s)) => {
                let mut saturated = false;
                let mut freq = 0.0f64;
                let (next, _) = rk4(s, h, PllGflState::axpy, |x: PllGflState| -> Result<PllGflState> {
                    let cmd = gfl_current_command(&x, grid, ug, p);
                    saturated |= cmd.saturated(p.i_max);
                    let i = Vec2::from_polar(cmd.mag, x.theta);
                    let u = grid.terminal_voltage_at(i, ug);
                    let d = pll_gfl_rhs(&x, u, cmd, p, omega_g, wb);
                    freq = freq.max(((d.theta_dot_abs - p.omega0) / wb).abs());
                    Ok(d.d)
                })?;
                Ok(StepReport {
                    state: ControllerState::Gfl(next),
                    saturated,
                    monitor: next.xi_pll.abs().max(next.xi_p.abs()).max(freq),
                })
            }
            (ControllerSpec::Dvoc(p), ControllerState::Dvoc(s)) => {
                let dw = p.omega0 - omega_g;
                let mut freq = 0.0f64;
                let axpy = |a: DvocState, k: f64, d: Vec2| DvocState { u: a.u + d.scale(k) };
                let (next, _) = rk4(s, h, axpy, |x: DvocState| -> Result<Vec2> {
                    let i = line_current(grid, x.u, ug);
                    let d = dvoc_rhs(x, i, p)?;
                    freq = freq.max((x.u.cross(d) / x.u.norm_sq()).abs());
                    Ok(d.scale(wb) + x.u.perp().scale(dw))
                })?;
                let i = line_current(grid, next.u, ug);
                Ok(StepReport {
                    state: ControllerState::Dvoc(next),
                    saturated: false,
                    monitor: next.u.max_abs().max(i.max_abs()).max(freq),
                })
            }
            (ControllerSpec::Droop(p), ControllerState::Droop(s)) => {
                let mut freq = 0.0f64;
                let axpy = |a: DroopGfmState, k: f64, d: (f64, f64)| DroopGfmState {
                    theta_u: a.theta_u + k * d.0,
                    u: a.u + k * d.1,
                };
                let (next, _) = rk4(s, h, axpy, |x: DroopGfmState| -> Result<(f64, f64)> {
                    let i = line_current(grid, x.voltage(), ug);
                    let (th, du) = droop_gfm_rhs(x, i, p, wb)?;
                    freq = freq.max(((th - p.omega0) / wb).abs());
                    Ok((th - omega_g, du))
                })?;
                let i = line_current(grid, next.voltage(), ug);
                Ok(StepReport {
                    state: ControllerState::Droop(next),
                    saturated: false,
                    monitor: next.u.abs().max(i.max_abs()).max(freq),
                })
            }
            _ => Err(Error::InvalidParameter("state does not match controller".into())),
        }
    }

    /// Captured quantities at the start of a step.
    pub fn observe(&self, state: &ControllerState, op: &OperatingPoint) -> Sample {
        let grid = &self.grid;
        let ug = op.ug;
        let wb = self.sc.omega_b;
        let (i, u, omega, saturated) = match (&self.sc.controller, *state) {
            (ControllerSpec::Dcvoc(base), ControllerState::Dcvoc(s)) => {
                let params = self.dcvoc_params(base, op);
                let u = grid.terminal_voltage_at(s.i, ug);
                let mag = s.i.norm();
                let sat = mag >= params.i_max * (1.0 - 1e-9)
                    || dcvoc_rhs(s, u, &params).is_ok_and(|d| saturate(s, d, params.i_max).1);
                (s.i, u, s.omega_delta, sat)
            }
            (ControllerSpec::Gfl(p), ControllerState::Gfl(s)) => {
                let cmd = gfl_current_command(&s, grid, ug, p);
                let i = Vec2::from_polar(cmd.mag, s.theta);
                let u = grid.terminal_voltage_at(i, ug);
                let d = pll_gfl_rhs(&s, u, cmd, p, grid.omega_g, wb);
                (i, u, (d.theta_dot_abs - p.omega0) / wb, cmd.saturated(p.i_max))
            }
            (ControllerSpec::Dvoc(p), ControllerState::Dvoc(s)) => {
                let i = line_current(grid, s.u, ug);
                let w = dvoc_rhs(s, i, p).map_or(f64::NAN, |d| s.u.cross(d) / s.u.norm_sq());
                (i, s.u, w, false)
            }
            (ControllerSpec::Droop(p), ControllerState::Droop(s)) => {
                let u = s.voltage();
                let i = line_current(grid, u, ug);
                let w = droop_gfm_rhs(s, i, p, wb).map_or(f64::NAN, |(th, _)| (th - p.omega0) / wb);
                (i, u, w, false)
            }
            _ => (Vec2::ZERO, Vec2::ZERO, f64::NAN, false),
        };
        let (pw, qw) = apparent_power(u, i);
        Sample {
            t: op.t,
            i,
            u,
            p: pw,
            q: qw,
            omega_delta: omega,
            p_ref_active: op.p_ref,
            q_ref_active: op.q_ref,
            saturated,
            in_lvrt: op.in_lvrt,
        }
    }
}

/// One step at index `k`, re-evaluating the LVRT schedule first.
pub fn step(sim: &mut Simulator<'_>, state: &ControllerState, k: u64) -> Result<StepReport> {
    let op = sim.operating_point(state, k);
    sim.step(state, &op)
}

/// Pre-fault steady state of the scenario's controller.
pub fn initial_state_from_equilibrium(sc: &Scenario) -> Result<ControllerState> {
    let grid = sc.grid.snapped(sc.dt);
    let ug = grid.ug_at(0.0);
    match &sc.controller {
        ControllerSpec::Dcvoc(p) => {
            let eq = solve_equilibrium(p, &grid, ug)?;
            Ok(ControllerState::Dcvoc(DcvocState::new(eq.i_s, eq.omega_delta_s)))
        }
        ControllerSpec::Gfl(p) => Ok(ControllerState::Gfl(gfl_steady_state(p, &grid, ug, sc.omega_b).state)),
        ControllerSpec::Dvoc(p) => {
            let guess = ControllerState::Dvoc(DvocState { u: Vec2::new(p.u_ref, 0.0) });
            equilibrium_newton(sc, &grid, ug, guess).ok_or(Error::NoEquilibrium(f64::NAN))
        }
        ControllerSpec::Droop(p) => {
            let guess = ControllerState::Droop(DroopGfmState { theta_u: 0.0, u: p.u_ref });
            equilibrium_newton(sc, &grid, ug, guess).ok_or(Error::NoEquilibrium(f64::NAN))
        }
    }
}

fn is_finite(s: &ControllerState) -> bool {
    s.components().iter().all(|x| x.is_finite())
}

/// Integrates the scenario to `t_end` and classifies the outcome.
/// Errors only for invalid scenarios or a missing initial equilibrium.
pub fn simulate(sc: &Scenario) -> Result<RunOutcome> {
    let mut sim = Simulator::new(sc)?;
    let mut state = match sc.initial_state {
        Some(s) => s,
        None => initial_state_from_equilibrium(sc)?,
    };
    let n = sc.steps();
    let stride = sc.capture_stride as u64;
    let mut series = TimeSeries::new(sc.dt, sc.capture_stride);
    series.samples.reserve((n / stride + 2) as usize);
    let mut forced: Option<Classification> = None;
    let mut stop_reason = None;
    for k in 0..=n {
        let op = sim.operating_point(&state, k);
        if k % stride == 0 || k == n {
            series.samples.push(sim.observe(&state, &op));
        }
        if k == n {
            break;
        }
        match sim.step(&state, &op) {
            Ok(r) => {
                if !is_finite(&r.state) || !r.monitor.is_finite() || r.monitor > DIVERGENCE_CAP {
                    let t = sim.time(k + 1);
                    series.truncated_at = Some(t);
                    forced = Some(Classification::Diverged);
                    stop_reason = Some(format!("state exceeded {DIVERGENCE_CAP} pu at t = {t}"));
                    state = r.state;
                    break;
                }
                state = r.state;
            }
            Err(e @ Error::CurrentFloor { .. }) => {
                series.truncated_at = Some(op.t);
                forced = Some(Classification::FloorViolation);
                stop_reason = Some(format!("{e} at t = {}", op.t));
                break;
            }
            Err(e) => {
                series.truncated_at = Some(op.t);
                forced = Some(Classification::Diverged);
                stop_reason = Some(format!("{e} at t = {}", op.t));
                break;
            }
        }
    }
    let (classification, settle) = match forced {
        Some(c) => (c, None),
        None => classify(&series, sc, sim.grid()),
    };
    Ok(RunOutcome { series, classification, final_state: state, settle_time: settle, stop_reason })
}
