use crate::analysis::solve_equilibrium;
use crate::controllers::gfl::gfl_steady_state;
use crate::controllers::{droop_gfm_rhs, dvoc_rhs, DroopGfmState, DvocState};
use crate::frame::{Mat2, Vec2};
use crate::network::GridModel;

use super::{Classification, ControllerSpec, ControllerState, Sample, Scenario, TimeSeries};

/// Length (s) of the trailing window inspected for settling.
pub const SETTLE_WINDOW: f64 = 0.5;
/// Allowed deviation (pu) from the window mean.
pub const SETTLE_BAND: f64 = 1e-3;
/// Allowed distance (pu) between the window mean and the analytic equilibrium.
pub const EQUILIBRIUM_BAND: f64 = 1e-2;

fn mean(window: &[Sample]) -> [f64; 9] {
    let mut m = [0.0; 9];
    for s in window {
        for (a, x) in m.iter_mut().zip(s.signals()) {
            *a += x;
        }
    }
    m.map(|x| x / window.len() as f64)
}

fn within(window: &[Sample], m: &[f64; 9], band: f64) -> bool {
    window.iter().all(|s| s.signals().iter().zip(m).all(|(x, c)| (x - c).abs() <= band))
}

/// Earliest sample time after which every signal stays within `SETTLE_BAND`
/// of the final-window mean.
pub fn settle_time(series: &TimeSeries) -> Option<f64> {
    let t_last = series.last()?.t;
    let window = series.since(t_last - SETTLE_WINDOW + 1e-9);
    if window.is_empty() {
        return None;
    }
    let m = mean(window);
    let outside =
        series.samples.iter().rposition(|s| s.signals().iter().zip(&m).any(|(x, c)| (x - c).abs() > SETTLE_BAND));
    match outside {
        None => Some(series.samples[0].t),
        Some(k) if k + 1 < series.samples.len() => Some(series.samples[k + 1].t),
        Some(_) => None,
    }
}

/// Residual of the voltage-source controllers in per-unit time, grid frame.
fn voltage_residual(sc: &Scenario, grid: &GridModel, ug: f64, s: &ControllerState) -> Option<Vec2> {
    let z = Vec2::new(grid.rg, grid.lg);
    let line = |u: Vec2| (u - Vec2::new(ug, 0.0)).cmul(z.conj()).scale(1.0 / z.norm_sq());
    let wb = sc.omega_b;
    match (&sc.controller, s) {
        (ControllerSpec::Dvoc(p), ControllerState::Dvoc(x)) => {
            let d = dvoc_rhs(*x, line(x.u), p).ok()?;
            Some(d + x.u.perp().scale((p.omega0 - grid.omega_g) / wb))
        }
        (ControllerSpec::Droop(p), ControllerState::Droop(x)) => {
            let (th, du) = droop_gfm_rhs(*x, line(x.voltage()), p, wb).ok()?;
            Some(Vec2::new((th - grid.omega_g) / wb, du / wb))
        }
        _ => None,
    }
}

fn pack(s: &ControllerState) -> Vec2 {
    match s {
        ControllerState::Dvoc(x) => x.u,
        ControllerState::Droop(x) => Vec2::new(x.theta_u, x.u),
        _ => Vec2::ZERO,
    }
}

fn unpack(like: &ControllerState, v: Vec2) -> ControllerState {
    match like {
        ControllerState::Droop(_) => ControllerState::Droop(DroopGfmState { theta_u: v.a1, u: v.a2 }),
        _ => ControllerState::Dvoc(DvocState { u: v }),
    }
}

/// Newton iteration with a central-difference Jacobian for the dVOC and
/// droop equilibria. `None` if it fails to reach a residual of 1e-12.
pub fn equilibrium_newton(sc: &Scenario, grid: &GridModel, ug: f64, guess: ControllerState) -> Option<ControllerState> {
    let f = |v: Vec2| voltage_residual(sc, grid, ug, &unpack(&guess, v));
    let mut x = pack(&guess);
    for _ in 0..100 {
        let r = f(x)?;
        if r.norm() < 1e-12 {
            return Some(unpack(&guess, x));
        }
        let h = 1e-7;
        let c1 = (f(x + Vec2::new(h, 0.0))? - f(x - Vec2::new(h, 0.0))?).scale(0.5 / h);
        let c2 = (f(x + Vec2::new(0.0, h))? - f(x - Vec2::new(0.0, h))?).scale(0.5 / h);
        let jac = Mat2::new(c1.a1, c2.a1, c1.a2, c2.a2);
        let dx = jac.solve(-r)?;
        let step = dx.norm();
        let dx = if step > 0.2 { dx.scale(0.2 / step) } else { dx };
        x += dx;
        if !x.is_finite() {
            return None;
        }
    }
    None
}

fn equilibrium_matches(sc: &Scenario, grid: &GridModel, last: &Sample, m: &[f64; 9]) -> bool {
    let ug = grid.ug_at(last.t);
    let close = |a: f64, b: f64| (a - b).abs() <= EQUILIBRIUM_BAND;
    match &sc.controller {
        ControllerSpec::Dcvoc(base) => {
            let params = if last.in_lvrt { base.with_refs(last.p_ref_active, last.q_ref_active) } else { *base };
            match solve_equilibrium(&params, grid, ug) {
                Ok(eq) => close(m[0], eq.i_s.a1) && close(m[1], eq.i_s.a2) && close(m[8], eq.omega_delta_s),
                Err(_) => false,
            }
        }
        ControllerSpec::Gfl(p) => {
            let ss = gfl_steady_state(p, grid, ug, sc.omega_b);
            let w = (grid.omega_g - p.omega0) / sc.omega_b;
            ss.exact && close(m[2], ss.i_mag) && close(m[6], p.p_ref) && close(m[8], w)
        }
        ControllerSpec::Dvoc(_) => {
            let guess = ControllerState::Dvoc(DvocState { u: Vec2::new(m[3], m[4]) });
            match equilibrium_newton(sc, grid, ug, guess) {
                Some(ControllerState::Dvoc(e)) => close(m[3], e.u.a1) && close(m[4], e.u.a2),
                _ => false,
            }
        }
        ControllerSpec::Droop(_) => {
            let guess = ControllerState::Droop(DroopGfmState { theta_u: m[4].atan2(m[3]), u: m[5] });
            match equilibrium_newton(sc, grid, ug, guess) {
                Some(ControllerState::Droop(e)) => {
                    let u = e.voltage();
                    close(m[3], u.a1) && close(m[4], u.a2)
                }
                _ => false,
            }
        }
    }
}

/// Converged when the last `SETTLE_WINDOW` stays within `SETTLE_BAND` of
/// its mean and the mean is within `EQUILIBRIUM_BAND` of the analytic
/// equilibrium for the final grid voltage and references; otherwise
/// oscillatory.
pub fn classify(series: &TimeSeries, sc: &Scenario, grid: &GridModel) -> (Classification, Option<f64>) {
    let Some(last) = series.last() else {
        return (Classification::Oscillatory, None);
    };
    let window = series.since(last.t - SETTLE_WINDOW + 1e-9);
    let m = mean(window);
    if window.is_empty() || !within(window, &m, SETTLE_BAND) || !equilibrium_matches(sc, grid, last, &m) {
        return (Classification::Oscillatory, None);
    }
    (Classification::Converged, settle_time(series))
}
