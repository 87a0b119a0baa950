//! Monte-Carlo estimate of the region of attraction.
//!
//! Each sample draws `‖i(0)‖ ∈ [i_floor, r]`, `δ_i(0) ∈ [−π, π]` and
//! `ω_Δ(0) ∈ [−r, r]` from its own ChaCha stream (`seed`, stream = sample
//! id), so results do not depend on the number of workers.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::solve_equilibrium;
use crate::controllers::gfl::gfl_steady_state;
use crate::controllers::{gfl_current_command, pll_gfl_rhs, DcvocState, PllGflState};
use crate::error::{invalid, Error, Result};
use crate::frame::Vec2;
use crate::simulation::{ControllerSpec, ControllerState, Scenario, Simulator, DIVERGENCE_CAP};
use crate::I_FLOOR;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoaOptions {
    pub t_max: f64,
    pub tolerance: f64,
    /// Time the state must stay within `tolerance` to count as converged.
    pub hold: f64,
}

impl Default for RoaOptions {
    fn default() -> Self {
        RoaOptions { t_max: 10.0, tolerance: 1e-4, hold: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoaSample {
    pub id: u64,
    pub i0: Vec2,
    pub omega0: f64,
    pub converged: bool,
    pub t_converged: Option<f64>,
    pub final_distance: f64,
    pub outcome: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoaResult {
    pub fraction_converged: f64,
    pub samples: Vec<RoaSample>,
    /// Non-converged sample with the largest final distance, else the
    /// slowest converged one.
    pub worst_id: u64,
}

impl RoaResult {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let map = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "id",
            "i_alpha0",
            "i_beta0",
            "omega_delta0",
            "outcome",
            "converged",
            "t_converged",
            "final_distance",
        ])
        .map_err(map)?;
        for s in &self.samples {
            w.write_record([
                s.id.to_string(),
                format!("{:e}", s.i0.a1),
                format!("{:e}", s.i0.a2),
                format!("{:e}", s.omega0),
                s.outcome.to_string(),
                u8::from(s.converged).to_string(),
                s.t_converged.map_or(String::new(), |t| format!("{t:e}")),
                format!("{:e}", s.final_distance),
            ])
            .map_err(map)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Deterministic initial condition for sample `id`.
pub fn draw_initial(seed: u64, id: u64, radius: f64) -> (Vec2, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let mag = rng.random_range(I_FLOOR..=radius.max(I_FLOOR));
    let delta = rng.random_range(-PI..=PI);
    let omega = rng.random_range(-radius..=radius);
    (Vec2::from_polar(mag, delta), omega)
}

/// Equilibrium in observed coordinates: current vector and per-unit
/// frequency. A PLL loop that cannot deliver `p_ref` is measured against its
/// maximum-power point, which no trajectory settles on.
fn target(sc: &Scenario) -> Result<(Vec2, f64)> {
    let grid = sc.grid.snapped(sc.dt);
    let ug = grid.ug_at(0.0);
    match &sc.controller {
        ControllerSpec::Dcvoc(p) => Ok((solve_equilibrium(p, &grid, ug)?.i_s, 0.0)),
        ControllerSpec::Gfl(p) => {
            let ss = gfl_steady_state(p, &grid, ug, sc.omega_b);
            Ok((Vec2::from_polar(ss.i_mag, ss.state.theta), (grid.omega_g - p.omega0) / sc.omega_b))
        }
        _ => Err(invalid("region-of-attraction sampling supports dcvoc and gfl")),
    }
}

fn initial_state(sc: &Scenario, i0: Vec2, w0: f64) -> ControllerState {
    match &sc.controller {
        ControllerSpec::Gfl(p) => {
            ControllerState::Gfl(PllGflState { theta: i0.angle(), xi_pll: w0 / p.kplli, xi_p: i0.norm() / p.kpi })
        }
        _ => ControllerState::Dcvoc(DcvocState::new(i0, w0)),
    }
}

fn observed(sc: &Scenario, sim: &Simulator<'_>, s: &ControllerState, ug: f64) -> (Vec2, f64) {
    match (&sc.controller, s) {
        (ControllerSpec::Gfl(p), ControllerState::Gfl(x)) => {
            let grid = sim.grid();
            let cmd = gfl_current_command(x, grid, ug, p);
            let i = Vec2::from_polar(cmd.mag, x.theta);
            let d = pll_gfl_rhs(x, grid.terminal_voltage_at(i, ug), cmd, p, grid.omega_g, sc.omega_b);
            (i, (d.theta_dot_abs - p.omega0) / sc.omega_b)
        }
        (_, ControllerState::Dcvoc(x)) => (x.i, x.omega_delta),
        _ => (Vec2::ZERO, f64::NAN),
    }
}

fn run_one(sc: &Scenario, id: u64, i0: Vec2, w0: f64, eq: (Vec2, f64), opts: &RoaOptions) -> RoaSample {
    let mut sample = RoaSample {
        id,
        i0,
        omega0: w0,
        converged: false,
        t_converged: None,
        final_distance: f64::NAN,
        outcome: "not_converged",
    };
    let Ok(mut sim) = Simulator::new(sc) else {
        sample.outcome = "invalid";
        return sample;
    };
    let mut state = initial_state(sc, i0, w0);
    let n = (opts.t_max / sc.dt).round() as u64;
    let hold = (opts.hold / sc.dt).round() as u64;
    let mut inside_since: Option<u64> = None;
    for k in 0..=n {
        let op = sim.operating_point(&state, k);
        let (i, w) = observed(sc, &sim, &state, op.ug);
        let dist = (i - eq.0).norm().hypot(w - eq.1);
        sample.final_distance = dist;
        if dist < opts.tolerance {
            let k0 = *inside_since.get_or_insert(k);
            if k - k0 >= hold {
                sample.converged = true;
                sample.t_converged = Some(sim.time(k0));
                sample.outcome = "converged";
                return sample;
            }
        } else {
            inside_since = None;
        }
        if k == n {
            break;
        }
        match sim.step(&state, &op) {
            Ok(r) if r.monitor.is_finite() && r.monitor <= DIVERGENCE_CAP => state = r.state,
            Ok(_) => {
                sample.outcome = "diverged";
                return sample;
            }
            Err(Error::CurrentFloor { .. }) => {
                sample.outcome = "floor_violation";
                return sample;
            }
            Err(_) => {
                sample.outcome = "diverged";
                return sample;
            }
        }
    }
    sample
}

/// Integrates `n` randomly initialised trajectories of the scenario's
/// controller (events are ignored) and reports the converged fraction.
pub fn roa_sample(scenario: &Scenario, n: usize, radius: f64, seed: u64, opts: &RoaOptions) -> Result<RoaResult> {
    if n == 0 {
        return Err(invalid("roa needs n >= 1"));
    }
    if !(radius > I_FLOOR) {
        return Err(invalid(format!("roa radius must exceed {I_FLOOR}")));
    }
    let sc = Scenario { grid: scenario.grid.clone().with_events(Vec::new())?, initial_state: None, ..scenario.clone() };
    sc.validate()?;
    let eq = target(&sc)?;
    let samples: Vec<RoaSample> = (0..n as u64)
        .into_par_iter()
        .map(|id| {
            let (i0, w0) = draw_initial(seed, id, radius);
            run_one(&sc, id, i0, w0, eq, opts)
        })
        .collect();
    Ok(summarize(samples))
}

/// Same as [`roa_sample`] for explicitly given initial conditions.
pub fn roa_from_points(scenario: &Scenario, points: &[(Vec2, f64)], opts: &RoaOptions) -> Result<RoaResult> {
    let sc = Scenario { grid: scenario.grid.clone().with_events(Vec::new())?, initial_state: None, ..scenario.clone() };
    sc.validate()?;
    let eq = target(&sc)?;
    let samples =
        points.par_iter().enumerate().map(|(id, &(i0, w0))| run_one(&sc, id as u64, i0, w0, eq, opts)).collect();
    Ok(summarize(samples))
}

fn summarize(samples: Vec<RoaSample>) -> RoaResult {
    let conv = samples.iter().filter(|s| s.converged).count();
    let worst = samples
        .iter()
        .filter(|s| !s.converged)
        .max_by(|a, b| a.final_distance.total_cmp(&b.final_distance))
        .or_else(|| samples.iter().max_by(|a, b| a.t_converged.unwrap_or(0.0).total_cmp(&b.t_converged.unwrap_or(0.0))))
        .map_or(0, |s| s.id);
    RoaResult { fraction_converged: conv as f64 / samples.len() as f64, samples, worst_id: worst }
}
