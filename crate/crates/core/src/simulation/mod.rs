//! Fixed-step fourth-order integration of a controller against the
//! algebraic grid, with event snapping, saturation, LVRT scheduling and
//! time-series capture.

mod classify;
mod engine;
mod series;

use serde::{Deserialize, Serialize};

use crate::analysis::{lyapunov_decrease_scan, solve_equilibrium, LyapunovScan, SlowFastDecomposition};
use crate::controllers::{
    DcvocParams, DcvocState, DroopGfmParams, DroopGfmState, DvocParams, DvocState, LvrtConfig, PllGflParams,
    PllGflState,
};
use crate::error::{invalid, Error, Result};
use crate::network::GridModel;
use crate::OMEGA_NOMINAL;

pub use classify::{classify, equilibrium_newton, settle_time, SETTLE_BAND, SETTLE_WINDOW};
pub use engine::{initial_state_from_equilibrium, simulate, step, OperatingPoint, Simulator, StepReport};
pub use series::{Sample, TimeSeries, COLUMNS};

/// State magnitude (pu) beyond which a run is declared diverged.
pub const DIVERGENCE_CAP: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControllerSpec {
    Dcvoc(DcvocParams),
    Gfl(PllGflParams),
    Dvoc(DvocParams),
    Droop(DroopGfmParams),
}

impl ControllerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ControllerSpec::Dcvoc(_) => "dcvoc",
            ControllerSpec::Gfl(_) => "gfl",
            ControllerSpec::Dvoc(_) => "dvoc",
            ControllerSpec::Droop(_) => "droop",
        }
    }

    pub fn omega0(&self) -> f64 {
        match self {
            ControllerSpec::Dcvoc(p) => p.omega0,
            ControllerSpec::Gfl(p) => p.omega0,
            ControllerSpec::Dvoc(p) => p.omega0,
            ControllerSpec::Droop(p) => p.omega0,
        }
    }

    /// Base `(p_ref, q_ref)`.
    pub fn base_refs(&self) -> (f64, f64) {
        match self {
            ControllerSpec::Dcvoc(p) => (p.p_ref, p.q_ref),
            ControllerSpec::Gfl(p) => (p.p_ref, 0.0),
            ControllerSpec::Dvoc(p) => (p.p_ref, p.q_ref),
            ControllerSpec::Droop(p) => (p.p_ref, p.q_ref),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ControllerSpec::Dcvoc(p) => p.validate(),
            ControllerSpec::Gfl(p) => p.validate(),
            ControllerSpec::Dvoc(p) => p.validate(),
            ControllerSpec::Droop(p) => p.validate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ControllerState {
    Dcvoc(DcvocState),
    Gfl(PllGflState),
    Dvoc(DvocState),
    Droop(DroopGfmState),
}

impl ControllerState {
    /// Flat view of the state, for reports and CSV.
    pub fn components(&self) -> Vec<f64> {
        match *self {
            ControllerState::Dcvoc(s) => vec![s.i.a1, s.i.a2, s.omega_delta],
            ControllerState::Gfl(s) => vec![s.theta, s.xi_pll, s.xi_p],
            ControllerState::Dvoc(s) => vec![s.u.a1, s.u.a2],
            ControllerState::Droop(s) => vec![s.theta_u, s.u],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub controller: ControllerSpec,
    pub grid: GridModel,
    pub lvrt: Option<LvrtConfig>,
    pub t_end: f64,
    pub dt: f64,
    /// `None` starts from the pre-fault equilibrium.
    pub initial_state: Option<ControllerState>,
    pub capture_stride: usize,
    /// Time base `ω_b` multiplying the per-unit dynamics; 1 disables it.
    pub omega_b: f64,
    pub seed: u64,
}

impl Scenario {
    pub const DEFAULT_DT: f64 = 1e-4;

    pub fn new(name: impl Into<String>, controller: ControllerSpec, grid: GridModel) -> Self {
        Scenario {
            name: name.into(),
            controller,
            grid,
            lvrt: None,
            t_end: 3.0,
            dt: Self::DEFAULT_DT,
            initial_state: None,
            capture_stride: 1,
            omega_b: OMEGA_NOMINAL,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 1e-3) {
            return Err(invalid(format!("dt must be in (0, 1e-3], got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(invalid("t_end must be > 0"));
        }
        if self.capture_stride < 1 {
            return Err(invalid("capture_stride must be >= 1"));
        }
        if !(self.omega_b > 0.0) || !self.omega_b.is_finite() {
            return Err(invalid("omega_b must be > 0"));
        }
        self.controller.validate()?;
        if let Some(l) = &self.lvrt {
            l.validate()?;
            if !matches!(self.controller, ControllerSpec::Dcvoc(_)) {
                return Err(invalid("the lvrt schedule applies to dcvoc only"));
            }
        }
        let voltage_source = matches!(self.controller, ControllerSpec::Dvoc(_) | ControllerSpec::Droop(_));
        if voltage_source && self.grid.rg.hypot(self.grid.lg) == 0.0 {
            return Err(invalid("voltage-source controllers need a nonzero line impedance"));
        }
        if let (Some(s), c) = (&self.initial_state, &self.controller) {
            let ok = matches!(
                (s, c),
                (ControllerState::Dcvoc(_), ControllerSpec::Dcvoc(_))
                    | (ControllerState::Gfl(_), ControllerSpec::Gfl(_))
                    | (ControllerState::Dvoc(_), ControllerSpec::Dvoc(_))
                    | (ControllerState::Droop(_), ControllerSpec::Droop(_))
            );
            if !ok {
                return Err(invalid("initial state does not match the controller kind"));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Converged,
    Oscillatory,
    Diverged,
    FloorViolation,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Converged => "converged",
            Classification::Oscillatory => "oscillatory",
            Classification::Diverged => "diverged",
            Classification::FloorViolation => "floor_violation",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub series: TimeSeries,
    pub classification: Classification,
    pub final_state: ControllerState,
    pub settle_time: Option<f64>,
    /// Reason for an early stop.
    pub stop_reason: Option<String>,
}

/// Lyapunov scan over one stretch of constant grid voltage and references.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub ug: f64,
    pub p_ref: f64,
    pub q_ref: f64,
    pub scan: LyapunovScan,
}

/// Splits a dCVOC trajectory into stretches where `u_g` and the active
/// references are constant and scans `V` on each stretch with at least
/// `min_samples` samples.
pub fn piecewise_lyapunov(
    series: &TimeSeries,
    scenario: &Scenario,
    min_samples: usize,
) -> Result<Vec<LyapunovSegment>> {
    let ControllerSpec::Dcvoc(base) = scenario.controller else {
        return Err(invalid("Lyapunov scan needs a dcvoc scenario"));
    };
    let grid = scenario.grid.snapped(scenario.dt);
    let key = |s: &Sample| (grid.ug_at(s.t), s.p_ref_active, s.q_ref_active, s.in_lvrt);
    let same = |a: (f64, f64, f64, bool), b: (f64, f64, f64, bool)| {
        a.0 == b.0 && a.3 == b.3 && (a.1 - b.1).abs() <= 1e-10 && (a.2 - b.2).abs() <= 1e-10
    };
    let mut out = Vec::new();
    let n = series.samples.len();
    let mut start = 0;
    while start < n {
        let k0 = key(&series.samples[start]);
        let mut end = start + 1;
        while end < n && same(key(&series.samples[end]), k0) {
            end += 1;
        }
        if end - start >= min_samples.max(2) {
            let (ug, p_ref, q_ref, in_lvrt) = k0;
            let params = if in_lvrt { base.with_refs(p_ref, q_ref) } else { base };
            let eq = solve_equilibrium(&params, &grid, ug)?;
            let decomp = SlowFastDecomposition::new(&params, &grid)?;
            let scan = lyapunov_decrease_scan(&series.slice(start..end), &eq, &decomp, &params, ug)?;
            out.push(LyapunovSegment {
                t_start: series.samples[start].t,
                t_end: series.samples[end - 1].t,
                ug,
                p_ref,
                q_ref,
                scan,
            });
        }
        start = end;
    }
    if out.is_empty() {
        return Err(Error::ShortTrajectory(n));
    }
    Ok(out)
}
