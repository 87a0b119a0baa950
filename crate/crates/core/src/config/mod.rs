//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[controller]`, `[grid]`,
//! `[events]`, `[lvrt]` and `[sim]`. Unknown keys are rejected. Missing
//! optional keys take the defaults documented on each field.
//!
//! ```toml
//! name = "case12_dcvoc"
//!
//! [controller]
//! kind = "dcvoc"
//! kp = 20.0
//! kplli = 20.0
//!
//! [grid]
//! rg = 0.05
//! lg = 0.65
//!
//! [events]
//! sags = [{ t_start = 1.0, t_end = 2.0, ug_during = 0.2 }]
//!
//! [lvrt]
//! enabled = true
//!
//! [sim]
//! t_end = 3.0
//! dt = 1e-4
//! ```

mod bundled;
mod campaign;
mod report;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::lvrt_p_min;
use crate::controllers::{
    DcvocParams, DcvocState, DroopGfmParams, DroopGfmState, DvocParams, DvocState, LvrtConfig, LvrtMonitor,
    PllGflParams, PllGflState,
};
use crate::error::{Error, Result};
use crate::frame::Vec2;
use crate::network::{GridEvent, GridModel};
use crate::simulation::{ControllerSpec, ControllerState, Scenario};
use crate::OMEGA_NOMINAL;

pub use bundled::{bundled, bundled_config, BUNDLED_NAMES};
pub use campaign::{
    campaign_csv, campaign_text, execute, run_campaign, write_artifacts, CampaignRow, RunArtifacts, PLOT_ROWS,
};
pub use report::{lvrt_compliance, plotdata, LvrtCompliance, SummaryReport};

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Controller section, selected by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ControllerSection {
    Dcvoc {
        /// Default 20.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kp: Option<f64>,
        /// Default 20.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kplli: Option<f64>,
        /// Rotation angle (rad); defaults to the line angle φ_g.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<f64>,
        /// Default 1.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p_ref: Option<f64>,
        /// Default 0.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q_ref: Option<f64>,
        /// Defaults to `√(p_ref² + q_ref²)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        i_ref: Option<f64>,
        /// Default 1.2.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        i_max: Option<f64>,
        /// Default 2π·50.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega0: Option<f64>,
    },
    Gfl {
        /// Default 0.5.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kpllp: Option<f64>,
        /// Default 20.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kplli: Option<f64>,
        /// Default 0.5.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kpp: Option<f64>,
        /// Default 20.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kpi: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p_ref: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        i_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega0: Option<f64>,
        /// PLL frequency-correction bound (pu); absent means unlimited.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pll_limit: Option<f64>,
    },
    Dvoc {
        kp: f64,
        kv: f64,
        /// Defaults to φ_g.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<f64>,
        p_ref: f64,
        q_ref: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u_ref: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega0: Option<f64>,
    },
    Droop {
        kp: f64,
        kv: f64,
        p_ref: f64,
        q_ref: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u_ref: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega0: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Default 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ug_nominal: Option<f64>,
    pub rg: f64,
    pub lg: f64,
    /// Default 2π·50.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_g: Option<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub zero_impedance: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventsSection {
    #[serde(default)]
    pub sags: Vec<GridEvent>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvrtSection {
    #[serde(default)]
    pub enabled: bool,
    /// Default 0.9.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_threshold: Option<f64>,
    /// Default 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl: Option<f64>,
    /// Defaults to the smallest floor that keeps the current loop
    /// contracting over the whole schedule, plus 10 %.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    /// Default 0.02.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hysteresis: Option<f64>,
    /// Default 0.1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_floor: Option<f64>,
    /// `split` (default) or `terminal`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor: Option<LvrtMonitor>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub cap_after_scaling: bool,
}

/// Explicit initial state; the fields used depend on the controller kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_pll: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// Default 3 s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Default 1e-4 s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Default 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_stride: Option<usize>,
    /// Time base of the per-unit dynamics; default 2π·50, 1 disables it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Absent: start from the pre-fault equilibrium.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialStateSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub controller: ControllerSection,
    pub grid: GridSection,
    #[serde(default)]
    pub events: EventsSection,
    #[serde(default)]
    pub lvrt: LvrtSection,
    #[serde(default)]
    pub sim: SimSection,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl ScenarioConfig {
    /// Parses a document. Syntax and schema errors carry the line number.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| cfg_err(describe(text, &e)))?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| cfg_err(e.to_string()))
    }

    /// Hex SHA-256 of the canonical serialisation.
    pub fn content_hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn grid(&self) -> Result<GridModel> {
        let g = &self.grid;
        let ug = g.ug_nominal.unwrap_or(1.0);
        let w = g.omega_g.unwrap_or(OMEGA_NOMINAL);
        let grid = if g.zero_impedance {
            if g.rg != 0.0 || g.lg != 0.0 {
                return Err(cfg_err("zero_impedance = true needs rg = lg = 0"));
            }
            GridModel::infinite_bus(ug, w)?
        } else {
            GridModel::new(ug, g.rg, g.lg, w)?
        };
        grid.with_events(self.events.sags.clone())
    }

    /// Resolves defaults and builds the in-memory scenario.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let grid = self.grid()?;
        let phig = grid.impedance().phig;
        let controller = match self.controller {
            ControllerSection::Dcvoc { kp, kplli, phi, p_ref, q_ref, i_ref, i_max, omega0 } => {
                let d = DcvocParams::nominal(phi.unwrap_or(phig));
                let p_ref = p_ref.unwrap_or(d.p_ref);
                let q_ref = q_ref.unwrap_or(d.q_ref);
                ControllerSpec::Dcvoc(DcvocParams {
                    kp: kp.unwrap_or(d.kp),
                    kplli: kplli.unwrap_or(d.kplli),
                    p_ref,
                    q_ref,
                    i_ref: i_ref.unwrap_or(p_ref.hypot(q_ref)),
                    i_max: i_max.unwrap_or(d.i_max),
                    omega0: omega0.unwrap_or(d.omega0),
                    ..d
                })
            }
            ControllerSection::Gfl { kpllp, kplli, kpp, kpi, p_ref, i_max, omega0, pll_limit } => {
                let d = PllGflParams::baseline();
                ControllerSpec::Gfl(PllGflParams {
                    kpllp: kpllp.unwrap_or(d.kpllp),
                    kplli: kplli.unwrap_or(d.kplli),
                    kpp: kpp.unwrap_or(d.kpp),
                    kpi: kpi.unwrap_or(d.kpi),
                    p_ref: p_ref.unwrap_or(d.p_ref),
                    i_max: i_max.unwrap_or(d.i_max),
                    omega0: omega0.unwrap_or(d.omega0),
                    pll_limit,
                })
            }
            ControllerSection::Dvoc { kp, kv, phi, p_ref, q_ref, u_ref, omega0 } => ControllerSpec::Dvoc(DvocParams {
                kp,
                kv,
                phi: phi.unwrap_or(phig),
                p_ref,
                q_ref,
                u_ref: u_ref.unwrap_or(1.0),
                omega0: omega0.unwrap_or(OMEGA_NOMINAL),
            }),
            ControllerSection::Droop { kp, kv, p_ref, q_ref, u_ref, omega0 } => ControllerSpec::Droop(DroopGfmParams {
                kp,
                kv,
                p_ref,
                q_ref,
                u_ref: u_ref.unwrap_or(1.0),
                omega0: omega0.unwrap_or(OMEGA_NOMINAL),
            }),
        };
        let mut sc = Scenario::new(self.name.clone(), controller, grid);
        let s = &self.sim;
        sc.t_end = s.t_end.unwrap_or(sc.t_end);
        sc.dt = s.dt.unwrap_or(sc.dt);
        sc.capture_stride = s.capture_stride.unwrap_or(1);
        sc.omega_b = s.omega_base.unwrap_or(OMEGA_NOMINAL);
        sc.seed = s.seed.unwrap_or(0);
        sc.lvrt = self.lvrt_config(&sc)?;
        sc.initial_state = match &s.initial_state {
            Some(init) => Some(initial_state(init, &sc.controller)?),
            None => None,
        };
        sc.validate()?;
        Ok(sc)
    }

    fn lvrt_config(&self, sc: &Scenario) -> Result<Option<LvrtConfig>> {
        let l = &self.lvrt;
        if !l.enabled {
            let set = l.u_threshold.is_some()
                || l.kl.is_some()
                || l.p_min.is_some()
                || l.hysteresis.is_some()
                || l.u_floor.is_some()
                || l.monitor.is_some()
                || l.cap_after_scaling;
            if set {
                return Err(cfg_err("[lvrt] options given but enabled = false"));
            }
            return Ok(None);
        }
        let ControllerSpec::Dcvoc(p) = sc.controller else {
            return Err(cfg_err("[lvrt] applies to dcvoc only"));
        };
        let u_floor = l.u_floor.unwrap_or(LvrtConfig::DEFAULT_U_FLOOR);
        let p_min = match l.p_min {
            Some(v) => v,
            None => lvrt_p_min(p.i_max, p.phi, &sc.grid, 1.0 / u_floor, 0.1),
        };
        let cfg = LvrtConfig {
            u_threshold: l.u_threshold.unwrap_or(LvrtConfig::DEFAULT_THRESHOLD),
            kl: l.kl.unwrap_or(LvrtConfig::DEFAULT_KL),
            p_min,
            i_max: p.i_max,
            hysteresis: l.hysteresis.unwrap_or(LvrtConfig::DEFAULT_HYSTERESIS),
            u_floor,
            monitor: l.monitor.unwrap_or_default(),
            cap_after_scaling: l.cap_after_scaling,
        };
        cfg.validate()?;
        Ok(Some(cfg))
    }
}

fn initial_state(s: &InitialStateSection, c: &ControllerSpec) -> Result<ControllerState> {
    let fields = [
        ("i_alpha", s.i_alpha),
        ("i_beta", s.i_beta),
        ("omega_delta", s.omega_delta),
        ("theta", s.theta),
        ("xi_pll", s.xi_pll),
        ("xi_p", s.xi_p),
        ("u_alpha", s.u_alpha),
        ("u_beta", s.u_beta),
        ("theta_u", s.theta_u),
        ("u", s.u),
    ];
    let wanted: &[&str] = match c {
        ControllerSpec::Dcvoc(_) => &["i_alpha", "i_beta", "omega_delta"],
        ControllerSpec::Gfl(_) => &["theta", "xi_pll", "xi_p"],
        ControllerSpec::Dvoc(_) => &["u_alpha", "u_beta"],
        ControllerSpec::Droop(_) => &["theta_u", "u"],
    };
    for (k, v) in fields {
        match (wanted.contains(&k), v) {
            (true, None) => return Err(cfg_err(format!("initial_state.{k} is required for {}", c.kind()))),
            (false, Some(_)) => return Err(cfg_err(format!("initial_state.{k} does not apply to {}", c.kind()))),
            _ => {}
        }
    }
    let g = |v: Option<f64>| v.unwrap_or_default();
    Ok(match c {
        ControllerSpec::Dcvoc(_) => {
            ControllerState::Dcvoc(DcvocState::new(Vec2::new(g(s.i_alpha), g(s.i_beta)), g(s.omega_delta)))
        }
        ControllerSpec::Gfl(_) => {
            ControllerState::Gfl(PllGflState { theta: g(s.theta), xi_pll: g(s.xi_pll), xi_p: g(s.xi_p) })
        }
        ControllerSpec::Dvoc(_) => ControllerState::Dvoc(DvocState { u: Vec2::new(g(s.u_alpha), g(s.u_beta)) }),
        ControllerSpec::Droop(_) => ControllerState::Droop(DroopGfmState { theta_u: g(s.theta_u), u: g(s.u) }),
    })
}

/// Offset of the line defining `key` in the table starting at `start`.
fn key_offset(text: &str, start: usize, key: &str) -> Option<usize> {
    let mut at = start;
    for (k, line) in text.get(start..)?.split_inclusive('\n').enumerate() {
        let trimmed = line.trim_start();
        if k > 0 && trimmed.starts_with('[') {
            break;
        }
        if let Some(rest) = trimmed.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(at + line.len() - trimmed.len());
            }
        }
        at += line.len();
    }
    None
}

/// `line L, column C: message`, computed from the error span. Unknown keys
/// inside a tagged table are located by name, since their span points at
/// the table header.
fn describe(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().trim_end();
    match e.span() {
        Some(span) => {
            let unknown = msg.strip_prefix("unknown field `").and_then(|r| r.split('`').next());
            let start = unknown.and_then(|k| key_offset(text, span.start, k)).unwrap_or(span.start);
            let before = &text[..start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |k| k + 1) + 1;
            format!("line {line}, column {col}: {msg}")
        }
        None => msg.to_string(),
    }
}
