//! Algebraic grid model: a stiff voltage source `[u_g; 0]` behind a series
//! R–L impedance, with a schedule of voltage sags.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frame::{rotate, Rot2, Vec2};

/// A step change of the grid voltage over `[t_start, t_end)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEvent {
    pub t_start: f64,
    pub t_end: f64,
    pub ug_during: f64,
}

/// Line impedance in polar form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Impedance {
    /// Magnitude `√(R² + L²)` (pu).
    pub zg: f64,
    /// Angle `atan2(L, R)` (rad).
    pub phig: f64,
}

impl Impedance {
    /// `Z_g e^{jφ_g}` as a complex vector, i.e. `(R_g, L_g)`.
    pub fn complex(self) -> Vec2 {
        Vec2::from_polar(self.zg, self.phig)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridModel {
    pub ug_nominal: f64,
    pub rg: f64,
    pub lg: f64,
    /// Grid angular frequency (rad/s).
    pub omega_g: f64,
    /// Allows `R_g = L_g = 0` (infinite bus).
    pub zero_impedance: bool,
    events: Vec<GridEvent>,
}

impl GridModel {
    pub fn new(ug_nominal: f64, rg: f64, lg: f64, omega_g: f64) -> Result<Self> {
        let g = GridModel { ug_nominal, rg, lg, omega_g, zero_impedance: false, events: Vec::new() };
        g.validate()?;
        Ok(g)
    }

    pub fn infinite_bus(ug_nominal: f64, omega_g: f64) -> Result<Self> {
        let g = GridModel { ug_nominal, rg: 0.0, lg: 0.0, omega_g, zero_impedance: true, events: Vec::new() };
        g.validate()?;
        Ok(g)
    }

    pub fn with_events(mut self, mut events: Vec<GridEvent>) -> Result<Self> {
        events.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        self.events = events;
        self.validate()?;
        Ok(self)
    }

    /// Adds a single sag `[t_start, t_end)` at `ug_during`.
    pub fn with_sag(self, t_start: f64, t_end: f64, ug_during: f64) -> Result<Self> {
        let mut ev = self.events.clone();
        ev.push(GridEvent { t_start, t_end, ug_during });
        self.with_events(ev)
    }

    pub fn events(&self) -> &[GridEvent] {
        &self.events
    }

    fn validate(&self) -> Result<()> {
        if !(self.ug_nominal > 0.0) || !self.ug_nominal.is_finite() {
            return Err(invalid(format!("ug_nominal must be > 0, got {}", self.ug_nominal)));
        }
        if !(self.rg >= 0.0) || !(self.lg >= 0.0) || !self.rg.is_finite() || !self.lg.is_finite() {
            return Err(invalid("Rg and Lg must be finite and non-negative"));
        }
        if self.rg + self.lg == 0.0 && !self.zero_impedance {
            return Err(invalid("Rg + Lg = 0 requires the zero-impedance flag"));
        }
        if !self.omega_g.is_finite() {
            return Err(invalid("omega_g must be finite"));
        }
        let mut prev_end = f64::NEG_INFINITY;
        for e in &self.events {
            if !(e.t_start < e.t_end) || !e.t_start.is_finite() || !e.t_end.is_finite() {
                return Err(invalid(format!("event needs t_start < t_end, got [{}, {})", e.t_start, e.t_end)));
            }
            if !(e.ug_during >= 0.0) {
                return Err(invalid("event ug_during must be >= 0"));
            }
            if e.t_start < prev_end {
                return Err(invalid(format!("overlapping events at t = {}", e.t_start)));
            }
            prev_end = e.t_end;
        }
        Ok(())
    }

    /// Copy of the model with event edges moved to the nearest multiple of `dt`.
    /// Events that collapse to zero length are dropped.
    pub fn snapped(&self, dt: f64) -> GridModel {
        let snap = |t: f64| (t / dt).round() * dt;
        let events = self
            .events
            .iter()
            .map(|e| GridEvent { t_start: snap(e.t_start), t_end: snap(e.t_end), ug_during: e.ug_during })
            .filter(|e| e.t_start < e.t_end)
            .collect();
        GridModel { events, ..self.clone() }
    }

    pub fn ug_at(&self, t: f64) -> f64 {
        self.events.iter().find(|e| e.t_start <= t && t < e.t_end).map_or(self.ug_nominal, |e| e.ug_during)
    }

    pub fn impedance(&self) -> Impedance {
        impedance_of(self)
    }

    /// `u = [u_g; 0] + Z_g e^{Jφ_g} i` for a given grid voltage.
    pub fn terminal_voltage_at(&self, i: Vec2, ug: f64) -> Vec2 {
        Vec2::new(ug, 0.0) + Vec2::new(self.rg, self.lg).cmul(i)
    }

    pub fn terminal_voltage(&self, i: Vec2, t: f64) -> Vec2 {
        terminal_voltage(i, self, t)
    }
}

pub fn impedance_of(grid: &GridModel) -> Impedance {
    Impedance { zg: grid.rg.hypot(grid.lg), phig: grid.lg.atan2(grid.rg) }
}

pub fn ug_at(grid: &GridModel, t: f64) -> f64 {
    grid.ug_at(t)
}

pub fn terminal_voltage(i: Vec2, grid: &GridModel, t: f64) -> Vec2 {
    let z = impedance_of(grid);
    Vec2::new(grid.ug_at(t), 0.0) + rotate(Rot2::new(z.phig), i).scale(z.zg)
}
