//! Low-voltage ride-through reference schedule.
//!
//! Inside LVRT, with `k_s = 1/max(u, u_floor)`:
//!
//! ```text
//! q_ref = k_s min(k_l (0.9 − u), √(i_max² − p_min²))
//! p_ref = max(k_s p_min, √((k_s i_max)² − q_ref²))
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Which voltage feeds the schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LvrtMonitor {
    /// Detection and the `k_l` demand use the grid-side voltage `u_g`;
    /// `k_s` uses the converter terminal voltage.
    #[default]
    Split,
    /// Everything uses the terminal voltage magnitude.
    Terminal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LvrtConfig {
    pub u_threshold: f64,
    pub kl: f64,
    pub p_min: f64,
    pub i_max: f64,
    pub hysteresis: f64,
    pub u_floor: f64,
    pub monitor: LvrtMonitor,
    /// Cap `q_ref` at `√(i_max² − p_min²)` after the `k_s` scaling instead of before.
    pub cap_after_scaling: bool,
}

impl LvrtConfig {
    pub const DEFAULT_THRESHOLD: f64 = 0.9;
    pub const DEFAULT_KL: f64 = 2.0;
    pub const DEFAULT_HYSTERESIS: f64 = 0.02;
    pub const DEFAULT_U_FLOOR: f64 = 0.1;

    pub fn new(i_max: f64, p_min: f64) -> Result<Self> {
        let cfg = LvrtConfig {
            u_threshold: Self::DEFAULT_THRESHOLD,
            kl: Self::DEFAULT_KL,
            p_min,
            i_max,
            hysteresis: Self::DEFAULT_HYSTERESIS,
            u_floor: Self::DEFAULT_U_FLOOR,
            monitor: LvrtMonitor::Split,
            cap_after_scaling: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.u_floor && self.u_floor < self.u_threshold && self.u_threshold <= 1.0) {
            return Err(invalid("lvrt needs 0 < u_floor < u_threshold <= 1"));
        }
        if !(self.kl >= 0.0) || !(self.hysteresis >= 0.0) {
            return Err(invalid("lvrt kl and hysteresis must be >= 0"));
        }
        if !(self.p_min >= 0.0) {
            return Err(invalid("lvrt p_min must be >= 0"));
        }
        if self.i_max < self.p_min {
            return Err(invalid(format!("lvrt i_max = {} is below p_min = {}", self.i_max, self.p_min)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LvrtRefs {
    pub p_ref: f64,
    pub q_ref: f64,
    pub in_lvrt: bool,
}

/// Schedule driven by a single voltage magnitude.
pub fn lvrt_refs(u_mag: f64, cfg: &LvrtConfig, base_p_ref: f64, base_q_ref: f64, in_lvrt: bool) -> LvrtRefs {
    lvrt_refs_split(u_mag, u_mag, cfg, base_p_ref, base_q_ref, in_lvrt)
}

/// Schedule with separate detection voltage (threshold, hysteresis and the
/// `k_l` demand) and scaling voltage (`k_s`).
pub fn lvrt_refs_split(
    u_detect: f64,
    u_scale: f64,
    cfg: &LvrtConfig,
    base_p_ref: f64,
    base_q_ref: f64,
    in_lvrt: bool,
) -> LvrtRefs {
    let active = if in_lvrt { u_detect <= cfg.u_threshold + cfg.hysteresis } else { u_detect <= cfg.u_threshold };
    if !active {
        return LvrtRefs { p_ref: base_p_ref, q_ref: base_q_ref, in_lvrt: false };
    }
    let ks = 1.0 / u_scale.max(cfg.u_floor);
    // Inside the hysteresis band the demand would turn negative.
    let demand = (cfg.kl * (cfg.u_threshold - u_detect)).max(0.0);
    let q_cap = (cfg.i_max * cfg.i_max - cfg.p_min * cfg.p_min).max(0.0).sqrt();
    let q_ref = if cfg.cap_after_scaling { (ks * demand).min(q_cap) } else { ks * demand.min(q_cap) };
    let p_avail = ((ks * cfg.i_max).powi(2) - q_ref * q_ref).max(0.0).sqrt();
    LvrtRefs { p_ref: (ks * cfg.p_min).max(p_avail), q_ref, in_lvrt: true }
}
