//! Run summaries and plot data.

use std::fmt::Write as _;

use crate::analysis::{check_stability_condition, solve_equilibrium, steady_power};
use crate::controllers::gfl::gfl_steady_state;
use crate::error::Result;
use crate::simulation::{ControllerSpec, RunOutcome, Scenario, TimeSeries, SETTLE_WINDOW};

/// Length (s) of the in-sag window, ending at sag clearance, over which the
/// LVRT reactive injection is averaged.
pub const LVRT_WINDOW: f64 = 0.1;

/// Measured against scheduled reactive power over the end of one sag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LvrtCompliance {
    pub t_start: f64,
    pub t_end: f64,
    pub ug_during: f64,
    /// Fraction of the window spent in LVRT mode.
    pub lvrt_fraction: f64,
    pub q_measured: f64,
    /// `u² i_ref² q_ref / (p_ref² + q_ref²)` with the active references.
    pub q_target: f64,
    pub p_measured: f64,
    pub p_target: f64,
    /// `|q_measured − q_target| / |q_target|`.
    pub q_rel_error: f64,
}

/// Compliance for each sag of a dCVOC run. Sags shorter than the window or
/// cut off by an early stop are skipped.
pub fn lvrt_compliance(series: &TimeSeries, sc: &Scenario) -> Vec<LvrtCompliance> {
    let ControllerSpec::Dcvoc(base) = sc.controller else {
        return Vec::new();
    };
    let grid = sc.grid.snapped(sc.dt);
    let mut out = Vec::new();
    for ev in grid.events() {
        let t0 = (ev.t_end - LVRT_WINDOW).max(ev.t_start);
        let window: Vec<_> = series.samples.iter().filter(|s| s.t >= t0 && s.t < ev.t_end).collect();
        let covered = window.last().is_some_and(|s| s.t + series.dt * series.stride as f64 >= ev.t_end - 1e-12);
        if window.is_empty() || !covered {
            continue;
        }
        let n = window.len() as f64;
        let mut acc = [0.0; 5];
        for s in &window {
            let i_ref = if s.in_lvrt { s.p_ref_active.hypot(s.q_ref_active) } else { base.i_ref };
            let (pt, qt, _) =
                steady_power(s.u.norm(), s.p_ref_active, s.q_ref_active, i_ref).unwrap_or((f64::NAN, f64::NAN, 0.0));
            for (a, x) in acc.iter_mut().zip([s.q, qt, s.p, pt, f64::from(u8::from(s.in_lvrt))]) {
                *a += x / n;
            }
        }
        let [qm, qt, pm, pt, frac] = acc;
        out.push(LvrtCompliance {
            t_start: ev.t_start,
            t_end: ev.t_end,
            ug_during: ev.ug_during,
            lvrt_fraction: frac,
            q_measured: qm,
            q_target: qt,
            p_measured: pm,
            p_target: pt,
            q_rel_error: if qt.abs() > 1e-12 { (qm - qt).abs() / qt.abs() } else { (qm - qt).abs() },
        });
    }
    out
}

/// Flat `key = value` summary of one run. Identical inputs give identical bytes.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryReport {
    pub text: String,
}

fn kv(s: &mut String, k: &str, v: impl std::fmt::Display) {
    let _ = writeln!(s, "{k} = {v}");
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

impl SummaryReport {
    pub fn new(sc: &Scenario, config_hash: &str, outcome: &RunOutcome) -> Result<Self> {
        let mut s = String::new();
        kv(&mut s, "scenario", &sc.name);
        kv(&mut s, "controller", sc.controller.kind());
        kv(&mut s, "config_hash", config_hash);
        kv(&mut s, "dt", num(sc.dt));
        kv(&mut s, "t_end", num(sc.t_end));
        kv(&mut s, "omega_base", num(sc.omega_b));
        kv(&mut s, "seed", sc.seed);
        kv(&mut s, "classification", outcome.classification);
        kv(&mut s, "settle_time", outcome.settle_time.map_or("none".into(), num));
        kv(&mut s, "stop_reason", outcome.stop_reason.as_deref().unwrap_or("none"));
        let grid = sc.grid.snapped(sc.dt);
        let ug0 = grid.ug_at(0.0);
        match &sc.controller {
            ControllerSpec::Dcvoc(p) => {
                let cert = check_stability_condition(p, &grid);
                for line in cert.to_kv().lines() {
                    s.push_str("certificate.");
                    s.push_str(line);
                    s.push('\n');
                }
                let eq = solve_equilibrium(p, &grid, ug0)?;
                s.push_str(&eq.to_kv("equilibrium."));
                if let Some(l) = &sc.lvrt {
                    kv(&mut s, "lvrt.p_min", num(l.p_min));
                    kv(&mut s, "lvrt.kl", num(l.kl));
                    kv(&mut s, "lvrt.monitor", format!("{:?}", l.monitor).to_lowercase());
                }
            }
            ControllerSpec::Gfl(p) => {
                let ss = gfl_steady_state(p, &grid, ug0, sc.omega_b);
                kv(&mut s, "equilibrium.exact", ss.exact);
                kv(&mut s, "equilibrium.i_mag_s", num(ss.i_mag));
                kv(&mut s, "equilibrium.p_s", num(ss.p));
                kv(&mut s, "equilibrium.theta_s", num(ss.state.theta));
            }
            _ => {}
        }
        let series = &outcome.series;
        let max_i = series.samples.iter().map(|x| x.i.norm()).fold(0.0, f64::max);
        let sat = series.samples.iter().filter(|x| x.saturated).count();
        kv(&mut s, "samples", series.len());
        kv(&mut s, "max_i_mag", num(max_i));
        kv(&mut s, "saturated_fraction", num(sat as f64 / series.len().max(1) as f64));
        if let Some(last) = series.last() {
            let w = series.since(last.t - SETTLE_WINDOW + 1e-9);
            let n = w.len() as f64;
            let mean = |f: &dyn Fn(&crate::simulation::Sample) -> f64| w.iter().map(f).sum::<f64>() / n;
            kv(&mut s, "final.t", num(last.t));
            kv(&mut s, "final.p", num(mean(&|x| x.p)));
            kv(&mut s, "final.q", num(mean(&|x| x.q)));
            kv(&mut s, "final.u_mag", num(mean(&|x| x.u.norm())));
            kv(&mut s, "final.i_mag", num(mean(&|x| x.i.norm())));
            kv(&mut s, "final.omega_delta", num(mean(&|x| x.omega_delta)));
        }
        for (k, c) in lvrt_compliance(series, sc).iter().enumerate() {
            let p = format!("lvrt_compliance.{k}.");
            kv(&mut s, &(p.clone() + "t_start"), num(c.t_start));
            kv(&mut s, &(p.clone() + "t_end"), num(c.t_end));
            kv(&mut s, &(p.clone() + "ug_during"), num(c.ug_during));
            kv(&mut s, &(p.clone() + "lvrt_fraction"), num(c.lvrt_fraction));
            kv(&mut s, &(p.clone() + "q_measured"), num(c.q_measured));
            kv(&mut s, &(p.clone() + "q_target"), num(c.q_target));
            kv(&mut s, &(p.clone() + "p_measured"), num(c.p_measured));
            kv(&mut s, &(p.clone() + "p_target"), num(c.p_target));
            kv(&mut s, &(p + "q_rel_error"), num(c.q_rel_error));
        }
        Ok(SummaryReport { text: s })
    }
}

/// Whitespace-separated `t p q u_mag` rows, thinned to at most `max_rows`.
pub fn plotdata(series: &TimeSeries, max_rows: usize) -> String {
    let every = series.len().div_ceil(max_rows.max(1)).max(1);
    let mut s = String::from("# t p q u_mag\n");
    for (k, x) in series.samples.iter().enumerate() {
        if k % every == 0 || k + 1 == series.len() {
            let _ = writeln!(s, "{:e} {:e} {:e} {:e}", x.t, x.p, x.q, x.u.norm());
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::Sample;

    #[test]
    fn plotdata_thins_and_keeps_last() {
        let mut ts = TimeSeries::new(0.1, 1);
        for k in 0..25 {
            ts.samples.push(Sample { t: k as f64 * 0.1, ..Sample::default() });
        }
        let text = plotdata(&ts, 10);
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert!(rows.len() <= 11);
        assert!(rows.last().unwrap().starts_with("2.4"));
        assert_eq!(rows[0].split(' ').count(), 4);
    }
}
