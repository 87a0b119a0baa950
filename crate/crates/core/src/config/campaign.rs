//! Running configs and writing their artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{bundled, plotdata, ScenarioConfig, SummaryReport};
use crate::analysis::check_stability_condition;
use crate::error::{Error, Result};
use crate::simulation::{simulate, Classification, ControllerSpec, RunOutcome, Scenario, SETTLE_WINDOW};

/// Rows kept in `.plotdata` files.
pub const PLOT_ROWS: usize = 2000;

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub scenario: Scenario,
    pub config_hash: String,
    pub outcome: RunOutcome,
    pub report: SummaryReport,
}

/// Builds, simulates and summarises one config.
pub fn execute(cfg: &ScenarioConfig) -> Result<RunArtifacts> {
    let scenario = cfg.to_scenario()?;
    let config_hash = cfg.content_hash()?;
    let outcome = simulate(&scenario)?;
    let report = SummaryReport::new(&scenario, &config_hash, &outcome)?;
    Ok(RunArtifacts { scenario, config_hash, outcome, report })
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(format!("{}: {e}", path.display()))
}

/// Writes `<name>.csv`, `<name>.report.txt` and `<name>.plotdata`.
pub fn write_artifacts(dir: &Path, a: &RunArtifacts) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let name = &a.scenario.name;
    let csv_path = dir.join(format!("{name}.csv"));
    let mut buf = Vec::new();
    let meta = [
        ("scenario", name.clone()),
        ("controller", a.scenario.controller.kind().to_string()),
        ("dt", format!("{:e}", a.scenario.dt)),
        ("capture_stride", a.scenario.capture_stride.to_string()),
        ("omega_base", format!("{:e}", a.scenario.omega_b)),
        ("seed", a.scenario.seed.to_string()),
        ("config_sha256", a.config_hash.clone()),
    ];
    a.outcome.series.write_csv(&mut buf, &meta)?;
    std::fs::write(&csv_path, buf).map_err(io(&csv_path))?;
    let report_path = dir.join(format!("{name}.report.txt"));
    std::fs::write(&report_path, &a.report.text).map_err(io(&report_path))?;
    let plot_path = dir.join(format!("{name}.plotdata"));
    std::fs::write(&plot_path, plotdata(&a.outcome.series, PLOT_ROWS)).map_err(io(&plot_path))?;
    Ok(vec![csv_path, report_path, plot_path])
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignRow {
    pub scenario: String,
    pub controller: &'static str,
    pub classification: Classification,
    pub settle_time: Option<f64>,
    /// Means over the final settling window.
    pub final_p: f64,
    pub final_q: f64,
    pub max_i_mag: f64,
    /// Certificate verdict; `None` for controllers it does not cover.
    pub certified: Option<bool>,
}

fn row(a: &RunArtifacts) -> CampaignRow {
    let series = &a.outcome.series;
    let (p, q) = series.last().map_or((f64::NAN, f64::NAN), |last| {
        let w = series.since(last.t - SETTLE_WINDOW + 1e-9);
        let n = w.len() as f64;
        (w.iter().map(|s| s.p).sum::<f64>() / n, w.iter().map(|s| s.q).sum::<f64>() / n)
    });
    let certified = match &a.scenario.controller {
        ControllerSpec::Dcvoc(p) => Some(check_stability_condition(p, &a.scenario.grid).condition_holds),
        _ => None,
    };
    CampaignRow {
        scenario: a.scenario.name.clone(),
        controller: a.scenario.controller.kind(),
        classification: a.outcome.classification,
        settle_time: a.outcome.settle_time,
        final_p: p,
        final_q: q,
        max_i_mag: series.samples.iter().map(|s| s.i.norm()).fold(0.0, f64::max),
        certified,
    }
}

/// Runs every bundled scenario concurrently, after checking that each dCVOC
/// config carries a valid certificate. Artifacts go to `out_dir` if given.
pub fn run_campaign(out_dir: Option<&Path>) -> Result<Vec<CampaignRow>> {
    let configs = bundled().into_iter().map(|(_, text)| ScenarioConfig::parse(text)).collect::<Result<Vec<_>>>()?;
    for cfg in &configs {
        let sc = cfg.to_scenario()?;
        if let ControllerSpec::Dcvoc(p) = &sc.controller {
            if !check_stability_condition(p, &sc.grid).condition_holds {
                return Err(Error::Config(format!("bundled scenario {} fails the certificate", sc.name)));
            }
        }
    }
    let runs: Vec<RunArtifacts> = configs.par_iter().map(execute).collect::<Result<_>>()?;
    if let Some(dir) = out_dir {
        for a in &runs {
            write_artifacts(dir, a)?;
        }
    }
    Ok(runs.iter().map(row).collect())
}

fn opt(x: Option<f64>) -> String {
    x.map_or("none".into(), |v| format!("{v:.4}"))
}

fn cert(c: Option<bool>) -> &'static str {
    match c {
        Some(true) => "holds",
        Some(false) => "fails",
        None => "n/a",
    }
}

pub fn campaign_csv(rows: &[CampaignRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "scenario",
        "controller",
        "classification",
        "settle_time",
        "final_p",
        "final_q",
        "max_i_mag",
        "certificate",
    ])
    .map_err(map)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.controller.to_string(),
            r.classification.to_string(),
            r.settle_time.map_or(String::new(), |t| format!("{t:e}")),
            format!("{:e}", r.final_p),
            format!("{:e}", r.final_q),
            format!("{:e}", r.max_i_mag),
            cert(r.certified).to_string(),
        ])
        .map_err(map)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn campaign_text(rows: &[CampaignRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:<6} {:<16} {:>8} {:>9} {:>9} {:>9} {:<5}",
        "scenario", "ctrl", "classification", "settle", "p_final", "q_final", "max|i|", "cert"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<20} {:<6} {:<16} {:>8} {:>9.4} {:>9.4} {:>9.4} {:<5}",
            r.scenario,
            r.controller,
            r.classification.as_str(),
            opt(r.settle_time),
            r.final_p,
            r.final_q,
            r.max_i_mag,
            cert(r.certified)
        );
    }
    s
}
