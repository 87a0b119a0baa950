//! `dcvoc` command-line runner.
//!
//! Exit status: 0 when a command ran, 2 when a stability certificate fails,
//! 1 on usage, configuration or I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dcvoc::analysis::{check_stability_condition, roa_sample, RoaOptions};
use dcvoc::config::{
    bundled_config, campaign_csv, campaign_text, execute, run_campaign, write_artifacts, ScenarioConfig,
};
use dcvoc::simulation::ControllerSpec;
use dcvoc::Error;

#[derive(Parser)]
#[command(name = "dcvoc", version, about = "dCVOC scenario runner and stability analysis")]
struct Cli {
    /// Worker threads for campaign and roa (default: all cores).
    #[arg(long, global = true, env = "DCVOC_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write <name>.csv, .report.txt and .plotdata.
    Run {
        /// Scenario file, or `bundled:<name>`.
        config: String,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate the global-stability certificate of a dCVOC scenario.
    Certify { config: String },
    /// Run all bundled scenarios and write a summary table.
    Campaign {
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Monte-Carlo region-of-attraction estimate.
    Roa {
        config: String,
        #[arg(short, long)]
        n: usize,
        /// Sampling radius (pu) for the current magnitude and frequency.
        #[arg(short, long, default_value_t = 2.0)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Integration horizon per sample (s).
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        /// Directory for `<name>.roa.csv`.
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
}

fn load(spec: &str) -> dcvoc::Result<ScenarioConfig> {
    match spec.strip_prefix("bundled:") {
        Some(name) => bundled_config(name),
        None => ScenarioConfig::load(Path::new(spec)),
    }
}

fn run(cli: Cli) -> dcvoc::Result<ExitCode> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    match cli.command {
        Command::Run { config, out } => {
            let a = execute(&load(&config)?)?;
            for p in write_artifacts(&out, &a)? {
                println!("wrote {}", p.display());
            }
            let o = &a.outcome;
            println!("{}: {}", a.scenario.name, o.classification);
            if let Some(r) = &o.stop_reason {
                println!("stopped: {r}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { config } => {
            let sc = load(&config)?.to_scenario()?;
            let ControllerSpec::Dcvoc(p) = &sc.controller else {
                println!("scenario = {}", sc.name);
                println!("controller = {}", sc.controller.kind());
                println!("condition_holds = not_applicable");
                return Ok(ExitCode::from(2));
            };
            let r = check_stability_condition(p, &sc.grid);
            println!("scenario = {}", sc.name);
            print!("{}", r.to_kv());
            Ok(if r.condition_holds { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Campaign { out } => {
            let rows = run_campaign(Some(&out))?;
            let csv_path = out.join("campaign_summary.csv");
            let txt_path = out.join("campaign_summary.txt");
            let text = campaign_text(&rows);
            std::fs::write(&csv_path, campaign_csv(&rows)?)?;
            std::fs::write(&txt_path, &text)?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Roa { config, n, radius, seed, t_max, out } => {
            if n == 0 {
                return Err(Error::InvalidParameter("-n must be at least 1".into()));
            }
            let sc = load(&config)?.to_scenario()?;
            let opts = RoaOptions { t_max, ..RoaOptions::default() };
            let r = roa_sample(&sc, n, radius, seed, &opts)?;
            std::fs::create_dir_all(&out)?;
            let path = out.join(format!("{}.roa.csv", sc.name));
            r.write_csv(std::fs::File::create(&path)?)?;
            println!("fraction_converged = {:.4}", r.fraction_converged);
            println!("worst_id = {}", r.worst_id);
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
