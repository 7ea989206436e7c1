//! Command-line front end: episode simulation, region-of-attraction
//! sweeps, path generation, linearization dumps, and step-time benchmarks.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msnt_core::nalgebra::DMatrix;
use serde::Serialize;

use msnt_core::controller::straight_discrete;
use msnt_core::error_model::ErrorModel;
use msnt_core::harness::{
    run_episode, run_sweep, write_episode_csv, write_sweep_csv, ControllerKind, HarnessError,
    SimConfig,
};

#[derive(Parser)]
#[command(name = "msnt", version, about = "Path-following control simulator for multi-steered trailer chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the configured controller (ms2t-mpc | ss2t-mpc | lq).
    #[arg(long)]
    controller: Option<String>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop episode; writes episode.csv and metrics.json.
    Simulate(CommonArgs),
    /// Run the region-of-attraction sweep; writes roa_<controller>.csv per controller.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Episodes to run concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Generate the configured reference path; writes path.csv.
    Path(CommonArgs),
    /// Print the error-dynamics matrices at a given arc length.
    Linearize {
        #[command(flatten)]
        common: CommonArgs,
        /// Arc length along the path [m].
        #[arg(long, default_value_t = 0.0)]
        s: f64,
    },
    /// Time the controller step over a short episode.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        /// Control steps to run.
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
}

enum AppError {
    Config(String),
    Runtime(String),
}

impl From<HarnessError> for AppError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) | HarnessError::Vehicle(_) | HarnessError::Path(_) => {
                AppError::Config(e.to_string())
            }
            HarnessError::Controller(_) | HarnessError::Io(_) => AppError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("runtime failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<SimConfig, AppError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| AppError::Config(format!("{}: {e}", common.config.display())))?;
    let mut cfg = SimConfig::from_toml(&text).map_err(|e| AppError::Config(e.to_string()))?;
    if let Some(kind) = &common.controller {
        ControllerKind::parse(kind).map_err(|e| AppError::Config(e.to_string()))?;
        cfg.scenario.controller = kind.clone();
    }
    if let Some(seed) = common.seed {
        cfg.scenario.seed = seed;
    }
    Ok(cfg)
}

fn ensure_out(dir: &PathBuf) -> Result<(), AppError> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::Runtime(format!("{}: {e}", dir.display())))
}

#[derive(Serialize)]
struct MetricsOut<'a> {
    controller: &'a str,
    steps: usize,
    mean_step_ms: f64,
    #[serde(flatten)]
    metrics: &'a msnt_core::EpisodeMetrics,
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = load_config(&common)?;
            ensure_out(&common.out)?;
            let episode = run_episode(&cfg)?;
            let csv_path = common.out.join("episode.csv");
            let mut csv = BufWriter::new(File::create(&csv_path)?);
            write_episode_csv(&episode, &mut csv)?;
            csv.flush()?;
            let out = MetricsOut {
                controller: episode.kind.as_str(),
                steps: episode.records.len(),
                mean_step_ms: episode.mean_step_seconds * 1e3,
                metrics: &episode.metrics,
            };
            let json = serde_json::to_string_pretty(&out)
                .map_err(|e| AppError::Runtime(e.to_string()))?;
            std::fs::write(common.out.join("metrics.json"), &json)?;
            println!(
                "{}: {} | max|z2| {:.3} m, max|th2| {:.3} rad, effort {:.3}{}",
                episode.kind.as_str(),
                episode.status,
                episode.metrics.max_z2,
                episode.metrics.max_th2,
                episode.metrics.control_effort,
                episode
                    .metrics
                    .convergence_time
                    .map(|t| format!(", converged at {t:.1} s"))
                    .unwrap_or_default()
            );
            Ok(())
        }
        Command::Sweep { common, parallel } => {
            let cfg = load_config(&common)?;
            ensure_out(&common.out)?;
            let result = run_sweep(&cfg, parallel)?;
            for (kind, cells) in &result.controllers {
                let name = format!("roa_{}.csv", kind.as_str().replace('-', "_"));
                let mut w = BufWriter::new(File::create(common.out.join(&name))?);
                write_sweep_csv(cells, &mut w)?;
                w.flush()?;
                let converged = cells
                    .iter()
                    .filter(|c| c.status == msnt_core::EpisodeStatus::Converged)
                    .count();
                println!("{}: {converged}/{} cells converged -> {name}", kind.as_str(), cells.len());
            }
            Ok(())
        }
        Command::Path(common) => {
            let cfg = load_config(&common)?;
            ensure_out(&common.out)?;
            let kind = ControllerKind::parse(&cfg.scenario.controller)?;
            let vehicle = cfg
                .vehicle
                .build(kind != ControllerKind::Ss2tMpc)
                .map_err(HarnessError::from)?;
            let path = cfg.path.build(&vehicle)?;
            let out_path = common.out.join("path.csv");
            let mut w = BufWriter::new(File::create(&out_path)?);
            path.write_csv(&vehicle, &mut w)
                .map_err(|e| AppError::Runtime(e.to_string()))?;
            w.flush()?;
            println!(
                "{} samples over {:.1} m -> {}",
                path.points.len(),
                path.s_max(),
                out_path.display()
            );
            Ok(())
        }
        Command::Linearize { common, s } => {
            let cfg = load_config(&common)?;
            let kind = ControllerKind::parse(&cfg.scenario.controller)?;
            let vehicle = cfg
                .vehicle
                .build(kind != ControllerKind::Ss2tMpc)
                .map_err(HarnessError::from)?;
            let path = cfg.path.build(&vehicle)?;
            let point = path.sample_at(s);
            let em = ErrorModel::new(vehicle);
            let (a, b) = em.models(&point);
            let (f, g) = ErrorModel::discretize(&a, &b, cfg.mpc.ds, path.direction);
            println!("at s = {:.3} m (kappa_r = {:.6}):", point.s, point.curvature);
            print_matrix("A", &a);
            print_matrix("B", &b);
            println!("discretized (ds = {}, direction = {}):", cfg.mpc.ds, path.direction);
            print_matrix("F", &f);
            print_matrix("G", &g);
            let (fs, gs) = straight_discrete(&em, cfg.mpc.ds, path.direction);
            println!("straight-reference comparison:");
            print_matrix("F_straight", &fs);
            print_matrix("G_straight", &gs);
            Ok(())
        }
        Command::Bench { common, steps } => {
            let mut cfg = load_config(&common)?;
            cfg.scenario.duration = steps as f64 / cfg.scenario.control_rate;
            let episode = run_episode(&cfg)?;
            println!(
                "{}: {} controller steps, mean {:.3} ms/step ({})",
                episode.kind.as_str(),
                episode.records.len(),
                episode.mean_step_seconds * 1e3,
                episode.status
            );
            Ok(())
        }
    }
}

fn print_matrix(name: &str, m: &DMatrix<f64>) {
    println!("{name} ({}x{}):", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:>12.8}", m[(i, j)])).collect();
        println!("  [{}]", row.join(", "));
    }
}
