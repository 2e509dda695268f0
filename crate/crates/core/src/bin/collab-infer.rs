//! Command-line front end to the experiment harness.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use collab_infer::decision::DEFAULT_TEMPERATURE_GRID;
use collab_infer::harness::{
    calibrate_file, calibrate_tiers, generate_traces, report_objective, Experiment, ExperimentConfig, Selection,
};
use collab_infer::{Error, Result};

#[derive(Parser)]
#[command(name = "collab-infer", version, about = "Multi-tier collaborative inference simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); the bundled default when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override the config's global seed.
    #[arg(short, long)]
    seed: Option<u64>,
    /// Where output files are written.
    #[arg(short, long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one (threshold, tau) cell and write per-task outcomes.
    Run {
        #[command(flatten)]
        common: Common,
        /// Offload threshold; the first config threshold by default.
        #[arg(long)]
        threshold: Option<f64>,
        /// Early-exit tau; the first config tau by default.
        #[arg(long)]
        tau: Option<f64>,
        /// Run without the early-exit controller.
        #[arg(long)]
        no_early_exit: bool,
    },
    /// Run the full tau x threshold grid and write the report.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Run every cell without the early-exit controller.
        #[arg(long)]
        no_early_exit: bool,
        /// Accuracy target for row selection; the config's by default.
        #[arg(long)]
        target: Option<f64>,
    },
    /// Write full-depth trace records plus a config that replays them.
    GenTraces {
        #[command(flatten)]
        common: Common,
    },
    /// Fit per-tier temperatures on held-out data.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Held-out samples per tier.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Fit a single temperature to a JSONL file of {"logits":[..],"label":k}.
        #[arg(long)]
        validation: Option<PathBuf>,
        /// Candidate temperatures, comma separated.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_config(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    Ok(path)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, threshold, tau, no_early_exit } => {
            let config = load(&common)?;
            let threshold = threshold.unwrap_or(config.thresholds[0]);
            let tau = (!no_early_exit).then(|| tau.unwrap_or(config.taus[0]));
            let result = Experiment::build(&config)?.run(threshold, tau)?;
            let mut lines = Vec::new();
            for o in &result.outcomes {
                serde_json::to_writer(&mut lines, o).expect("outcome serializes");
                lines.push(b'\n');
            }
            let outcomes = write(&common.out_dir, "outcomes.jsonl", std::str::from_utf8(&lines).expect("utf-8"))?;
            let metrics = serde_json::to_string_pretty(&result.metrics).expect("metrics serialize");
            write(&common.out_dir, "metrics.json", &metrics)?;
            let m = &result.metrics;
            println!(
                "threshold={threshold} tau={} tasks={} accuracy={:.4} mean_latency={:.3}ms l_com={:.3}ms l_tra={:.3}ms",
                tau.map_or("off".to_string(), |t| t.to_string()),
                m.tasks,
                m.accuracy,
                m.mean_latency,
                m.mean_l_com,
                m.mean_l_tra
            );
            println!("wrote {}", outcomes.display());
        }
        Command::Sweep { common, no_early_exit, target } => {
            let config = load(&common)?;
            let report = Experiment::build(&config)?.sweep(!no_early_exit)?;
            report.save(&common.out_dir, "sweep")?;
            print!("{}", report.to_csv());
            if let Some(target) = target.or(config.accuracy_target) {
                let objective = report_objective(&report, target);
                write(&common.out_dir, "objective.json", &serde_json::to_string_pretty(&objective).expect("serializes"))?;
                match objective.selection {
                    Selection::Row(i) => {
                        let r = &report.rows[i];
                        println!(
                            "target {target}: threshold={} tau={} accuracy={} mean_latency={}ms",
                            r.threshold, r.tau, r.accuracy, r.mean_latency
                        );
                    }
                    Selection::Infeasible => println!("target {target}: infeasible"),
                }
            }
        }
        Command::GenTraces { common } => {
            let config = load(&common)?;
            let experiment = Experiment::build(&config)?;
            let store = generate_traces(&experiment)?;
            std::fs::create_dir_all(&common.out_dir).map_err(|e| Error::Io { path: common.out_dir.clone(), source: e })?;
            let traces = common.out_dir.join("traces.jsonl");
            store.save(&traces)?;
            let replay = experiment.replay_config("traces.jsonl");
            write(&common.out_dir, "replay.toml", &replay.to_toml())?;
            println!("wrote {} records to {}", store.records().len(), traces.display());
        }
        Command::Calibrate { common, samples, validation, grid } => {
            let grid = grid.unwrap_or_else(|| DEFAULT_TEMPERATURE_GRID.to_vec());
            let fits = match validation {
                Some(path) => vec![calibrate_file(&path, &grid)?],
                None => {
                    let mut config = load(&common)?;
                    let fits = calibrate_tiers(&Experiment::build(&config)?, samples, &grid)?;
                    for (tier, fit) in config.tiers.iter_mut().zip(&fits) {
                        tier.temperature = fit.temperature;
                    }
                    write(&common.out_dir, "calibrated.toml", &config.to_toml())?;
                    fits
                }
            };
            write(&common.out_dir, "calibration.json", &serde_json::to_string_pretty(&fits).expect("serializes"))?;
            for f in &fits {
                println!(
                    "tier {} {}: T={} nll {:.4} -> {:.4} ({} samples)",
                    f.tier, f.name, f.temperature, f.nll_before, f.nll_after, f.samples
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(cli) {
        Ok(()) => {
            eprintln!("done in {:.2}s wall clock", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
