//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::http::{self, AppState};
use super::session::SessionConfig;
use crate::pipeline::{case_rms, evaluate, location_name, train_diagnoser, DiagnoserConfig, DiagnosisModel, Metrics};
use crate::plantsim::{
    generate_corpus, read_corpus_csv, read_telemetry_csv, reference_scenarios, write_corpus_csv, PlantConfig,
    ScenarioSpec,
};
use crate::rbfn::StopReason;

/// Exit code when training stopped before reaching its MSE goal.
pub const EXIT_GOAL_NOT_MET: u8 = 2;

/// Contents of the `--config` file. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub plant: PlantConfig,
    pub diagnoser: DiagnoserConfig,
    pub session: SessionConfig,
}

impl AppConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "pwrdiag", version, about = "PWR transient simulation and PCA + RBF network fault diagnosis")]
pub struct Cli {
    /// Seed for scenario noise (simulate) or the data split (train).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Time compression factor for live sessions.
    #[arg(long, global = true)]
    pub speed: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// The six reference malfunction runs.
    Reference,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run scenarios and write a labelled corpus CSV.
    Simulate {
        /// Scenario JSON: one object or an array of objects.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        preset: Option<Preset>,
        /// Total frames for a preset.
        #[arg(long, default_value_t = 5446)]
        frames: usize,
        /// Noise level for a preset.
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Train a diagnosis model from a labelled corpus CSV.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Metrics report path (JSON); a text table is written next to it.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Diagnose a telemetry CSV as one window.
    Diagnose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        telemetry: PathBuf,
    },
    /// Evaluate a model on a labelled corpus CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        tick_ms: Option<u64>,
    },
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::default(),
    };
    if let Some(speed) = cli.speed {
        cfg.session.speed = speed;
    }
    match cli.command {
        Command::Simulate { scenario, preset, frames, noise, out } => {
            let mut scenarios = match (scenario, preset) {
                (Some(path), _) => read_scenarios(&path)?,
                (None, Some(Preset::Reference)) => reference_scenarios(frames, noise, cli.seed.unwrap_or(0)),
                (None, None) => bail!("either --scenario or --preset is required"),
            };
            if let Some(seed) = cli.seed {
                for (i, s) in scenarios.iter_mut().enumerate() {
                    s.rng_seed = seed + i as u64;
                }
            }
            let ds = generate_corpus(&scenarios, &cfg.plant)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_corpus_csv(&ds, BufWriter::new(file))?;
            eprintln!("wrote {} frames from {} scenario(s) to {}", ds.len(), scenarios.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { corpus, out, report } => {
            if let Some(seed) = cli.seed {
                cfg.diagnoser.split_seed = seed;
            }
            let ds = read_corpus_csv(open(&corpus)?)?;
            let model = train_diagnoser(&ds, &cfg.diagnoser)?;
            model.save(&out).with_context(|| format!("writing {}", out.display()))?;
            let t = &model.training;
            println!(
                "stop: {:?}  final mse: {:.6}  hidden neurons: {}  epochs: {}  wall time: {:.3} s",
                t.stop_reason,
                t.final_mse(),
                model.network.hidden_count(),
                t.epochs,
                t.wall_time_s
            );
            print!("{}", model.metrics.split_table());
            let report = report.unwrap_or_else(|| out.with_extension("metrics.json"));
            write_report(&model.metrics, &report)?;
            if t.stop_reason != StopReason::GoalMet {
                eprintln!(
                    "warning: training stopped by {:?} before reaching mse goal {}; model written anyway",
                    t.stop_reason, cfg.diagnoser.rbfn.mse_goal
                );
                return Ok(ExitCode::from(EXIT_GOAL_NOT_MET));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose { model, telemetry } => {
            let model = DiagnosisModel::load(&model).with_context(|| format!("loading {}", model.display()))?;
            let tel = read_telemetry_csv(open(&telemetry)?)?;
            if tel.frames.is_empty() {
                bail!("{} has no frames", telemetry.display());
            }
            model.check_channels(&tel.channels)?;
            let d = crate::pipeline::diagnose(&model, &tel.frames)?;
            let name = location_name(d.predicted_location);
            let target = tel.labels.as_ref().and_then(|l| l.first()).map(|l| l.as_output());
            let mut out = serde_json::to_value(d)?;
            out["location_name"] = json!(name);
            println!("{}", serde_json::to_string_pretty(&out)?);
            let (target_s, rms_s) = match target {
                Some(t) => (format!("{:.2} {:.2}", t[0], t[1]), format!("{:.3}", case_rms(&d.raw_output, &t))),
                None => ("-".to_string(), "-".to_string()),
            };
            println!(
                "{:<28} {:>12} {:>8.2} {:>6.2} {:>8}",
                format!("{name}, {:.1}%", d.predicted_size),
                target_s,
                d.raw_output[0],
                d.raw_output[1],
                rms_s
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { model, corpus, report } => {
            let model = DiagnosisModel::load(&model).with_context(|| format!("loading {}", model.display()))?;
            let ds = read_corpus_csv(open(&corpus)?)?;
            let metrics = evaluate(&model, &ds)?;
            print!("{}", metrics.split_table());
            print!("{}", metrics.case_table());
            if let Some(report) = report {
                write_report(&metrics, &report)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { bind, model, tick_ms } => {
            if let Some(ms) = tick_ms {
                cfg.session.tick_ms = ms;
            }
            let model = model
                .map(|p| DiagnosisModel::load(&p).with_context(|| format!("loading {}", p.display())))
                .transpose()?;
            let state = AppState::new(cfg.plant, cfg.session, model);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(http::serve(bind, state))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

/// A scenario file holds one scenario object or an array of them.
pub fn read_scenarios(path: &Path) -> anyhow::Result<Vec<ScenarioSpec>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<ScenarioSpec>),
        One(Box<ScenarioSpec>),
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: OneOrMany = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let list = match parsed {
        OneOrMany::Many(v) => v,
        OneOrMany::One(s) => vec![*s],
    };
    for s in &list {
        s.validate()?;
    }
    Ok(list)
}

/// JSON report plus a text table at the same path with a `.txt` extension.
fn write_report(metrics: &Metrics, path: &Path) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(metrics)?)
        .with_context(|| format!("writing {}", path.display()))?;
    let mut txt = BufWriter::new(File::create(path.with_extension("txt"))?);
    txt.write_all(metrics.split_table().as_bytes())?;
    txt.write_all(b"\n")?;
    txt.write_all(metrics.case_table().as_bytes())?;
    txt.flush()?;
    Ok(())
}
