use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eegdd::error::{PipelineError, Result};
use eegdd::stages::{self, label_map};
use eegdd::{OnlinePredictor, PipelineConfig, TrainedModel};
use eegdd_core::load_raw_csv;

#[derive(Parser)]
#[command(name = "eegdd", version, about = "EEG driver-distraction detection pipeline")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory (same as `--set paths.out_dir=DIR`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus.
    Synth,
    /// Compute feature series for every session in the manifest.
    Extract,
    /// Cut windows and assign the participant split.
    Segment,
    /// Train every configured model and repetition.
    Train,
    /// Score saved models and write the report.
    Evaluate,
    /// Replay one raw session through a saved model.
    Stream {
        /// Raw session CSV.
        #[arg(long)]
        session: PathBuf,
        /// Saved model file.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        participant: u32,
        /// Write lines here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// synth, extract, segment, train and evaluate in order.
    RunAll,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::from_sources(cli.config.as_deref(), &cli.set)?;
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Synth => stages::synth(&config).map(|_| ()),
        Command::Extract => stages::extract(&config).map(|_| ()),
        Command::Segment => stages::segment(&config).map(|_| ()),
        Command::Train => stages::train(&config),
        Command::Evaluate | Command::RunAll => {
            let report = if matches!(cli.command, Command::RunAll) {
                stages::run_all(&config)?
            } else {
                stages::evaluate(&config)?
            };
            for a in report.aggregates() {
                println!(
                    "{:<13} accuracy {:.4} ± {:.4}  f1_distracted {:.4}  f1_driving {:.4}",
                    a.model.as_str(),
                    a.mean[0],
                    a.std[0],
                    a.mean[3],
                    a.mean[6]
                );
            }
            Ok(())
        }
        Command::Stream {
            session,
            model,
            participant,
            output,
        } => {
            let raw = load_raw_csv(session, *participant).map_err(|e| PipelineError::from_core("stream", e))?;
            let model = TrainedModel::load(model)?;
            let mut online = OnlinePredictor::new(model, config.features.clone(), config.window, label_map(&config)?, *participant)?;
            let lines = online.replay(&raw)?;
            let mut text = String::from("t_end,state,prob_distracted\n");
            for p in &lines {
                text.push_str(&p.to_line());
                text.push('\n');
            }
            match output {
                Some(path) => std::fs::write(path, text).map_err(|e| PipelineError::io("stream", path, e)),
                None => std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| PipelineError::data("stream", e.to_string())),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
