#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod output;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::Task;
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "bathdyn", version, about = "Exact dynamics of a damped oscillator in a bosonic reservoir")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override a config entry, e.g. --set model.eta=0.1 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task named in the config.
    Run(RunArgs),
    #[command(name = "kernels")]
    Kernels(RunArgs),
    #[command(name = "dissipation")]
    Dissipation(RunArgs),
    #[command(name = "coefficients")]
    Coefficients(RunArgs),
    #[command(name = "steady")]
    Steady(RunArgs),
    #[command(name = "sweep_eta", alias = "sweep-eta")]
    SweepEta(RunArgs),
    #[command(name = "sweep_omegac", alias = "sweep-omegac")]
    SweepOmegac(RunArgs),
    #[command(name = "boundstate_map", alias = "boundstate-map")]
    BoundstateMap(RunArgs),
    #[command(name = "occupation")]
    Occupation(RunArgs),
    #[command(name = "nonmarkov")]
    Nonmarkov(RunArgs),
    #[command(name = "oracle_check", alias = "oracle-check")]
    OracleCheck(RunArgs),
    #[command(name = "cavity_array", alias = "cavity-array")]
    CavityArray(RunArgs),
}

impl Command {
    fn split(self) -> (RunArgs, Option<Task>) {
        match self {
            Self::Run(a) => (a, None),
            Self::Kernels(a) => (a, Some(Task::Kernels)),
            Self::Dissipation(a) => (a, Some(Task::Dissipation)),
            Self::Coefficients(a) => (a, Some(Task::Coefficients)),
            Self::Steady(a) => (a, Some(Task::Steady)),
            Self::SweepEta(a) => (a, Some(Task::SweepEta)),
            Self::SweepOmegac(a) => (a, Some(Task::SweepOmegac)),
            Self::BoundstateMap(a) => (a, Some(Task::BoundstateMap)),
            Self::Occupation(a) => (a, Some(Task::Occupation)),
            Self::Nonmarkov(a) => (a, Some(Task::Nonmarkov)),
            Self::OracleCheck(a) => (a, Some(Task::OracleCheck)),
            Self::CavityArray(a) => (a, Some(Task::CavityArray)),
        }
    }
}

fn execute(args: RunArgs, task: Option<Task>) -> CliResult<Vec<PathBuf>> {
    let mut raw = config::load(&args.config)?;
    if !raw.is_object() {
        return Err(CliError::schema("config must be a JSON object"));
    }
    for s in &args.set {
        config::apply_set(&mut raw, s)?;
    }
    if let Some(t) = task {
        raw["task"] = json!(t.as_str());
    }
    let scenario = config::validate(config::parse(raw)?)?;
    log::info!("task {} over {} parameter point(s)", scenario.config.task.as_str(), scenario.points.len());
    let artifacts = tasks::run(&scenario)?;
    let effective: Value = serde_json::to_value(&scenario.config).expect("config serializes");
    let grid = json!({ "t_max": scenario.grid.t_max, "dt": scenario.grid.dt, "n_steps": scenario.grid.n_steps });
    output::write_all(&args.out, scenario.config.task.as_str(), &effective, grid, &artifacts)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (args, task) = cli.command.split();
    match execute(args, task) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bathdyn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
