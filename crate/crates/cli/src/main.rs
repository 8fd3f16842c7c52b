use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use sybilnav_core::fixtures;
use sybilnav_core::sim::{self, Scenario};

#[derive(Parser)]
#[command(
    name = "sybilnav",
    version,
    about = "Deterministic social-navigation attack simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or the name of a shipped scenario).
    Run {
        scenario: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// `section.key=value`; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Re-ingest a probe replay file and rebuild the metrics.
    Replay {
        probe_file: PathBuf,
        #[arg(long)]
        map: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the shipped scenarios.
    ListScenarios,
}

fn read_scenario(arg: &str) -> Result<(String, String, Option<PathBuf>)> {
    let path = PathBuf::from(arg);
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(arg)
        .to_string();
    if path.is_file() {
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let dir = path.parent().map(|p| p.to_path_buf());
        return Ok((name, text, dir));
    }
    match fixtures::scenario_by_name(&name) {
        Some(text) => Ok((name, text.to_string(), None)),
        None => bail!("no scenario file or shipped scenario named {arg:?}"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            overrides,
        } => {
            let (name, text, dir) = read_scenario(&scenario)?;
            let sc = Scenario::parse_with_overrides(&name, &text, &overrides)?;
            let graph = Arc::new(sim::load_map_ref(&sc.map.file, dir.as_deref())?);
            let result = sim::run_scenario(&sc, graph, seed)?;
            sim::emit_outputs(&result, &out)?;
            print!("{}", result.summary.render());
        }
        Command::Replay {
            probe_file,
            map,
            out,
        } => {
            let text = fs::read_to_string(&probe_file)
                .with_context(|| format!("reading {}", probe_file.display()))?;
            let graph = Arc::new(sim::load_map_ref(&map, None)?);
            let log = sim::replay_text(&text, graph)?;
            sim::emit_replay_outputs(&log, &out)?;
            println!("replayed {} ticks into {}", log.ticks.len(), out.display());
        }
        Command::ListScenarios => {
            for (name, text) in fixtures::SCENARIOS {
                let about = text
                    .lines()
                    .next()
                    .and_then(|l| l.strip_prefix('#'))
                    .map(str::trim)
                    .unwrap_or("");
                println!("{name:<24} {about}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
