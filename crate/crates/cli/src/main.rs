//! `holder`: generate adversarial inputs, compute distances, and measure
//! how well random embeddings separate them.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;

use args::{Cli, Command};
use output::{RunManifest, Sink};

/// Validation and usage problems exit with 2, numerical failures with 3.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical =
        err.chain().any(|e| matches!(e.downcast_ref::<holder_core::Error>(), Some(holder_core::Error::Numerical(_))));
    if numerical {
        3
    } else {
        2
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> Result<()> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut sink = Sink::new(cli.common.out.as_deref(), cli.common.format)?;
    commands::run(&cli, &mut sink)?;
    let config = serde_json::to_value(&cli)?;
    sink.finish(cli.command.name(), argv, config, cli.common.seed)
}

fn replay(cli: Cli) -> Result<()> {
    let Command::Replay { manifest } = &cli.command else { unreachable!() };
    let text = std::fs::read_to_string(manifest).with_context(|| format!("cannot read {}", manifest.display()))?;
    let m: RunManifest =
        serde_json::from_str(&text).with_context(|| format!("{} is not a run manifest", manifest.display()))?;
    let mut argv = m.argv;
    // a later --out on the replay command wins over the recorded one
    if let Some(out) = &cli.common.out {
        argv.push("--out".into());
        argv.push(out.display().to_string());
    }
    let recorded = Cli::try_parse_from(&argv).context("recorded arguments no longer parse")?;
    if matches!(recorded.command, Command::Replay { .. }) {
        bail!("a manifest cannot replay another replay");
    }
    execute(recorded, argv)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let result = if matches!(cli.command, Command::Replay { .. }) { replay(cli) } else { execute(cli, argv) };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
