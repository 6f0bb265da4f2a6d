//! Command-line front end: simulate traces, train profiles, detect, run the
//! cooperative protocol and sweep ROC curves.

mod commands;
mod config;
mod error;
mod input;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{execute, Invocation};
use error::CliError;
use output::{hash_file, read_manifest, MANIFEST_FILE};

#[derive(Parser)]
#[command(
    name = "volflow",
    version,
    about = "Volume and flow based DDoS detection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `scenario.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted config override, e.g. `scenario.attack_rate_mbps=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a labeled trace with per-edge streams.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Build a normal profile from an attack-free trace.
    Train {
        #[command(flatten)]
        common: Common,
        trace: PathBuf,
        /// Train even if the trace has attack windows.
        #[arg(long)]
        force: bool,
    },
    /// Run the single-point detector over a trace.
    Detect {
        #[command(flatten)]
        common: Common,
        trace: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        /// Tolerance factor applied to every measure.
        #[arg(long)]
        r: Option<f64>,
    },
    /// Run the cooperative protocol over a simulated trace directory.
    Coop {
        #[command(flatten)]
        common: Common,
        trace: PathBuf,
    },
    /// Sweep tolerance factors over the evaluation suite.
    Roc {
        #[command(flatten)]
        common: Common,
        /// Comma-separated tolerance factors; overrides `roc.r_values`.
        #[arg(long, value_delimiter = ',')]
        r_list: Option<Vec<f64>>,
    },
    /// Re-run a command from its manifest and compare output hashes.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, inv, r_list) = match cli.command {
        Command::Simulate { common } => (common, Invocation::Simulate, None),
        Command::Train {
            common,
            trace,
            force,
        } => (common, Invocation::Train { trace, force }, None),
        Command::Detect {
            common,
            trace,
            profile,
            r,
        } => (common, Invocation::Detect { trace, profile, r }, None),
        Command::Coop { common, trace } => (common, Invocation::Coop { trace }, None),
        Command::Roc { common, r_list } => (common, Invocation::Roc, r_list),
        Command::Replay { manifest, out } => return replay(&manifest, &out),
    };
    let mut cfg = config::load(common.config.as_deref(), &common.set, common.seed)?;
    if let Some(r) = r_list {
        cfg.roc.r_values = r;
    }
    execute(&inv, &cfg, &common.out)?;
    Ok(())
}

fn replay(manifest_path: &Path, out: &Path) -> Result<(), CliError> {
    let path = if manifest_path.is_dir() {
        manifest_path.join(MANIFEST_FILE)
    } else {
        manifest_path.to_owned()
    };
    let original = read_manifest(&path)?;
    for input in &original.inputs {
        let now = hash_file(Path::new(&input.path))?;
        if now != input.sha256 {
            return Err(CliError::Data(format!(
                "input {} changed since the recorded run",
                input.path
            )));
        }
    }
    let cfg = config::from_value(original.config.clone())?;
    let inv: Invocation = serde_json::from_value(original.options.clone())
        .map_err(|e| CliError::Config(format!("{}: options: {e}", path.display())))?;
    let again = execute(&inv, &cfg, out)?;
    if again.outputs != original.outputs {
        let differing: Vec<&str> = original
            .outputs
            .iter()
            .filter(|o| !again.outputs.contains(o))
            .map(|o| o.path.as_str())
            .collect();
        return Err(CliError::Internal(format!(
            "replay outputs differ: {}",
            differing.join(", ")
        )));
    }
    eprintln!("replay matched {} outputs", again.outputs.len());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
