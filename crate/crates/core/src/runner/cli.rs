use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use super::emit::{to_json, SweepOutput};
use super::spec::{read_config, ScenarioSpec};
use super::sweep::{optimize_point, sweep_fisher, sweep_negativity};
use crate::error::{Error, Result};
use crate::protocol::{run_protocol, ProtocolConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "secure-sensing", version, about = "Controlled secure remote sensing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full protocol and print its transcript as JSON.
    Protocol(Common),
    /// Tripartite negativity over time, with and without control.
    SweepNegativity(Common),
    /// Uncontrolled and optimized QFI/CFI over the time grid.
    SweepFisher(Common),
    /// Optimize a single pulse and report it as JSON.
    Optimize(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn metadata(command: &str, spec: &ScenarioSpec) -> serde_json::Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "scenario": spec.tag(),
        "seed": spec.seed,
        "config": spec,
    })
}

fn load_spec(args: &Common) -> Result<ScenarioSpec> {
    let mut spec = ScenarioSpec::load(&args.config)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn load_protocol(args: &Common) -> Result<ProtocolConfig> {
    let path = &args.config;
    let text = read_config(path)?;
    let mut cfg: ProtocolConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: parse error: {e}", path.display())))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_sweep(out: Option<&Path>, sweep: &SweepOutput) -> Result<()> {
    match out {
        Some(p) => sweep.emit(p),
        None => write_text(None, &sweep.to_csv()),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Protocol(args) => {
            let cfg = load_protocol(&args)?;
            let outcome = run_protocol(&cfg)?;
            let doc = json!({
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "command": "protocol",
                "config": cfg,
                "security": outcome.security,
                "estimation": outcome.estimation,
            });
            write_text(args.out.as_deref(), &to_json(&doc)?)
        }
        Command::SweepNegativity(args) => {
            let spec = load_spec(&args)?;
            let (uc, c) = sweep_negativity(&spec)?;
            let rows = uc
                .times()
                .iter()
                .zip(uc.values().iter().zip(c.values()))
                .map(|(&t, (&a, &b))| vec![t, a, b])
                .collect();
            let sweep = SweepOutput::new(
                &["T", "neg_uncontrolled", "neg_controlled"],
                rows,
                metadata("sweep-negativity", &spec),
            );
            emit_sweep(args.out.as_deref(), &sweep)
        }
        Command::SweepFisher(args) => {
            let spec = load_spec(&args)?;
            let rows = sweep_fisher(&spec)?
                .into_iter()
                .map(|p| {
                    let r = p.record;
                    vec![r.t, r.uc_qfi, r.c_qfi, r.uc_cfi, r.c_cfi]
                })
                .collect();
            let sweep = SweepOutput::new(
                &["T", "uc_qfi", "c_qfi", "uc_cfi", "c_cfi"],
                rows,
                metadata("sweep-fisher", &spec),
            );
            emit_sweep(args.out.as_deref(), &sweep)
        }
        Command::Optimize(args) => {
            let spec = load_spec(&args)?;
            let result = optimize_point(&spec, spec.t, spec.objective, 0)?;
            let mut doc = metadata("optimize", &spec);
            doc["result"] = serde_json::to_value(&result).map_err(|e| Error::Config(e.to_string()))?;
            write_text(args.out.as_deref(), &to_json(&doc)?)
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 success, 2 usage or configuration error, 1 runtime failure.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Error::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
