use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Result};
use clap::Parser;

use allen_cahn_cli::commands::record_timing;
use allen_cahn_cli::{run, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "allen-cahn",
    version,
    about = "Connections, strip minimizers and interface flows for planar Allen-Cahn systems"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a config field, e.g. `--set grid.h=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; replaces `outputs.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn threads() -> Result<()> {
    let n = match std::env::var("TOOL_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| anyhow!("TOOL_THREADS must be a non-negative integer, got {v:?}"))?,
        Err(_) => 0,
    };
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<i32> {
    threads()?;
    let mut overrides = Vec::new();
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(dir) = &cli.out {
        let dir = dir
            .to_str()
            .ok_or_else(|| anyhow!("--out must be valid UTF-8"))?;
        overrides.push((
            "outputs.dir".into(),
            serde_json::Value::String(dir.into()).to_string(),
        ));
    }
    let cfg = RunConfig::load(&cli.config, &overrides)?;
    let start = Instant::now();
    let code = run(cli.command, &cfg)?;
    record_timing(&cfg.outputs.dir, cli.command, start.elapsed().as_secs_f64())?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
