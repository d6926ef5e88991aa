//! `qwalk`: run boundary harnesses on scenario files.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use qwalk_cli::{execute, CliError, Command, Format, Overrides};

#[derive(Debug, Parser)]
#[command(name = "qwalk", version, about = "Random walks on crossed-product quantum groups and fusion rings")]
struct Args {
    command: Command,
    scenario: PathBuf,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    window: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, default_value = ".qwalk-cache")]
    cache_dir: PathBuf,
    #[arg(long)]
    no_cache: bool,
    /// Write timing and cache outcomes as JSON here.
    #[arg(long)]
    meta: Option<PathBuf>,
}

fn run(args: &Args) -> Result<bool, CliError> {
    let started = Instant::now();
    let overrides = Overrides { horizon: args.horizon, window: args.window, seed: args.seed };
    let cache_dir = (!args.no_cache).then_some(&args.cache_dir);
    let done = execute(args.command, &args.scenario, &overrides, cache_dir)?;
    let text = done.render(args.format);
    match &args.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    let elapsed = started.elapsed().as_secs_f64();
    for (what, outcome) in &done.cache_log {
        log::info!("cache {what}: {outcome}");
    }
    log::info!("{} finished in {elapsed:.3} s", done.report.command);
    if let Some(p) = &args.meta {
        let meta = serde_json::json!({
            "elapsed_seconds": elapsed,
            "cache": done.cache_log.iter().map(|(w, o)| serde_json::json!({"item": w, "outcome": o.to_string()})).collect::<Vec<_>>(),
        });
        std::fs::write(p, serde_json::to_string_pretty(&meta).expect("meta serializes"))?;
    }
    for a in done.report.assertions.iter().filter(|a| !a.ok) {
        eprintln!("assertion {} did not meet expectation: {}", a.name, a.detail);
    }
    Ok(done.report.all_ok())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qwalk: {e}");
            ExitCode::from(2)
        }
    }
}
