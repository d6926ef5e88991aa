//! Scenario files, the result cache and the report format behind the
//! `qwalk` binary.

pub mod cache;
pub mod commands;
pub mod report;
pub mod scenario;

use std::path::{Path, PathBuf};

use cache::{Cache, Outcome};
use commands::Session;
use report::Report;
use scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] qwalk::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Describe,
    FusionCheck,
    Decay,
    Contraction,
    Martin,
    Harmonic,
    Catwalk,
    GreenClassical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Overrides applied on top of the scenario's `[run]` section.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub horizon: Option<usize>,
    pub window: Option<u32>,
    pub seed: Option<u64>,
}

/// A finished command: the report plus the cache outcomes, which are not
/// part of the report.
#[derive(Debug)]
pub struct Execution {
    pub report: Report,
    pub cache_log: Vec<(String, Outcome)>,
}

impl Execution {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.report.to_json(),
            Format::Csv => self.report.to_csv(),
        }
    }
}

/// Run `command` on the scenario at `path`. `cache_dir = None` disables the
/// cache.
pub fn execute(command: Command, path: &Path, overrides: &Overrides, cache_dir: Option<&PathBuf>) -> Result<Execution, CliError> {
    let (scenario, dir) = Scenario::load(path)?;
    let mut run = scenario.run.clone();
    if let Some(h) = overrides.horizon {
        run.horizon = h;
    }
    if let Some(w) = overrides.window {
        run.window = w;
    }
    if let Some(s) = overrides.seed {
        run.seed = s;
    }
    let cache = match cache_dir {
        Some(d) => Cache::at(d)?,
        None => Cache::disabled(),
    };
    let mut session = Session { scenario, dir, run, cache, cache_log: Vec::new() };
    let mut report = match command {
        Command::Describe => commands::describe(&mut session)?,
        Command::FusionCheck => commands::fusion_check(&mut session)?,
        Command::Decay => commands::decay(&mut session)?,
        Command::Contraction => commands::contraction(&mut session)?,
        Command::Martin => commands::martin(&mut session)?,
        Command::Harmonic => commands::harmonic(&mut session)?,
        Command::Catwalk => commands::catwalk(&mut session)?,
        Command::GreenClassical => commands::green_classical(&mut session)?,
    };
    report.finish();
    Ok(Execution { report, cache_log: session.cache_log })
}
