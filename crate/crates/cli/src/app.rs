//! Command-line entry point shared by the binary and its tests.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use tokenlab::ingest::{fetch_catalog, load_milestones, load_shares, load_training, persist_snapshot, FetchOptions, RunConfig};
use tokenlab::model::{Quarter, Tier};
use crate::analysis::{self, DecaySelection};
use crate::output::Table;
use crate::report::{self, Dataset};

#[derive(Parser)]
#[command(name = "tokenlab", version, about = "Token-pricing analytics")]
struct Cli {
    /// TOML run configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sample {
    Economy,
    Mid,
    Flagship,
    Pooled,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch the pricing catalog and store a snapshot plus a CSV copy.
    Ingest {
        /// Read the catalog payload from a local file instead of the network.
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long, default_value = "snapshot.json")]
        snapshot: PathBuf,
    },
    /// Exponential decay fits by tier.
    Decay {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        tier: Option<Sample>,
    },
    /// Chow structural-break scan of the pooled log-price series.
    Chow {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        min_segment: Option<usize>,
        #[arg(long)]
        window_start: Option<NaiveDate>,
        #[arg(long)]
        window_end: Option<NaiveDate>,
    },
    /// Quarterly reasoning premium.
    Premium {
        #[arg(long)]
        input: PathBuf,
        /// Quarters such as 2024Q3; default is every quarter with both kinds.
        #[arg(long, value_delimiter = ',')]
        quarters: Vec<Quarter>,
    },
    /// HHI, CR4 and concentration band per period.
    Hhi {
        #[arg(long)]
        input: PathBuf,
    },
    /// CCR/BCC efficiency of a cross-section.
    Dea {
        #[arg(long)]
        input: PathBuf,
    },
    /// Malmquist decomposition across quarters of the panel.
    Malmquist {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        periods: Vec<Quarter>,
    },
    /// Training-cost elasticity regressions and the unit-cost comparison.
    Regress {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        training: PathBuf,
    },
    /// Bootstrap, sub-sample, specification and DEA sensitivity checks.
    Robustness {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        training: PathBuf,
        #[arg(long)]
        cross_section: PathBuf,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regenerate every table and figure-data file from a data directory.
    Report {
        #[arg(long, required = true)]
        all: bool,
        #[arg(long)]
        data_dir: PathBuf,
    },
}

fn write_all(tables: &[Table], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    tables
        .iter()
        .map(|t| t.write(dir).with_context(|| format!("writing {}", t.file_name)))
        .collect()
}

fn summarize(command: &str, tables: &[Table], paths: &[PathBuf]) {
    let rows: usize = tables.first().map_or(0, |t| t.rows.len());
    let main = paths.first().map(|p| p.display().to_string()).unwrap_or_default();
    println!("{command}: {rows} row(s) -> {main} ({} file(s))", paths.len());
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = &cli.out_dir;
    let (name, tables) = match cli.command {
        Command::Ingest { fixture, snapshot } => {
            let options = FetchOptions {
                max_attempts: config.catalog.max_attempts,
                fixture: fixture.or(config.catalog.fixture.clone()),
                ..FetchOptions::default()
            };
            let credential = config.credential();
            let snap = fetch_catalog(&config.catalog.endpoint, credential.as_deref(), &options)?;
            std::fs::create_dir_all(out)?;
            let path = out.join(snapshot);
            persist_snapshot(&snap, &path)?;
            let csv = report::records_table(report::CROSS_SECTION, &snap.records);
            let written = write_all(std::slice::from_ref(&csv), out)?;
            println!(
                "ingest: {} record(s), {} skipped -> {} and {}",
                snap.records.len(),
                snap.skipped.len(),
                path.display(),
                written[0].display()
            );
            return Ok(());
        }
        Command::Decay { input, tier } => {
            let selection = match tier {
                None => DecaySelection::All,
                Some(Sample::Economy) => DecaySelection::Tier(Tier::Economy),
                Some(Sample::Mid) => DecaySelection::Tier(Tier::Mid),
                Some(Sample::Flagship) => DecaySelection::Tier(Tier::Flagship),
                Some(Sample::Pooled) => DecaySelection::Pooled,
            };
            ("decay", analysis::decay_tables(&load_milestones(&input)?, &config, selection)?)
        }
        Command::Chow { input, min_segment, window_start, window_end } => {
            if let Some(m) = min_segment {
                config.chow.min_segment = m;
            }
            if window_start.is_some() || window_end.is_some() {
                config.chow.window.start = window_start.or(config.chow.window.start);
                config.chow.window.end = window_end.or(config.chow.window.end);
            }
            config.validate()?;
            ("chow", analysis::chow_tables(&load_milestones(&input)?, &config)?)
        }
        Command::Premium { input, quarters } => ("premium", analysis::premium_tables(&load_milestones(&input)?, &quarters)?),
        Command::Hhi { input } => ("hhi", analysis::hhi_tables(&load_shares(&input)?)?),
        Command::Dea { input } => ("dea", analysis::dea_tables(&load_milestones(&input)?, &config)?),
        Command::Malmquist { input, periods } => {
            if !periods.is_empty() {
                config.dea.malmquist_periods = periods;
            }
            ("malmquist", analysis::malmquist_tables(&load_milestones(&input)?, &config)?)
        }
        Command::Regress { prices, training } => (
            "regress",
            analysis::regress_tables(&load_milestones(&prices)?, &load_training(&training)?, &config)?,
        ),
        Command::Robustness { input, training, cross_section, replications, seed } => {
            if let Some(b) = replications {
                config.bootstrap.replications = b;
            }
            if let Some(s) = seed {
                config.bootstrap.seed = s;
            }
            config.validate()?;
            let tables = analysis::robustness_tables(
                &load_milestones(&input)?,
                &load_training(&training)?,
                &load_milestones(&cross_section)?,
                &config,
            )?;
            ("robustness", tables)
        }
        Command::Report { all, data_dir } => {
            if !all {
                bail!("report requires --all");
            }
            let data = Dataset::load(&data_dir)?;
            let bundle = report::report_all(&data, &config, out)?;
            let files: usize = bundle.tables.iter().map(|t| t.files.len()).sum();
            println!(
                "report: {} tables ({files} file(s)), {} figure-data file(s), {} other -> {}",
                bundle.tables.len(),
                bundle.figures.len(),
                bundle.other.len(),
                out.display()
            );
            return Ok(());
        }
    };
    let paths = write_all(&tables, out)?;
    summarize(name, &tables, &paths);
    Ok(())
}

/// Parses `args` (program name first), runs the command and maps the outcome
/// to an exit status: 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let outcome = pool
        .build()
        .context("configuring the thread pool")
        .and_then(|pool| pool.install(|| execute(cli)));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
