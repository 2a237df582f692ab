//! `suncluster`: two-level daily solar irradiance clustering pipeline.
//!
//! Subcommands mirror the pipeline stages so partial reruns are cheap:
//! `fetch` downloads station CSVs, `clearsky` exports the model output,
//! `features` the per-day scalars, `seasons` the level-1 calendar,
//! `cluster` the per-day level labels, and `report`/`all` run everything
//! and emit the report (JSON, or JSON plus the CSV bundle).
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 fetch error.

mod fetch;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use suncluster::analysis::Method;
use suncluster::config::RunConfig;
use suncluster::pipeline;
use suncluster::report::{
    emit_report, write_boundaries_json, write_cluster_labels_csv, write_features_csv,
    write_rejected_csv, write_season_calendar_csv, ReportFormat,
};
use suncluster::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SitePreset {
    Golden,
    Hawaii,
    /// Site comes entirely from --config.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Beta,
    Ed,
    Dtw,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Beta => Method::Beta,
            MethodArg::Ed => Method::Ed,
            MethodArg::Dtw => Method::Dtw,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "suncluster",
    version,
    about = "Season identification and within-season irradiance-level clustering \
             from minute-sampled GHI measurements"
)]
struct Cli {
    /// TOML run configuration; the help footer shows every default
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Built-in site preset [default: golden]
    #[arg(long, global = true, value_enum)]
    site: Option<SitePreset>,

    /// Level-2 methods to run, comma separated [default: beta,ed,dtw]
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Option<Vec<MethodArg>>,

    /// Clustering seed [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Distance-matrix cache directory [default: no cache]
    #[arg(long, global = true, value_name = "DIR")]
    cache: Option<PathBuf>,

    /// Forbid network access; fetch succeeds only from cached files
    #[arg(long, global = true)]
    offline: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Download the configured station CSVs into the input directory
    Fetch,
    /// Export per-minute clear-sky GHI (date,minute,csi_wm2)
    Clearsky {
        /// First date (YYYY-MM-DD); defaults to the input data span
        #[arg(long)]
        start: Option<NaiveDate>,
        /// Last date inclusive (YYYY-MM-DD)
        #[arg(long)]
        end: Option<NaiveDate>,
    },
    /// Compute per-day features (features.csv, rejected_days.csv)
    Features,
    /// Identify seasons (season_calendar.csv, season_boundaries.json)
    Seasons,
    /// Run level-2 clustering (cluster_labels.csv)
    Cluster,
    /// Full pipeline, report.json only
    Report,
    /// Full pipeline, report.json plus the CSV bundle
    All,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidSite(_) | Error::InvalidTurbidity(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let footer = format!(
        "Default configuration (--site golden), overridable via --config:\n\n{}",
        RunConfig::golden().to_toml_string().unwrap_or_default()
    );
    let matches = Cli::command().after_long_help(footer).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };

    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Core(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
        Err(CliError::Fetch(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(4)
        }
    }
}

enum CliError {
    Core(Error),
    Fetch(fetch::FetchError),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<fetch::FetchError> for CliError {
    fn from(e: fetch::FetchError) -> Self {
        CliError::Fetch(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut config = match (&cli.config, cli.site) {
        (None, None | Some(SitePreset::Golden)) => RunConfig::golden(),
        (None, Some(SitePreset::Hawaii)) => RunConfig::hawaii(),
        (None, Some(SitePreset::Custom)) => {
            return Err(Error::Config("--site custom requires --config".into()))
        }
        (Some(path), None | Some(SitePreset::Custom)) => RunConfig::load(path)?,
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "pass either a --site preset or --config, not both (use --site custom)".into(),
            ))
        }
    };
    if let Some(methods) = &cli.methods {
        config.level2.methods = methods.iter().map(|&m| m.into()).collect();
    }
    if let Some(seed) = cli.seed {
        config.kmeans.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.io.out_dir = out.clone();
    }
    if let Some(cache) = &cli.cache {
        config.io.cache_dir = Some(cache.clone());
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = resolve_config(&cli)?;
    match cli.command {
        Command::Fetch => {
            let fetch_config = config
                .fetch
                .as_ref()
                .ok_or_else(|| Error::Config("config has no [fetch] section".into()))?;
            let outcome = if cli.offline {
                fetch::fetch_all(fetch_config, &config.io.input_dir, &fetch::OfflineDownloader)?
            } else {
                fetch::fetch_all(
                    fetch_config,
                    &config.io.input_dir,
                    &fetch::HttpDownloader::default(),
                )?
            };
            println!(
                "fetched {} files, {} already cached, into {}",
                outcome.downloaded.len(),
                outcome.skipped.len(),
                config.io.input_dir.display()
            );
        }
        Command::Clearsky { start, end } => {
            let (start, end) = match (start, end) {
                (Some(s), Some(e)) => (s, e),
                (None, None) => {
                    let (days, _) =
                        pipeline::load_days(&config.io.input_dir, &config.ingest.columns())?;
                    match (days.first(), days.last()) {
                        (Some(first), Some(last)) => (first.date, last.date),
                        _ => {
                            return Err(Error::Data(
                                "no input days to derive a clear-sky date span from".into(),
                            )
                            .into())
                        }
                    }
                }
                _ => {
                    return Err(
                        Error::Config("pass both --start and --end, or neither".into()).into()
                    )
                }
            };
            if end < start {
                return Err(Error::Config(format!("end {end} precedes start {start}")).into());
            }
            let dates: Vec<NaiveDate> = (0..=(end - start).num_days())
                .map(|offset| start + chrono::Duration::days(offset))
                .collect();
            let days = pipeline::clearsky_days(&dates, &config)?;
            std::fs::create_dir_all(&config.io.out_dir)?;
            let path = config.io.out_dir.join("clearsky.csv");
            let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            suncluster::clearsky::write_csv(&days, file)?;
            println!("wrote {}", path.display());
        }
        Command::Features => {
            let prepared = pipeline::prepare(&config)?;
            std::fs::create_dir_all(&config.io.out_dir)?;
            let features = write_features_csv(&prepared.table.features, &config.io.out_dir)?;
            let rejected = write_rejected_csv(&prepared.table.rejected, &config.io.out_dir)?;
            println!("wrote {}", features.display());
            println!("wrote {}", rejected.display());
        }
        Command::Seasons => {
            let prepared = pipeline::prepare(&config)?;
            let calendar = pipeline::identify(&prepared, &config)?;
            std::fs::create_dir_all(&config.io.out_dir)?;
            let csv = write_season_calendar_csv(&calendar, &config.io.out_dir)?;
            let json = write_boundaries_json(&calendar, &config.io.out_dir)?;
            println!("wrote {}", csv.display());
            println!("wrote {}", json.display());
        }
        Command::Cluster => {
            let prepared = pipeline::prepare(&config)?;
            let calendar = pipeline::identify(&prepared, &config)?;
            let (_, labeled) = pipeline::run_level2_all(&prepared, &calendar, &config)?;
            std::fs::create_dir_all(&config.io.out_dir)?;
            let path = write_cluster_labels_csv(&labeled, &config.io.out_dir)?;
            println!("wrote {}", path.display());
        }
        Command::Report => {
            let artifacts = pipeline::run_full(&config)?;
            let written = emit_report(&artifacts, &config.io.out_dir, ReportFormat::Json)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::All => {
            let artifacts = pipeline::run_full(&config)?;
            let written = emit_report(&artifacts, &config.io.out_dir, ReportFormat::CsvBundle)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
