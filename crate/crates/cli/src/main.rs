//! `stylometry` command-line interface.
//!
//! Exit codes: 0 success, 3 input error (including images skipped during
//! extraction), 4 configuration error, 5 stage-chaining error, 1 anything
//! else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use stylometry::pipeline::{write_stripe_corpus, ExtractSummary, Pipeline, ReportSummary, RunConfig, StripeConfig};
use stylometry::Error;

const EXIT_INPUT: u8 = 3;
const EXIT_CONFIG: u8 = 4;
const EXIT_PIPELINE: u8 = 5;
const EXIT_OTHER: u8 = 1;

#[derive(Parser)]
#[command(name = "stylometry", version, about = "Unsupervised stylistic patterns in painting scans")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tile images and write one feature vector per patch.
    Extract {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        /// Also write features.csv.
        #[arg(long)]
        csv: bool,
    },
    /// Build the keyword vocabulary and label every patch.
    Vocab,
    /// Fit the topic model over sub-image keyword bags.
    Topics,
    /// Embed per-sub-image pattern weights in 2-D.
    Embed,
    /// Render profiles, heatmaps and the scatter plot.
    Report {
        /// 1-based patterns for the heatmap, e.g. `6,8`.
        #[arg(long, value_delimiter = ',')]
        patterns: Option<Vec<usize>>,
        /// Panel images to draw under the heatmaps.
        images: Vec<PathBuf>,
    },
    /// Run every enabled stage.
    RunAll {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        patterns: Option<Vec<usize>>,
        #[arg(long)]
        csv: bool,
    },
    /// Write a two-panel striped test corpus into a directory.
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 1920)]
        size: usize,
        #[arg(long, default_value_t = 16.0)]
        period: f64,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Input(_) | Error::Image { .. } => EXIT_INPUT,
        Error::Config(_) => EXIT_CONFIG,
        Error::Pipeline(_) => EXIT_PIPELINE,
        _ => EXIT_OTHER,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn print_extract(s: &ExtractSummary) {
    println!(
        "extract: {} records from {} panels ({} cached sub-images reused)",
        s.file.keys.len(),
        s.file.panels.len(),
        s.reused_shards
    );
    for (path, reason) in &s.failures {
        eprintln!("skipped {}: {reason}", path.display());
    }
}

fn print_report(s: &ReportSummary, out: &std::path::Path) {
    println!("report: {} files in {}", s.files.len(), out.display());
}

/// Runs the command; `Ok(true)` means some images were skipped.
fn run(cli: &Cli) -> Result<bool, Error> {
    let config = load_config(cli)?;
    if let Command::Config = cli.command {
        print!("{}", config.to_toml());
        return Ok(false);
    }
    if let Command::Synth { dir, size, period, noise } = &cli.command {
        let synth = StripeConfig { size: *size, period: *period, noise: *noise, seed: config.seed };
        for path in write_stripe_corpus(dir, &synth)? {
            println!("{}", path.display());
        }
        return Ok(false);
    }
    let pipeline = Pipeline::new(config, &cli.out_dir, cli.jobs)?;
    let report_dir = pipeline.path(stylometry::pipeline::artifacts::REPORT_DIR);
    match &cli.command {
        Command::Extract { images, csv } => {
            let s = pipeline.extract(images, *csv)?;
            print_extract(&s);
            Ok(!s.failures.is_empty())
        }
        Command::Vocab => {
            let s = pipeline.vocab()?;
            println!("vocab: {} records, {} of {} keywords used", s.records, s.occupied, s.leaves);
            Ok(false)
        }
        Command::Topics => {
            let s = pipeline.topics()?;
            println!("topics: {} documents, {} iterations, converged: {}", s.documents, s.iterations, s.converged);
            Ok(false)
        }
        Command::Embed => {
            let s = pipeline.embed()?;
            println!("embed: {} points, KL {:.4} -> {:.4}", s.points, s.kl_initial, s.kl_final);
            Ok(false)
        }
        Command::Report { patterns, images } => {
            let s = pipeline.report(patterns.as_deref(), images)?;
            print_report(&s, &report_dir);
            Ok(false)
        }
        Command::RunAll { images, patterns, csv } => {
            let s = pipeline.run_all(images, patterns.as_deref(), *csv)?;
            if let Some(e) = &s.extract {
                print_extract(e);
            }
            if let Some(r) = &s.report {
                print_report(r, &report_dir);
            }
            Ok(!s.failures().is_empty())
        }
        Command::Config | Command::Synth { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_INPUT),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
