use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lcimpact::extraction::{extract_instances, write_manifest};
use lcimpact::pipeline::analyze_dataset;
use lcimpact::report::{emit_from_doc, emit_reports, ReportDoc, ReportOptions};
use lcimpact::synth::{Scenario, ScenarioSpec};
use lcimpact::trajectory::{parse_dataset, write_dataset_file};
use lcimpact::{Error, RunConfig};

const EXIT_INPUT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_EMPTY: u8 = 3;

#[derive(Parser)]
#[command(name = "lcimpact", version, about = "Upstream impact of single lane changes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Time interval (s), overrides the config.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Worker threads, overrides the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a raw trajectory CSV and write it in normalized form.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// List lane-change instances and rejections as JSON lines.
    Extract {
        #[arg(long)]
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Exit with code 3 when no instance is found.
        #[arg(long)]
        strict: bool,
    },
    /// Run the full analysis and write reports.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Keep per-follower TDB/CTDB series in the instance JSON.
        #[arg(long)]
        full: bool,
        /// Also write SVG histograms.
        #[arg(long)]
        svg: bool,
        /// Exit with code 3 when no instance is analyzed.
        #[arg(long)]
        strict: bool,
    },
    /// Generate a synthetic scene with a known lane change.
    Synth {
        /// Scenario file of `key = value` lines; built-in defaults otherwise.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Position noise (m), overrides the scenario.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Re-emit report files from an earlier results.json.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        svg: bool,
    },
}

enum Failure {
    Error(Error),
    Empty(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn load_config(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dt) = common.dt {
        cfg.set("dt", &dt.to_string())?;
    }
    if let Some(w) = common.workers {
        cfg.set("workers", &w.to_string())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_extraction(input: &Path, out: Option<&Path>, cfg: &RunConfig, strict: bool) -> Result<(), Failure> {
    let dataset = parse_dataset(input, &cfg.ingest())?;
    let extraction = extract_instances(&dataset, cfg)?;
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            write_manifest(&extraction, std::io::BufWriter::new(file))?;
        }
        None => write_manifest(&extraction, std::io::stdout().lock())?,
    }
    eprintln!(
        "{} instances, {} rejections",
        extraction.instances.len(),
        extraction.rejections.len()
    );
    if strict && extraction.instances.is_empty() {
        return Err(Failure::Empty("no lane-change instances found"));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest { input, out, common } => {
            let cfg = load_config(&common)?;
            let dataset = parse_dataset(&input, &cfg.ingest())?;
            write_dataset_file(&dataset, &out)?;
            eprintln!("{} vehicles", dataset.tracks.len());
        }
        Command::Extract {
            input,
            out,
            common,
            strict,
        } => {
            let cfg = load_config(&common)?;
            write_extraction(&input, out.as_deref(), &cfg, strict)?;
        }
        Command::Analyze {
            input,
            out,
            common,
            full,
            svg,
            strict,
        } => {
            let cfg = load_config(&common)?;
            let dataset = parse_dataset(&input, &cfg.ingest())?;
            let batch = analyze_dataset(&dataset, &cfg)?;
            let opts = ReportOptions {
                svg,
                ..ReportOptions::from_config(&cfg)
            };
            emit_reports(&batch, &out, full, &opts)?;
            eprintln!(
                "{} instances analyzed, {} rejected, {} failed",
                batch.results.len(),
                batch.rejections.len(),
                batch.failures.len()
            );
            for (id, msg) in &batch.failures {
                eprintln!("  {id}: {msg}");
            }
            if strict && batch.results.is_empty() {
                return Err(Failure::Empty("no instance analyzed"));
            }
        }
        Command::Synth {
            spec,
            out,
            seed,
            noise,
        } => {
            let mut spec = match spec {
                Some(path) => ScenarioSpec::load(&path)?,
                None => ScenarioSpec::default(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            if let Some(noise) = noise {
                spec.noise = noise;
            }
            spec.validate()?;
            Scenario::build(&spec)?.write(&out)?;
        }
        Command::Report {
            input,
            out,
            common,
            svg,
        } => {
            let cfg = load_config(&common)?;
            let doc = ReportDoc::load(&input)?;
            let opts = ReportOptions {
                svg,
                ..ReportOptions::from_config(&cfg)
            };
            emit_from_doc(&doc, &out, &opts)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Empty(msg)) => {
            eprintln!("lcimpact: {msg}");
            ExitCode::from(EXIT_EMPTY)
        }
        Err(Failure::Error(e)) => {
            eprintln!("lcimpact: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_INPUT })
        }
    }
}
