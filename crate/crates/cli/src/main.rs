//! `facetsim`: command-line driver for facet-process simulations and
//! experiments.

use clap::{Args, Parser, Subcommand, ValueEnum};
use facet_process::correlation::QueryShape;
use facet_process::harness::{
    moments_summary, rho_convergence, rho_queries, run_experiment, simulate, write_outputs, ExperimentConfig,
    ExperimentId, ExperimentOutput, Format,
};
use facet_process::sampler::write_trace_csv;
use facet_process::{Error, Result};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "facetsim",
    version,
    about = "Simulate exponential-family facet processes and run the verification experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file (`key = value` per line).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Result table format.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Distinct,
    TwoGroups,
    SharedFacet,
}

impl From<Shape> for QueryShape {
    fn from(s: Shape) -> Self {
        match s {
            Shape::Distinct => QueryShape::Distinct,
            Shape::TwoGroups => QueryShape::TwoGroups,
            Shape::SharedFacet => QueryShape::SharedFacet,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    E1,
    E2,
    E3,
    E4,
}

impl From<Experiment> for ExperimentId {
    fn from(e: Experiment) -> Self {
        match e {
            Experiment::E1 => ExperimentId::E1,
            Experiment::E2 => ExperimentId::E2,
            Experiment::E3 => ExperimentId::E3,
            Experiment::E4 => ExperimentId::E4,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one chain at the first grid scale; writes the summary, the trace
    /// and the manifest.
    Simulate,
    /// Full-order correlation series and their limits along the grid.
    Rho {
        /// Restrict to one query shape.
        #[arg(long, value_enum)]
        shape: Option<Shape>,
        /// Restrict to one codimension `k`.
        #[arg(long)]
        k: Option<usize>,
        /// Restrict to one common-axis count `l`.
        #[arg(long)]
        l: Option<usize>,
    },
    /// Poisson moments, asymptotic covariances and limit constants.
    Moments,
    /// Run one of the experiment drivers.
    Experiment {
        #[arg(value_enum)]
        id: Experiment,
    },
}

fn load_config(common: &Common, fallback: ExperimentId) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path, fallback)?,
        None => ExperimentConfig::defaults(fallback),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let common = &cli.common;
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let start = Instant::now();
    let format = Format::from(common.format);
    let (cfg, output, trace) = match cli.command {
        Command::Simulate => {
            let cfg = load_config(common, ExperimentId::E1)?;
            let (table, diag, seeds) = simulate(&cfg)?;
            let out = ExperimentOutput { experiment: "simulate".into(), table, seeds };
            (cfg, out, Some(diag.trace))
        }
        Command::Rho { shape, k, l } => {
            let cfg = load_config(common, ExperimentId::E3)?;
            let shape = shape.map(QueryShape::from);
            let queries: Vec<_> = rho_queries(cfg.d)
                .into_iter()
                .filter(|q| shape.is_none_or(|s| s == q.0) && k.is_none_or(|k| k == q.1) && l.is_none_or(|l| l == q.2))
                .collect();
            if queries.is_empty() {
                return Err(Error::InvalidQuery(format!("no admissible correlation query matches in d = {}", cfg.d)));
            }
            let out = rho_convergence(&cfg, &queries)?;
            (cfg, out, None)
        }
        Command::Moments => {
            let cfg = load_config(common, ExperimentId::E1)?;
            let out = moments_summary(&cfg)?;
            (cfg, out, None)
        }
        Command::Experiment { id } => {
            let id = ExperimentId::from(id);
            let cfg = load_config(common, id)?;
            if cfg.experiment != id {
                return Err(Error::Config(format!("configuration is for {}, not {id}", cfg.experiment)));
            }
            let out = run_experiment(&cfg)?;
            (cfg, out, None)
        }
    };
    let mut written = Vec::new();
    if let Some(trace) = trace {
        std::fs::create_dir_all(&common.out)?;
        let path = common.out.join("trace.csv");
        write_trace_csv(BufWriter::new(File::create(&path)?), &trace, cfg.d)?;
        written.push(path);
    }
    written.extend(write_outputs(&common.out, &cfg, &output, format, start.elapsed().as_secs_f64())?);
    print!("{}", String::from_utf8_lossy(&output.table.render(format)?));
    Ok(written)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
