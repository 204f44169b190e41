//! Command-line interface.
//!
//! Exit codes: 0 success (undefined metrics included), 2 config or usage
//! error, 3 data error, 4 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bias::{build_dataset, BiasSpec};
use crate::config::ExperimentConfig;
use crate::datagen::{generate_population, group_summary, ScoredRecord};
use crate::error::Error;
use crate::harness::{prepare_base, rank_datasets, run_experiment, ExperimentReport};
use crate::io;
use crate::metrics::{audit, Metric};
use crate::seed;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "biasaudit", version, about = "Fairness metrics under injected dataset bias")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic population and print its group summary.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the population seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Materialize one of datasets 1–4 from the experiment's base dataset.
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        dataset: u8,
        /// Overrides the base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute the six metrics from a predictions CSV.
    Audit {
        /// CSV with columns group,label,score_hat,label_hat.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run the 2×2 bias grid; writes `<out>` as JSON and the same stem as CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Order datasets in an experiment report by distance from the fair point.
    Rank {
        /// Experiment report JSON.
        #[arg(long)]
        input: PathBuf,
        /// Rank a single metric instead of all six.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Validation { .. } | Error::Config { .. } | Error::Io(_) => EXIT_USAGE,
            Error::Numerical(_) => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate { config, out, seed } => cmd_generate(&config, &out, seed),
        Command::Build {
            config,
            out,
            dataset,
            seed,
        } => cmd_build(&config, &out, dataset as usize, seed),
        Command::Audit { input, out, format } => cmd_audit(&input, &out, format),
        Command::Experiment {
            config,
            out,
            seed,
            trials,
        } => cmd_experiment(&config, &out, seed, trials),
        Command::Rank {
            input,
            metric,
            out,
            format,
        } => cmd_rank(&input, metric.as_deref(), out.as_deref(), format),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

/// Table of group sizes and positive rates at score ≥ 0.5.
pub fn summary_table(pop: &[ScoredRecord]) -> String {
    let s = group_summary(pop);
    let mut out = format!("{:<10} {:>10} {:>10} {:>10} {:>8}\n", "group", "Y=1", "Y=0", "total", "rate");
    let mut totals = (0, 0);
    for (g, (n, k)) in s.iter().enumerate().rev() {
        out += &format!(
            "{:<10} {:>10} {:>10} {:>10} {:>8.4}\n",
            format!("S={g}"),
            k,
            n - k,
            n,
            *k as f64 / (*n).max(1) as f64
        );
        totals.0 += n;
        totals.1 += k;
    }
    out += &format!(
        "{:<10} {:>10} {:>10} {:>10} {:>8.4}\n",
        "all",
        totals.1,
        totals.0 - totals.1,
        totals.0,
        totals.1 as f64 / totals.0.max(1) as f64
    );
    out
}

pub fn cmd_generate(config: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.population.seed = s;
    }
    let pop = generate_population(&cfg.population)?;
    let mut buf = Vec::new();
    io::write_population_csv(&mut buf, &pop)?;
    write_file(out, buf)?;
    print!("{}", summary_table(&pop));
    Ok(())
}

pub fn cmd_build(config: &Path, out: &Path, dataset: usize, seed: Option<u64>) -> CliResult<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    let spec = BiasSpec::from_dataset_index(dataset).expect("clap restricts range");
    let base = prepare_base(&cfg)?;
    let data = build_dataset(
        &base,
        spec,
        &cfg.policies(),
        seed::derive(cfg.base_seed, &[dataset as u64, seed::STREAM_SAMPLE]),
    )?;
    let mut buf = Vec::new();
    io::write_labeled_csv(&mut buf, &data)?;
    write_file(out, buf)?;
    println!("dataset {dataset}: {} records", data.len());
    Ok(())
}

pub fn cmd_audit(input: &Path, out: &Path, format: Format) -> CliResult<()> {
    let file = fs::File::open(input).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("cannot open {}: {e}", input.display()),
    })?;
    let data = io::read_predictions_csv(std::io::BufReader::new(file))?;
    let report = audit(&data);
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report).map_err(Error::from)?,
        Format::Csv => io::metric_report_csv(&report)?,
    };
    write_file(out, text)
}

pub fn cmd_experiment(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    trials: Option<usize>,
) -> CliResult<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
        cfg.validate()?;
    }
    let report = run_experiment(&cfg)?;
    write_file(&out.with_extension("json"), report.to_json()?)?;
    write_file(&out.with_extension("csv"), report.to_csv()?)?;
    print!("{}", means_table(&report));
    Ok(())
}

/// Per-dataset metric means.
pub fn means_table(report: &ExperimentReport) -> String {
    let mut out = format!("experiment {}\n{:<28}", report.config.experiment, "metric");
    for d in &report.datasets {
        out += &format!(" {:>12}", format!("dataset {}", d.dataset));
    }
    out.push('\n');
    for m in Metric::ALL {
        out += &format!("{:<28}", m.name());
        for d in &report.datasets {
            match d.mean(m) {
                Some(v) => out += &format!(" {v:>12.4}"),
                None => out += &format!(" {:>12}", "undefined"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn cmd_rank(input: &Path, metric: Option<&str>, out: Option<&Path>, format: Format) -> CliResult<()> {
    let text = fs::read_to_string(input).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("cannot read {}: {e}", input.display()),
    })?;
    let report: ExperimentReport = serde_json::from_str(&text).map_err(|e| Failure {
        code: EXIT_DATA,
        message: format!("{} is not an experiment report: {e}", input.display()),
    })?;
    let metrics = match metric {
        Some(name) => vec![name.parse::<Metric>()?],
        None => Metric::ALL.to_vec(),
    };
    let rankings: Vec<_> = metrics.iter().map(|&m| rank_datasets(&report, m)).collect();
    let rendered = match format {
        Format::Json => serde_json::to_string_pretty(&rankings).map_err(Error::from)?,
        Format::Csv => {
            let mut s = String::from("metric,rank,dataset\n");
            for r in &rankings {
                for (i, d) in r.order.iter().enumerate() {
                    s += &format!("{},{},{d}\n", r.metric, i + 1);
                }
                for d in &r.excluded {
                    s += &format!("{},excluded,{d}\n", r.metric);
                }
            }
            s
        }
    };
    match out {
        Some(p) => write_file(p, rendered)?,
        None => {
            for r in &rankings {
                let order: Vec<String> = r.order.iter().map(usize::to_string).collect();
                println!("{:<28} {}", r.metric.name(), order.join(" < "));
            }
        }
    }
    Ok(())
}
