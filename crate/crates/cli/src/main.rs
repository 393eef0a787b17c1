//! `cvdistill`: analytic, Monte Carlo, tomography and record-file commands.

mod commands;
mod config;
mod error;
mod report;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cvdistill_core::ingest::{
    export_samples, suggest_value_scale, write_record_file, ModulationFilter, RecordHeader,
};
use cvdistill_core::montecarlo::{VarianceErrorModel, DEFAULT_BOOTSTRAP_RESAMPLES};
use cvdistill_core::tomography::{DEFAULT_BINS, DEFAULT_CUTOFF};
use cvdistill_core::{sample_protocol, KeepSide};

use crate::commands::{IngestOptions, TomoOptions};
use crate::config::{load_experiment, Experiment, ExperimentConfigFile};
use crate::error::{CliError, CliResult};
use crate::reproduce::ReproduceOptions;

#[derive(Parser, Debug)]
#[command(
    name = "cvdistill",
    version,
    about = "Distillation of squeezing from non-Gaussian noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the analytic distillation result as JSON.
    Analyze { config: PathBuf },
    /// Run the Monte Carlo protocol and print the estimate as JSON.
    Simulate {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = ErrorModelArg::Moments)]
        error_model: ErrorModelArg,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_RESAMPLES)]
        resamples: usize,
        /// Also write the simulated pairs as a record file.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Tabulate distillation against the post-selection threshold.
    SweepThreshold {
        config: PathBuf,
        /// Lowest threshold [SNU]; defaults to −2σ of the tap quadrature.
        #[arg(long, allow_hyphen_values = true)]
        min: Option<f64>,
        /// Highest threshold [SNU]; defaults to +4σ of the tap quadrature.
        #[arg(long, allow_hyphen_values = true)]
        max: Option<f64>,
        #[arg(long, default_value_t = 61)]
        steps: usize,
        /// Add Monte Carlo columns computed on one simulated dataset.
        #[arg(long)]
        mc: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate distillation against the measured tap quadrature angle.
    SweepAngle {
        config: PathBuf,
        /// Threshold [SNU]; defaults to the config value.
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        min_deg: f64,
        #[arg(long, default_value_t = 180.0, allow_hyphen_values = true)]
        max_deg: f64,
        #[arg(long, default_value_t = 181)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct the Wigner function of the configured input state.
    Tomo {
        config: PathBuf,
        #[arg(long, default_value_t = 128)]
        angles: usize,
        #[arg(long, default_value_t = 200_000)]
        per_angle: usize,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Histogram half-width [SNU]; chosen from the state when omitted.
        #[arg(long)]
        range: Option<f64>,
        /// Grid half-width [SNU].
        #[arg(long, default_value_t = 6.0)]
        extent: f64,
        /// Grid points per axis.
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Filter cutoff as a fraction of the Nyquist frequency.
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: f64,
        /// Write the exact Wigner function instead of a reconstruction.
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bin a record file and post-select it.
    Ingest {
        record: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = SideArg::Above)]
        keep_side: SideArg,
        #[arg(long, value_enum, default_value_t = FilterArg::All)]
        filter: FilterArg,
        /// Accept toggle periods that are not a whole number of bins.
        #[arg(long)]
        permissive: bool,
        #[arg(long, value_enum, default_value_t = ErrorModelArg::Moments)]
        error_model: ErrorModelArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the data behind one figure.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=5))]
        fig: u8,
        #[arg(long)]
        out: PathBuf,
        /// Configuration to use instead of the bundled canonical one.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the Monte Carlo sample count.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 128)]
        angles: usize,
        #[arg(long, default_value_t = 200_000)]
        per_angle: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ErrorModelArg {
    Moments,
    Normal,
    Bootstrap,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    Above,
    Below,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FilterArg {
    All,
    On,
    Off,
}

fn error_model(arg: ErrorModelArg, resamples: usize, seed: u64) -> VarianceErrorModel {
    match arg {
        ErrorModelArg::Moments => VarianceErrorModel::Moments,
        ErrorModelArg::Normal => VarianceErrorModel::NormalTheory,
        ErrorModelArg::Bootstrap => VarianceErrorModel::Bootstrap { resamples, seed },
    }
}

fn export(exp: &Experiment, path: &PathBuf) -> CliResult<()> {
    let samples = sample_protocol(&exp.simulation())?;
    let template = RecordHeader {
        value_scale: suggest_value_scale(&samples),
        ..RecordHeader::default()
    };
    let (header, raw) = export_samples(&samples, &template)?;
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_record_file(std::io::BufWriter::new(file), &header, &raw).map_err(|e| match e {
        cvdistill_core::Error::Io(io) => CliError::io(path, io),
        other => other.into(),
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze { config } => commands::analyze(&load_experiment(&config)?),
        Command::Simulate {
            config,
            error_model: model,
            resamples,
            export: export_path,
        } => {
            let exp = load_experiment(&config)?;
            commands::simulate(&exp, error_model(model, resamples, exp.seed))?;
            if let Some(path) = export_path {
                export(&exp, &path)?;
                eprintln!("wrote record file {}", path.display());
            }
            Ok(())
        }
        Command::SweepThreshold {
            config,
            min,
            max,
            steps,
            mc,
            out,
        } => commands::sweep_threshold(&load_experiment(&config)?, min, max, steps, mc, &out),
        Command::SweepAngle {
            config,
            threshold,
            min_deg,
            max_deg,
            steps,
            out,
        } => {
            let exp = load_experiment(&config)?;
            let threshold = threshold.unwrap_or(exp.rule.threshold);
            commands::sweep_angle(&exp, threshold, min_deg, max_deg, steps, &out)
        }
        Command::Tomo {
            config,
            angles,
            per_angle,
            bins,
            range,
            extent,
            points,
            cutoff,
            analytic,
            out,
        } => {
            let opts = TomoOptions {
                angles,
                per_angle,
                bins,
                range,
                extent,
                points,
                cutoff,
                analytic,
            };
            commands::tomo(&load_experiment(&config)?, &opts, &out)
        }
        Command::Ingest {
            record,
            threshold,
            keep_side,
            filter,
            permissive,
            error_model: model,
            out,
        } => {
            let opts = IngestOptions {
                threshold,
                keep_side: match keep_side {
                    SideArg::Above => KeepSide::Above,
                    SideArg::Below => KeepSide::Below,
                },
                filter: match filter {
                    FilterArg::All => ModulationFilter::All,
                    FilterArg::On => ModulationFilter::OnOnly,
                    FilterArg::Off => ModulationFilter::OffOnly,
                },
                permissive,
                error_model: error_model(model, DEFAULT_BOOTSTRAP_RESAMPLES, 0),
            };
            commands::ingest(&record, &opts, &out)
        }
        Command::Reproduce {
            fig,
            out,
            config,
            samples,
            angles,
            per_angle,
        } => {
            let file = match config {
                Some(path) => ExperimentConfigFile::load(&path)?,
                None => ExperimentConfigFile::canonical(),
            };
            let mut exp = file.validate()?;
            if let Some(n) = samples {
                if n == 0 {
                    return Err(CliError::validation("--samples: must be at least 1"));
                }
                exp.samples = n;
            }
            for path in
                reproduce::reproduce(&exp, fig, &ReproduceOptions { per_angle, angles }, &out)?
            {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
