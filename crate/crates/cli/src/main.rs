//! `biphoton`: batch simulation and analysis of photon-pair sources.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use biphoton::hom::DEFAULT_DELAY_POINTS;
use clap::{Args, Parser, Subcommand};

use commands::{
    AnalyzeOptions, ArmArg, FitModelArg, HomOptions, ModelArg, SweepAxis, SweepOptions,
};
use config::SourceArgs;

#[derive(Parser)]
#[command(name = "biphoton", version, about = "Photon-pair source simulation and HOM analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    source: SourceArgs,

    /// TOML config file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, env = "BIPHOTON_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct HomArgs {
    /// Dip model.
    #[arg(long, value_enum, default_value = "numeric-sinc")]
    model: ModelArg,

    /// Delay half-span in ps (default: four Gaussian dip widths).
    #[arg(long)]
    delay_span_ps: Option<f64>,

    #[arg(long, default_value_t = DEFAULT_DELAY_POINTS)]
    delay_points: usize,

    /// Gaussian spectral filter FWHM in nm, centered on the degenerate wavelength.
    #[arg(long)]
    filter_nm: Option<f64>,

    #[arg(long, value_enum, default_value = "signal")]
    filter_arm: ArmArg,

    /// Also write Poisson counts with this mean baseline to counts.csv.
    #[arg(long)]
    counts: Option<f64>,

    /// Seed for the synthetic counts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl From<HomArgs> for HomOptions {
    fn from(a: HomArgs) -> Self {
        HomOptions {
            model: a.model,
            delay_span_ps: a.delay_span_ps,
            delay_points: a.delay_points,
            filter_nm: a.filter_nm,
            filter_arm: a.filter_arm,
            counts: a.counts,
            seed: a.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write jsa.csv, jsi.csv, marginals.csv and schmidt.json.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Write scan.csv and hom.json for a HOM delay scan.
    Hom {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        hom: HomArgs,
    },
    /// Write sweep.csv with t_c, visibility and marginals along one axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        hom: HomArgs,

        #[arg(long, value_enum)]
        axis: SweepAxis,

        /// Comma-separated axis values (nm, mm or fs^2).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,

        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,

        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,

        #[arg(long)]
        steps: Option<usize>,
    },
    /// Fit a measured scan; write fit.json and fit.txt.
    Analyze {
        #[command(flatten)]
        common: Common,

        /// Scan CSV (delay_ps|delay_fs|delay_mm, coincidences[, sigma]).
        #[arg(long)]
        scan: PathBuf,

        #[arg(long, value_enum, default_value = "gaussian")]
        fit_model: FitModelArg,

        /// Also write table.txt and table.json with the simulated source row.
        #[arg(long)]
        table: bool,
    },
    /// List built-in presets, or print one as TOML.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common } => {
            let source = common.source.resolve(common.config.as_deref())?;
            commands::simulate(&source, &common.out)
        }
        Command::Hom { common, hom } => {
            let source = common.source.resolve(common.config.as_deref())?;
            commands::hom(&source, &hom.into(), &common.out)
        }
        Command::Sweep {
            common,
            hom,
            axis,
            values,
            from,
            to,
            steps,
        } => {
            let source = common.source.resolve(common.config.as_deref())?;
            let opts = SweepOptions {
                axis,
                values: commands::sweep_values(values, from, to, steps)?,
                hom: hom.into(),
            };
            commands::sweep(&source, &opts, &common.out)
        }
        Command::Analyze {
            common,
            scan,
            fit_model,
            table,
        } => {
            let source = common.source.resolve(common.config.as_deref())?;
            let opts = AnalyzeOptions {
                scan,
                model: fit_model,
                table,
            };
            commands::analyze(&source, &opts, &common.out)
        }
        Command::Presets { show } => commands::presets(show.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
