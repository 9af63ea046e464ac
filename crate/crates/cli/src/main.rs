use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "tdpauc", version, about = "Time-dependent partial AUC for censored survival data")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Input CSV with a header row
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Name of the follow-up time column
    #[arg(long, global = true, default_value = "time")]
    time_col: String,

    /// Name of the event indicator column (1 = event, 0 = censored)
    #[arg(long, global = true, default_value = "status")]
    status_col: String,

    /// Name of the marker column
    #[arg(long, global = true, default_value = "marker")]
    marker_col: String,

    /// Name of an integer group column
    #[arg(long, global = true)]
    group_col: Option<String>,

    /// Output file (written atomically); stdout if absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format; each subcommand has its own default
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print a JSON cohort summary to stderr before running
    #[arg(long, global = true)]
    summary: bool,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    /// Fixed bandwidth λ in (0, 1]
    #[arg(long, conflicts_with = "auto_bandwidth")]
    bandwidth: Option<f64>,

    /// Choose λ by leave-one-out residual ISE
    #[arg(long)]
    auto_bandwidth: bool,

    /// Smallest candidate for --auto-bandwidth
    #[arg(long, default_value_t = 0.01)]
    grid_min: f64,

    /// Largest candidate for --auto-bandwidth
    #[arg(long, default_value_t = 0.20)]
    grid_max: f64,

    /// Candidate spacing for --auto-bandwidth
    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,
}

#[derive(Debug, Args)]
pub struct BandArgs {
    /// FPR bound α in (0, 1]
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,

    /// Start of the time interval (default: 10% quantile of follow-up)
    #[arg(long)]
    tau1: Option<f64>,

    /// End of the time interval (default: 90% quantile of follow-up)
    #[arg(long)]
    tau2: Option<f64>,

    /// Confidence level
    #[arg(long, default_value_t = 0.95)]
    level: f64,

    /// Multiplier resamples for the simultaneous band
    #[arg(long, default_value_t = 1000)]
    resamples: usize,

    /// Seed for the multipliers
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Clip band limits to [0, α]
    #[arg(long)]
    clip: bool,

    /// Use the estimator for uncensored data
    #[arg(long)]
    complete_data: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Point estimate and standard error at one time
    Estimate {
        /// Evaluation time t
        #[arg(long)]
        time: f64,

        /// FPR bound α in (0, 1]; the lower bound when --alpha-high is given
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,

        /// Upper FPR bound for the pAUC over [α, α-high]
        #[arg(long)]
        alpha_high: Option<f64>,

        #[command(flatten)]
        bw: BandwidthArgs,

        /// Use the estimator for uncensored data
        #[arg(long)]
        complete_data: bool,

        /// Also write Ŝ_T(t | Y_j) for every subject to this CSV
        #[arg(long)]
        dump_surface: Option<PathBuf>,
    },

    /// Pointwise and simultaneous bands over [τ1, τ2]
    Band {
        #[command(flatten)]
        band: BandArgs,

        #[command(flatten)]
        bw: BandwidthArgs,

        /// Also write Ŝ_T(t | Y_j) on the band grid to this CSV
        #[arg(long)]
        dump_surface: Option<PathBuf>,
    },

    /// Difference of two groups' pAUC curves with bands
    Compare {
        /// Second group's CSV (instead of --group-col)
        #[arg(long)]
        input2: Option<PathBuf>,

        /// Group labels to compare when --group-col is used (default: the two present)
        #[arg(long, num_args = 2, value_names = ["FIRST", "SECOND"])]
        groups: Option<Vec<i64>>,

        #[command(flatten)]
        band: BandArgs,

        /// Bandwidth for the first group
        #[arg(long)]
        bandwidth1: Option<f64>,

        /// Bandwidth for the second group
        #[arg(long)]
        bandwidth2: Option<f64>,

        /// Choose each group's bandwidth by leave-one-out residual ISE
        #[arg(long)]
        auto_bandwidth: bool,
    },

    /// Leave-one-out bandwidth selection
    Bandwidth {
        /// Smallest candidate
        #[arg(long, default_value_t = 0.01)]
        grid_min: f64,

        /// Largest candidate
        #[arg(long, default_value_t = 0.20)]
        grid_max: f64,

        /// Candidate spacing
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },

    /// Monte Carlo experiment on the built-in generator
    Simulate {
        /// Subjects per replicate
        #[arg(long, default_value_t = 500)]
        n: usize,

        /// Target censoring fraction in [0, 1)
        #[arg(long, default_value_t = 0.0)]
        censor_rate: f64,

        /// Number of replicates
        #[arg(long, default_value_t = 200)]
        replicates: usize,

        /// Base seed; replicate r uses stream r
        #[arg(long, default_value_t = 1)]
        seed: u64,

        /// FPR bounds
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3")]
        alphas: Vec<f64>,

        /// Time quantiles t_p of the evaluation times
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.5,0.6")]
        time_probs: Vec<f64>,

        /// `auto`, `complete`, or a fixed λ
        #[arg(long, default_value = "auto")]
        bandwidth: String,

        /// Marker coefficient of the log-time model
        #[arg(long)]
        marker_slope: Option<f64>,

        /// Independent marker (null model)
        #[arg(long)]
        null: bool,

        /// Confidence level for coverage
        #[arg(long, default_value_t = 0.95)]
        level: f64,

        /// Multiplier resamples for band coverage (0 skips bands)
        #[arg(long, default_value_t = 1000)]
        resamples: usize,

        /// Also write simultaneous-band coverage to this CSV
        #[arg(long)]
        bands_out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Io(std::io::Error),
    Lib(tdpauc::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<tdpauc::Error> for CliError {
    fn from(e: tdpauc::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_degenerate() => 3,
            CliError::Lib(e) if e.is_numeric() => 4,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Estimate { time, alpha, alpha_high, bw, complete_data, dump_surface } => {
            commands::estimate(&cli.global, time, alpha, alpha_high, &bw, complete_data, dump_surface.as_deref())
        }
        Command::Band { band, bw, dump_surface } => commands::band(&cli.global, &band, &bw, dump_surface.as_deref()),
        Command::Compare { input2, groups, band, bandwidth1, bandwidth2, auto_bandwidth } => commands::compare(
            &cli.global,
            input2.as_deref(),
            groups.as_deref(),
            &band,
            [bandwidth1, bandwidth2],
            auto_bandwidth,
        ),
        Command::Bandwidth { grid_min, grid_max, grid_step } => {
            commands::bandwidth(&cli.global, grid_min, grid_max, grid_step)
        }
        Command::Simulate {
            n,
            censor_rate,
            replicates,
            seed,
            alphas,
            time_probs,
            bandwidth,
            marker_slope,
            null,
            level,
            resamples,
            bands_out,
        } => commands::simulate(
            &cli.global,
            commands::SimulateArgs {
                n,
                censor_rate,
                replicates,
                seed,
                alphas,
                time_probs,
                bandwidth,
                marker_slope,
                null,
                level,
                resamples,
                bands_out,
            },
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
