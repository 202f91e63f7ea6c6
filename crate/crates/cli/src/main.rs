//! `ipf`: orbit diagrams, multiphonic likelihood maps and period-concatenation
//! synthesis from the command line.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod range;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use range::RangeArg;

#[derive(Debug, Parser)]
#[command(name = "ipf", version, about, args_override_self = true)]
pub struct Cli {
    /// Worker threads for sweeps and maps; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// TOML file of flag values; its values override the command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orbit diagram: tail states of the map per 1/alpha, as CSV.
    Orbit(SweepArgs),
    /// Regime of every 1/alpha of a sweep, as CSV.
    Regimes(RegimeArgs),
    /// Centroids of the likelihood maps of every catalog interval, as CSV.
    Sweep(CatalogArgs),
    /// Normalized likelihood map of one target interval over (beta1, beta2).
    Likelihood(LikelihoodArgs),
    /// Centroid of the high-likelihood region of a saved map.
    Centroid(CentroidArgs),
    /// Render a multiphonic to WAV, with its score and spectrogram.
    Synth(SynthArgs),
    /// Amplitude envelope of a recording, one value per period of f0.
    Envelope(EnvelopeArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Swept 1/alpha (dimensionless), `lo:hi` or `lo:hi:n`.
    #[arg(long, default_value = "1:2.8:600", value_name = "LO:HI[:N]")]
    pub inv_alpha: RangeArg,
    /// Number of sweep points; overrides the count in --inv-alpha.
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,
    /// Reflection strengths beta_1,beta_2,... (dimensionless).
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        value_name = "B,.."
    )]
    pub beta: Vec<f64>,
    /// Initial state g0, iterated through the simple map to seed the delays.
    #[arg(long, default_value_t = 1.0)]
    pub g0: f64,
    /// Explicit initial states, newest first: g, g_-, g_2-, ...
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        value_name = "G,.."
    )]
    pub seed_explicit: Option<Vec<f64>>,
    /// Iterations per run.
    #[arg(long, default_value_t = 2500)]
    pub steps: usize,
    /// Final iterations kept and classified.
    #[arg(long, default_value_t = 250)]
    pub tail: usize,
    /// Output CSV path.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RegimeArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Relative tolerance for matching tail states.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Longest cycle reported as periodic; longer ones are chaotic.
    #[arg(long, default_value_t = 64)]
    pub max_period: usize,
}

#[derive(Debug, Args)]
pub struct MapperArgs {
    /// Cells per side of the (beta1, beta2) grid; overrides the count in
    /// --beta-range.
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    /// Range of both betas (dimensionless), `lo:hi` or `lo:hi:n`.
    #[arg(long, default_value = "0:0.5:61", value_name = "LO:HI[:N]")]
    pub beta_range: RangeArg,
    /// Alpha values scanned per cell: j/N for j = 1..N.
    #[arg(long, default_value_t = 200, value_name = "N")]
    pub alphas: usize,
    /// Iterations per run.
    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,
    /// Initial values 5 i / N, i = 1..N, used for the reliability.
    #[arg(long, default_value_t = 150, value_name = "N")]
    pub seeds: usize,
    /// Half-width of an interval match, in semitones.
    #[arg(long, default_value_t = 0.25, value_name = "SEMITONES")]
    pub tol_semitones: f64,
    /// Nested refinement levels for alphas between scan samples.
    #[arg(long, default_value_t = 6)]
    pub refine_levels: usize,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Interval catalog: one value in semitones per line, `#` comments.
    #[arg(long, value_name = "FILE")]
    pub catalog: PathBuf,
    #[command(flatten)]
    pub mapper: MapperArgs,
    /// Also write the per-cell largest interval (semitones) to this CSV.
    #[arg(long, value_name = "FILE")]
    pub max_interval_out: Option<PathBuf>,
    /// Centroid CSV path.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LikelihoodArgs {
    /// Target interval in semitones.
    #[arg(long, value_name = "SEMITONES")]
    pub target_semitones: f64,
    #[command(flatten)]
    pub mapper: MapperArgs,
    /// Map CSV path.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CentroidArgs {
    /// Map CSV written by `likelihood`.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Interval of the map in semitones, used only to label the row.
    #[arg(long, value_name = "SEMITONES")]
    pub target_semitones: Option<f64>,
    /// Centroid CSV path.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["target_semitones", "target_alpha"]))]
pub struct SynthArgs {
    /// First reflection strength (dimensionless).
    #[arg(long, default_value_t = 0.02)]
    pub beta1: f64,
    /// Second reflection strength (dimensionless).
    #[arg(long, default_value_t = 0.33)]
    pub beta2: f64,
    /// Interval of the sustained sound in semitones; the alpha producing it
    /// is searched like one likelihood-map cell.
    #[arg(long, value_name = "SEMITONES")]
    pub target_semitones: Option<f64>,
    /// Alpha of the sustained sound, given directly.
    #[arg(long, value_name = "ALPHA")]
    pub target_alpha: Option<f64>,
    /// Initial state of the map.
    #[arg(long, default_value_t = 1.0)]
    pub g0: f64,
    /// `gaussian`, or a WAV file to cut one period from.
    #[arg(long, default_value = "gaussian", value_name = "gaussian|FILE")]
    pub wave: String,
    /// WAV file whose envelope drives alpha; default is a built-in attack
    /// and plateau.
    #[arg(long, value_name = "FILE")]
    pub envelope: Option<PathBuf>,
    /// RMS window for --envelope, in milliseconds.
    #[arg(long, default_value_t = 50.0, value_name = "MS")]
    pub window_ms: f64,
    /// Periods rendered with the built-in envelope.
    #[arg(long, default_value_t = 800)]
    pub periods: usize,
    /// Rise time constant of the built-in envelope, in seconds.
    #[arg(long, default_value_t = 0.6, value_name = "SECONDS")]
    pub rise: f64,
    /// Base frequency in Hz.
    #[arg(long, default_value_t = ipf::synth::DEFAULT_F0, value_name = "HZ")]
    pub f0: f64,
    /// Output sample rate in Hz.
    #[arg(long, default_value_t = ipf::synth::DEFAULT_SAMPLE_RATE, value_name = "HZ")]
    pub sample_rate: u32,
    /// Number of layers: the current state plus delayed ones (1..=3).
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// Spectrogram window length in samples (power of two).
    #[arg(long, default_value_t = 8192)]
    pub window: usize,
    /// Spectrogram hop in samples.
    #[arg(long, default_value_t = 2048)]
    pub hop: usize,
    /// Highest spectrogram frequency written, in Hz.
    #[arg(long, default_value_t = 5000.0, value_name = "HZ")]
    pub max_freq: f64,
    /// Output WAV path.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Score CSV path [default: <out>.score.csv].
    #[arg(long, value_name = "FILE")]
    pub score_out: Option<PathBuf>,
    /// Spectrogram CSV path [default: <out>.spectrogram.csv].
    #[arg(long, value_name = "FILE")]
    pub spectrogram_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnvelopeArgs {
    /// Input WAV file.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// RMS window in milliseconds.
    #[arg(long, default_value_t = 50.0, value_name = "MS")]
    pub window_ms: f64,
    /// Sampling frequency of the output in Hz: one value per period.
    #[arg(long, default_value_t = ipf::synth::DEFAULT_F0, value_name = "HZ")]
    pub f0: f64,
    /// Output CSV path.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

const SUBCOMMANDS: &[&str] = &[
    "orbit",
    "regimes",
    "sweep",
    "likelihood",
    "centroid",
    "synth",
    "envelope",
];

/// Command line plus the flags of a config file, if one is named.
fn full_args() -> Result<Vec<OsString>, String> {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config::config_path(&args) {
        let sub = config::subcommand_of(&args, SUBCOMMANDS).map(str::to_owned);
        let extra = config::read_config_args(path.as_ref(), sub.as_deref())?;
        let keys = config::flag_names(&extra);
        let cmd = Cli::command();
        let sub_cmd = sub.as_deref().and_then(|s| cmd.find_subcommand(s));
        let takes_value = |name: &str| {
            cmd.get_arguments()
                .chain(sub_cmd.into_iter().flat_map(|c| c.get_arguments()))
                .find(|a| a.get_long() == Some(name))
                .is_none_or(|a| a.get_action().takes_values())
        };
        args = config::strip_flags(args, &keys, takes_value);
        args.extend(extra);
    }
    Ok(args)
}

fn main() -> ExitCode {
    let args = match full_args() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
