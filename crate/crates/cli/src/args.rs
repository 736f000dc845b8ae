use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use touchdown_core::EstimatorMode;

#[derive(Debug, Parser)]
#[command(name = "touchdown", version, about = "Ground-contact estimation for wheeled bipeds")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML file with [estimator], [scenario] and [sweep] sections.
    #[arg(long, global = true, env = "TOUCHDOWN_CONFIG")]
    pub config: Option<PathBuf>,
    /// Overrides the scenario seed (gen) or the base episode seed (sweep).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Fail on malformed rows and model/config mismatches (default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    pub strict: bool,
    /// Skip malformed rows and downgrade mismatches to warnings.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub output_format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Tabular CSV.
    Csv,
    /// Hierarchical JSON summary.
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Bayes,
    MeasurementOnly,
}

impl From<ModeArg> for EstimatorMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Bayes => EstimatorMode::Bayes,
            ModeArg::MeasurementOnly => EstimatorMode::MeasurementOnly,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit contact and no-contact KDEs from two capture traces.
    Fit {
        #[arg(long)]
        contact: PathBuf,
        #[arg(long)]
        no_contact: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an estimator over a trace and emit per-step probabilities.
    Run {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Bayes)]
        mode: ModeArg,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a run output against the labels of its trace.
    Eval {
        /// Output of `touchdown run --output-format csv`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Matching window after each true transition, in seconds.
        #[arg(long, default_value_t = touchdown_core::eval::DEFAULT_MATCH_WINDOW)]
        window: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Success-rate heatmap over torque and accelerometer noise levels.
    Sweep {
        /// Directory for the heatmap, summary and per-cell checkpoints.
        #[arg(long)]
        out: PathBuf,
        /// Pre-fitted model; by default models are fit on noise-free pools
        /// generated from the scenario.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Stop after computing this many new cells (simulates an interruption).
        #[arg(long, hide = true)]
        max_cells: Option<usize>,
    },
    /// Generate a labeled drop-scenario trace and noise-free fit captures.
    Gen {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        drops: Option<usize>,
        /// Noise stddev on all torque channels (Nm); overrides the config.
        #[arg(long)]
        torque_noise: Option<f64>,
        /// Noise stddev on acc_z (m/s²); overrides the config.
        #[arg(long)]
        accel_noise: Option<f64>,
    },
}

impl GlobalArgs {
    pub fn strictness(&self) -> touchdown_core::Strictness {
        if self.lenient {
            touchdown_core::Strictness::Lenient
        } else {
            touchdown_core::Strictness::Strict
        }
    }
}
