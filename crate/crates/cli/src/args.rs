use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qanon::ghz::Backend;

#[derive(Debug, Parser)]
#[command(
    name = "qanon",
    version,
    about = "Seeded batch runner for anonymous GHZ network protocols"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Protocol configuration (JSON, `ProtocolConfig` field names).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Number of runs or trials [default: 1, or 10000 for `sweep`].
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Master seed; defaults to the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config's backend.
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,
    /// Result file; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Phase,
    Dense,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Phase => Backend::Phase,
            BackendArg::Dense => Backend::Dense,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Anonymous notification.
    Notify {
        /// Third party notifies `tp_targets` instead of agents notifying each other.
        #[arg(long)]
        modified: bool,
        /// Writes the transcript of the first run as NDJSON.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Resource sharing with the security check.
    Share {
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Private comparison of the configured secrets.
    Compare {
        #[arg(long, value_enum, default_value_t = SchemeArg::Auto)]
        scheme: SchemeArg,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Sharing, notification and comparison end to end.
    Pipeline {
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Runs an attack game described by an `AttackSpec`.
    Attack {
        /// Path to an `AttackSpec` JSON file, or the JSON itself.
        #[arg(long)]
        spec: String,
    },
    /// Parameter grids behind the acceptance tables.
    Sweep {
        #[arg(value_enum)]
        grid: Grid,
        /// Agent counts (defaults depend on the grid).
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        /// Agent counts for the multi-party part of the comparison grid.
        #[arg(long = "multi-ns", value_delimiter = ',', default_value = "5")]
        multi_ns: Vec<usize>,
        /// Security parameters for the detection grid.
        #[arg(long = "ss", value_delimiter = ',')]
        ss: Vec<usize>,
        /// Phase-flip probabilities for the notification grid.
        #[arg(long = "p-zs", value_delimiter = ',')]
        p_zs: Vec<f64>,
        /// Repetition counts for the notification grid.
        #[arg(long = "ks", value_delimiter = ',')]
        ks: Vec<usize>,
        /// Seeds per secret vector for the comparison grid.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
    },
    /// Exhaustive small-instance checks.
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    /// Two-party for exactly two secrets, multi-party otherwise.
    Auto,
    Two,
    Multi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Grid {
    /// Intercept-resend abort rate over `S`.
    Detection,
    /// Notification rate over `P_Z × K`.
    Notify,
    /// Two-party truth table and multi-party enumeration.
    Compare,
    /// Coalition guessing games over `n` and coalition size.
    Anonymity,
    /// Third-party tracing game, with and without revealing `k`.
    Traceless,
}
