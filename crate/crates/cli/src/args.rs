//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mosg::vi::{DEFAULT_FAMILY_CAP, DEFAULT_ITERATION_CAP};

#[derive(Debug, Parser)]
#[command(name = "mosg", version, about = "Exact solver for multi-objective stochastic games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value iteration for a conjunctive query.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        iter: IterArgs,
        #[arg(long, value_enum, default_value_t = Semantics::Standard)]
        semantics: Semantics,
        #[command(flatten)]
        prune: PruneArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Disjunctive query: threshold decision, or the Pareto region for two
    /// objectives when no thresholds are given.
    Dq {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        iter: IterArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Determinacy checks.
    Determinacy {
        #[command(subcommand)]
        check: DeterminacyCommand,
    },
    /// Strategy iteration over memoryless deterministic strategies.
    Si {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        mode: SiModeArg,
        #[command(flatten)]
        prune: PruneArgs,
        #[arg(long, default_value_t = DEFAULT_ITERATION_CAP)]
        fixpoint_cap: usize,
        /// Include the visited strategies in the output.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Qualitative disjunctive query (every threshold 1).
    Qual {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = QualSemantics::General)]
        semantics: QualSemantics,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cross-check the solvers against brute-force enumeration.
    Oracle {
        #[command(subcommand)]
        check: OracleCommand,
    },
    /// Emit a named construction, or list them.
    Zoo {
        name: Option<String>,
        /// Size parameter, where the construction has one.
        #[arg(long)]
        n: Option<usize>,
        /// Directory receiving `<name>.game.json` and `<name>.query.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a random game.
    Generate {
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// Number of absorbing target states (ignored with --acyclic).
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        acyclic: bool,
        /// Directory receiving `random-<seed>.game.json` and `.query.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Family-size experiment on random games.
    Bench {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 10)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest horizon; horizons 1..=k are reported.
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
        /// Keep instances whose families stay singletons.
        #[arg(long)]
        all: bool,
        /// Skip the unpruned comparison run.
        #[arg(long)]
        pruned_only: bool,
        /// `csv`: one line per instance, horizon and state; `json`: summary.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a two-objective polytope or region as SVG.
    Render {
        /// A polytope, a region, or a result file with a `value` or `region`.
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a game (and query) file.
    Validate {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        query: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DeterminacyCommand {
    /// Check a certificate family on the binarized game.
    Certify {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = FamilyArg::FiveCurves)]
        family: FamilyArg,
        /// Certificate file for `--family file`: state label → polytopes.
        #[arg(long, required_if_eq("family", "file"))]
        family_file: Option<PathBuf>,
        /// Write the checked family in the certificate file format.
        #[arg(long)]
        dump_family: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ITERATION_CAP)]
        fixpoint_cap: usize,
    },
    /// Structural sufficient condition and first differing horizon.
    Structural {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
    },
    /// Decide determinacy (may answer unknown).
    Decide {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_ITERATION_CAP)]
        fixpoint_cap: usize,
        #[arg(long, default_value_t = DEFAULT_FAMILY_CAP)]
        family_cap: usize,
        #[arg(long)]
        timeout_ms: Option<u64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// ∀∃ value at horizon k: enumeration against the family iteration.
    ForallExists {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = mosg::oracle::DEFAULT_GUARD)]
        guard: u128,
    },
    /// Threshold disjunctive query on an acyclic game: Eve strategy
    /// enumeration against the dual iteration.
    Dq {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = mosg::oracle::DEFAULT_GUARD)]
        guard: u128,
    },
    /// Probability of the binary expansion `0.u(v)^ω` against the horizon-h
    /// counter strategy on the coin game.
    Binary {
        #[arg(long, default_value = "")]
        prefix: String,
        #[arg(long)]
        period: String,
        #[arg(long, default_value_t = 32)]
        horizon: usize,
    },
}

/// Where the game and query come from.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Game file (JSON).
    #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
    pub game: Option<PathBuf>,
    /// Query file (JSON); defaults to the construction's own query.
    #[arg(long)]
    pub query: Option<PathBuf>,
    /// Named construction (see `zoo`).
    #[arg(long)]
    pub builtin: Option<String>,
    /// Size parameter of the construction.
    #[arg(long)]
    pub n: Option<usize>,
    /// Label of the state to start from instead of the initial state.
    #[arg(long)]
    pub from: Option<String>,
    /// Thresholds overriding the query file, e.g. `3/4,0.5`.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct IterArgs {
    /// Run exactly k steps instead of iterating to a fixpoint.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ITERATION_CAP)]
    pub fixpoint_cap: usize,
    #[arg(long, default_value_t = DEFAULT_FAMILY_CAP)]
    pub family_cap: usize,
    #[arg(long)]
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct PruneArgs {
    #[arg(long, overrides_with = "no_prune")]
    pub prune: bool,
    #[arg(long, overrides_with = "prune")]
    pub no_prune: bool,
}

impl PruneArgs {
    pub fn enabled(&self) -> bool {
        !self.no_prune
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Semantics {
    Standard,
    ForallExists,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SiModeArg {
    DqStandard,
    CqForallExists,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QualSemantics {
    General,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    FiveCurves,
    Limit,
    File,
}
