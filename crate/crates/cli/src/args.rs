use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use h2pc::citest::PowerRuleCells;
use h2pc::score_search::ScoreKind;
use h2pc::{CsvOptions, ScoreConfig, TestConfig};

#[derive(Debug, Parser)]
#[command(name = "h2pc", version, about = "Hybrid Bayesian network structure learning and multi-label classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a dataset from a network by forward sampling.
    Sample(SampleArgs),
    /// Learn a network: skeleton discovery followed by hill climbing.
    Learn(LearnArgs),
    /// Learn only the undirected skeleton.
    LearnSkeleton(SkeletonArgs),
    /// Compare a learned network with the true one.
    Evaluate(EvaluateArgs),
    /// Repeated sample-learn-evaluate runs over several sample sizes.
    Benchmark(BenchmarkArgs),
    /// Cross-validated multi-label classification.
    Mlc(MlcArgs),
    /// Write a network or skeleton in DOT format.
    ExportDot(ExportDotArgs),
}

#[derive(Debug, Args)]
pub struct CsvArgs {
    /// Field delimiter (single ASCII character).
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// The file has no header row; columns are named V1, V2, ...
    #[arg(long)]
    pub no_header: bool,
}

impl CsvArgs {
    pub fn options(&self) -> Result<CsvOptions, String> {
        if !self.delimiter.is_ascii() {
            return Err(format!("delimiter `{}` is not ASCII", self.delimiter));
        }
        Ok(CsvOptions {
            delimiter: self.delimiter as u8,
            has_header: !self.no_header,
        })
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PowerCellsArg {
    Nominal,
    Observed,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Significance level of the independence tests and FDR level of the boundary search.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Minimum average number of samples per cell for a test to be trusted.
    #[arg(long, default_value_t = 5.0)]
    pub power_threshold: f64,
    /// Largest conditioning set tried when removing spouses.
    #[arg(long)]
    pub max_condset: Option<usize>,
    /// How the cell count of the power rule is computed.
    #[arg(long, value_enum, default_value_t = PowerCellsArg::Nominal)]
    pub power_cells: PowerCellsArg,
}

impl TestArgs {
    pub fn config(&self) -> TestConfig {
        TestConfig {
            alpha: self.alpha,
            power_threshold: self.power_threshold,
            max_condset: self.max_condset,
            power_cells: match self.power_cells {
                PowerCellsArg::Nominal => PowerRuleCells::Nominal,
                PowerCellsArg::Observed => PowerRuleCells::Observed,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScoreArg {
    Bdeu,
    Bic,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_enum, default_value_t = ScoreArg::Bdeu)]
    pub score: ScoreArg,
    /// Equivalent sample size of the BDeu prior.
    #[arg(long, default_value_t = 10.0)]
    pub ess: f64,
    /// Number of recent structures kept on the tabu list.
    #[arg(long, default_value_t = 100)]
    pub tabu: usize,
    /// Moves without improving the best score before the search stops.
    #[arg(long, default_value_t = 15)]
    pub patience: usize,
}

impl ScoreArgs {
    pub fn config(&self) -> ScoreConfig {
        ScoreConfig {
            score: match self.score {
                ScoreArg::Bdeu => ScoreKind::Bdeu,
                ScoreArg::Bic => ScoreKind::Bic,
            },
            ess: self.ess,
            tabu_length: self.tabu,
            patience: self.patience,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "H2PC_JOBS", default_value_t = 1)]
    pub jobs: usize,
    /// Add wall-clock seconds to reports (makes them non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Number of rows.
    #[arg(long, conflicts_with = "sizes", required_unless_present = "sizes")]
    pub n: Option<usize>,
    /// Comma-separated sample sizes; one file per size is written into --out-dir.
    #[arg(long, value_delimiter = ',', requires = "out_dir")]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, required_unless_present = "sizes")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// File name prefix used with --sizes.
    #[arg(long, default_value = "sample")]
    pub prefix: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Use this skeleton instead of learning one.
    #[arg(long)]
    pub skeleton: Option<PathBuf>,
    /// Stop after the skeleton phase and write the skeleton to --out.
    #[arg(long)]
    pub skeleton_only: bool,
    /// Also write the skeleton here.
    #[arg(long)]
    pub skeleton_out: Option<PathBuf>,
    /// Pseudo-count added to every cell when fitting the tables.
    #[arg(long, default_value_t = 0.0)]
    pub laplace: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SkeletonArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub learned: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Data the network was learned from.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Held-out data.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[arg(long, default_value_t = 10.0)]
    pub ess: f64,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [500usize, 2000, 20000])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long)]
    pub seed: u64,
    /// Rows in the held-out sample used for test scores.
    #[arg(long, default_value_t = 50000)]
    pub test_size: usize,
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Metrics table, one row per (size, repeat).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MlcArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub csv: CsvArgs,
    /// Comma-separated label column names.
    #[arg(long, value_delimiter = ',', conflicts_with = "label_count", required_unless_present = "label_count")]
    pub labels: Option<Vec<String>>,
    /// Use the last N columns as labels.
    #[arg(long)]
    pub label_count: Option<usize>,
    /// br, br+mb, mlp, mlp+mb, a comma-separated list of them, or all.
    #[arg(long, default_value = "mlp+mb")]
    pub scenario: String,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long)]
    pub seed: u64,
    /// Laplace smoothing of the naive Bayes classifiers.
    #[arg(long, default_value_t = 1.0)]
    pub smoothing: f64,
    /// Numeric feature columns with more distinct values than this are median-split per fold.
    #[arg(long, default_value_t = 10)]
    pub max_discrete_levels: usize,
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Directory for per-block training and test files.
    #[arg(long)]
    pub export_blocks: Option<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportDotArgs {
    #[arg(long, conflicts_with = "skeleton", required_unless_present = "skeleton")]
    pub net: Option<PathBuf>,
    #[arg(long)]
    pub skeleton: Option<PathBuf>,
    /// Draw the equivalence class of the network instead of the DAG.
    #[arg(long, requires = "net")]
    pub cpdag: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
