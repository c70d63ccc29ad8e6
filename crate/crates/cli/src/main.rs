use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geoforest_cli::commands::{
    self, DatasetKind, EvalParams, FitOptions, FitParams, GenerateParams, Method, MtryChoice,
    SweepParam, SweepParams,
};
use geoforest_cli::io::ProximityFormat;
use geoforest_core::{ProximityMode, SplitCriterion, SubsampleSize};

/// Geodesic neighborhood estimation on noisy manifolds with unsupervised
/// sparse-projection forests.
#[derive(Parser)]
#[command(name = "geoforest", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ForestArgs {
    /// Split criterion: twomeans | fastbic | embic
    #[arg(long, default_value = "fastbic")]
    criterion: SplitCriterion,
    /// Number of trees
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Per-tree sample: a count (e.g. 632) or a fraction of N (e.g. 0.632)
    #[arg(long, default_value = "0.632", value_parser = commands::parse_subsample)]
    subsample: SubsampleSize,
    /// Candidate projections per node: `auto` (= ceil(sqrt(p))) or a count
    #[arg(long, default_value = "auto")]
    mtry: MtryChoice,
    /// Projection sparsity in (0, 1]
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
    /// Smallest splittable node size
    #[arg(long, default_value_t = 100)]
    minparent: usize,
    /// Proximity normalization: allpoints | inbag
    #[arg(long = "proximity-mode", default_value = "allpoints")]
    proximity_mode: ProximityMode,
}

impl ForestArgs {
    fn options(&self, seed: u64) -> FitOptions {
        FitOptions {
            criterion: self.criterion,
            trees: self.trees,
            subsample: self.subsample,
            mtry: self.mtry,
            lambda: self.lambda,
            min_parent: self.minparent,
            proximity_mode: self.proximity_mode,
            seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark dataset and its oracle sidecar
    Generate {
        /// linear | helix | sphere | gmm
        #[arg(long)]
        dataset: DatasetKind,
        /// Number of points
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian noise dimensions to append
        #[arg(long = "noise-dims", default_value_t = 0)]
        noise_dims: usize,
        /// Variance of each noise dimension
        #[arg(long = "noise-var", default_value_t = 70.0)]
        noise_var: f64,
        /// Rescale every feature to [0, 1]
        #[arg(long)]
        rescale: bool,
        /// Output CSV path (sidecar written next to it)
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a forest and export its proximity matrix
    Fit {
        /// Input dataset CSV
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Proximity CSV output
        #[arg(long)]
        out: PathBuf,
        /// Forest file output (default: `--out` with a .forest extension)
        #[arg(long = "forest-out")]
        forest_out: Option<PathBuf>,
        /// Proximity layout: dense | triplet
        #[arg(long = "proximity-format", default_value = "dense")]
        proximity_format: ProximityFormat,
    },
    /// Score neighbor rankings against the latent oracle
    Eval {
        /// Dataset CSV (features for the Euclidean baseline; its sidecar is
        /// the default oracle)
        #[arg(long)]
        data: Option<PathBuf>,
        /// Proximity CSV (for method `proximity`)
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// External dense distance-matrix CSV (for method `external`)
        #[arg(long)]
        external: Option<PathBuf>,
        /// Oracle sidecar (overrides the data file's sidecar)
        #[arg(long)]
        oracle: Option<PathBuf>,
        /// Neighborhood sizes
        #[arg(long = "k", value_delimiter = ',', default_value = "50")]
        ks: Vec<usize>,
        /// Rankings to score: proximity | euclidean | external
        #[arg(long = "method", value_delimiter = ',', default_value = "proximity,euclidean")]
        methods: Vec<Method>,
        /// Output PR CSV
        #[arg(long)]
        out: PathBuf,
    },
    /// Run generate/fit/eval over a parameter grid
    Sweep {
        /// Swept parameter: noise-dims | minparent | mtry | criterion
        #[arg(long)]
        param: SweepParam,
        /// Grid values (mtry also accepts sqrt|half|full)
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Datasets to sweep over
        #[arg(long = "dataset", value_delimiter = ',', default_value = "linear,helix,sphere,gmm")]
        datasets: Vec<DatasetKind>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Master seed; each cell derives its own
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Base noise dimensions (when not the swept parameter)
        #[arg(long = "noise-dims", default_value_t = 0)]
        noise_dims: usize,
        #[arg(long = "noise-var", default_value_t = 70.0)]
        noise_var: f64,
        #[arg(long)]
        rescale: bool,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long = "k", value_delimiter = ',', default_value = "50")]
        ks: Vec<usize>,
        #[arg(long = "method", value_delimiter = ',', default_value = "proximity,euclidean")]
        methods: Vec<Method>,
        /// Output long-format CSV
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), geoforest_cli::CliError> {
    match cli.command {
        Command::Generate { dataset, n, seed, noise_dims, noise_var, rescale, out } => {
            commands::run_generate(&GenerateParams {
                dataset,
                n,
                seed,
                noise_dims,
                noise_var,
                rescale,
                out,
            })
        }
        Command::Fit { input, forest, seed, out, forest_out, proximity_format } => {
            commands::run_fit(&FitParams {
                input,
                opts: forest.options(seed),
                out,
                forest_out,
                proximity_format,
            })
        }
        Command::Eval { data, input, external, oracle, ks, methods, out } => {
            commands::run_eval(&EvalParams {
                data,
                proximity: input,
                external,
                oracle,
                ks,
                methods,
                out,
            })
        }
        Command::Sweep {
            param,
            values,
            datasets,
            n,
            seed,
            noise_dims,
            noise_var,
            rescale,
            forest,
            ks,
            methods,
            out,
        } => commands::run_sweep(&SweepParams {
            param,
            values,
            datasets,
            n,
            seed,
            noise_dims,
            noise_var,
            rescale,
            opts: forest.options(seed),
            ks,
            methods,
            out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
