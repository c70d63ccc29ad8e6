//! The four commands: generate, fit, eval, sweep.

use std::path::{Path, PathBuf};
use std::time::Instant;

use geoforest_core::{
    add_noise, build_tree, chance_level, compute_proximity, gen_gmm, gen_helix, gen_linear,
    gen_sphere, pr_curve, rescale01, DataMatrix, Forest, ForestConfig, GeodesicOracle,
    NeighborSource, NoiseSpec, ProximityMode, SplitCriterion, SubsampleSize, Tree,
};

use crate::error::CliError;
use crate::forest_file;
use crate::io::{self, ProximityFormat, PrRow, SweepRow};
use crate::seed;

// ---------------------------------------------------------------------------
// shared parameter types

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetKind {
    Linear,
    Helix,
    Sphere,
    Gmm,
    Csv(PathBuf),
}

impl DatasetKind {
    pub fn name(&self) -> String {
        match self {
            DatasetKind::Linear => "linear".into(),
            DatasetKind::Helix => "helix".into(),
            DatasetKind::Sphere => "sphere".into(),
            DatasetKind::Gmm => "gmm".into(),
            DatasetKind::Csv(p) => format!("csv:{}", p.display()),
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(DatasetKind::Linear),
            "helix" => Ok(DatasetKind::Helix),
            "sphere" => Ok(DatasetKind::Sphere),
            "gmm" => Ok(DatasetKind::Gmm),
            other => match other.strip_prefix("csv:") {
                Some(path) if !path.is_empty() => Ok(DatasetKind::Csv(PathBuf::from(path))),
                _ => Err(format!(
                    "unknown dataset `{other}` (expected linear|helix|sphere|gmm|csv:<path>)"
                )),
            },
        }
    }
}

/// `auto` resolves to ceil(sqrt(p)) once the feature count is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtryChoice {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for MtryChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(MtryChoice::Auto);
        }
        s.parse::<usize>().map(MtryChoice::Fixed).map_err(|_| {
            format!("mtry must be `auto` or a positive integer, got `{s}`")
        })
    }
}

/// Counts parse as absolute sizes, values with a decimal point as
/// fractions of N.
pub fn parse_subsample(s: &str) -> Result<SubsampleSize, String> {
    if s.contains('.') {
        s.parse::<f64>()
            .map(SubsampleSize::Fraction)
            .map_err(|_| format!("bad subsample fraction `{s}`"))
    } else {
        s.parse::<usize>()
            .map(SubsampleSize::Count)
            .map_err(|_| format!("bad subsample count `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Proximity,
    Euclidean,
    External,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Proximity => "proximity",
            Method::Euclidean => "euclidean",
            Method::External => "external",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "proximity" => Ok(Method::Proximity),
            "euclidean" => Ok(Method::Euclidean),
            "external" => Ok(Method::External),
            _ => Err(format!("unknown method `{s}` (proximity|euclidean|external)")),
        }
    }
}

// ---------------------------------------------------------------------------
// dataset construction

/// Generate (or load) a dataset with its oracle. For synthetic kinds the
/// noise stream is derived from the generation seed; loaded CSV datasets
/// may also be noise-augmented and rescaled.
pub fn build_dataset(
    kind: &DatasetKind,
    n: usize,
    seed_value: u64,
    noise_dims: usize,
    noise_var: f64,
    rescale: bool,
) -> Result<(DataMatrix, GeodesicOracle), CliError> {
    let (mut x, oracle) = match kind {
        DatasetKind::Linear => gen_linear(n)?,
        DatasetKind::Helix => gen_helix(n)?,
        DatasetKind::Sphere => gen_sphere(n)?,
        DatasetKind::Gmm => gen_gmm(n, seed_value)?,
        DatasetKind::Csv(path) => {
            let loaded = io::read_dataset(path)?;
            let oracle = load_oracle_for(path, &loaded)?;
            (loaded.x, oracle)
        }
    };
    if noise_dims > 0 {
        let spec = NoiseSpec::new(noise_dims, noise_var, seed::derive(seed_value, "noise"))?;
        x = add_noise(&x, &spec);
    }
    if rescale {
        x = rescale01(&x);
    }
    Ok((x, oracle))
}

/// Oracle for a CSV dataset: the sidecar when present (it carries the
/// exact arc-length rule), otherwise latent/label columns.
fn load_oracle_for(path: &Path, loaded: &io::LoadedDataset) -> Result<GeodesicOracle, CliError> {
    let sidecar = io::sidecar_path(path);
    if sidecar.exists() {
        let oracle = io::read_oracle(&sidecar)?;
        if oracle.len() != loaded.x.n_points() {
            return Err(CliError::Data(format!(
                "oracle {} covers {} points, data has {}",
                sidecar.display(),
                oracle.len(),
                loaded.x.n_points()
            )));
        }
        return Ok(oracle);
    }
    loaded.latent_oracle.clone().ok_or_else(|| {
        CliError::InvalidArgument(format!(
            "{}: no oracle sidecar and no label/latent-parameter column",
            path.display()
        ))
    })
}

// ---------------------------------------------------------------------------
// generate

#[derive(Debug, Clone)]
pub struct GenerateParams {
    pub dataset: DatasetKind,
    pub n: usize,
    pub seed: u64,
    pub noise_dims: usize,
    pub noise_var: f64,
    pub rescale: bool,
    pub out: PathBuf,
}

pub fn run_generate(p: &GenerateParams) -> Result<(), CliError> {
    if matches!(p.dataset, DatasetKind::Csv(_)) {
        return Err(CliError::InvalidArgument(
            "generate needs a synthetic dataset (linear|helix|sphere|gmm)".into(),
        ));
    }
    let (x, oracle) =
        build_dataset(&p.dataset, p.n, p.seed, p.noise_dims, p.noise_var, p.rescale)?;
    io::write_dataset(&p.out, &x, &oracle)?;
    io::write_oracle(&io::sidecar_path(&p.out), &oracle)?;
    eprintln!(
        "generated {} ({} points, {} features) -> {}",
        p.dataset.name(),
        x.n_points(),
        x.n_features(),
        p.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub criterion: SplitCriterion,
    pub trees: usize,
    pub subsample: SubsampleSize,
    pub mtry: MtryChoice,
    pub lambda: f64,
    pub min_parent: usize,
    pub proximity_mode: ProximityMode,
    pub seed: u64,
}

impl FitOptions {
    pub fn to_config(&self, n_features: usize) -> ForestConfig {
        let mut cfg = ForestConfig::defaults(n_features, self.seed);
        cfg.criterion = self.criterion;
        cfg.num_trees = self.trees;
        cfg.subsample = self.subsample;
        if let MtryChoice::Fixed(d) = self.mtry {
            cfg.mtry = d;
        }
        cfg.lambda = self.lambda;
        cfg.min_parent = self.min_parent;
        cfg.proximity_mode = self.proximity_mode;
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct FitParams {
    pub input: PathBuf,
    pub opts: FitOptions,
    /// Proximity CSV destination.
    pub out: PathBuf,
    /// Forest destination; defaults to `out` with a `.forest` extension.
    pub forest_out: Option<PathBuf>,
    pub proximity_format: ProximityFormat,
}

/// Build the forest tree by tree (identical streams to
/// `geoforest_core::build_forest`) so per-tree timings can be logged.
fn fit_forest_logged(x: &DataMatrix, cfg: &ForestConfig) -> Result<Forest, CliError> {
    let n = x.n_points();
    let m = cfg.validate(n, x.n_features())?;
    let built: Result<Vec<(Tree, f64)>, CliError> = (0..cfg.num_trees)
        .map(|t| {
            let mut rng = geoforest_core::forest::tree_rng(cfg.seed, t);
            let ids = geoforest_core::forest::tree_sample(n, m, &mut rng);
            let started = Instant::now();
            let tree = build_tree(x, &ids, cfg, &mut rng)?;
            Ok((tree, started.elapsed().as_secs_f64() * 1e3))
        })
        .collect();
    let built = built?;
    let mut leaf_sizes: Vec<usize> = Vec::new();
    for (t, (tree, ms)) in built.iter().enumerate() {
        leaf_sizes.extend(tree.leaf_sizes());
        eprintln!("tree {t}: {} nodes, {ms:.1} ms", tree.nodes.len());
    }
    leaf_sizes.sort_unstable();
    if !leaf_sizes.is_empty() {
        let buckets = [0usize, 10, 25, 50, 100, 200, 400, usize::MAX];
        let mut hist = String::new();
        for w in buckets.windows(2) {
            let count = leaf_sizes.iter().filter(|&&s| s >= w[0] && s < w[1]).count();
            if count > 0 {
                if w[1] == usize::MAX {
                    hist.push_str(&format!(" [{}+]={count}", w[0]));
                } else {
                    hist.push_str(&format!(" [{},{})={count}", w[0], w[1]));
                }
            }
        }
        eprintln!("leaf sizes:{hist}");
    }
    Ok(Forest {
        config: cfg.clone(),
        n_points: n,
        n_features: x.n_features(),
        trees: built.into_iter().map(|(t, _)| t).collect(),
    })
}

pub fn run_fit(p: &FitParams) -> Result<(), CliError> {
    let loaded = io::read_dataset(&p.input)?;
    let cfg = p.opts.to_config(loaded.x.n_features());
    let started = Instant::now();
    let forest = fit_forest_logged(&loaded.x, &cfg)?;
    eprintln!("forest: {} trees in {:.2} s", forest.trees.len(), started.elapsed().as_secs_f64());
    let prox = compute_proximity(&forest, &loaded.x)?;
    if prox.zero_support_pairs() > 0 {
        eprintln!(
            "warning: {} pairs never jointly in-bag (proximity 0)",
            prox.zero_support_pairs()
        );
    }
    let forest_path = p.forest_out.clone().unwrap_or_else(|| p.out.with_extension("forest"));
    forest_file::write_forest(&forest_path, &forest)?;
    io::write_proximity(&p.out, &prox, p.proximity_format)?;
    eprintln!("wrote {} and {}", forest_path.display(), p.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

#[derive(Debug, Clone)]
pub struct EvalParams {
    /// Dataset CSV (features + default oracle location).
    pub data: Option<PathBuf>,
    /// Proximity CSV for the `proximity` method.
    pub proximity: Option<PathBuf>,
    /// External dense distance matrix for the `external` method.
    pub external: Option<PathBuf>,
    /// Explicit oracle sidecar; defaults to the data file's sidecar.
    pub oracle: Option<PathBuf>,
    pub ks: Vec<usize>,
    pub methods: Vec<Method>,
    pub out: PathBuf,
}

/// Evaluate the configured methods; returns rows in method order, each a
/// PR curve ascending in k.
pub fn eval_rows(p: &EvalParams) -> Result<Vec<PrRow>, CliError> {
    if p.methods.is_empty() {
        return Err(CliError::InvalidArgument("no methods requested".into()));
    }
    if p.ks.is_empty() {
        return Err(CliError::InvalidArgument("no k values requested".into()));
    }
    let loaded = match &p.data {
        Some(path) => Some(io::read_dataset(path)?),
        None => None,
    };
    let oracle = match (&p.oracle, &p.data, &loaded) {
        (Some(path), _, _) => io::read_oracle(path)?,
        (None, Some(data_path), Some(loaded)) => load_oracle_for(data_path, loaded)?,
        _ => {
            return Err(CliError::InvalidArgument(
                "an oracle is required: pass --data with a sidecar or --oracle".into(),
            ))
        }
    };
    let prox = match &p.proximity {
        Some(path) => Some(io::read_proximity(path)?),
        None => None,
    };
    let external = match &p.external {
        Some(path) => Some(io::read_distance_matrix(path)?),
        None => None,
    };

    let mut rows = Vec::new();
    for method in &p.methods {
        let source = match method {
            Method::Proximity => {
                let prox = prox.as_ref().ok_or_else(|| {
                    CliError::InvalidArgument("method proximity needs --in <proximity csv>".into())
                })?;
                NeighborSource::Proximity(prox)
            }
            Method::Euclidean => {
                let loaded = loaded.as_ref().ok_or_else(|| {
                    CliError::InvalidArgument("method euclidean needs --data <dataset csv>".into())
                })?;
                NeighborSource::Euclidean(&loaded.x)
            }
            Method::External => {
                let d = external.as_ref().ok_or_else(|| {
                    CliError::InvalidArgument(
                        "method external needs --external <distance csv>".into(),
                    )
                })?;
                NeighborSource::ExternalDistances(d)
            }
        };
        if source.len() != oracle.len() {
            return Err(CliError::Data(format!(
                "{} ranking covers {} points, oracle {}",
                method.name(),
                source.len(),
                oracle.len()
            )));
        }
        for point in pr_curve(&source, &oracle, &p.ks)? {
            rows.push(PrRow {
                method: method.name().into(),
                point,
                chance: chance_level(&oracle, point.k),
            });
        }
    }
    Ok(rows)
}

pub fn run_eval(p: &EvalParams) -> Result<(), CliError> {
    let rows = eval_rows(p)?;
    io::write_pr_rows(&p.out, &rows)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    NoiseDims,
    MinParent,
    Mtry,
    Criterion,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::NoiseDims => "noise-dims",
            SweepParam::MinParent => "minparent",
            SweepParam::Mtry => "mtry",
            SweepParam::Criterion => "criterion",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "noise-dims" => Ok(SweepParam::NoiseDims),
            "minparent" => Ok(SweepParam::MinParent),
            "mtry" => Ok(SweepParam::Mtry),
            "criterion" => Ok(SweepParam::Criterion),
            _ => Err(format!(
                "unknown sweep parameter `{s}` (noise-dims|minparent|mtry|criterion)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepParams {
    pub param: SweepParam,
    pub values: Vec<String>,
    pub datasets: Vec<DatasetKind>,
    pub n: usize,
    pub seed: u64,
    pub noise_dims: usize,
    pub noise_var: f64,
    pub rescale: bool,
    pub opts: FitOptions,
    pub ks: Vec<usize>,
    pub methods: Vec<Method>,
    pub out: PathBuf,
}

/// Resolve a sweep value for the mtry axis: an integer or one of the
/// keywords sqrt, half, full (of the feature count).
fn resolve_mtry(value: &str, p: usize) -> Result<usize, CliError> {
    let d = match value {
        "sqrt" | "auto" => (p as f64).sqrt().ceil() as usize,
        "half" => p.div_ceil(2),
        "full" => p,
        v => v.parse::<usize>().map_err(|_| {
            CliError::InvalidArgument(format!(
                "bad mtry value `{v}` (integer or sqrt|half|full)"
            ))
        })?,
    };
    Ok(d.max(1))
}

/// One sweep cell: generate with the cell's generation seed, fit with its
/// fit seed, evaluate. Identical to running the individual commands with
/// the same derived seeds.
fn run_cell(
    p: &SweepParams,
    dataset: &DatasetKind,
    value: &str,
) -> Result<Vec<(Method, geoforest_core::PrPoint, f64)>, CliError> {
    let cell = seed::cell_seed(p.seed, p.param.name(), value, &dataset.name());
    let gen_seed = seed::derive(cell, "generate");
    let fit_seed = seed::derive(cell, "fit");

    let mut noise_dims = p.noise_dims;
    let mut opts = p.opts.clone();
    opts.seed = fit_seed;
    match p.param {
        SweepParam::NoiseDims => {
            noise_dims = value.parse::<usize>().map_err(|_| {
                CliError::InvalidArgument(format!("bad noise-dims value `{value}`"))
            })?;
        }
        SweepParam::MinParent => {
            opts.min_parent = value.parse::<usize>().map_err(|_| {
                CliError::InvalidArgument(format!("bad minparent value `{value}`"))
            })?;
        }
        SweepParam::Mtry => { /* resolved below, needs p */ }
        SweepParam::Criterion => {
            opts.criterion = SplitCriterion::parse(value).ok_or_else(|| {
                CliError::InvalidArgument(format!("bad criterion value `{value}`"))
            })?;
        }
    }

    let (x, oracle) = build_dataset(dataset, p.n, gen_seed, noise_dims, p.noise_var, p.rescale)?;
    if p.param == SweepParam::Mtry {
        opts.mtry = MtryChoice::Fixed(resolve_mtry(value, x.n_features())?);
    }
    let cfg = opts.to_config(x.n_features());
    let forest = geoforest_core::build_forest(&x, &cfg)?;
    let prox = compute_proximity(&forest, &x)?;

    let mut out = Vec::new();
    for method in &p.methods {
        let source = match method {
            Method::Proximity => NeighborSource::Proximity(&prox),
            Method::Euclidean => NeighborSource::Euclidean(&x),
            Method::External => {
                return Err(CliError::InvalidArgument(
                    "sweep supports methods proximity and euclidean".into(),
                ))
            }
        };
        for point in pr_curve(&source, &oracle, &p.ks)? {
            out.push((*method, point, chance_level(&oracle, point.k)));
        }
    }
    Ok(out)
}

pub fn run_sweep(p: &SweepParams) -> Result<(), CliError> {
    let mut rows: Vec<SweepRow> = Vec::new();
    for dataset in &p.datasets {
        for value in &p.values {
            let started = Instant::now();
            let outcome = run_cell(p, dataset, value);
            let seconds = started.elapsed().as_secs_f64();
            match outcome {
                Ok(points) => {
                    for (method, point, chance) in points {
                        rows.push(SweepRow {
                            dataset: dataset.name(),
                            param: p.param.name().into(),
                            value: value.clone(),
                            method: method.name().into(),
                            k: point.k,
                            precision: point.precision,
                            recall: point.recall,
                            chance,
                            seconds,
                        });
                    }
                }
                Err(err) => {
                    eprintln!("cell ({}, {}={}) failed: {err}", dataset.name(), p.param.name(), value);
                    rows.push(SweepRow {
                        dataset: dataset.name(),
                        param: p.param.name().into(),
                        value: value.clone(),
                        method: "error".into(),
                        k: 0,
                        precision: f64::NAN,
                        recall: f64::NAN,
                        chance: f64::NAN,
                        seconds,
                    });
                }
            }
        }
    }
    io::write_sweep_rows(&p.out, &rows)
}
