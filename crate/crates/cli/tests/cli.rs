//! Integration tests for file formats and command behavior.

use std::path::{Path, PathBuf};
use std::process::Command;

use geoforest_cli::commands::{
    self, build_dataset, DatasetKind, EvalParams, FitOptions, FitParams, GenerateParams, Method,
    MtryChoice, SweepParam, SweepParams,
};
use geoforest_cli::io::{self, ProximityFormat};
use geoforest_cli::seed;
use geoforest_core::{
    build_forest, compute_proximity, gen_helix, gen_sphere, ForestConfig,
    GeodesicOracle, ProximityMode, SplitCriterion, SubsampleSize,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geoforest"))
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn dataset_csv_roundtrip_is_exact() {
    let dir = tmp();
    let (x, oracle) = gen_sphere(100).unwrap();
    let path = dir.path().join("sphere.csv");
    io::write_dataset(&path, &x, &oracle).unwrap();
    let loaded = io::read_dataset(&path).unwrap();
    assert_eq!(loaded.x, x);
    // u,v latent columns reconstruct as generic latent parameters.
    match loaded.latent_oracle.unwrap() {
        GeodesicOracle::LatentL2 { dim, params } => {
            assert_eq!(dim, 2);
            assert_eq!(params.len(), 200);
        }
        other => panic!("unexpected oracle {other:?}"),
    }
}

#[test]
fn oracle_sidecar_roundtrip_all_rules() {
    let dir = tmp();
    let oracles = vec![
        GeodesicOracle::Line { t: vec![0.25, 0.5, 0.75] },
        GeodesicOracle::Helix { t: vec![7.0, 8.0, 9.5] },
        GeodesicOracle::Sphere { radius: 9.0, uv: vec![[0.1, 0.2], [1.0, 2.0], [3.0, 1.5]] },
        GeodesicOracle::LatentL2 { dim: 2, params: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0] },
        GeodesicOracle::Components { labels: vec![0, 2, 1] },
    ];
    for (i, oracle) in oracles.into_iter().enumerate() {
        let path = dir.path().join(format!("o{i}.oracle.json"));
        io::write_oracle(&path, &oracle).unwrap();
        assert_eq!(io::read_oracle(&path).unwrap(), oracle, "rule {i}");
    }
}

#[test]
fn proximity_csv_roundtrip_dense_and_triplet() {
    let dir = tmp();
    let (x, _) = gen_helix(80).unwrap();
    let mut cfg = ForestConfig::defaults(3, 5);
    cfg.num_trees = 9;
    cfg.min_parent = 15;
    let forest = build_forest(&x, &cfg).unwrap();
    let prox = compute_proximity(&forest, &x).unwrap();
    for format in [ProximityFormat::Dense, ProximityFormat::Triplet] {
        let path = dir.path().join(format!("{format:?}.csv"));
        io::write_proximity(&path, &prox, format).unwrap();
        let back = io::read_proximity(&path).unwrap();
        assert_eq!(back.n(), 80);
        for i in 0..80 {
            for j in 0..80 {
                assert!(
                    (back.value(i, j) - prox.value(i, j)).abs() < 1e-9,
                    "{format:?} mismatch at ({i}, {j})"
                );
            }
        }
    }
}

#[test]
fn generate_writes_data_and_sidecar() {
    let dir = tmp();
    let out = dir.path().join("helix.csv");
    commands::run_generate(&GenerateParams {
        dataset: DatasetKind::Helix,
        n: 1000,
        seed: 7,
        noise_dims: 0,
        noise_var: 70.0,
        rescale: false,
        out: out.clone(),
    })
    .unwrap();
    let loaded = io::read_dataset(&out).unwrap();
    assert_eq!(loaded.x.n_points(), 1000);
    assert_eq!(loaded.x.n_features(), 3);
    let oracle = io::read_oracle(&io::sidecar_path(&out)).unwrap();
    assert!(matches!(oracle, GeodesicOracle::Helix { .. }));
}

#[test]
fn generate_without_noise_equals_plain_generator() {
    let (plain, _) = build_dataset(&DatasetKind::Gmm, 200, 3, 0, 70.0, false).unwrap();
    let (zero_noise, _) = build_dataset(&DatasetKind::Gmm, 200, 3, 0, 123.0, false).unwrap();
    assert_eq!(plain, zero_noise, "noise-dims 0 must not consume noise randomness");
}

fn default_opts(seed: u64, trees: usize, min_parent: usize) -> FitOptions {
    FitOptions {
        criterion: SplitCriterion::FastBic,
        trees,
        subsample: SubsampleSize::Fraction(0.632),
        mtry: MtryChoice::Auto,
        lambda: 0.05,
        min_parent,
        proximity_mode: ProximityMode::AllPoints,
        seed,
    }
}

#[test]
fn fit_matches_core_forest_builder() {
    // The timing-instrumented per-tree loop must produce the identical
    // forest to the one-call builder.
    let dir = tmp();
    let data = dir.path().join("lin.csv");
    commands::run_generate(&GenerateParams {
        dataset: DatasetKind::Linear,
        n: 300,
        seed: 1,
        noise_dims: 2,
        noise_var: 70.0,
        rescale: false,
        out: data.clone(),
    })
    .unwrap();
    let out = dir.path().join("lin.prox.csv");
    commands::run_fit(&FitParams {
        input: data.clone(),
        opts: default_opts(9, 12, 40),
        out: out.clone(),
        forest_out: None,
        proximity_format: ProximityFormat::Dense,
    })
    .unwrap();
    let written = geoforest_cli::forest_file::read_forest(&dir.path().join("lin.prox.forest")).unwrap();
    let loaded = io::read_dataset(&data).unwrap();
    let cfg = default_opts(9, 12, 40).to_config(loaded.x.n_features());
    let direct = build_forest(&loaded.x, &cfg).unwrap();
    assert_eq!(written, direct);
}

#[test]
fn single_tree_proximity_file_is_binary() {
    let dir = tmp();
    let data = dir.path().join("gmm.csv");
    commands::run_generate(&GenerateParams {
        dataset: DatasetKind::Gmm,
        n: 150,
        seed: 4,
        noise_dims: 0,
        noise_var: 70.0,
        rescale: false,
        out: data.clone(),
    })
    .unwrap();
    let out = dir.path().join("gmm.prox.csv");
    commands::run_fit(&FitParams {
        input: data,
        opts: default_opts(2, 1, 30),
        out: out.clone(),
        forest_out: None,
        proximity_format: ProximityFormat::Dense,
    })
    .unwrap();
    let prox = io::read_proximity(&out).unwrap();
    for i in 0..prox.n() {
        for j in 0..prox.n() {
            let v = prox.value(i, j);
            assert!(v == 0.0 || v == 1.0, "({i},{j}) = {v}");
        }
    }
}

#[test]
fn eval_full_neighborhood_is_perfect() {
    // k = N - 1 with a continuous oracle: retrieved = relevant = everything.
    let dir = tmp();
    let data = dir.path().join("lin.csv");
    commands::run_generate(&GenerateParams {
        dataset: DatasetKind::Linear,
        n: 60,
        seed: 0,
        noise_dims: 0,
        noise_var: 70.0,
        rescale: false,
        out: data.clone(),
    })
    .unwrap();
    let out = dir.path().join("pr.csv");
    commands::run_eval(&EvalParams {
        data: Some(data),
        proximity: None,
        external: None,
        oracle: None,
        ks: vec![59],
        methods: vec![Method::Euclidean],
        out: out.clone(),
    })
    .unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let line = text.lines().nth(1).unwrap();
    assert_eq!(line, "euclidean,59,1,1,1");
}

#[test]
fn eval_rows_cover_methods_and_ks() {
    let dir = tmp();
    let data = dir.path().join("lin.csv");
    commands::run_generate(&GenerateParams {
        dataset: DatasetKind::Linear,
        n: 120,
        seed: 0,
        noise_dims: 0,
        noise_var: 70.0,
        rescale: false,
        out: data.clone(),
    })
    .unwrap();
    let prox_out = dir.path().join("prox.csv");
    commands::run_fit(&FitParams {
        input: data.clone(),
        opts: default_opts(1, 8, 25),
        out: prox_out.clone(),
        forest_out: None,
        proximity_format: ProximityFormat::Triplet,
    })
    .unwrap();
    let rows = commands::eval_rows(&EvalParams {
        data: Some(data),
        proximity: Some(prox_out),
        external: None,
        oracle: None,
        ks: vec![50, 10],
        methods: vec![Method::Proximity, Method::Euclidean],
        out: dir.path().join("pr.csv"),
    })
    .unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!((rows[0].method.as_str(), rows[0].point.k), ("proximity", 10));
    assert_eq!((rows[1].method.as_str(), rows[1].point.k), ("proximity", 50));
    assert_eq!((rows[2].method.as_str(), rows[2].point.k), ("euclidean", 10));
    assert_eq!(rows[3].chance, 50.0 / 119.0);
}

#[test]
fn external_matrix_equals_euclidean_rows() {
    // Feeding the exact Euclidean distances through the external-matrix
    // ingestion path must reproduce the euclidean rows.
    let dir = tmp();
    let data = dir.path().join("helix.csv");
    commands::run_generate(&GenerateParams {
        dataset: DatasetKind::Helix,
        n: 90,
        seed: 2,
        noise_dims: 3,
        noise_var: 70.0,
        rescale: false,
        out: data.clone(),
    })
    .unwrap();
    let loaded = io::read_dataset(&data).unwrap();
    let n = loaded.x.n_points();
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let d: f64 = loaded.x.row(i).iter().zip(loaded.x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            values.push(d.sqrt());
        }
    }
    let dist_path = dir.path().join("euclid.csv");
    io::write_distance_matrix(&dist_path, &geoforest_core::DistanceMatrix::new(n, values).unwrap())
        .unwrap();
    let rows = commands::eval_rows(&EvalParams {
        data: Some(data.clone()),
        proximity: None,
        external: Some(dist_path),
        oracle: None,
        ks: vec![5, 20],
        methods: vec![Method::Euclidean, Method::External],
        out: dir.path().join("pr.csv"),
    })
    .unwrap();
    assert_eq!(rows[0].point, rows[2].point);
    assert_eq!(rows[1].point, rows[3].point);
}

#[test]
fn eval_rejects_mismatched_oracle() {
    let dir = tmp();
    let data = dir.path().join("lin.csv");
    commands::run_generate(&GenerateParams {
        dataset: DatasetKind::Linear,
        n: 50,
        seed: 0,
        noise_dims: 0,
        noise_var: 70.0,
        rescale: false,
        out: data.clone(),
    })
    .unwrap();
    let wrong = dir.path().join("wrong.oracle.json");
    io::write_oracle(&wrong, &GeodesicOracle::Components { labels: vec![0; 40] }).unwrap();
    let err = commands::eval_rows(&EvalParams {
        data: Some(data),
        proximity: None,
        external: None,
        oracle: Some(wrong),
        ks: vec![5],
        methods: vec![Method::Euclidean],
        out: dir.path().join("pr.csv"),
    })
    .unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn sweep_cells_match_manual_pipeline() {
    let dir = tmp();
    let out = dir.path().join("sweep.csv");
    let params = SweepParams {
        param: SweepParam::NoiseDims,
        values: vec!["2".into()],
        datasets: vec![DatasetKind::Linear],
        n: 150,
        seed: 77,
        noise_dims: 0,
        noise_var: 70.0,
        rescale: false,
        opts: default_opts(0, 6, 30),
        ks: vec![10],
        methods: vec![Method::Proximity],
        out: out.clone(),
    };
    commands::run_sweep(&params).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();

    // Manual pipeline with the documented derived seeds.
    let cell = seed::cell_seed(77, "noise-dims", "2", "linear");
    let gen_seed = seed::derive(cell, "generate");
    let fit_seed = seed::derive(cell, "fit");
    let data = dir.path().join("manual.csv");
    commands::run_generate(&GenerateParams {
        dataset: DatasetKind::Linear,
        n: 150,
        seed: gen_seed,
        noise_dims: 2,
        noise_var: 70.0,
        rescale: false,
        out: data.clone(),
    })
    .unwrap();
    let prox_out = dir.path().join("manual.prox.csv");
    commands::run_fit(&FitParams {
        input: data.clone(),
        opts: default_opts(fit_seed, 6, 30),
        out: prox_out.clone(),
        forest_out: None,
        proximity_format: ProximityFormat::Dense,
    })
    .unwrap();
    let rows = commands::eval_rows(&EvalParams {
        data: Some(data),
        proximity: Some(prox_out),
        external: None,
        oracle: None,
        ks: vec![10],
        methods: vec![Method::Proximity],
        out: dir.path().join("pr.csv"),
    })
    .unwrap();
    assert_eq!(row[0], "linear");
    assert_eq!(row[4], "10");
    assert_eq!(row[5], format!("{}", rows[0].point.precision));
    assert_eq!(row[6], format!("{}", rows[0].point.recall));
    assert_eq!(row[7], format!("{}", rows[0].chance));
}

#[test]
fn sweep_with_empty_grid_writes_header_only() {
    let dir = tmp();
    let out = dir.path().join("empty.csv");
    commands::run_sweep(&SweepParams {
        param: SweepParam::MinParent,
        values: vec![],
        datasets: vec![DatasetKind::Linear],
        n: 100,
        seed: 0,
        noise_dims: 0,
        noise_var: 70.0,
        rescale: false,
        opts: default_opts(0, 2, 30),
        ks: vec![10],
        methods: vec![Method::Proximity],
        out: out.clone(),
    })
    .unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), format!("{}\n", io::SWEEP_HEADER));
}

#[test]
fn sweep_records_cell_failures_and_continues() {
    let dir = tmp();
    let out = dir.path().join("sweep.csv");
    commands::run_sweep(&SweepParams {
        param: SweepParam::MinParent,
        values: vec!["bogus".into(), "30".into()],
        datasets: vec![DatasetKind::Linear],
        n: 100,
        seed: 5,
        noise_dims: 0,
        noise_var: 70.0,
        rescale: false,
        opts: default_opts(0, 3, 30),
        ks: vec![10],
        methods: vec![Method::Proximity],
        out: out.clone(),
    })
    .unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains(",error,"), "failed cell recorded: {}", lines[1]);
    assert!(lines[2].contains(",proximity,"), "good cell still ran: {}", lines[2]);
}

#[test]
fn csv_dataset_with_labels_supports_fit_and_eval() {
    // External ingestion: a label column provides the discrete oracle.
    let dir = tmp();
    let path = dir.path().join("ext.csv");
    let mut text = String::from("x1,x2,label\n");
    let mut rng_state = 12345u64;
    let mut next = move || {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (rng_state >> 33) as f64 / (1u64 << 31) as f64
    };
    for i in 0..120 {
        let c = if i < 60 { 0.0 } else { 8.0 };
        text.push_str(&format!("{},{},{}\n", c + next(), c + next(), i / 60));
    }
    std::fs::write(&path, text).unwrap();
    let out = dir.path().join("ext.prox.csv");
    commands::run_fit(&FitParams {
        input: path.clone(),
        opts: default_opts(1, 10, 30),
        out: out.clone(),
        forest_out: None,
        proximity_format: ProximityFormat::Dense,
    })
    .unwrap();
    let rows = commands::eval_rows(&EvalParams {
        data: Some(path),
        proximity: Some(out),
        external: None,
        oracle: None,
        ks: vec![20],
        methods: vec![Method::Proximity],
        out: dir.path().join("pr.csv"),
    })
    .unwrap();
    // Two well-separated blobs: proximity precision should be high.
    assert!(rows[0].point.precision > 0.8, "precision {}", rows[0].point.precision);
}

#[test]
fn binary_accepts_alternate_forest_flags() {
    let dir = tmp();
    let data = dir.path().join("d.csv");
    let status = bin()
        .args(["generate", "--dataset", "gmm", "--n", "120", "--seed", "2", "--out"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());
    let out = dir.path().join("p.csv");
    let status = bin()
        .args([
            "fit", "--criterion", "twomeans", "--trees", "6", "--minparent", "30", "--mtry", "2",
            "--subsample", "100", "--lambda", "0.5", "--proximity-mode", "inbag",
            "--proximity-format", "triplet", "--seed", "4", "--in",
        ])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let prox = io::read_proximity(&out).unwrap();
    assert_eq!(prox.n(), 120);
    let forest = geoforest_cli::forest_file::read_forest(&dir.path().join("p.forest")).unwrap();
    assert_eq!(forest.config.criterion, SplitCriterion::TwoMeans);
    assert_eq!(forest.config.proximity_mode, ProximityMode::InBagOnly);
    assert_eq!(forest.config.subsample, SubsampleSize::Count(100));
}

#[test]
fn binary_exit_codes() {
    let dir = tmp();
    // Missing oracle: invalid argument (2).
    let status = bin()
        .args(["eval", "--out"])
        .arg(dir.path().join("pr.csv"))
        .args(["--method", "proximity"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // Unwritable path: I/O (3).
    let status = bin()
        .args(["generate", "--dataset", "linear", "--n", "50", "--out", "/nonexistent/x.csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    // Corrupt forest file: data error (4) via eval of a malformed proximity.
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "s0,s1\n0.5\n").unwrap();
    let data = dir.path().join("lin.csv");
    commands::run_generate(&GenerateParams {
        dataset: DatasetKind::Linear,
        n: 50,
        seed: 0,
        noise_dims: 0,
        noise_var: 70.0,
        rescale: false,
        out: data.clone(),
    })
    .unwrap();
    let status = bin()
        .args(["eval", "--method", "proximity"])
        .arg("--data")
        .arg(&data)
        .arg("--in")
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("pr.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

/// Paths used by the determinism checks.
fn run_twice(dir: &Path, args: &[&str], outputs: &[&str]) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut pairs = Vec::new();
    for round in 0..2 {
        let round_dir = dir.join(format!("round{round}"));
        std::fs::create_dir_all(&round_dir).unwrap();
        let args: Vec<String> =
            args.iter().map(|a| a.replace("{dir}", round_dir.to_str().unwrap())).collect();
        let status = bin().args(&args).status().unwrap();
        assert!(status.success(), "command failed: {args:?}");
    }
    for out in outputs {
        let a = std::fs::read(dir.join("round0").join(out)).unwrap();
        let b = std::fs::read(dir.join("round1").join(out)).unwrap();
        pairs.push((a, b));
    }
    pairs
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tmp();
    for (a, b) in run_twice(
        dir.path(),
        &[
            "generate", "--dataset", "gmm", "--n", "200", "--seed", "9", "--noise-dims", "5",
            "--out", "{dir}/d.csv",
        ],
        &["d.csv", "d.oracle.json"],
    ) {
        assert_eq!(a, b);
    }
    let mut joined = PathBuf::from(dir.path());
    joined.push("round0/d.csv");
    assert!(joined.exists());
}
