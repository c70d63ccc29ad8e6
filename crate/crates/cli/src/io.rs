//! CSV and sidecar file formats.
//!
//! Dialect: comma separated, `.` decimal point, mandatory header row, no
//! quoting (all payloads are numeric or bare identifiers). Floats are
//! written with Rust's shortest round-trip formatting, so files parse back
//! to identical bits.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use geoforest_core::{DataMatrix, DistanceMatrix, GeodesicOracle, PrPoint, ProximityMatrix};

use crate::error::CliError;

/// Sidecar path of a dataset: `data.csv` -> `data.oracle.json`.
pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("oracle.json")
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// dataset CSV: x1,...,xp[,t | ,u,v | ,label]

/// Write the observed matrix plus the oracle's latent columns.
pub fn write_dataset(path: &Path, x: &DataMatrix, oracle: &GeodesicOracle) -> Result<(), CliError> {
    if oracle.len() != x.n_points() {
        return Err(CliError::Data(format!(
            "oracle covers {} points, data has {}",
            oracle.len(),
            x.n_points()
        )));
    }
    let p = x.n_features();
    let mut out = String::new();
    for j in 0..p {
        if j > 0 {
            out.push(',');
        }
        out.push_str(&format!("x{}", j + 1));
    }
    match oracle {
        GeodesicOracle::Line { .. } | GeodesicOracle::Helix { .. } => out.push_str(",t"),
        GeodesicOracle::Sphere { .. } => out.push_str(",u,v"),
        GeodesicOracle::Components { .. } => out.push_str(",label"),
        GeodesicOracle::LatentL2 { dim, .. } => {
            for d in 0..*dim {
                out.push_str(&format!(",t{}", d + 1));
            }
        }
    }
    out.push('\n');
    for i in 0..x.n_points() {
        let mut first = true;
        for &v in x.row(i) {
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        match oracle {
            GeodesicOracle::Line { t } | GeodesicOracle::Helix { t } => {
                out.push_str(&format!(",{}", t[i]));
            }
            GeodesicOracle::Sphere { uv, .. } => {
                out.push_str(&format!(",{},{}", uv[i][0], uv[i][1]));
            }
            GeodesicOracle::Components { labels } => {
                out.push_str(&format!(",{}", labels[i]));
            }
            GeodesicOracle::LatentL2 { dim, params } => {
                for d in 0..*dim {
                    out.push_str(&format!(",{}", params[i * dim + d]));
                }
            }
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

/// A parsed dataset: the feature matrix and, when latent columns were
/// present, an oracle reconstructed from them. Latent `t`/`u,v` columns
/// fall back to Euclidean distance in latent space; exact arc-length rules
/// come from the sidecar (see `read_oracle`).
pub struct LoadedDataset {
    pub x: DataMatrix,
    pub latent_oracle: Option<GeodesicOracle>,
}

pub fn read_dataset(path: &Path) -> Result<LoadedDataset, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::data(path, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();

    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Feature,
        Latent,
        Label,
    }
    let mut kinds = Vec::with_capacity(cols.len());
    let mut n_features = 0usize;
    let mut n_latent = 0usize;
    let mut has_label = false;
    for c in &cols {
        let is_feature = c.len() > 1
            && c.starts_with('x')
            && c[1..].chars().all(|ch| ch.is_ascii_digit());
        if is_feature {
            kinds.push(Kind::Feature);
            n_features += 1;
        } else if *c == "label" {
            kinds.push(Kind::Label);
            has_label = true;
        } else if *c == "t" || *c == "u" || *c == "v" || {
            c.len() > 1 && c.starts_with('t') && c[1..].chars().all(|ch| ch.is_ascii_digit())
        } {
            kinds.push(Kind::Latent);
            n_latent += 1;
        } else {
            return Err(CliError::data(path, format!("unrecognized column `{c}`")));
        }
    }
    if n_features == 0 {
        return Err(CliError::data(path, "no feature columns (x1..xp)"));
    }
    if has_label && n_latent > 0 {
        return Err(CliError::data(path, "both label and latent-parameter columns present"));
    }

    let mut values = Vec::new();
    let mut latent = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(CliError::data(
                path,
                format!("line {}: expected {} fields, got {}", lineno + 2, cols.len(), fields.len()),
            ));
        }
        for (field, kind) in fields.iter().zip(&kinds) {
            match kind {
                Kind::Feature => values.push(parse_f64(path, field)?),
                Kind::Latent => latent.push(parse_f64(path, field)?),
                Kind::Label => labels.push(
                    field
                        .parse::<u32>()
                        .map_err(|_| CliError::data(path, format!("bad label `{field}`")))?,
                ),
            }
        }
        n += 1;
    }
    let x = DataMatrix::new(n, n_features, values).map_err(|e| CliError::data(path, e))?;
    let latent_oracle = if has_label {
        Some(GeodesicOracle::Components { labels })
    } else if n_latent > 0 {
        Some(GeodesicOracle::LatentL2 { dim: n_latent, params: latent })
    } else {
        None
    };
    Ok(LoadedDataset { x, latent_oracle })
}

fn parse_f64(path: &Path, field: &str) -> Result<f64, CliError> {
    field
        .parse::<f64>()
        .map_err(|_| CliError::data(path, format!("bad number `{field}`")))
}

// ---------------------------------------------------------------------------
// oracle sidecar (JSON)

#[derive(Serialize, Deserialize)]
struct OracleFile {
    version: u32,
    rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<u32>>,
}

pub fn write_oracle(path: &Path, oracle: &GeodesicOracle) -> Result<(), CliError> {
    let file = match oracle {
        GeodesicOracle::Line { t } => OracleFile {
            version: 1,
            rule: "line".into(),
            radius: None,
            params: Some(t.iter().map(|&v| vec![v]).collect()),
            labels: None,
        },
        GeodesicOracle::Helix { t } => OracleFile {
            version: 1,
            rule: "helix".into(),
            radius: None,
            params: Some(t.iter().map(|&v| vec![v]).collect()),
            labels: None,
        },
        GeodesicOracle::Sphere { radius, uv } => OracleFile {
            version: 1,
            rule: "sphere".into(),
            radius: Some(*radius),
            params: Some(uv.iter().map(|p| p.to_vec()).collect()),
            labels: None,
        },
        GeodesicOracle::LatentL2 { dim, params } => OracleFile {
            version: 1,
            rule: "latent_l2".into(),
            radius: None,
            params: Some(params.chunks(*dim).map(<[f64]>::to_vec).collect()),
            labels: None,
        },
        GeodesicOracle::Components { labels } => OracleFile {
            version: 1,
            rule: "components".into(),
            radius: None,
            params: None,
            labels: Some(labels.clone()),
        },
    };
    let json = serde_json::to_string(&file)
        .map_err(|e| CliError::Data(format!("oracle serialization: {e}")))?;
    write_atomic(path, &format!("{json}\n"))
}

pub fn read_oracle(path: &Path) -> Result<GeodesicOracle, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: OracleFile =
        serde_json::from_str(&text).map_err(|e| CliError::data(path, format!("bad oracle file: {e}")))?;
    if file.version != 1 {
        return Err(CliError::data(path, format!("unsupported oracle version {}", file.version)));
    }
    let flat = |params: Option<Vec<Vec<f64>>>, dim: usize| -> Result<Vec<f64>, CliError> {
        let params = params.ok_or_else(|| CliError::data(path, "missing params"))?;
        let mut out = Vec::with_capacity(params.len() * dim);
        for row in &params {
            if row.len() != dim {
                return Err(CliError::data(path, "inconsistent parameter arity"));
            }
            out.extend_from_slice(row);
        }
        Ok(out)
    };
    match file.rule.as_str() {
        "line" => Ok(GeodesicOracle::Line { t: flat(file.params, 1)? }),
        "helix" => Ok(GeodesicOracle::Helix { t: flat(file.params, 1)? }),
        "sphere" => {
            let radius = file.radius.ok_or_else(|| CliError::data(path, "missing radius"))?;
            let flatuv = flat(file.params, 2)?;
            let uv = flatuv.chunks(2).map(|c| [c[0], c[1]]).collect();
            Ok(GeodesicOracle::Sphere { radius, uv })
        }
        "latent_l2" => {
            let params = file.params.ok_or_else(|| CliError::data(path, "missing params"))?;
            let dim = params.first().map_or(0, Vec::len).max(1);
            Ok(GeodesicOracle::LatentL2 { dim, params: flat(Some(params), dim)? })
        }
        "components" => Ok(GeodesicOracle::Components {
            labels: file.labels.ok_or_else(|| CliError::data(path, "missing labels"))?,
        }),
        other => Err(CliError::data(path, format!("unknown oracle rule `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// proximity CSV (dense or i,j,s triplets)

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProximityFormat {
    Dense,
    Triplet,
}

impl std::str::FromStr for ProximityFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dense" => Ok(ProximityFormat::Dense),
            "triplet" => Ok(ProximityFormat::Triplet),
            _ => Err(format!("unknown proximity format `{s}`")),
        }
    }
}

pub fn write_proximity(
    path: &Path,
    prox: &ProximityMatrix,
    format: ProximityFormat,
) -> Result<(), CliError> {
    let n = prox.n();
    let mut out = String::new();
    match format {
        ProximityFormat::Dense => {
            for j in 0..n {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("s{j}"));
            }
            out.push('\n');
            let mut row = Vec::new();
            for i in 0..n {
                prox.row_values(i, &mut row);
                let mut first = true;
                for v in &row {
                    if !first {
                        out.push(',');
                    }
                    out.push_str(&format!("{v}"));
                    first = false;
                }
                out.push('\n');
            }
        }
        ProximityFormat::Triplet => {
            out.push_str("i,j,s\n");
            for i in 0..n {
                out.push_str(&format!("{i},{i},{}\n", prox.value(i, i)));
                for j in (i + 1)..n {
                    let v = prox.value(i, j);
                    if v != 0.0 {
                        out.push_str(&format!("{i},{j},{v}\n"));
                    }
                }
            }
        }
    }
    write_atomic(path, &out)
}

pub fn read_proximity(path: &Path) -> Result<ProximityMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::data(path, "empty file"))?;
    if header == "i,j,s" {
        let mut triplets = Vec::new();
        let mut n = 0usize;
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let (i, j, s) = (
                it.next().ok_or_else(|| CliError::data(path, "short row"))?,
                it.next().ok_or_else(|| CliError::data(path, "short row"))?,
                it.next().ok_or_else(|| CliError::data(path, "short row"))?,
            );
            let i: usize =
                i.parse().map_err(|_| CliError::data(path, format!("bad index `{i}`")))?;
            let j: usize =
                j.parse().map_err(|_| CliError::data(path, format!("bad index `{j}`")))?;
            let s = parse_f64(path, s)?;
            if i == j {
                n = n.max(i + 1);
            }
            triplets.push((i, j, s));
        }
        if n == 0 {
            return Err(CliError::data(path, "triplet file has no diagonal rows"));
        }
        let mut dense = vec![0.0f64; n * n];
        for (i, j, s) in triplets {
            if i >= n || j >= n {
                return Err(CliError::data(path, "triplet index out of range"));
            }
            dense[i * n + j] = s;
            dense[j * n + i] = s;
        }
        return ProximityMatrix::from_dense(n, &dense).map_err(|e| CliError::data(path, e));
    }
    let n = header.split(',').count();
    let mut dense = Vec::with_capacity(n * n);
    for line in lines {
        if line.is_empty() {
            continue;
        }
        for field in line.split(',') {
            dense.push(parse_f64(path, field)?);
        }
    }
    if dense.len() != n * n {
        return Err(CliError::data(
            path,
            format!("dense proximity must be {n} x {n}, got {} values", dense.len()),
        ));
    }
    ProximityMatrix::from_dense(n, &dense).map_err(|e| CliError::data(path, e))
}

// ---------------------------------------------------------------------------
// dense distance matrix (external learner output)

pub fn read_distance_matrix(path: &Path) -> Result<DistanceMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::data(path, "empty file"))?;
    let n = header.split(',').count();
    let mut values = Vec::with_capacity(n * n);
    for line in lines {
        if line.is_empty() {
            continue;
        }
        for field in line.split(',') {
            values.push(parse_f64(path, field)?);
        }
    }
    DistanceMatrix::new(n, values).map_err(|e| CliError::data(path, e))
}

pub fn write_distance_matrix(path: &Path, d: &DistanceMatrix) -> Result<(), CliError> {
    let n = d.n();
    let mut out = String::new();
    for j in 0..n {
        if j > 0 {
            out.push(',');
        }
        out.push_str(&format!("d{j}"));
    }
    out.push('\n');
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", d.get(i, j)));
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

// ---------------------------------------------------------------------------
// precision/recall CSV

pub const PR_HEADER: &str = "method,k,precision,recall,chance";

#[derive(Debug, Clone)]
pub struct PrRow {
    pub method: String,
    pub point: PrPoint,
    pub chance: f64,
}

pub fn write_pr_rows(path: &Path, rows: &[PrRow]) -> Result<(), CliError> {
    let mut out = String::from(PR_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method, r.point.k, r.point.precision, r.point.recall, r.chance
        ));
    }
    write_atomic(path, &out)
}

// ---------------------------------------------------------------------------
// sweep CSV

pub const SWEEP_HEADER: &str = "dataset,param,value,method,k,precision,recall,chance,seconds";

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub dataset: String,
    pub param: String,
    pub value: String,
    pub method: String,
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub chance: f64,
    pub seconds: f64,
}

pub fn write_sweep_rows(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{:.3}\n",
            r.dataset, r.param, r.value, r.method, r.k, r.precision, r.recall, r.chance, r.seconds
        ));
    }
    write_atomic(path, &out)
}
