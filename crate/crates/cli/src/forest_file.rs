//! Versioned plain-text forest serialization.
//!
//! ```text
//! geoforest-forest v1
//! points <N>
//! features <p>
//! trees <T>
//! subsample count <m> | fraction <f>
//! mtry <d>
//! lambda <f>
//! minparent <m>
//! criterion twomeans|fastbic|embic
//! seed <u64>
//! proximity allpoints|inbag
//! em <max_iter> <tol> <restarts>
//! tree <idx> nodes <count>
//! node <i> internal <threshold> <left> <right> <nnz> <feat:+|->...
//! node <i> leaf <count> <id>...
//! endtree
//! endforest
//! ```
//!
//! Floats use shortest round-trip formatting, so load(save(f)) == f bit for
//! bit.

use std::fs;
use std::path::Path;

use geoforest_core::{
    EmConfig, Forest, ForestConfig, ProximityMode, SplitCriterion, SubsampleSize, Tree, TreeNode,
};

use crate::error::CliError;

pub const FORMAT_TAG: &str = "geoforest-forest v1";

pub fn write_forest(path: &Path, forest: &Forest) -> Result<(), CliError> {
    let mut out = String::new();
    let cfg = &forest.config;
    out.push_str(FORMAT_TAG);
    out.push('\n');
    out.push_str(&format!("points {}\n", forest.n_points));
    out.push_str(&format!("features {}\n", forest.n_features));
    out.push_str(&format!("trees {}\n", cfg.num_trees));
    match cfg.subsample {
        SubsampleSize::Count(m) => out.push_str(&format!("subsample count {m}\n")),
        SubsampleSize::Fraction(f) => out.push_str(&format!("subsample fraction {f}\n")),
    }
    out.push_str(&format!("mtry {}\n", cfg.mtry));
    out.push_str(&format!("lambda {}\n", cfg.lambda));
    out.push_str(&format!("minparent {}\n", cfg.min_parent));
    out.push_str(&format!("criterion {}\n", cfg.criterion.name()));
    out.push_str(&format!("seed {}\n", cfg.seed));
    out.push_str(&format!("proximity {}\n", cfg.proximity_mode.name()));
    out.push_str(&format!("em {} {} {}\n", cfg.em.max_iter, cfg.em.tol, cfg.em.restarts));
    for (idx, tree) in forest.trees.iter().enumerate() {
        out.push_str(&format!("tree {idx} nodes {}\n", tree.nodes.len()));
        for (i, node) in tree.nodes.iter().enumerate() {
            match node {
                TreeNode::Internal { weights, threshold, left, right } => {
                    out.push_str(&format!(
                        "node {i} internal {threshold} {left} {right} {}",
                        weights.len()
                    ));
                    for &(feat, sign) in weights {
                        out.push_str(&format!(" {feat}:{}", if sign >= 0 { '+' } else { '-' }));
                    }
                    out.push('\n');
                }
                TreeNode::Leaf { members } => {
                    out.push_str(&format!("node {i} leaf {}", members.len()));
                    for id in members {
                        out.push_str(&format!(" {id}"));
                    }
                    out.push('\n');
                }
            }
        }
        out.push_str("endtree\n");
    }
    out.push_str("endforest\n");
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    use std::io::Write as _;
    f.write_all(out.as_bytes()).map_err(|e| CliError::io(path, e))?;
    Ok(())
}

struct LineReader<'a> {
    path: &'a Path,
    lines: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> LineReader<'a> {
    fn next(&mut self) -> Result<&'a str, CliError> {
        self.lineno += 1;
        self.lines
            .next()
            .ok_or_else(|| CliError::data(self.path, format!("truncated at line {}", self.lineno)))
    }

    fn bad(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::data(self.path, format!("line {}: {msg}", self.lineno))
    }

    fn keyword<'b>(&self, line: &'b str, key: &str) -> Result<&'b str, CliError> {
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' ').or(Some(rest).filter(|r| r.is_empty())))
            .ok_or_else(|| self.bad(format!("expected `{key} ...`, got `{line}`")))
    }

    /// Read the next line and strip the expected keyword.
    fn kv(&mut self, key: &str) -> Result<&'a str, CliError> {
        let line = self.next()?;
        self.keyword(line, key)
    }
}

fn parse<T: std::str::FromStr>(field: &str, r: &LineReader<'_>) -> Result<T, CliError> {
    field.parse::<T>().map_err(|_| r.bad(format!("bad value `{field}`")))
}

pub fn read_forest(path: &Path) -> Result<Forest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut r = LineReader { path, lines: text.lines(), lineno: 0 };

    let tag = r.next()?;
    if tag != FORMAT_TAG {
        return Err(r.bad(format!("not a forest file (tag `{tag}`)")));
    }
    let n_points: usize = parse(r.kv("points")?, &r)?;
    let n_features: usize = parse(r.kv("features")?, &r)?;
    let num_trees: usize = parse(r.kv("trees")?, &r)?;
    let sub_line = r.kv("subsample")?;
    let subsample = match sub_line.split_once(' ') {
        Some(("count", v)) => SubsampleSize::Count(parse(v, &r)?),
        Some(("fraction", v)) => SubsampleSize::Fraction(parse(v, &r)?),
        _ => return Err(r.bad(format!("bad subsample `{sub_line}`"))),
    };
    let mtry: usize = parse(r.kv("mtry")?, &r)?;
    let lambda: f64 = parse(r.kv("lambda")?, &r)?;
    let min_parent: usize = parse(r.kv("minparent")?, &r)?;
    let crit_name = r.kv("criterion")?;
    let criterion = SplitCriterion::parse(crit_name)
        .ok_or_else(|| r.bad(format!("unknown criterion `{crit_name}`")))?;
    let seed: u64 = parse(r.kv("seed")?, &r)?;
    let prox_name = r.kv("proximity")?;
    let proximity_mode = ProximityMode::parse(prox_name)
        .ok_or_else(|| r.bad(format!("unknown proximity mode `{prox_name}`")))?;
    let em_line = r.kv("em")?;
    let em_fields: Vec<&str> = em_line.split(' ').collect();
    if em_fields.len() != 3 {
        return Err(r.bad("em line needs three fields"));
    }
    let em = EmConfig {
        max_iter: parse(em_fields[0], &r)?,
        tol: parse(em_fields[1], &r)?,
        restarts: parse(em_fields[2], &r)?,
    };

    let config = ForestConfig {
        num_trees,
        subsample,
        mtry,
        lambda,
        min_parent,
        criterion,
        seed,
        proximity_mode,
        em,
    };

    let mut trees = Vec::with_capacity(num_trees);
    for expect_idx in 0..num_trees {
        let tree_line = r.kv("tree")?;
        let (idx_s, nodes_s) = tree_line
            .split_once(" nodes ")
            .ok_or_else(|| r.bad(format!("bad tree line `{tree_line}`")))?;
        let idx: usize = parse(idx_s, &r)?;
        if idx != expect_idx {
            return Err(r.bad(format!("tree {idx} out of order, expected {expect_idx}")));
        }
        let n_nodes: usize = parse(nodes_s, &r)?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for expect_node in 0..n_nodes {
            let line = r.kv("node")?;
            let mut fields = line.split(' ');
            let i: usize = parse(fields.next().ok_or_else(|| r.bad("short node line"))?, &r)?;
            if i != expect_node {
                return Err(r.bad(format!("node {i} out of order, expected {expect_node}")));
            }
            match fields.next() {
                Some("internal") => {
                    let threshold: f64 =
                        parse(fields.next().ok_or_else(|| r.bad("missing threshold"))?, &r)?;
                    let left: u32 =
                        parse(fields.next().ok_or_else(|| r.bad("missing left"))?, &r)?;
                    let right: u32 =
                        parse(fields.next().ok_or_else(|| r.bad("missing right"))?, &r)?;
                    let nnz: usize =
                        parse(fields.next().ok_or_else(|| r.bad("missing nnz"))?, &r)?;
                    let mut weights = Vec::with_capacity(nnz);
                    for _ in 0..nnz {
                        let w = fields.next().ok_or_else(|| r.bad("missing weight"))?;
                        let (feat, sign) = w
                            .split_once(':')
                            .ok_or_else(|| r.bad(format!("bad weight `{w}`")))?;
                        let feat: u32 = parse(feat, &r)?;
                        let sign = match sign {
                            "+" => 1i8,
                            "-" => -1i8,
                            _ => return Err(r.bad(format!("bad sign `{sign}`"))),
                        };
                        weights.push((feat, sign));
                    }
                    if left as usize >= n_nodes || right as usize >= n_nodes {
                        return Err(r.bad("child index out of range"));
                    }
                    nodes.push(TreeNode::Internal { weights, threshold, left, right });
                }
                Some("leaf") => {
                    let count: usize =
                        parse(fields.next().ok_or_else(|| r.bad("missing count"))?, &r)?;
                    let mut members = Vec::with_capacity(count);
                    for _ in 0..count {
                        let id =
                            fields.next().ok_or_else(|| r.bad("missing leaf member"))?;
                        members.push(parse::<u32>(id, &r)?);
                    }
                    nodes.push(TreeNode::Leaf { members });
                }
                other => return Err(r.bad(format!("bad node kind {other:?}"))),
            }
        }
        let end = r.next()?;
        if end != "endtree" {
            return Err(r.bad(format!("expected endtree, got `{end}`")));
        }
        trees.push(Tree { nodes, n_features });
    }
    let end = r.next()?;
    if end != "endforest" {
        return Err(r.bad(format!("expected endforest, got `{end}`")));
    }
    Ok(Forest { config, n_points, n_features, trees })
}
