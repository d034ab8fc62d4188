//! On-disk dataset format, loaders, split generation and feature
//! normalization.
//!
//! A dataset directory holds:
//!
//! * `meta.json`    — `{"n": int, "num_features": int, "num_classes": int, "name": string}`
//! * `graph.edges`  — one `u v` per line, ASCII decimal, `u < v`, sorted
//! * `features.csv` — n comma-separated rows, line i = node i, no header
//! * `labels.txt`   — n lines, one integer per line
//! * `splits.json`  — optional `{"train": [...], "val": [...], "test": [...], "seed": int}`

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{build_graph, Graph};
use crate::mat::Mat;
use crate::rng;
use crate::{Error, Result};

/// Node features, labels and the graph they live on.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: Graph,
    pub features: Mat,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub name: String,
    /// Optional human-readable class labels; not persisted.
    pub class_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.graph.node_count()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.features.rows() != n {
            return Err(Error::Data(format!(
                "feature rows {} do not match node count {n}",
                self.features.rows()
            )));
        }
        if self.labels.len() != n {
            return Err(Error::Data(format!(
                "label count {} does not match node count {n}",
                self.labels.len()
            )));
        }
        if self.num_classes < 2 {
            return Err(Error::Data("a dataset needs at least 2 classes".into()));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.num_classes) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {} classes",
                self.num_classes
            )));
        }
        Ok(())
    }
}

/// Split ratio presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitRatio {
    /// 10% train / 30% val / 60% test.
    TenThirtySixty,
    /// 60% train / 20% val / 20% test.
    SixtyTwentyTwenty,
}

impl SplitRatio {
    pub fn parse(s: &str) -> Result<SplitRatio> {
        match s {
            "10/30/60" => Ok(SplitRatio::TenThirtySixty),
            "60/20/20" => Ok(SplitRatio::SixtyTwentyTwenty),
            other => Err(Error::Config(format!(
                "unknown split tag '{other}' (expected 10/30/60 or 60/20/20)"
            ))),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SplitRatio::TenThirtySixty => "10/30/60",
            SplitRatio::SixtyTwentyTwenty => "60/20/20",
        }
    }

    /// (train, val) percentages; test takes the remainder.
    fn percents(&self) -> (usize, usize) {
        match self {
            SplitRatio::TenThirtySixty => (10, 30),
            SplitRatio::SixtyTwentyTwenty => (60, 20),
        }
    }
}

/// Disjoint train/val/test node index lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    /// Ratio preset the split was generated from; `None` when read back from
    /// a splits.json (the file format does not carry it).
    #[serde(skip)]
    pub ratio: Option<SplitRatio>,
}

impl SplitSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (name, list) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in list.iter() {
                if i >= n {
                    return Err(Error::Config(format!(
                        "{name} split index {i} out of range for n = {n}"
                    )));
                }
                if seen[i] {
                    return Err(Error::Config(format!(
                        "splits overlap at node {i} (seen again in {name})"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

/// Partition a seeded permutation of `0..n` by the ratio preset. The
/// rounding remainder goes to the test split.
pub fn make_splits(n: usize, ratio: SplitRatio, seed: u64) -> Result<SplitSpec> {
    if n < 10 {
        return Err(Error::Config(format!("make_splits needs n >= 10, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut perm, rng::keyed(seed, 0x59_17));
    let (tr, va) = ratio.percents();
    let n_train = n * tr / 100;
    let n_val = n * va / 100;
    Ok(SplitSpec {
        train: perm[..n_train].to_vec(),
        val: perm[n_train..n_train + n_val].to_vec(),
        test: perm[n_train + n_val..].to_vec(),
        seed,
        ratio: Some(ratio),
    })
}

#[derive(Serialize, Deserialize)]
struct MetaFile {
    n: usize,
    num_features: usize,
    num_classes: usize,
    name: String,
}

fn data_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("{}: {msg}", path.display()))
}

/// Load a dataset directory, cross-checking every file against meta.json.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let meta_path = dir.join("meta.json");
    let meta_text =
        fs::read_to_string(&meta_path).map_err(|e| data_err(&meta_path, e))?;
    let meta: MetaFile =
        serde_json::from_str(&meta_text).map_err(|e| data_err(&meta_path, e))?;

    let edges_path = dir.join("graph.edges");
    let edges_text = fs::read_to_string(&edges_path).map_err(|e| data_err(&edges_path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in edges_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or_else(|| data_err(&edges_path, format!("line {}: missing field", lineno + 1)))?
                .parse()
                .map_err(|_| {
                    data_err(&edges_path, format!("line {}: unparseable node id", lineno + 1))
                })
        };
        let u = parse(parts.next())?;
        let v = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(data_err(
                &edges_path,
                format!("line {}: expected exactly two fields", lineno + 1),
            ));
        }
        edges.push((u, v));
    }
    let graph = build_graph(&edges, meta.n).map_err(|e| data_err(&edges_path, e))?;

    let feat_path = dir.join("features.csv");
    let feat_text = fs::read_to_string(&feat_path).map_err(|e| data_err(&feat_path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(meta.n);
    for (lineno, line) in feat_text.lines().enumerate() {
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    data_err(
                        &feat_path,
                        format!("line {}: unparseable value '{tok}'", lineno + 1),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != meta.num_features {
            return Err(data_err(
                &feat_path,
                format!(
                    "line {}: {} values but meta declares {} features",
                    lineno + 1,
                    row.len(),
                    meta.num_features
                ),
            ));
        }
        rows.push(row);
    }
    if rows.len() != meta.n {
        return Err(data_err(
            &feat_path,
            format!("{} rows but meta declares n = {}", rows.len(), meta.n),
        ));
    }
    let features = Mat::from_rows(&rows)?;

    let labels_path = dir.join("labels.txt");
    let labels_text = fs::read_to_string(&labels_path).map_err(|e| data_err(&labels_path, e))?;
    let mut labels = Vec::with_capacity(meta.n);
    for (lineno, line) in labels_text.lines().enumerate() {
        let label: usize = line.trim().parse().map_err(|_| {
            data_err(&labels_path, format!("line {}: unparseable label", lineno + 1))
        })?;
        if label >= meta.num_classes {
            return Err(data_err(
                &labels_path,
                format!(
                    "line {}: label {label} out of range for {} classes",
                    lineno + 1,
                    meta.num_classes
                ),
            ));
        }
        labels.push(label);
    }
    if labels.len() != meta.n {
        return Err(data_err(
            &labels_path,
            format!("{} labels but meta declares n = {}", labels.len(), meta.n),
        ));
    }

    let ds = Dataset {
        graph,
        features,
        labels,
        num_classes: meta.num_classes,
        name: meta.name,
        class_names: None,
    };
    ds.validate()?;
    Ok(ds)
}

/// Write a dataset directory with deterministic content ordering.
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir)?;

    let meta = MetaFile {
        n: ds.n(),
        num_features: ds.num_features(),
        num_classes: ds.num_classes,
        name: ds.name.clone(),
    };
    let mut meta_text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    meta_text.push('\n');
    fs::write(dir.join("meta.json"), meta_text)?;

    let mut edges_out = String::new();
    for (u, v) in ds.graph.edges() {
        edges_out.push_str(&format!("{u} {v}\n"));
    }
    fs::write(dir.join("graph.edges"), edges_out)?;

    let mut feat_out = String::new();
    for i in 0..ds.n() {
        let row: Vec<String> = ds.features.row(i).iter().map(|v| format!("{v}")).collect();
        feat_out.push_str(&row.join(","));
        feat_out.push('\n');
    }
    fs::write(dir.join("features.csv"), feat_out)?;

    let mut labels_out = String::new();
    for &l in &ds.labels {
        labels_out.push_str(&format!("{l}\n"));
    }
    fs::write(dir.join("labels.txt"), labels_out)?;
    Ok(())
}

/// Read the optional splits.json, if present.
pub fn load_splits(dir: &Path) -> Result<Option<SplitSpec>> {
    let path = dir.join("splits.json");
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| data_err(&path, e))?;
    let split: SplitSpec = serde_json::from_str(&text).map_err(|e| data_err(&path, e))?;
    Ok(Some(split))
}

pub fn save_splits(split: &SplitSpec, dir: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(split).expect("split serializes");
    text.push('\n');
    fs::write(dir.join("splits.json"), text)?;
    Ok(())
}

/// Divide every nonzero row by its L1 norm; zero rows pass through.
pub fn row_normalize_features(x: &Mat) -> Mat {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let norm: f64 = out.row(i).iter().map(|v| v.abs()).sum();
        if norm > 0.0 {
            for v in out.row_mut(i) {
                *v /= norm;
            }
        }
    }
    out
}

/// Parse a point-cloud file of `x y z label` lines.
pub fn load_point_cloud(path: &Path) -> Result<(Mat, Vec<usize>)> {
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(data_err(
                path,
                format!(
                    "line {}: expected 'x y z label', got {} fields",
                    lineno + 1,
                    fields.len()
                ),
            ));
        }
        let mut coords = [0.0; 3];
        for (k, f) in fields[..3].iter().enumerate() {
            coords[k] = f.parse().map_err(|_| {
                data_err(path, format!("line {}: unparseable coordinate '{f}'", lineno + 1))
            })?;
        }
        let label: usize = fields[3].parse().map_err(|_| {
            data_err(
                path,
                format!(
                    "line {}: label '{}' is not a non-negative integer",
                    lineno + 1,
                    fields[3]
                ),
            )
        })?;
        points.push(coords.to_vec());
        labels.push(label);
    }
    Ok((Mat::from_rows(&points)?, labels))
}

/// Write a point cloud in the same `x y z label` format.
pub fn save_point_cloud(points: &Mat, labels: &[usize], path: &Path) -> Result<()> {
    if points.cols() != 3 || points.rows() != labels.len() {
        return Err(Error::Config(
            "point cloud wants n x 3 points and n labels".into(),
        ));
    }
    let mut file = fs::File::create(path)?;
    for i in 0..points.rows() {
        let r = points.row(i);
        writeln!(file, "{} {} {} {}", r[0], r[1], r[2], labels[i])?;
    }
    Ok(())
}
