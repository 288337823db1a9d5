//! Telemetry ingestion, deterministic train/test splitting, and per-column
//! statistics.
//!
//! A [`Dataset`] is a dense numeric feature matrix plus an aligned target
//! vector of power readings in watts. CSV ingestion drops configured
//! non-numeric columns (timestamps, platform labels), pulls one column out
//! as the target, and discards any row whose remaining cells do not parse
//! to finite numbers, reporting how many were discarded.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::rng;
use crate::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl Matrix {
    pub fn from_flat(data: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { data, n_rows, n_cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { data, n_rows, n_cols })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols.max(1))
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            data,
            n_rows: indices.len(),
            n_cols: self.n_cols,
        }
    }
}

/// A named feature matrix with an aligned target vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    features: Matrix,
    target: Vec<f64>,
    source_tag: String,
}

impl Dataset {
    /// Builds a dataset, checking shape, finiteness, and name uniqueness.
    pub fn new(
        feature_names: Vec<String>,
        features: Matrix,
        target: Vec<f64>,
        source_tag: impl Into<String>,
    ) -> Result<Self> {
        if feature_names.len() != features.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: features.n_cols(),
                actual: feature_names.len(),
            });
        }
        if target.len() != features.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: features.n_rows(),
                actual: target.len(),
            });
        }
        validate_feature_names(&feature_names)?;
        if features.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature matrix contains a non-finite value"));
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("target vector contains a non-finite value"));
        }
        Ok(Dataset {
            feature_names,
            features,
            target,
            source_tag: source_tag.into(),
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn set_source_tag(&mut self, tag: impl Into<String>) {
        self.source_tag = tag.into();
    }

    pub fn n_rows(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(indices),
            target: indices.iter().map(|&i| self.target[i]).collect(),
            source_tag: self.source_tag.clone(),
        }
    }
}

fn validate_feature_names(names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for name in names {
        if name.is_empty() {
            return Err(Error::invalid("feature name is empty"));
        }
        if name.contains(',') || name.contains('\n') || name.contains('\t') {
            return Err(Error::invalid(format!(
                "feature name {name:?} contains a separator character"
            )));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::invalid(format!("duplicate feature name {name:?}")));
        }
    }
    Ok(())
}

/// How to cut a dataset into train and test partitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    /// Fraction of rows assigned to the train side, strictly inside (0, 1).
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 42,
        }
    }
}

/// Loads a telemetry CSV.
///
/// `target_column` names the column used as the regression target;
/// `drop_columns` are removed before parsing (typically timestamps and
/// other non-numeric context columns). Any remaining row with a cell that
/// does not parse to a finite number is discarded; the count of discarded
/// rows is returned alongside the dataset. The dataset's source tag is the
/// file stem.
pub fn load_dataset(
    path: impl AsRef<Path>,
    target_column: &str,
    drop_columns: &[String],
) -> Result<(Dataset, usize)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| {
            Error::invalid(format!(
                "target column {target_column:?} not found in {}",
                path.display()
            ))
        })?;

    for drop in drop_columns {
        if !headers.iter().any(|h| h == drop) {
            return Err(Error::invalid(format!(
                "drop column {drop:?} not found in {}",
                path.display()
            )));
        }
        if drop == target_column {
            return Err(Error::invalid(format!(
                "target column {target_column:?} is also listed as a drop column"
            )));
        }
    }

    let keep: Vec<usize> = (0..headers.len())
        .filter(|&i| i != target_idx && !drop_columns.iter().any(|d| d == &headers[i]))
        .collect();
    if keep.is_empty() {
        return Err(Error::invalid("no feature columns remain after drops"));
    }
    let feature_names: Vec<String> = keep.iter().map(|&i| headers[i].clone()).collect();
    validate_feature_names(&feature_names)?;

    let mut rows: Vec<f64> = Vec::new();
    let mut target: Vec<f64> = Vec::new();
    let mut dropped = 0usize;
    let mut buf: Vec<f64> = Vec::with_capacity(keep.len());

    for record in reader.records() {
        let record = record?;
        buf.clear();
        let mut ok = true;
        for &i in &keep {
            match record.get(i).map(str::trim).and_then(parse_finite) {
                Some(v) => buf.push(v),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let y = record.get(target_idx).map(str::trim).and_then(parse_finite);
        match (ok, y) {
            (true, Some(y)) => {
                rows.extend_from_slice(&buf);
                target.push(y);
            }
            _ => dropped += 1,
        }
    }

    if target.is_empty() {
        return Err(Error::invalid(format!(
            "no usable rows in {} (all {} rows dropped)",
            path.display(),
            dropped
        )));
    }

    let n_rows = target.len();
    let features = Matrix::from_flat(rows, n_rows, keep.len())?;
    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let dataset = Dataset::new(feature_names, features, target, tag)?;
    Ok((dataset, dropped))
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Splits the rows into disjoint train and test partitions.
///
/// Indices are shuffled with a ChaCha8 generator seeded from
/// `config.seed`; the first `round(train_fraction * n)` shuffled rows form
/// the train side (rounding half away from zero). Errors if either side
/// would be empty.
pub fn split(dataset: &Dataset, config: &SplitConfig) -> Result<(Dataset, Dataset)> {
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train_fraction must be in (0, 1), got {}",
            config.train_fraction
        )));
    }
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = rng::rng_from(config.seed);
    indices.shuffle(&mut rng);

    let n_train = (config.train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::invalid(format!(
            "split of {n} rows at fraction {} leaves one side empty",
            config.train_fraction
        )));
    }
    let train = dataset.select_rows(&indices[..n_train]);
    let test = dataset.select_rows(&indices[n_train..]);
    Ok((train, test))
}

/// Per-column summary statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureStat {
    pub mean: f64,
    /// Population standard deviation (divides by `n`).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl FeatureStat {
    /// A column is constant exactly when its min equals its max.
    pub fn is_constant(&self) -> bool {
        self.min == self.max
    }
}

/// Statistics for every feature column, aligned with the dataset's
/// feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    stats: Vec<FeatureStat>,
}

impl FeatureStats {
    pub fn from_vec(stats: Vec<FeatureStat>) -> Self {
        FeatureStats { stats }
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn get(&self, j: usize) -> &FeatureStat {
        &self.stats[j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureStat> {
        self.stats.iter()
    }
}

/// Computes mean, population standard deviation, min, and max per column.
pub fn compute_stats(dataset: &Dataset) -> Result<FeatureStats> {
    let n = dataset.n_rows();
    if n == 0 {
        return Err(Error::invalid("cannot compute stats of an empty dataset"));
    }
    let d = dataset.n_features();
    let mut stats = Vec::with_capacity(d);
    for j in 0..d {
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..n {
            let v = dataset.features().get(i, j);
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        let mean = sum / n as f64;
        let std = if min == max {
            0.0
        } else {
            let mut ss = 0.0;
            for i in 0..n {
                let diff = dataset.features().get(i, j) - mean;
                ss += diff * diff;
            }
            (ss / n as f64).sqrt()
        };
        stats.push(FeatureStat { mean, std, min, max });
    }
    Ok(FeatureStats::from_vec(stats))
}
