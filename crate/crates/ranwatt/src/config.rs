//! Run configuration: defaults, TOML file loading, and validation.
//!
//! A run is described by dataset paths plus hyper-parameter sections for
//! the three model kinds and the explanation engines. Every key has a
//! default, so a minimal config only names its datasets. A single global
//! seed fans out to per-module sub-seeds inside the pipeline.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ensemble::{BoostMode, BoostParams, ForestParams};
use crate::tree::{FeatureSubset, SplitMode, TreeParams};
use crate::{Error, Result};

/// Columns excluded from modeling by default: capture bookkeeping, not
/// radio telemetry.
pub const DEFAULT_DROP_COLUMNS: [&str; 3] = ["timestamp", "cpu_platform", "tx_mode"];

/// Full settings for one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Telemetry CSV files; artifact subdirectories are named by file stem.
    pub datasets: Vec<PathBuf>,
    pub target_column: String,
    pub drop_columns: Vec<String>,
    pub train_fraction: f64,
    /// Global seed; every module derives its own stream from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub forest: ForestSettings,
    pub gboost: BoostSettings,
    pub xgboost: BoostSettings,
    pub explain: ExplainSettings,
}

/// Random-forest section.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestSettings {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means `max(1, d/3)`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

/// Boosting section (first- or second-order depending on the model slot).
#[derive(Debug, Clone, PartialEq)]
pub struct BoostSettings {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub subsample: f64,
    /// L2 leaf penalty; only the second-order booster uses it.
    pub lambda: f64,
}

/// Explanation and reporting section.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainSettings {
    /// Training rows sampled as the Shapley background set.
    pub background_size: usize,
    pub lime_samples: usize,
    pub lime_top_k: usize,
    /// Permutation draws per instance on the sampled Shapley path.
    pub shap_draws: usize,
    /// Test rows sampled for global summaries and rankings.
    pub summary_instances: usize,
    /// Test-row index to highlight in instance explanations; `None`
    /// selects the row whose prediction is nearest the dataset's median
    /// power.
    pub instance_row: Option<usize>,
}

impl Default for ForestSettings {
    fn default() -> Self {
        ForestSettings {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

impl BoostSettings {
    fn gboost_default() -> Self {
        BoostSettings {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
            subsample: 1.0,
            lambda: 0.0,
        }
    }

    fn xgboost_default() -> Self {
        BoostSettings {
            max_depth: 6,
            lambda: 1.0,
            ..BoostSettings::gboost_default()
        }
    }
}

impl Default for ExplainSettings {
    fn default() -> Self {
        ExplainSettings {
            background_size: 100,
            lime_samples: 5000,
            lime_top_k: 10,
            shap_draws: 80,
            summary_instances: 60,
            instance_row: None,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            datasets: Vec::new(),
            target_column: "power".to_string(),
            drop_columns: DEFAULT_DROP_COLUMNS.iter().map(|s| s.to_string()).collect(),
            train_fraction: 0.8,
            seed: 42,
            out_dir: PathBuf::from("out"),
            forest: ForestSettings::default(),
            gboost: BoostSettings::gboost_default(),
            xgboost: BoostSettings::xgboost_default(),
            explain: ExplainSettings::default(),
        }
    }
}

impl RunConfig {
    /// Parses a TOML config; absent keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text)
            .map_err(|e| Error::parse(format!("config parse error: {e}")))?;
        let mut config = RunConfig::default();
        file.apply(&mut config);
        Ok(config)
    }

    /// Loads a TOML config file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_toml_str(&text)
    }

    /// Checks value ranges and that every dataset path exists with a
    /// unique file stem (stems name artifact subdirectories).
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::invalid("config lists no datasets"));
        }
        let mut stems: Vec<String> = Vec::new();
        for path in &self.datasets {
            if !path.is_file() {
                return Err(Error::invalid(format!(
                    "dataset file not found: {}",
                    path.display()
                )));
            }
            let stem = dataset_stem(path)?;
            if stems.contains(&stem) {
                return Err(Error::invalid(format!(
                    "two datasets share the artifact name {stem:?}; rename one file"
                )));
            }
            stems.push(stem);
        }
        if self.target_column.is_empty() {
            return Err(Error::invalid("target_column is empty"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "train_fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        for (label, v) in [
            ("forest.n_trees", self.forest.n_trees),
            ("forest.max_depth", self.forest.max_depth),
            ("forest.min_samples_leaf", self.forest.min_samples_leaf),
            ("explain.background_size", self.explain.background_size),
            ("explain.lime_samples", self.explain.lime_samples),
            ("explain.lime_top_k", self.explain.lime_top_k),
            ("explain.shap_draws", self.explain.shap_draws),
            ("explain.summary_instances", self.explain.summary_instances),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{label} must be at least 1")));
            }
        }
        if self.forest.features_per_split == Some(0) {
            return Err(Error::invalid("forest.features_per_split must be at least 1"));
        }
        for (label, s) in [("gboost", &self.gboost), ("xgboost", &self.xgboost)] {
            if s.n_stages == 0 || s.max_depth == 0 || s.min_samples_leaf == 0 {
                return Err(Error::invalid(format!(
                    "{label} sizes must all be at least 1"
                )));
            }
            if !(s.learning_rate > 0.0 && s.learning_rate <= 1.0) {
                return Err(Error::invalid(format!(
                    "{label}.learning_rate must lie in (0, 1], got {}",
                    s.learning_rate
                )));
            }
            if !(s.subsample > 0.0 && s.subsample <= 1.0) {
                return Err(Error::invalid(format!(
                    "{label}.subsample must lie in (0, 1], got {}",
                    s.subsample
                )));
            }
            if !(s.lambda >= 0.0 && s.lambda.is_finite()) {
                return Err(Error::invalid(format!(
                    "{label}.lambda must be finite and non-negative, got {}",
                    s.lambda
                )));
            }
        }
        Ok(())
    }

    /// Forest parameters for a dataset with `n_features` columns.
    pub fn forest_params(&self, n_features: usize, seed: u64) -> ForestParams {
        let per_split = self
            .forest
            .features_per_split
            .unwrap_or((n_features / 3).max(1));
        ForestParams {
            n_trees: self.forest.n_trees,
            tree: TreeParams {
                max_depth: self.forest.max_depth,
                min_samples_leaf: self.forest.min_samples_leaf,
                features_per_split: FeatureSubset::Count(per_split.min(n_features)),
                split_mode: SplitMode::VarianceReduction,
                second_order_lambda: 0.0,
            },
            bootstrap: self.forest.bootstrap,
            seed,
        }
    }

    pub fn gboost_params(&self, seed: u64) -> BoostParams {
        boost_params(&self.gboost, BoostMode::FirstOrder, seed)
    }

    pub fn xgboost_params(&self, seed: u64) -> BoostParams {
        boost_params(&self.xgboost, BoostMode::SecondOrder, seed)
    }
}

/// Artifact-directory name for a dataset path (its file stem).
pub fn dataset_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_string())
        .ok_or_else(|| {
            Error::invalid(format!(
                "cannot derive an artifact name from {}",
                path.display()
            ))
        })
}

fn boost_params(s: &BoostSettings, mode: BoostMode, seed: u64) -> BoostParams {
    let (split_mode, lambda) = match mode {
        BoostMode::FirstOrder => (SplitMode::VarianceReduction, 0.0),
        BoostMode::SecondOrder => (SplitMode::SecondOrderGain, s.lambda),
    };
    BoostParams {
        n_stages: s.n_stages,
        learning_rate: s.learning_rate,
        subsample_fraction: s.subsample,
        tree: TreeParams {
            max_depth: s.max_depth,
            min_samples_leaf: s.min_samples_leaf,
            features_per_split: FeatureSubset::All,
            split_mode,
            second_order_lambda: lambda,
        },
        mode,
        lambda,
        seed,
    }
}

// Serde mirror of the TOML file: every key optional.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    datasets: Option<Vec<PathBuf>>,
    target_column: Option<String>,
    drop_columns: Option<Vec<String>>,
    train_fraction: Option<f64>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    #[serde(default)]
    forest: ForestFile,
    #[serde(default)]
    gboost: BoostFile,
    #[serde(default)]
    xgboost: BoostFile,
    #[serde(default)]
    explain: ExplainFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForestFile {
    n_trees: Option<usize>,
    max_depth: Option<usize>,
    min_samples_leaf: Option<usize>,
    features_per_split: Option<usize>,
    bootstrap: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoostFile {
    n_stages: Option<usize>,
    learning_rate: Option<f64>,
    max_depth: Option<usize>,
    min_samples_leaf: Option<usize>,
    subsample: Option<f64>,
    lambda: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplainFile {
    background_size: Option<usize>,
    lime_samples: Option<usize>,
    lime_top_k: Option<usize>,
    shap_draws: Option<usize>,
    summary_instances: Option<usize>,
    instance_row: Option<usize>,
}

macro_rules! take {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

impl FileConfig {
    fn apply(self, config: &mut RunConfig) {
        take!(self.datasets => config.datasets);
        take!(self.target_column => config.target_column);
        take!(self.drop_columns => config.drop_columns);
        take!(self.train_fraction => config.train_fraction);
        take!(self.seed => config.seed);
        take!(self.out_dir => config.out_dir);
        self.forest.apply(&mut config.forest);
        self.gboost.apply(&mut config.gboost);
        self.xgboost.apply(&mut config.xgboost);
        self.explain.apply(&mut config.explain);
    }
}

impl ForestFile {
    fn apply(self, s: &mut ForestSettings) {
        take!(self.n_trees => s.n_trees);
        take!(self.max_depth => s.max_depth);
        take!(self.min_samples_leaf => s.min_samples_leaf);
        if self.features_per_split.is_some() {
            s.features_per_split = self.features_per_split;
        }
        take!(self.bootstrap => s.bootstrap);
    }
}

impl BoostFile {
    fn apply(self, s: &mut BoostSettings) {
        take!(self.n_stages => s.n_stages);
        take!(self.learning_rate => s.learning_rate);
        take!(self.max_depth => s.max_depth);
        take!(self.min_samples_leaf => s.min_samples_leaf);
        take!(self.subsample => s.subsample);
        take!(self.lambda => s.lambda);
    }
}

impl ExplainFile {
    fn apply(self, s: &mut ExplainSettings) {
        take!(self.background_size => s.background_size);
        take!(self.lime_samples => s.lime_samples);
        take!(self.lime_top_k => s.lime_top_k);
        take!(self.shap_draws => s.shap_draws);
        if self.instance_row.is_some() {
            s.instance_row = self.instance_row;
        }
        take!(self.summary_instances => s.summary_instances);
    }
}
