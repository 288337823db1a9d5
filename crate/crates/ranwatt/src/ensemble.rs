//! Tree ensembles: bagged random forests, first-order gradient boosting,
//! and second-order (regularized) gradient boosting.
//!
//! All three share the same prediction contract: a forest averages its
//! trees, a booster adds `learning_rate`-scaled tree outputs to a base
//! value (the training-target mean). Fitting is deterministic for a given
//! seed: each tree or stage draws from its own ChaCha8 stream derived from
//! the ensemble seed and the tree/stage index, so results do not depend on
//! scheduling.
//!
//! A fitted model can carry the training-side feature statistics and a
//! background sample alongside its trees; both ride along in the portable
//! text serialization so explanation and simulation can run from the model
//! file alone.

use rayon::prelude::*;

use crate::dataset::{Dataset, FeatureStat, FeatureStats, Matrix};
use crate::rng;
use crate::tree::{FeatureSubset, FitTarget, RegressionTree, SplitMode, TreeParams};
use crate::{Error, Result};

/// Which ensemble algorithm produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Forest,
    GBoost,
    XGBoost,
}

impl ModelKind {
    /// Short tag used in CLI flags, file names, and serialized models.
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Forest => "rf",
            ModelKind::GBoost => "gb",
            ModelKind::XGBoost => "xgb",
        }
    }

    /// Human-readable name used in metrics tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Forest => "Random Forest",
            ModelKind::GBoost => "Gradient Boosting",
            ModelKind::XGBoost => "XGBoost",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "rf" => Ok(ModelKind::Forest),
            "gb" => Ok(ModelKind::GBoost),
            "xgb" => Ok(ModelKind::XGBoost),
            other => Err(Error::parse(format!(
                "unknown model kind {other:?} (expected rf, gb, or xgb)"
            ))),
        }
    }
}

/// Random-forest hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Resample the training rows with replacement per tree.
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestParams {
    /// Default forest: 100 trees, depth 12, leaves of at least 2 rows,
    /// `max(1, n_features/3)` candidate features per split, bootstrap on.
    pub fn defaults(n_features: usize, seed: u64) -> Self {
        ForestParams {
            n_trees: 100,
            tree: TreeParams {
                max_depth: 12,
                min_samples_leaf: 2,
                features_per_split: FeatureSubset::Count((n_features / 3).max(1)),
                split_mode: SplitMode::VarianceReduction,
                second_order_lambda: 0.0,
            },
            bootstrap: true,
            seed,
        }
    }
}

/// Whether a booster fits residuals directly or gradient/curvature pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoostMode {
    FirstOrder,
    SecondOrder,
}

/// Boosting hyper-parameters, shared by both boosting modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub n_stages: usize,
    /// Shrinkage applied to every stage tree, in (0, 1].
    pub learning_rate: f64,
    /// Fraction of training rows drawn (without replacement) per stage.
    pub subsample_fraction: f64,
    pub tree: TreeParams,
    pub mode: BoostMode,
    /// L2 leaf penalty; authoritative for second-order mode and copied
    /// over the tree template's `second_order_lambda` at fit time.
    pub lambda: f64,
    pub seed: u64,
}

impl BoostParams {
    /// Default first-order booster: 100 stages, rate 0.1, depth 3, full
    /// subsample.
    pub fn gboost_defaults(seed: u64) -> Self {
        BoostParams {
            n_stages: 100,
            learning_rate: 0.1,
            subsample_fraction: 1.0,
            tree: TreeParams {
                max_depth: 3,
                min_samples_leaf: 1,
                features_per_split: FeatureSubset::All,
                split_mode: SplitMode::VarianceReduction,
                second_order_lambda: 0.0,
            },
            mode: BoostMode::FirstOrder,
            lambda: 0.0,
            seed,
        }
    }

    /// Default second-order booster: 100 stages, rate 0.1, depth 6,
    /// lambda 1, full subsample.
    pub fn xgboost_defaults(seed: u64) -> Self {
        BoostParams {
            n_stages: 100,
            learning_rate: 0.1,
            subsample_fraction: 1.0,
            tree: TreeParams {
                max_depth: 6,
                min_samples_leaf: 1,
                features_per_split: FeatureSubset::All,
                split_mode: SplitMode::SecondOrderGain,
                second_order_lambda: 1.0,
            },
            mode: BoostMode::SecondOrder,
            lambda: 1.0,
            seed,
        }
    }
}

/// Train/test mean-squared error of a fitted model, in squared watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub train_mse: f64,
    pub test_mse: f64,
}

/// A fitted tree ensemble plus everything needed to use it stand-alone:
/// feature names, a hyper-parameter snapshot, and (optionally) training
/// feature statistics and a background sample for explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    kind: ModelKind,
    base_value: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
    feature_names: Vec<String>,
    /// Hyper-parameter snapshot, kept as ordered key/value text for
    /// provenance.
    params: Vec<(String, String)>,
    stats: Option<FeatureStats>,
    background: Option<Matrix>,
}

impl EnsembleModel {
    /// Assembles a model from parts, validating that every tree matches
    /// the feature list. Intended for deserialization and for building
    /// small hand-specified models.
    pub fn from_parts(
        kind: ModelKind,
        base_value: f64,
        learning_rate: f64,
        trees: Vec<RegressionTree>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::invalid("model needs at least one feature"));
        }
        if !base_value.is_finite() || !learning_rate.is_finite() {
            return Err(Error::invalid("base value and learning rate must be finite"));
        }
        if kind == ModelKind::Forest && trees.is_empty() {
            return Err(Error::invalid("a forest needs at least one tree"));
        }
        let d = feature_names.len();
        for tree in &trees {
            if tree.n_features() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: tree.n_features(),
                });
            }
        }
        Ok(EnsembleModel {
            kind,
            base_value,
            learning_rate,
            trees,
            feature_names,
            params: Vec::new(),
            stats: None,
            background: None,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn params(&self) -> &[(String, String)] {
        &self.params
    }

    pub fn stats(&self) -> Option<&FeatureStats> {
        self.stats.as_ref()
    }

    pub fn background(&self) -> Option<&Matrix> {
        self.background.as_ref()
    }

    /// Attaches training-side feature statistics and a background sample
    /// so explanation can run from the serialized model alone.
    pub fn set_explain_context(&mut self, stats: FeatureStats, background: Matrix) -> Result<()> {
        if stats.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: stats.len(),
            });
        }
        if background.n_cols() != self.n_features() || background.n_rows() == 0 {
            return Err(Error::invalid(
                "background sample must be non-empty and match the feature count",
            ));
        }
        self.stats = Some(stats);
        self.background = Some(background);
        Ok(())
    }

    /// Predicts power draw in watts for one feature vector.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        match self.kind {
            ModelKind::Forest => {
                let mut sum = 0.0;
                for tree in &self.trees {
                    sum += tree.predict(x)?;
                }
                Ok(sum / self.trees.len() as f64)
            }
            ModelKind::GBoost | ModelKind::XGBoost => {
                let mut out = self.base_value;
                for tree in &self.trees {
                    out += self.learning_rate * tree.predict(x)?;
                }
                Ok(out)
            }
        }
    }

    /// Serializes to the versioned portable text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("ranwatt-model v1\n");
        out.push_str(&format!("kind {}\n", self.kind.tag()));
        out.push_str(&format!("base_value {}\n", self.base_value));
        out.push_str(&format!("learning_rate {}\n", self.learning_rate));
        out.push_str(&format!("features {}\n", self.n_features()));
        out.push_str(&format!("names {}\n", self.feature_names.join(",")));
        for (key, value) in &self.params {
            out.push_str(&format!("param {key} {value}\n"));
        }
        if let Some(stats) = &self.stats {
            out.push_str(&format!("stats {}\n", stats.len()));
            for s in stats.iter() {
                out.push_str(&format!("{} {} {} {}\n", s.mean, s.std, s.min, s.max));
            }
        }
        if let Some(bg) = &self.background {
            out.push_str(&format!("background {} {}\n", bg.n_rows(), bg.n_cols()));
            for row in bg.rows() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out.push_str(&format!("trees {}\n", self.trees.len()));
        for tree in &self.trees {
            out.push_str(&tree.to_text());
        }
        out.push_str("end\n");
        out
    }

    /// Parses the text form produced by [`EnsembleModel::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().peekable();
        let header = lines.next().ok_or_else(|| Error::parse("empty model text"))?;
        if header != "ranwatt-model v1" {
            return Err(Error::parse(format!("bad model header: {header:?}")));
        }

        fn field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
            let line = line.ok_or_else(|| Error::parse(format!("missing {key} line")))?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .ok_or_else(|| Error::parse(format!("expected {key} line, got {line:?}")))
        }

        let kind = ModelKind::parse(field(lines.next(), "kind")?)?;
        let base_value: f64 = field(lines.next(), "base_value")?
            .parse()
            .map_err(|_| Error::parse("bad base_value"))?;
        let learning_rate: f64 = field(lines.next(), "learning_rate")?
            .parse()
            .map_err(|_| Error::parse("bad learning_rate"))?;
        let d: usize = field(lines.next(), "features")?
            .parse()
            .map_err(|_| Error::parse("bad feature count"))?;
        let names_line = field(lines.next(), "names")?;
        let feature_names: Vec<String> = names_line.split(',').map(str::to_string).collect();
        if feature_names.len() != d {
            return Err(Error::parse(format!(
                "model names {} features but header says {d}",
                feature_names.len()
            )));
        }

        let mut params = Vec::new();
        while let Some(line) = lines.peek() {
            let Some(rest) = line.strip_prefix("param ") else {
                break;
            };
            let (key, value) = rest
                .split_once(' ')
                .ok_or_else(|| Error::parse(format!("bad param line: {line:?}")))?;
            params.push((key.to_string(), value.to_string()));
            lines.next();
        }

        let mut stats = None;
        if let Some(line) = lines.peek() {
            if let Some(rest) = line.strip_prefix("stats ") {
                let count: usize = rest.parse().map_err(|_| Error::parse("bad stats count"))?;
                if count != d {
                    return Err(Error::parse(format!(
                        "stats block has {count} entries for {d} features"
                    )));
                }
                lines.next();
                let mut list = Vec::with_capacity(count);
                for _ in 0..count {
                    let line = lines
                        .next()
                        .ok_or_else(|| Error::parse("stats block truncated"))?;
                    let vals: Vec<f64> = line
                        .split_whitespace()
                        .map(|s| s.parse().map_err(|_| Error::parse("bad stats value")))
                        .collect::<Result<_>>()?;
                    if vals.len() != 4 {
                        return Err(Error::parse(format!("bad stats line: {line:?}")));
                    }
                    list.push(FeatureStat {
                        mean: vals[0],
                        std: vals[1],
                        min: vals[2],
                        max: vals[3],
                    });
                }
                stats = Some(FeatureStats::from_vec(list));
            }
        }

        let mut background = None;
        if let Some(line) = lines.peek() {
            if let Some(rest) = line.strip_prefix("background ") {
                let dims: Vec<usize> = rest
                    .split_whitespace()
                    .map(|s| s.parse().map_err(|_| Error::parse("bad background dims")))
                    .collect::<Result<_>>()?;
                if dims.len() != 2 || dims[1] != d {
                    return Err(Error::parse("bad background dimensions"));
                }
                lines.next();
                let mut data = Vec::with_capacity(dims[0] * dims[1]);
                for _ in 0..dims[0] {
                    let line = lines
                        .next()
                        .ok_or_else(|| Error::parse("background block truncated"))?;
                    for cell in line.split_whitespace() {
                        data.push(
                            cell.parse()
                                .map_err(|_| Error::parse("bad background value"))?,
                        );
                    }
                }
                background = Some(Matrix::from_flat(data, dims[0], dims[1])?);
            }
        }

        let n_trees: usize = field(lines.next(), "trees")?
            .parse()
            .map_err(|_| Error::parse("bad tree count"))?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let header = lines
                .next()
                .ok_or_else(|| Error::parse("tree block truncated"))?;
            let n_nodes: usize = header
                .rsplit(' ')
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(format!("bad tree header: {header:?}")))?;
            let mut block = String::from(header);
            block.push('\n');
            for _ in 0..n_nodes {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::parse("tree block truncated"))?;
                block.push_str(line);
                block.push('\n');
            }
            trees.push(RegressionTree::from_text(&block)?);
        }
        match lines.next() {
            Some("end") => {}
            other => return Err(Error::parse(format!("expected end marker, got {other:?}"))),
        }

        let mut model =
            EnsembleModel::from_parts(kind, base_value, learning_rate, trees, feature_names)?;
        model.params = params;
        if let (Some(stats), Some(background)) = (stats, background) {
            model.set_explain_context(stats, background)?;
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        EnsembleModel::from_text(&text)
    }
}

fn check_fit_inputs(train: &Dataset) -> Result<()> {
    if train.n_rows() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 training rows, got {}",
            train.n_rows()
        )));
    }
    Ok(())
}

/// Fits a bagged random forest of variance-reduction trees.
///
/// Tree `i` draws its bootstrap resample and per-node feature subsets from
/// the independent stream `(seed, "tree", i)`, so fits are reproducible
/// and independent of scheduling.
pub fn fit_forest(train: &Dataset, params: &ForestParams) -> Result<EnsembleModel> {
    check_fit_inputs(train)?;
    if params.n_trees == 0 {
        return Err(Error::invalid("forest needs at least one tree"));
    }
    if params.tree.split_mode != SplitMode::VarianceReduction {
        return Err(Error::invalid(
            "forest trees use variance-reduction splitting",
        ));
    }
    let n = train.n_rows();
    let x = train.features();
    let y = train.target();

    let trees: Vec<RegressionTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut tree_rng = rng::stream(params.seed, "tree", i as u64);
            if params.bootstrap {
                let indices: Vec<usize> =
                    (0..n).map(|_| tree_rng.random_range(0..n)).collect();
                let x_sub = x.select_rows(&indices);
                let y_sub: Vec<f64> = indices.iter().map(|&r| y[r]).collect();
                RegressionTree::fit(&x_sub, FitTarget::Targets(&y_sub), &params.tree, &mut tree_rng)
            } else {
                RegressionTree::fit(x, FitTarget::Targets(y), &params.tree, &mut tree_rng)
            }
        })
        .collect::<Result<_>>()?;

    let mut model = EnsembleModel::from_parts(
        ModelKind::Forest,
        0.0,
        1.0,
        trees,
        train.feature_names().to_vec(),
    )?;
    model.params = forest_param_snapshot(params);
    Ok(model)
}

use rand::Rng;

fn boost_tree_params(params: &BoostParams) -> TreeParams {
    let mut tp = params.tree;
    match params.mode {
        BoostMode::FirstOrder => {
            tp.split_mode = SplitMode::VarianceReduction;
            tp.second_order_lambda = 0.0;
        }
        BoostMode::SecondOrder => {
            tp.split_mode = SplitMode::SecondOrderGain;
            tp.second_order_lambda = params.lambda;
        }
    }
    tp
}

fn fit_boost(train: &Dataset, params: &BoostParams, kind: ModelKind) -> Result<EnsembleModel> {
    check_fit_inputs(train)?;
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::invalid(format!(
            "learning_rate must be in (0, 1], got {}",
            params.learning_rate
        )));
    }
    if !(params.subsample_fraction > 0.0 && params.subsample_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "subsample_fraction must be in (0, 1], got {}",
            params.subsample_fraction
        )));
    }
    if !(params.lambda.is_finite() && params.lambda >= 0.0) {
        return Err(Error::invalid("lambda must be finite and >= 0"));
    }

    let n = train.n_rows();
    let x = train.features();
    let y = train.target();
    let base_value = y.iter().sum::<f64>() / n as f64;
    let tree_params = boost_tree_params(params);

    let mut preds = vec![base_value; n];
    let mut trees = Vec::with_capacity(params.n_stages);
    for stage in 0..params.n_stages {
        let mut stage_rng = rng::stream(params.seed, "stage", stage as u64);
        let rows: Vec<usize> = if params.subsample_fraction < 1.0 {
            let k = ((params.subsample_fraction * n as f64).round() as usize).clamp(1, n);
            let mut drawn = rng::sample_without_replacement(&mut stage_rng, n, k);
            drawn.sort_unstable();
            drawn
        } else {
            (0..n).collect()
        };
        let x_sub = x.select_rows(&rows);

        let tree = match params.mode {
            BoostMode::FirstOrder => {
                let residuals: Vec<f64> = rows.iter().map(|&r| y[r] - preds[r]).collect();
                RegressionTree::fit(
                    &x_sub,
                    FitTarget::Targets(&residuals),
                    &tree_params,
                    &mut stage_rng,
                )?
            }
            BoostMode::SecondOrder => {
                let grad: Vec<f64> = rows.iter().map(|&r| preds[r] - y[r]).collect();
                let hess = vec![1.0; rows.len()];
                RegressionTree::fit(
                    &x_sub,
                    FitTarget::Gradients {
                        grad: &grad,
                        hess: &hess,
                    },
                    &tree_params,
                    &mut stage_rng,
                )?
            }
        };

        for i in 0..n {
            preds[i] += params.learning_rate * tree.predict(x.row(i))?;
        }
        trees.push(tree);
    }

    let mut model = EnsembleModel::from_parts(
        kind,
        base_value,
        params.learning_rate,
        trees,
        train.feature_names().to_vec(),
    )?;
    model.params = boost_param_snapshot(params);
    Ok(model)
}

/// Fits a first-order (residual-fitting) gradient-boosting ensemble.
pub fn fit_gboost(train: &Dataset, params: &BoostParams) -> Result<EnsembleModel> {
    if params.mode != BoostMode::FirstOrder {
        return Err(Error::invalid("fit_gboost requires first-order mode"));
    }
    fit_boost(train, params, ModelKind::GBoost)
}

/// Fits a second-order gradient-boosting ensemble with L2 leaf
/// regularization.
pub fn fit_xgboost(train: &Dataset, params: &BoostParams) -> Result<EnsembleModel> {
    if params.mode != BoostMode::SecondOrder {
        return Err(Error::invalid("fit_xgboost requires second-order mode"));
    }
    fit_boost(train, params, ModelKind::XGBoost)
}

fn feature_subset_text(fs: FeatureSubset) -> String {
    match fs {
        FeatureSubset::All => "all".to_string(),
        FeatureSubset::Count(k) => k.to_string(),
    }
}

fn forest_param_snapshot(p: &ForestParams) -> Vec<(String, String)> {
    vec![
        ("n_trees".into(), p.n_trees.to_string()),
        ("bootstrap".into(), p.bootstrap.to_string()),
        ("max_depth".into(), p.tree.max_depth.to_string()),
        (
            "min_samples_leaf".into(),
            p.tree.min_samples_leaf.to_string(),
        ),
        (
            "features_per_split".into(),
            feature_subset_text(p.tree.features_per_split),
        ),
        ("seed".into(), p.seed.to_string()),
    ]
}

fn boost_param_snapshot(p: &BoostParams) -> Vec<(String, String)> {
    let mode = match p.mode {
        BoostMode::FirstOrder => "first_order",
        BoostMode::SecondOrder => "second_order",
    };
    vec![
        ("n_stages".into(), p.n_stages.to_string()),
        ("learning_rate".into(), p.learning_rate.to_string()),
        ("subsample".into(), p.subsample_fraction.to_string()),
        ("mode".into(), mode.to_string()),
        ("lambda".into(), p.lambda.to_string()),
        ("max_depth".into(), p.tree.max_depth.to_string()),
        (
            "min_samples_leaf".into(),
            p.tree.min_samples_leaf.to_string(),
        ),
        (
            "features_per_split".into(),
            feature_subset_text(p.tree.features_per_split),
        ),
        ("seed".into(), p.seed.to_string()),
    ]
}

fn mse(model: &EnsembleModel, data: &Dataset) -> Result<f64> {
    let n = data.n_rows();
    let mut sum = 0.0;
    for i in 0..n {
        let err = model.predict(data.features().row(i))? - data.target()[i];
        sum += err * err;
    }
    Ok(sum / n as f64)
}

/// Computes train and test mean-squared error for a fitted model.
pub fn evaluate(model: &EnsembleModel, train: &Dataset, test: &Dataset) -> Result<Metrics> {
    for data in [train, test] {
        if data.n_rows() == 0 {
            return Err(Error::invalid("cannot evaluate on an empty dataset"));
        }
        if data.feature_names() != model.feature_names() {
            return Err(Error::invalid(
                "dataset schema does not match the model's feature list",
            ));
        }
    }
    Ok(Metrics {
        train_mse: mse(model, train)?,
        test_mse: mse(model, test)?,
    })
}

/// Mean-squared error on `data` after each boosting stage (stage 0 is the
/// bare base value). Errors for non-boosting models.
pub fn staged_mse(model: &EnsembleModel, data: &Dataset) -> Result<Vec<f64>> {
    if model.kind() == ModelKind::Forest {
        return Err(Error::invalid("staged error traces apply to boosters only"));
    }
    if data.feature_names() != model.feature_names() {
        return Err(Error::invalid(
            "dataset schema does not match the model's feature list",
        ));
    }
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::invalid("cannot evaluate on an empty dataset"));
    }
    let mut preds = vec![model.base_value(); n];
    let mut trace = Vec::with_capacity(model.trees().len() + 1);
    let mse_of = |preds: &[f64]| -> f64 {
        preds
            .iter()
            .zip(data.target())
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / n as f64
    };
    trace.push(mse_of(&preds));
    for tree in model.trees() {
        for i in 0..n {
            preds[i] += model.learning_rate() * tree.predict(data.features().row(i))?;
        }
        trace.push(mse_of(&preds));
    }
    Ok(trace)
}
