//! End-to-end run orchestration: load → split → fit all three models →
//! evaluate → explain → report, writing every artifact under the
//! configured output directory.
//!
//! Per dataset `<stem>` the pipeline writes, under `out_dir/<stem>/`:
//!
//! - `model_gb.txt`, `model_rf.txt`, `model_xgb.txt` — serialized models
//!   with embedded feature statistics and background sample;
//! - `metrics.txt` / `metrics.tsv` — the MSE table, aligned and
//!   machine-readable;
//! - `lime_instance_<tag>.txt` + `lime_<tag>.svg` — attribution for the
//!   highlighted instance, per model;
//! - `shap_summary_<tag>.txt` + `shap_<tag>.svg` — global Shapley
//!   summary and beeswarm, per model;
//! - `lime_summary_<tag>.txt` — global LIME summary, per model;
//! - `ranking.txt` / `ranking.tsv` — the cross-model × cross-explainer
//!   feature ranking (six cells).
//!
//! Every randomized step draws from a sub-seed derived from the global
//! seed, the dataset index, and a step label, so a config reproduces its
//! artifacts byte for byte.

use std::path::PathBuf;

use crate::config::{dataset_stem, RunConfig};
use crate::dataset::{compute_stats, load_dataset, split, Dataset, Matrix, SplitConfig};
use crate::ensemble::{
    evaluate, fit_forest, fit_gboost, fit_xgboost, EnsembleModel, Metrics, ModelKind,
};
use crate::explain::{
    lime, lime_summary, shap_summary, Background, GlobalSummary, LimeConfig, SummaryConfig,
};
use crate::report::{
    emit_metrics_table, rank_features, render_instance_bars, render_summary, RankEntry,
    RankSource,
};
use crate::rng::{self, sub_seed};
use crate::{Error, Result};

const INSTANCE_SVG_SIZE: (u32, u32) = (880, 460);
const SUMMARY_SVG_SIZE: (u32, u32) = (900, 560);

/// What the pipeline did for one dataset.
#[derive(Debug, Clone)]
pub struct DatasetReport {
    /// Artifact directory name (the dataset file stem).
    pub name: String,
    pub path: PathBuf,
    pub n_rows: usize,
    pub n_features: usize,
    pub dropped_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Fitted-model metrics in table order.
    pub metrics: Vec<(ModelKind, Metrics)>,
    /// Aligned metrics table, as printed.
    pub metrics_table: String,
    /// Highlighted test-row index per model.
    pub highlighted_rows: Vec<(ModelKind, usize)>,
    pub out_dir: PathBuf,
}

/// Result of a full pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub datasets: Vec<DatasetReport>,
    /// Every file written, in write order.
    pub files: Vec<PathBuf>,
}

impl PipelineReport {
    /// Human-readable run summary (the CLI prints this).
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for ds in &self.datasets {
            out.push_str(&format!(
                "== dataset {} ({}) ==\n\
                 rows: {} ({} dropped), features: {}, train: {}, test: {}\n\n",
                ds.name,
                ds.path.display(),
                ds.n_rows,
                ds.dropped_rows,
                ds.n_features,
                ds.n_train,
                ds.n_test
            ));
            out.push_str(&ds.metrics_table);
            let rows: Vec<String> = ds
                .highlighted_rows
                .iter()
                .map(|(kind, idx)| format!("{}={idx}", kind.tag()))
                .collect();
            out.push_str(&format!(
                "\nhighlighted test row: {}\nartifacts: {}\n\n",
                rows.join(" "),
                ds.out_dir.display()
            ));
        }
        out.push_str(&format!("{} files written\n", self.files.len()));
        out
    }
}

/// Median of a non-empty slice (mean of the two middle values for even
/// lengths).
fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Test row whose prediction lies nearest `target_power` (ties take the
/// lowest index).
fn nearest_prediction_row(
    model: &EnsembleModel,
    test: &Dataset,
    target_power: f64,
) -> Result<usize> {
    let mut best = 0usize;
    let mut best_gap = f64::INFINITY;
    for i in 0..test.n_rows() {
        let pred = model.predict(test.features().row(i))?;
        let gap = (pred - target_power).abs();
        if gap < best_gap {
            best_gap = gap;
            best = i;
        }
    }
    Ok(best)
}

struct Context<'a> {
    config: &'a RunConfig,
    files: Vec<PathBuf>,
}

impl Context<'_> {
    fn write(&mut self, path: PathBuf, content: &str) -> Result<()> {
        std::fs::write(&path, content)?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs the full pipeline for every configured dataset.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineReport> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)?;

    let mut ctx = Context {
        config,
        files: Vec::new(),
    };
    let mut reports = Vec::new();
    for (di, path) in config.datasets.iter().enumerate() {
        let report = run_dataset(&mut ctx, di, path).map_err(|e| {
            Error::invalid(format!("dataset {}: {e}", path.display()))
        })?;
        reports.push(report);
    }
    Ok(PipelineReport {
        datasets: reports,
        files: ctx.files,
    })
}

fn run_dataset(ctx: &mut Context<'_>, di: usize, path: &PathBuf) -> Result<DatasetReport> {
    let config = ctx.config;
    let stem = dataset_stem(path)?;
    let dir = config.out_dir.join(&stem);
    std::fs::create_dir_all(&dir)?;

    let (ds, dropped_rows) = load_dataset(path, &config.target_column, &config.drop_columns)?;
    let ds_seed = sub_seed(config.seed, "dataset", di as u64);
    let (train, test) = split(
        &ds,
        &SplitConfig {
            train_fraction: config.train_fraction,
            seed: sub_seed(ds_seed, "split", 0),
        },
    )?;
    let stats = compute_stats(&train)?;
    let background = Background::sample_from(
        train.features(),
        config.explain.background_size,
        sub_seed(ds_seed, "background", 0),
    )?;

    // Fit in the reporting order: first-order boosting, forest,
    // second-order boosting.
    let gb = fit_gboost(&train, &config.gboost_params(sub_seed(ds_seed, "gb", 0)))?;
    let rf = fit_forest(
        &train,
        &config.forest_params(ds.n_features(), sub_seed(ds_seed, "rf", 0)),
    )?;
    let xgb = fit_xgboost(&train, &config.xgboost_params(sub_seed(ds_seed, "xgb", 0)))?;
    let mut models = vec![gb, rf, xgb];

    let mut metrics = Vec::new();
    for model in &mut models {
        model.set_explain_context(stats.clone(), background.matrix().clone())?;
        ctx.write(
            dir.join(format!("model_{}.txt", model.kind().tag())),
            &model.to_text(),
        )?;
        metrics.push((model.kind(), evaluate(model, &train, &test)?));
    }
    let tables = emit_metrics_table(&metrics)?;
    ctx.write(dir.join("metrics.txt"), &tables.aligned)?;
    ctx.write(dir.join("metrics.tsv"), &tables.structured)?;

    // One shared instance sample for every global summary, drawn from
    // the held-out rows.
    let instances: Matrix = {
        let feats = test.features();
        let k = config.explain.summary_instances;
        if k >= feats.n_rows() {
            feats.clone()
        } else {
            let mut draw_rng = rng::stream(ds_seed, "summary-rows", 0);
            let mut idx = rng::sample_without_replacement(&mut draw_rng, feats.n_rows(), k);
            idx.sort_unstable();
            feats.select_rows(&idx)
        }
    };

    let median_power = median(ds.target());
    let names = ds.feature_names();
    let mut highlighted_rows = Vec::new();
    let mut lime_summaries: Vec<GlobalSummary> = Vec::new();
    let mut shap_summaries: Vec<GlobalSummary> = Vec::new();
    for (mi, model) in models.iter().enumerate() {
        let tag = model.kind().tag();

        let row_idx = match config.explain.instance_row {
            Some(idx) => {
                if idx >= test.n_rows() {
                    return Err(Error::invalid(format!(
                        "instance_row {idx} is out of range (test set has {} rows)",
                        test.n_rows()
                    )));
                }
                idx
            }
            None => nearest_prediction_row(model, &test, median_power)?,
        };
        highlighted_rows.push((model.kind(), row_idx));

        let instance_cfg = LimeConfig {
            n_samples: config.explain.lime_samples,
            top_k: config.explain.lime_top_k,
            ..LimeConfig::new(sub_seed(ds_seed, "lime-instance", mi as u64))
        };
        let explained = lime(
            model,
            names,
            test.features().row(row_idx),
            &stats,
            &instance_cfg,
        )?;
        ctx.write(
            dir.join(format!("lime_instance_{tag}.txt")),
            &explained.attribution.to_text(),
        )?;
        ctx.write(
            dir.join(format!("lime_{tag}.svg")),
            &render_instance_bars(
                &explained.attribution,
                INSTANCE_SVG_SIZE.0,
                INSTANCE_SVG_SIZE.1,
            )?,
        )?;

        let shap_sum = shap_summary(
            model,
            names,
            &instances,
            &background,
            &SummaryConfig {
                sampled_draws: config.explain.shap_draws,
                seed: sub_seed(ds_seed, "shap-summary", mi as u64),
            },
        )?;
        ctx.write(
            dir.join(format!("shap_summary_{tag}.txt")),
            &shap_sum.to_text(),
        )?;
        ctx.write(
            dir.join(format!("shap_{tag}.svg")),
            &render_summary(&shap_sum, SUMMARY_SVG_SIZE.0, SUMMARY_SVG_SIZE.1)?,
        )?;
        shap_summaries.push(shap_sum);

        let summary_cfg = LimeConfig {
            n_samples: config.explain.lime_samples,
            top_k: config.explain.lime_top_k,
            ..LimeConfig::new(sub_seed(ds_seed, "lime-summary", mi as u64))
        };
        let lime_sum = lime_summary(model, names, &instances, &stats, &summary_cfg)?;
        ctx.write(
            dir.join(format!("lime_summary_{tag}.txt")),
            &lime_sum.to_text(),
        )?;
        lime_summaries.push(lime_sum);
    }

    let mut entries = Vec::new();
    for (mi, model) in models.iter().enumerate() {
        entries.push(RankEntry {
            model: model.kind().display_name().to_string(),
            explainer: "LIME".to_string(),
            source: RankSource::Summary(&lime_summaries[mi]),
        });
        entries.push(RankEntry {
            model: model.kind().display_name().to_string(),
            explainer: "SHAP".to_string(),
            source: RankSource::Summary(&shap_summaries[mi]),
        });
    }
    let ranking = rank_features(&entries)?;
    ctx.write(dir.join("ranking.txt"), &ranking.to_text())?;
    ctx.write(dir.join("ranking.tsv"), &ranking.to_tsv())?;

    Ok(DatasetReport {
        name: stem,
        path: path.clone(),
        n_rows: ds.n_rows(),
        n_features: ds.n_features(),
        dropped_rows,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        metrics,
        metrics_table: tables.aligned,
        highlighted_rows,
        out_dir: dir,
    })
}
