//! Feature-attribution engines: Shapley values (exact and sampled) and
//! LIME local surrogates.
//!
//! Both engines are model-agnostic: they see a model only through the
//! [`Predictor`] trait. Attributions are expressed in watts — a positive
//! value means the feature pushes the predicted power above the baseline,
//! a negative value pulls it below.

mod lime;
mod shap;
mod wls;

pub use lime::{lime, lime_summary, LimeConfig, LimeResult};
pub use shap::{
    shap_auto, shap_exact, shap_sampled, shap_summary, SummaryConfig, EXACT_ENUMERATION_LIMIT,
};
pub use wls::{weighted_least_squares, WlsSolution};

use crate::dataset::Matrix;
use crate::ensemble::EnsembleModel;
use crate::rng;
use crate::{Error, Result};

/// Anything that can predict power draw from a feature vector.
///
/// Callers validate vector lengths before invoking `predict_one`; an
/// implementation may panic on a wrong-length input.
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;
    fn predict_one(&self, x: &[f64]) -> f64;
}

impl Predictor for EnsembleModel {
    fn n_features(&self) -> usize {
        self.feature_names().len()
    }

    fn predict_one(&self, x: &[f64]) -> f64 {
        self.predict(x).expect("dimension checked by caller")
    }
}

/// Which engine produced an attribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributionMethod {
    ShapExact,
    ShapSampled,
    Lime,
}

impl AttributionMethod {
    pub fn tag(self) -> &'static str {
        match self {
            AttributionMethod::ShapExact => "shap_exact",
            AttributionMethod::ShapSampled => "shap_sampled",
            AttributionMethod::Lime => "lime",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "shap_exact" => Ok(AttributionMethod::ShapExact),
            "shap_sampled" => Ok(AttributionMethod::ShapSampled),
            "lime" => Ok(AttributionMethod::Lime),
            other => Err(Error::parse(format!("unknown attribution method {other:?}"))),
        }
    }
}

/// A per-instance feature attribution.
///
/// `base_value` is the reference level the contributions are measured
/// against: the mean background prediction for Shapley values, the local
/// surrogate intercept (value at the training mean) for LIME.
/// `prediction` is always the model's own output at the instance. For
/// Shapley attributions `base_value + sum(phi)` reproduces `prediction`
/// up to floating-point accumulation; LIME makes no additivity promise.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub feature_names: Vec<String>,
    /// Raw feature values of the explained instance, aligned with names.
    pub feature_values: Vec<f64>,
    /// Contribution of each feature in watts, aligned with names.
    pub phi: Vec<f64>,
    pub base_value: f64,
    pub prediction: f64,
    pub method: AttributionMethod,
    /// Seed used by a stochastic engine; `None` for exact enumeration.
    pub seed: Option<u64>,
    /// Free-text caveat, e.g. when a surrogate fit needed stabilization.
    pub note: Option<String>,
}

impl Attribution {
    pub fn new(
        feature_names: Vec<String>,
        feature_values: Vec<f64>,
        phi: Vec<f64>,
        base_value: f64,
        prediction: f64,
        method: AttributionMethod,
        seed: Option<u64>,
        note: Option<String>,
    ) -> Result<Self> {
        let d = feature_names.len();
        if d == 0 {
            return Err(Error::invalid("attribution needs at least one feature"));
        }
        if feature_values.len() != d || phi.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: feature_values.len().min(phi.len()),
            });
        }
        if phi.iter().any(|v| !v.is_finite())
            || feature_values.iter().any(|v| !v.is_finite())
            || !base_value.is_finite()
            || !prediction.is_finite()
        {
            return Err(Error::invalid("attribution contains a non-finite value"));
        }
        if let Some(note) = &note {
            if note.contains('\n') {
                return Err(Error::invalid("attribution note must be a single line"));
            }
        }
        Ok(Attribution {
            feature_names,
            feature_values,
            phi,
            base_value,
            prediction,
            method,
            seed,
            note,
        })
    }

    /// Serializes to the versioned portable text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("ranwatt-attribution v1\n");
        out.push_str(&format!("method {}\n", self.method.tag()));
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed {seed}\n"));
        }
        if let Some(note) = &self.note {
            out.push_str(&format!("note {note}\n"));
        }
        out.push_str(&format!("base_value {}\n", self.base_value));
        out.push_str(&format!("prediction {}\n", self.prediction));
        out.push_str(&format!("features {}\n", self.feature_names.len()));
        for ((phi, value), name) in self
            .phi
            .iter()
            .zip(&self.feature_values)
            .zip(&self.feature_names)
        {
            out.push_str(&format!("{phi} {value} {name}\n"));
        }
        out
    }

    /// Parses the text form produced by [`Attribution::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("ranwatt-attribution v1") => {}
            other => return Err(Error::parse(format!("bad attribution header: {other:?}"))),
        }
        let method_line = lines
            .next()
            .and_then(|l| l.strip_prefix("method "))
            .ok_or_else(|| Error::parse("missing method line"))?;
        let method = AttributionMethod::parse(method_line)?;

        let mut seed = None;
        let mut note = None;
        let mut line = lines.next();
        if let Some(rest) = line.and_then(|l| l.strip_prefix("seed ")) {
            seed = Some(
                rest.parse()
                    .map_err(|_| Error::parse("bad seed in attribution"))?,
            );
            line = lines.next();
        }
        if let Some(rest) = line.and_then(|l| l.strip_prefix("note ")) {
            note = Some(rest.to_string());
            line = lines.next();
        }
        let base_value: f64 = line
            .and_then(|l| l.strip_prefix("base_value "))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse("missing or bad base_value line"))?;
        let prediction: f64 = lines
            .next()
            .and_then(|l| l.strip_prefix("prediction "))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse("missing or bad prediction line"))?;
        let count: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("features "))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse("missing or bad features line"))?;

        let mut names = Vec::with_capacity(count);
        let mut values = Vec::with_capacity(count);
        let mut phi = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse("attribution feature lines truncated"))?;
            let mut parts = line.splitn(3, ' ');
            let p: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(format!("bad feature line: {line:?}")))?;
            let v: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(format!("bad feature line: {line:?}")))?;
            let name = parts
                .next()
                .ok_or_else(|| Error::parse(format!("bad feature line: {line:?}")))?;
            phi.push(p);
            values.push(v);
            names.push(name.to_string());
        }
        Attribution::new(names, values, phi, base_value, prediction, method, seed, note)
    }
}

/// One feature's row in a global summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryFeature {
    pub name: String,
    /// Mean absolute attribution across the explained instances, in watts.
    pub mean_abs_phi: f64,
    /// `(feature value, attribution)` per instance, in instance order.
    pub points: Vec<(f64, f64)>,
}

/// Attributions for a set of instances, aggregated per feature and sorted
/// by decreasing mean absolute attribution (ties broken by name).
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSummary {
    pub method: AttributionMethod,
    pub seed: Option<u64>,
    pub n_instances: usize,
    pub features: Vec<SummaryFeature>,
}

impl GlobalSummary {
    /// Assembles and sorts a summary from per-instance attributions laid
    /// out as parallel per-feature columns.
    pub(crate) fn build(
        method: AttributionMethod,
        seed: Option<u64>,
        feature_names: &[String],
        instance_values: &[Vec<f64>],
        instance_phis: &[Vec<f64>],
    ) -> Result<Self> {
        let n = instance_values.len();
        if n == 0 {
            return Err(Error::invalid("summary needs at least one instance"));
        }
        let d = feature_names.len();
        let mut features: Vec<SummaryFeature> = (0..d)
            .map(|j| {
                let points: Vec<(f64, f64)> = (0..n)
                    .map(|i| (instance_values[i][j], instance_phis[i][j]))
                    .collect();
                let mean_abs_phi =
                    points.iter().map(|(_, p)| p.abs()).sum::<f64>() / n as f64;
                SummaryFeature {
                    name: feature_names[j].clone(),
                    mean_abs_phi,
                    points,
                }
            })
            .collect();
        features.sort_by(|a, b| {
            b.mean_abs_phi
                .total_cmp(&a.mean_abs_phi)
                .then_with(|| a.name.cmp(&b.name))
        });
        Ok(GlobalSummary {
            method,
            seed,
            n_instances: n,
            features,
        })
    }

    /// Serializes to the versioned portable text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("ranwatt-summary v1\n");
        out.push_str(&format!("method {}\n", self.method.tag()));
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed {seed}\n"));
        }
        out.push_str(&format!("instances {}\n", self.n_instances));
        out.push_str(&format!("features {}\n", self.features.len()));
        for f in &self.features {
            out.push_str(&format!("feature {} {}\n", f.mean_abs_phi, f.name));
            let values: Vec<String> = f.points.iter().map(|(v, _)| format!("{v}")).collect();
            let phis: Vec<String> = f.points.iter().map(|(_, p)| format!("{p}")).collect();
            out.push_str(&format!("values {}\n", values.join(" ")));
            out.push_str(&format!("phis {}\n", phis.join(" ")));
        }
        out
    }

    /// Parses the text form produced by [`GlobalSummary::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("ranwatt-summary v1") => {}
            other => return Err(Error::parse(format!("bad summary header: {other:?}"))),
        }
        let method = AttributionMethod::parse(
            lines
                .next()
                .and_then(|l| l.strip_prefix("method "))
                .ok_or_else(|| Error::parse("missing method line"))?,
        )?;
        let mut line = lines.next();
        let mut seed = None;
        if let Some(rest) = line.and_then(|l| l.strip_prefix("seed ")) {
            seed = Some(rest.parse().map_err(|_| Error::parse("bad summary seed"))?);
            line = lines.next();
        }
        let n_instances: usize = line
            .and_then(|l| l.strip_prefix("instances "))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse("missing or bad instances line"))?;
        let n_features: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("features "))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse("missing or bad features line"))?;

        let mut features = Vec::with_capacity(n_features);
        for _ in 0..n_features {
            let head = lines
                .next()
                .and_then(|l| l.strip_prefix("feature "))
                .ok_or_else(|| Error::parse("summary feature block truncated"))?;
            let (mean_raw, name) = head
                .split_once(' ')
                .ok_or_else(|| Error::parse(format!("bad feature line: {head:?}")))?;
            let mean_abs_phi: f64 = mean_raw
                .parse()
                .map_err(|_| Error::parse("bad mean attribution"))?;
            let parse_row = |prefix: &str, line: Option<&str>| -> Result<Vec<f64>> {
                let row = line
                    .and_then(|l| l.strip_prefix(prefix))
                    .ok_or_else(|| Error::parse(format!("missing {prefix} line")))?;
                row.split_whitespace()
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Error::parse(format!("bad value in {prefix} line")))
                    })
                    .collect()
            };
            let values = parse_row("values ", lines.next())?;
            let phis = parse_row("phis ", lines.next())?;
            if values.len() != n_instances || phis.len() != n_instances {
                return Err(Error::parse(format!(
                    "summary rows for {name:?} do not match the instance count"
                )));
            }
            features.push(SummaryFeature {
                name: name.to_string(),
                mean_abs_phi,
                points: values.into_iter().zip(phis).collect(),
            });
        }
        Ok(GlobalSummary {
            method,
            seed,
            n_instances,
            features,
        })
    }
}

/// A background sample of feature rows used to marginalize absent
/// features in Shapley evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    rows: Matrix,
}

impl Background {
    pub fn new(rows: Matrix) -> Result<Self> {
        if rows.n_rows() == 0 || rows.n_cols() == 0 {
            return Err(Error::invalid("background sample must be non-empty"));
        }
        Ok(Background { rows })
    }

    /// Draws `k` rows from `data` without replacement (all rows when
    /// `k >= n`), keeping the drawn rows in their original order.
    pub fn sample_from(data: &Matrix, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("background sample size must be at least 1"));
        }
        let n = data.n_rows();
        if k >= n {
            return Background::new(data.clone());
        }
        let mut rng = rng::stream(seed, "background", 0);
        let mut indices = rng::sample_without_replacement(&mut rng, n, k);
        indices.sort_unstable();
        Background::new(data.select_rows(&indices))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.n_cols()
    }
}
