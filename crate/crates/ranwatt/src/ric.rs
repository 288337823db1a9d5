//! Simulated RAN-controller loop: telemetry records in, explained power
//! predictions and parameter-tuning recommendations out.
//!
//! The wire protocol is JSON lines. Each input line is one telemetry
//! record: `{"id": "r1", "features": {"airtime": 0.53, ...}}` (`id` is
//! optional; it defaults to `record-<line>`). Every model feature must be
//! present and finite, and no extra feature keys are allowed. Each input
//! line produces exactly one output line, in order: either a response
//! carrying the prediction, the attribution, and the control
//! recommendation, or an error object `{"line": <1-based line>, "error":
//! "..."}` for a malformed record. The session keeps going after
//! per-record errors.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::ensemble::EnsembleModel;
use crate::explain::{
    lime, shap_auto, Attribution, Background, LimeConfig, EXACT_ENUMERATION_LIMIT,
};
use crate::rng;
use crate::{Error, Result};

/// Tunable RAN parameters recommended for adjustment when no operator
/// whitelist is supplied.
pub const DEFAULT_WHITELIST: [&str; 4] = ["airtime", "selected_airtime", "nRBs", "selected_mcs"];

/// Recommended adjustment direction for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Decrease,
    Increase,
    Hold,
}

/// One parameter-tuning target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlTarget {
    pub parameter: String,
    pub direction: Direction,
    /// The parameter's attribution in watts when the recommendation was
    /// made.
    pub contribution: f64,
}

/// A control recommendation for one telemetry record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlMessage {
    pub record_id: String,
    pub predicted_power: f64,
    pub targets: Vec<ControlTarget>,
    pub policy_note: String,
}

/// Turns an attribution into a control recommendation.
///
/// Whitelisted features with positive attribution are recommended for
/// decrease, strongest first (ties by name), capped at `max_targets`.
/// When no whitelisted feature contributes positively the message holds
/// the best-placed whitelisted parameter instead, and the policy note
/// says why.
pub fn recommend(
    attr: &Attribution,
    record_id: &str,
    whitelist: &[String],
    max_targets: usize,
) -> Result<ControlMessage> {
    if whitelist.is_empty() {
        return Err(Error::invalid("parameter whitelist is empty"));
    }
    if max_targets == 0 {
        return Err(Error::invalid("max_targets must be at least 1"));
    }

    let mut candidates: Vec<(&str, f64)> = attr
        .feature_names
        .iter()
        .zip(&attr.phi)
        .filter(|(name, phi)| whitelist.iter().any(|w| w == *name) && **phi > 0.0)
        .map(|(name, phi)| (name.as_str(), *phi))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    candidates.truncate(max_targets);

    let (targets, policy_note) = if candidates.is_empty() {
        // Hold the whitelisted parameter with the largest attribution,
        // or the first whitelist entry when none appears in the
        // attribution at all.
        let held = attr
            .feature_names
            .iter()
            .zip(&attr.phi)
            .filter(|(name, _)| whitelist.iter().any(|w| w == *name))
            .max_by(|a, b| a.1.total_cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(name, phi)| (name.clone(), *phi))
            .unwrap_or_else(|| (whitelist[0].clone(), 0.0));
        (
            vec![ControlTarget {
                parameter: held.0,
                direction: Direction::Hold,
                contribution: held.1,
            }],
            "no whitelisted feature contributes positively; holding current parameters"
                .to_string(),
        )
    } else {
        (
            candidates
                .into_iter()
                .map(|(name, phi)| ControlTarget {
                    parameter: name.to_string(),
                    direction: Direction::Decrease,
                    contribution: phi,
                })
                .collect(),
            "decrease the highest positive whitelisted contributors to reduce predicted power"
                .to_string(),
        )
    };

    Ok(ControlMessage {
        record_id: record_id.to_string(),
        predicted_power: attr.prediction,
        targets,
        policy_note,
    })
}

/// Which attribution engine the session runs per record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplainerChoice {
    Lime,
    Shap,
}

impl ExplainerChoice {
    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "lime" => Ok(ExplainerChoice::Lime),
            "shap" => Ok(ExplainerChoice::Shap),
            other => Err(Error::parse(format!(
                "unknown explainer {other:?} (expected lime or shap)"
            ))),
        }
    }
}

/// Session settings for [`run_session`].
#[derive(Debug, Clone, PartialEq)]
pub struct ServeConfig {
    pub explainer: ExplainerChoice,
    pub whitelist: Vec<String>,
    /// Maximum tuning targets per control message.
    pub max_targets: usize,
    pub seed: u64,
    /// Permutation draws per record on the sampled Shapley path.
    pub shap_draws: usize,
    /// Perturbation samples per record for LIME.
    pub lime_samples: usize,
}

impl ServeConfig {
    pub fn new(explainer: ExplainerChoice, seed: u64) -> Self {
        ServeConfig {
            explainer,
            whitelist: DEFAULT_WHITELIST.iter().map(|s| s.to_string()).collect(),
            max_targets: 3,
            seed,
            shap_draws: 200,
            lime_samples: 5000,
        }
    }
}

/// Counters for one completed session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionStats {
    pub processed: usize,
    pub errors: usize,
}

#[derive(Serialize)]
struct SessionResponse<'a> {
    id: &'a str,
    predicted_power: f64,
    base_value: f64,
    method: &'a str,
    attribution: BTreeMap<&'a str, f64>,
    targets: &'a [ControlTarget],
    policy_note: &'a str,
}

#[derive(Serialize)]
struct SessionError<'a> {
    /// 1-based input line number the failing record arrived on.
    line: usize,
    error: &'a str,
}

fn parse_record(
    line: &str,
    idx: usize,
    feature_names: &[String],
) -> std::result::Result<(String, Vec<f64>), String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("record must be a JSON object")?;
    for key in obj.keys() {
        if key != "id" && key != "features" {
            return Err(format!("unknown record key {key:?}"));
        }
    }
    let id = match obj.get("id") {
        None => format!("record-{}", idx + 1),
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(_) => return Err("record id must be a string".to_string()),
    };
    let features = obj
        .get("features")
        .and_then(|f| f.as_object())
        .ok_or("record needs a \"features\" object")?;
    for key in features.keys() {
        if !feature_names.iter().any(|n| n == key) {
            return Err(format!("unknown feature {key:?}"));
        }
    }
    let mut x = Vec::with_capacity(feature_names.len());
    for name in feature_names {
        let v = features
            .get(name)
            .ok_or_else(|| format!("missing feature {name:?}"))?
            .as_f64()
            .ok_or_else(|| format!("feature {name:?} is not a number"))?;
        if !v.is_finite() {
            return Err(format!("feature {name:?} is not finite"));
        }
        x.push(v);
    }
    Ok((id, x))
}

/// Runs a control-loop session: reads JSON-line telemetry records from
/// `input`, writes one JSON response line per record to `output`.
///
/// The model must carry a background sample (for Shapley) or feature
/// statistics (for LIME); both are embedded by the training pipeline.
/// Record `i` is explained with the seed `(config.seed, "record", i)`, so
/// a replayed session reproduces its transcript byte for byte.
pub fn run_session<R: BufRead, W: Write>(
    model: &EnsembleModel,
    config: &ServeConfig,
    input: R,
    mut output: W,
) -> Result<SessionStats> {
    if config.whitelist.is_empty() {
        return Err(Error::invalid("parameter whitelist is empty"));
    }
    if config.max_targets == 0 {
        return Err(Error::invalid("max_targets must be at least 1"));
    }
    let d = model.n_features();
    let background = match config.explainer {
        ExplainerChoice::Shap => {
            let bg = model.background().ok_or_else(|| {
                Error::invalid("model carries no background sample; retrain with one to use shap")
            })?;
            if d > EXACT_ENUMERATION_LIMIT && config.shap_draws < 2 * d {
                return Err(Error::invalid(format!(
                    "need at least {} shap draws for {d} features",
                    2 * d
                )));
            }
            Some(Background::new(bg.clone())?)
        }
        ExplainerChoice::Lime => {
            if model.stats().is_none() {
                return Err(Error::invalid(
                    "model carries no feature statistics; retrain with them to use lime",
                ));
            }
            None
        }
    };

    let mut stats = SessionStats {
        processed: 0,
        errors: 0,
    };
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let record_seed = rng::sub_seed(config.seed, "record", idx as u64);
        let outcome = parse_record(&line, idx, model.feature_names()).and_then(|(id, x)| {
            let attribution = match config.explainer {
                ExplainerChoice::Shap => shap_auto(
                    model,
                    model.feature_names(),
                    &x,
                    background.as_ref().expect("checked at session start"),
                    config.shap_draws,
                    record_seed,
                )
                .map_err(|e| e.to_string())?,
                ExplainerChoice::Lime => {
                    let lime_cfg = LimeConfig {
                        n_samples: config.lime_samples,
                        seed: record_seed,
                        ..LimeConfig::new(record_seed)
                    };
                    lime(
                        model,
                        model.feature_names(),
                        &x,
                        model.stats().expect("checked at session start"),
                        &lime_cfg,
                    )
                    .map_err(|e| e.to_string())?
                    .attribution
                }
            };
            let control = recommend(&attribution, &id, &config.whitelist, config.max_targets)
                .map_err(|e| e.to_string())?;
            Ok((id, attribution, control))
        });

        match outcome {
            Ok((id, attribution, control)) => {
                let map: BTreeMap<&str, f64> = attribution
                    .feature_names
                    .iter()
                    .map(String::as_str)
                    .zip(attribution.phi.iter().copied())
                    .collect();
                let response = SessionResponse {
                    id: &id,
                    predicted_power: control.predicted_power,
                    base_value: attribution.base_value,
                    method: attribution.method.tag(),
                    attribution: map,
                    targets: &control.targets,
                    policy_note: &control.policy_note,
                };
                serde_json::to_writer(&mut output, &response)
                    .map_err(|e| Error::invalid(format!("cannot encode response: {e}")))?;
                output.write_all(b"\n")?;
                stats.processed += 1;
            }
            Err(message) => {
                let err = SessionError {
                    line: idx + 1,
                    error: &message,
                };
                serde_json::to_writer(&mut output, &err)
                    .map_err(|e| Error::invalid(format!("cannot encode error line: {e}")))?;
                output.write_all(b"\n")?;
                stats.errors += 1;
            }
        }
    }
    output.flush()?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{compute_stats, Dataset, Matrix};
    use crate::ensemble::{fit_forest, ForestParams};
    use crate::explain::AttributionMethod;

    fn attribution(names: &[&str], phi: &[f64]) -> Attribution {
        Attribution::new(
            names.iter().map(|s| s.to_string()).collect(),
            vec![1.0; names.len()],
            phi.to_vec(),
            10.0,
            12.5,
            AttributionMethod::ShapExact,
            None,
            None,
        )
        .unwrap()
    }

    fn whitelist(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn positive_whitelisted_features_are_decrease_targets() {
        let attr = attribution(
            &["airtime_ul", "bsr_ul", "selected_mcs"],
            &[0.8, 0.9, 0.3],
        );
        let msg = recommend(&attr, "r1", &whitelist(&["airtime_ul", "selected_mcs"]), 3).unwrap();
        assert_eq!(msg.record_id, "r1");
        assert_eq!(msg.predicted_power, 12.5);
        assert_eq!(msg.targets.len(), 2);
        // bsr_ul is stronger but not whitelisted; airtime_ul ranks first.
        assert_eq!(msg.targets[0].parameter, "airtime_ul");
        assert_eq!(msg.targets[0].direction, Direction::Decrease);
        assert_eq!(msg.targets[0].contribution, 0.8);
        assert_eq!(msg.targets[1].parameter, "selected_mcs");
    }

    #[test]
    fn max_targets_caps_the_recommendation() {
        let attr = attribution(&["a", "b", "c"], &[0.5, 0.4, 0.3]);
        let msg = recommend(&attr, "r", &whitelist(&["a", "b", "c"]), 2).unwrap();
        assert_eq!(msg.targets.len(), 2);
        assert_eq!(msg.targets[0].parameter, "a");
        assert_eq!(msg.targets[1].parameter, "b");
    }

    #[test]
    fn no_positive_whitelisted_contribution_holds() {
        let attr = attribution(&["airtime", "bsr"], &[-0.4, 1.2]);
        let msg = recommend(&attr, "r2", &whitelist(&["airtime"]), 3).unwrap();
        assert_eq!(msg.targets.len(), 1);
        assert_eq!(msg.targets[0].parameter, "airtime");
        assert_eq!(msg.targets[0].direction, Direction::Hold);
        assert_eq!(msg.targets[0].contribution, -0.4);
        assert!(msg.policy_note.contains("holding"));

        // Whitelist naming a feature absent from the attribution.
        let msg = recommend(&attr, "r3", &whitelist(&["nRBs"]), 3).unwrap();
        assert_eq!(msg.targets[0].parameter, "nRBs");
        assert_eq!(msg.targets[0].direction, Direction::Hold);
        assert_eq!(msg.targets[0].contribution, 0.0);
    }

    #[test]
    fn recommend_validates_inputs() {
        let attr = attribution(&["a"], &[0.1]);
        assert!(recommend(&attr, "r", &[], 3).is_err());
        assert!(recommend(&attr, "r", &whitelist(&["a"]), 0).is_err());
    }

    fn session_model() -> EnsembleModel {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                vec![
                    (i % 10) as f64 * 0.1,
                    (i % 7) as f64,
                    (i % 4) as f64 * 2.0,
                ]
            })
            .collect();
        let target: Vec<f64> = rows.iter().map(|r| 8.0 + 3.0 * r[0] + 0.5 * r[1]).collect();
        let train = Dataset::new(
            vec!["airtime".into(), "nRBs".into(), "snr".into()],
            Matrix::from_rows(&rows).unwrap(),
            target,
            "toy",
        )
        .unwrap();
        let params = ForestParams {
            n_trees: 10,
            ..ForestParams::defaults(3, 5)
        };
        let mut model = fit_forest(&train, &params).unwrap();
        let stats = compute_stats(&train).unwrap();
        let background = train.features().select_rows(&(0..20).collect::<Vec<_>>());
        model.set_explain_context(stats, background).unwrap();
        model
    }

    fn run(model: &EnsembleModel, config: &ServeConfig, input: &str) -> (SessionStats, String) {
        let mut out = Vec::new();
        let stats = run_session(model, config, input.as_bytes(), &mut out).unwrap();
        (stats, String::from_utf8(out).unwrap())
    }

    #[test]
    fn session_emits_one_ordered_line_per_record() {
        let model = session_model();
        let config = ServeConfig::new(ExplainerChoice::Shap, 77);
        let input = concat!(
            "{\"id\":\"r0\",\"features\":{\"airtime\":0.9,\"nRBs\":6,\"snr\":2}}\n",
            "this is not json\n",
            "{\"features\":{\"airtime\":0.1,\"nRBs\":1}}\n",
            "{\"id\":\"r3\",\"features\":{\"airtime\":0.2,\"nRBs\":3,\"snr\":0}}\n",
        );
        let (stats, output) = run(&model, &config, input);
        assert_eq!(stats.processed, 2);
        assert_eq!(stats.errors, 2);
        let lines: Vec<&str> = output.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("\"id\":\"r0\""));
        assert!(lines[0].contains("\"method\":\"shap_exact\""));
        assert!(lines[0].contains("\"targets\""));
        assert!(lines[1].contains("\"error\""));
        assert!(lines[2].contains("missing feature"));
        assert!(lines[3].contains("\"id\":\"r3\""));
    }

    #[test]
    fn session_rejects_unknown_feature_keys() {
        let model = session_model();
        let config = ServeConfig::new(ExplainerChoice::Shap, 1);
        let input =
            "{\"features\":{\"airtime\":0.5,\"nRBs\":2,\"snr\":1,\"bogus\":9}}\n";
        let (stats, output) = run(&model, &config, input);
        assert_eq!(stats.errors, 1);
        assert!(output.contains("unknown feature \\\"bogus\\\""));
    }

    #[test]
    fn session_transcripts_are_deterministic() {
        let model = session_model();
        for explainer in [ExplainerChoice::Shap, ExplainerChoice::Lime] {
            let mut config = ServeConfig::new(explainer, 42);
            config.lime_samples = 300;
            let input = concat!(
                "{\"id\":\"a\",\"features\":{\"airtime\":0.8,\"nRBs\":5,\"snr\":4}}\n",
                "{\"id\":\"b\",\"features\":{\"airtime\":0.3,\"nRBs\":2,\"snr\":6}}\n",
            );
            let (_, first) = run(&model, &config, input);
            let (_, second) = run(&model, &config, input);
            assert_eq!(first, second);
        }
    }

    #[test]
    fn lime_session_requires_stats_and_reports_method() {
        let model = session_model();
        let mut config = ServeConfig::new(ExplainerChoice::Lime, 9);
        config.lime_samples = 300;
        let input = "{\"id\":\"x\",\"features\":{\"airtime\":0.7,\"nRBs\":4,\"snr\":2}}\n";
        let (stats, output) = run(&model, &config, input);
        assert_eq!(stats.processed, 1);
        assert!(output.contains("\"method\":\"lime\""));

        // A model stripped of its context cannot serve lime.
        let bare = EnsembleModel::from_parts(
            model.kind(),
            model.base_value(),
            model.learning_rate(),
            model.trees().to_vec(),
            model.feature_names().to_vec(),
        )
        .unwrap();
        let mut out = Vec::new();
        assert!(run_session(&bare, &config, input.as_bytes(), &mut out).is_err());
    }
}
