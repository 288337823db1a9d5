//! Serving-path checks against the committed golden transcript, plus a
//! reduced-size throughput assertion for the record-replay loop.
//!
//! The files under `tests/data/` document the wire format end to end and
//! were produced with the command-line tool:
//!
//! ```text
//! ranwatt synth --variant ul --rows 600 --seed 5 --out ul.csv
//! ranwatt train --data ul.csv --model-kind rf --n-trees 30 --max-depth 8 \
//!     --background-size 40 --seed 11 --out golden_model.txt
//! ranwatt simulate --model golden_model.txt --explainer shap \
//!     --shap-draws 40 --seed 77 --stdio \
//!     < golden_input.jsonl > golden_transcript.jsonl
//! ```
//!
//! `golden_input.jsonl` mixes three valid records (one without an `id`,
//! which defaults to `record-<line>`) with a malformed JSON line, an
//! unknown-feature record, and a missing-feature record, so the committed
//! transcript shows every response and error shape the loop can emit.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ranwatt::ensemble::EnsembleModel;
use ranwatt::ric::{run_session, ExplainerChoice, ServeConfig};

fn data_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn golden_model() -> EnsembleModel {
    EnsembleModel::load(data_file("golden_model.txt")).expect("golden model loads")
}

fn golden_serve_config() -> ServeConfig {
    ServeConfig {
        shap_draws: 40,
        ..ServeConfig::new(ExplainerChoice::Shap, 77)
    }
}

#[test]
fn golden_transcript_replays_byte_for_byte() {
    let model = golden_model();
    let input = std::fs::read(data_file("golden_input.jsonl")).unwrap();
    let expected = std::fs::read(data_file("golden_transcript.jsonl")).unwrap();

    let mut output = Vec::new();
    let stats = run_session(&model, &golden_serve_config(), input.as_slice(), &mut output).unwrap();

    assert_eq!(stats.processed, 3, "three input records are valid");
    assert_eq!(stats.errors, 3, "three input lines are defective");
    assert_eq!(
        output, expected,
        "replaying the committed input must reproduce the committed transcript byte for byte"
    );

    // Spot-check the documented format: one JSON object per line, in input
    // order, with responses and errors interleaved as their lines arrive.
    let lines: Vec<serde_json::Value> = String::from_utf8(output)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0]["id"], "cell-7");
    assert_eq!(
        lines[1]["id"], "record-2",
        "a record without an id is named after its 1-based input line"
    );
    for (i, expected_line) in [(2, 3u64), (3, 4), (4, 5)] {
        assert_eq!(
            lines[i]["line"],
            serde_json::Value::from(expected_line),
            "error objects carry the 1-based input line number"
        );
        assert!(lines[i]["error"].is_string());
    }
    for i in [0usize, 1, 5] {
        for key in [
            "predicted_power",
            "base_value",
            "method",
            "attribution",
            "targets",
            "policy_note",
        ] {
            assert!(
                !lines[i][key].is_null(),
                "response line {i} must carry {key}"
            );
        }
    }
}

/// The serving loop must sustain interactive replay rates: the full-size
/// target is 1,000 records with sampled Shapley in under 5 minutes, checked
/// here at 1/20 scale (50 records in under 15 seconds) with the default
/// 200 permutation draws per record.
#[test]
fn replay_throughput_at_reduced_size() {
    const RECORDS: usize = 50;
    const BUDGET_SECS: f64 = 15.0;

    let model = golden_model();
    let background = model.background().expect("golden model embeds background");
    let names = model.feature_names();

    let mut input = String::new();
    for i in 0..RECORDS {
        let row = background.row(i % background.n_rows());
        let features: serde_json::Map<String, serde_json::Value> = names
            .iter()
            .zip(row)
            .map(|(n, v)| (n.clone(), serde_json::Value::from(*v)))
            .collect();
        let record = serde_json::json!({ "id": format!("r{i}"), "features": features });
        input.push_str(&record.to_string());
        input.push('\n');
    }

    let config = ServeConfig::new(ExplainerChoice::Shap, 99);
    let mut output = Vec::new();
    let start = Instant::now();
    let stats = run_session(&model, &config, input.as_bytes(), &mut output).unwrap();
    let elapsed = start.elapsed();

    assert_eq!(stats.processed, RECORDS);
    assert_eq!(stats.errors, 0);
    let secs = elapsed.as_secs_f64();
    println!(
        "replay throughput: {RECORDS} records in {secs:.2}s ({:.1} records/s)",
        RECORDS as f64 / secs
    );
    assert!(
        secs < BUDGET_SECS,
        "replay of {RECORDS} records took {secs:.2}s, budget {BUDGET_SECS}s"
    );
}
