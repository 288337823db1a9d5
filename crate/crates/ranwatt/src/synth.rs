//! Bundled synthetic telemetry generator.
//!
//! Produces CSV datasets shaped like base-station telemetry captures: a
//! timestamp and two non-numeric configuration columns, a block of
//! numeric radio features, and a `power` target in watts. Two variants
//! are provided — an uplink-only capture and a joint downlink/uplink
//! capture. The ground-truth power function is dominated by the
//! airtime-family features (`airtime`, `selected_airtime`, and for the
//! joint variant `bsr_ul` and `gput_ul`), with a long tail of weak
//! contributors and Gaussian measurement noise, so trained models and
//! attribution engines have realistic structure to find.
//!
//! Generation is deterministic in `(variant, rows, seed)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::rng::stream;
use crate::{Error, Result};

/// Non-numeric configuration columns every generated capture carries;
/// they are dropped (not modeled) by default.
pub const DROP_COLUMNS: [&str; 3] = ["timestamp", "cpu_platform", "tx_mode"];

/// Which capture to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Uplink-only capture: 16 numeric features.
    Ul,
    /// Joint downlink/uplink capture: 19 numeric features with
    /// `_ul`/`_dl` suffixes.
    Dlul,
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Ul => "ul",
            Variant::Dlul => "dlul",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "ul" => Ok(Variant::Ul),
            "dlul" => Ok(Variant::Dlul),
            other => Err(Error::parse(format!(
                "unknown dataset variant {other:?} (expected ul or dlul)"
            ))),
        }
    }

    /// Numeric feature names in CSV column order (target excluded).
    pub fn feature_names(&self) -> Vec<&'static str> {
        self.schema().iter().map(|f| f.name).collect()
    }

    fn schema(&self) -> &'static [FeatureSpec] {
        match self {
            Variant::Ul => UL_SCHEMA,
            Variant::Dlul => DLUL_SCHEMA,
        }
    }

    fn base_power(&self) -> f64 {
        match self {
            Variant::Ul => 31.5,
            Variant::Dlul => 36.0,
        }
    }

    fn noise_std(&self) -> f64 {
        match self {
            Variant::Ul => 0.117,
            Variant::Dlul => 0.22,
        }
    }

    /// Interaction terms of the ground-truth power function, on
    /// normalized feature values. Index positions follow the schema.
    fn interactions(&self, z: &[f64]) -> f64 {
        match self {
            // airtime * nRBs load product plus airtime curvature.
            Variant::Ul => 0.12 * z[0] * z[2] + 0.075 * z[0] * z[0],
            // airtime_ul * gput_ul coupling, airtime_ul curvature, and a
            // weak downlink airtime * throughput product.
            Variant::Dlul => 0.142 * z[0] * z[5] + 0.079 * z[0] * z[0] + 0.055 * z[1] * z[8],
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum DrawKind {
    /// Continuous uniform on [lo, hi).
    Uniform,
    /// Integer uniform on [lo, hi], emitted without decimals.
    Integer,
}

/// One numeric column: its sampling range and its weight (in watts over
/// the normalized [0, 1] range) in the ground-truth power function.
#[derive(Debug, Clone, Copy)]
struct FeatureSpec {
    name: &'static str,
    kind: DrawKind,
    lo: f64,
    hi: f64,
    weight: f64,
}

const fn uniform(name: &'static str, lo: f64, hi: f64, weight: f64) -> FeatureSpec {
    FeatureSpec {
        name,
        kind: DrawKind::Uniform,
        lo,
        hi,
        weight,
    }
}

const fn integer(name: &'static str, lo: f64, hi: f64, weight: f64) -> FeatureSpec {
    FeatureSpec {
        name,
        kind: DrawKind::Integer,
        lo,
        hi,
        weight,
    }
}

/// Uplink-only capture. Dominant contributors: airtime,
/// selected_airtime, nRBs, bsr.
const UL_SCHEMA: &[FeatureSpec] = &[
    uniform("airtime", 0.05, 0.95, 0.48),
    uniform("selected_airtime", 0.05, 0.95, 0.36),
    integer("nRBs", 6.0, 100.0, 0.30),
    uniform("bsr", 0.0, 1200.0, 0.225),
    uniform("gput", 0.0, 35.0, 0.075),
    uniform("thr", 0.0, 40.0, 0.067),
    uniform("snr", 5.0, 30.0, -0.053),
    uniform("turbodec_it", 1.0, 6.0, 0.045),
    uniform("dec_time", 100.0, 900.0, 0.037),
    integer("selected_mcs", 0.0, 28.0, 0.033),
    uniform("clockspeed", 1.7, 3.0, 0.03),
    uniform("bler", 0.0, 0.3, -0.027),
    integer("underflows", 0.0, 20.0, -0.023),
    integer("lates", 0.0, 15.0, -0.018),
    integer("num_subsamples", 1000.0, 4000.0, 0.015),
    uniform("rssi", -95.0, -60.0, -0.015),
];

/// Joint downlink/uplink capture. Dominant contributors: airtime_ul,
/// bsr_ul, gput_ul, selected_airtime_ul.
const DLUL_SCHEMA: &[FeatureSpec] = &[
    uniform("airtime_ul", 0.05, 0.95, 0.472),
    uniform("airtime_dl", 0.05, 0.95, 0.110),
    uniform("selected_airtime_ul", 0.05, 0.95, 0.346),
    uniform("selected_airtime_dl", 0.05, 0.95, 0.079),
    uniform("bsr_ul", 0.0, 1200.0, 0.410),
    uniform("gput_ul", 0.0, 35.0, 0.378),
    uniform("gput_dl", 0.0, 80.0, 0.094),
    uniform("thr_ul", 0.0, 40.0, 0.086),
    uniform("thr_dl", 0.0, 90.0, 0.094),
    uniform("bler_ul", 0.0, 0.3, -0.063),
    uniform("bler_dl", 0.0, 0.3, -0.047),
    uniform("snr_ul", 5.0, 30.0, -0.055),
    uniform("rssi_dl", -95.0, -60.0, -0.032),
    integer("selected_mcs_ul", 0.0, 28.0, 0.047),
    integer("selected_mcs_dl", 0.0, 28.0, 0.040),
    integer("nRBs_ul", 6.0, 100.0, 0.071),
    uniform("turbodec_it", 1.0, 6.0, 0.079),
    uniform("dec_time", 100.0, 900.0, 0.086),
    uniform("txgain_ul", 0.0, 30.0, 0.047),
];

const CPU_PLATFORMS: [&str; 2] = ["sdr-x86", "sdr-arm"];
const TX_MODES: [&str; 2] = ["tdd", "fdd"];
const EPOCH_START: u64 = 1_700_000_000;

/// Generates a telemetry capture as CSV text.
///
/// Columns: `timestamp,cpu_platform,tx_mode,<features...>,power`. The
/// same `(variant, rows, seed)` always yields the same bytes.
pub fn generate_csv(variant: Variant, rows: usize, seed: u64) -> Result<String> {
    if rows == 0 {
        return Err(Error::invalid("cannot generate an empty capture"));
    }
    let schema = variant.schema();
    let mut rng = stream(seed, "synth", variant as u64);
    let noise = Normal::new(0.0, variant.noise_std())
        .expect("noise std is a positive constant");

    let mut out = String::with_capacity(rows * (schema.len() + 4) * 12);
    out.push_str("timestamp,cpu_platform,tx_mode");
    for spec in schema {
        out.push(',');
        out.push_str(spec.name);
    }
    out.push_str(",power\n");

    let mut raw = vec![0.0; schema.len()];
    let mut norm = vec![0.0; schema.len()];
    for i in 0..rows {
        let platform = CPU_PLATFORMS[rng.random_range(0..CPU_PLATFORMS.len())];
        let tx_mode = TX_MODES[rng.random_range(0..TX_MODES.len())];
        for (j, spec) in schema.iter().enumerate() {
            let v = match spec.kind {
                DrawKind::Uniform => rng.random_range(spec.lo..spec.hi),
                DrawKind::Integer => rng.random_range(spec.lo as i64..=spec.hi as i64) as f64,
            };
            raw[j] = v;
            norm[j] = (v - spec.lo) / (spec.hi - spec.lo);
        }
        let mut power = variant.base_power() + variant.interactions(&norm);
        for (j, spec) in schema.iter().enumerate() {
            power += spec.weight * norm[j];
        }
        power += noise.sample(&mut rng);

        out.push_str(&format!(
            "{},{},{}",
            EPOCH_START + i as u64,
            platform,
            tx_mode
        ));
        for (j, spec) in schema.iter().enumerate() {
            match spec.kind {
                DrawKind::Uniform => out.push_str(&format!(",{:.6}", raw[j])),
                DrawKind::Integer => out.push_str(&format!(",{}", raw[j] as i64)),
            }
        }
        out.push_str(&format!(",{power:.6}\n"));
    }
    Ok(out)
}

/// Writes a generated capture to `path`.
pub fn write_csv(path: &std::path::Path, variant: Variant, rows: usize, seed: u64) -> Result<()> {
    let csv = generate_csv(variant, rows, seed)?;
    std::fs::write(path, csv)?;
    Ok(())
}
