//! LIME: local surrogate explanation by weighted linear fits on
//! perturbed neighborhoods.
//!
//! Around an instance `x`, the engine draws perturbations
//! `z_j ~ Normal(x_j, std_j)` per feature (training-set standard
//! deviations), weights each perturbation by a Gaussian kernel on its
//! standardized distance from `x`, and fits a weighted linear model in
//! standardized coordinates `(z_j - mean_j) / std_j`. Constant features
//! (training min equals max) are held at `x_j`, excluded from the design,
//! and reported with a coefficient and contribution of exactly zero.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::wls::weighted_least_squares;
use super::{Attribution, AttributionMethod, GlobalSummary, Predictor};
use crate::dataset::{FeatureStats, Matrix};
use crate::rng;
use crate::{Error, Result};

/// LIME sampling and reporting settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimeConfig {
    /// Number of perturbed samples; must exceed the feature count.
    pub n_samples: usize,
    /// Gaussian kernel width in standardized distance units;
    /// `None` selects `0.75 * sqrt(n_features)`.
    pub kernel_width: Option<f64>,
    /// Keep only this many features (by largest standardized
    /// coefficient magnitude); the rest report zero.
    pub top_k: usize,
    pub seed: u64,
}

impl LimeConfig {
    /// Defaults: 5000 samples, automatic kernel width, top 10 features.
    pub fn new(seed: u64) -> Self {
        LimeConfig {
            n_samples: 5000,
            kernel_width: None,
            top_k: 10,
            seed,
        }
    }
}

/// A LIME explanation: the attribution plus the raw-space surrogate.
///
/// `coefficients[j]` is the local slope of the surrogate in the original
/// units of feature `j` (zero for constant or trimmed features), and
/// `intercept` completes the raw-space affine surrogate
/// `g(z) = intercept + coefficients . z`. The attribution's `phi[j]` is
/// the surrogate's contribution at the instance,
/// `coefficients[j] * (x_j - mean_j)`, and its `base_value` is the
/// surrogate's value at the training means.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeResult {
    pub attribution: Attribution,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// True when the surrogate fit needed ridge stabilization.
    pub stabilized: bool,
}

/// Explains one instance with a local weighted-linear surrogate.
///
/// Deterministic for a given seed: perturbations are drawn sample-major,
/// feature-minor from one ChaCha8 stream, and constant features consume
/// no draws. The attribution's `prediction` is the model's own output at
/// `x`, bit for bit.
pub fn lime<P: Predictor>(
    model: &P,
    feature_names: &[String],
    x: &[f64],
    stats: &FeatureStats,
    config: &LimeConfig,
) -> Result<LimeResult> {
    let d = model.n_features();
    if d == 0 {
        return Err(Error::invalid("model has no features"));
    }
    if feature_names.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: feature_names.len(),
        });
    }
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("instance contains a non-finite value"));
    }
    if stats.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: stats.len(),
        });
    }
    if config.top_k == 0 {
        return Err(Error::invalid("top_k must be at least 1"));
    }

    let active: Vec<usize> = (0..d).filter(|&j| !stats.get(j).is_constant()).collect();
    let p = active.len() + 1; // intercept column
    if config.n_samples < p + 1 {
        return Err(Error::invalid(format!(
            "need more than {p} samples for {} varying features, got {}",
            active.len(),
            config.n_samples
        )));
    }
    let kernel_width = match config.kernel_width {
        Some(w) if w.is_finite() && w > 0.0 => w,
        Some(w) => {
            return Err(Error::invalid(format!(
                "kernel width must be finite and positive, got {w}"
            )))
        }
        None => 0.75 * (d as f64).sqrt(),
    };

    let normals: Vec<Normal<f64>> = active
        .iter()
        .map(|&j| {
            Normal::new(x[j], stats.get(j).std)
                .map_err(|e| Error::invalid(format!("bad perturbation distribution: {e}")))
        })
        .collect::<Result<_>>()?;

    let mut sampler = rng::rng_from(config.seed);
    let n = config.n_samples;
    let mut design_rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut responses = Vec::with_capacity(n);
    let mut z = x.to_vec();
    for _ in 0..n {
        let mut row = Vec::with_capacity(p);
        row.push(1.0);
        let mut dist_sq = 0.0;
        for (a, &j) in active.iter().enumerate() {
            let s = stats.get(j);
            let value = normals[a].sample(&mut sampler);
            z[j] = value;
            let standardized_step = (value - x[j]) / s.std;
            dist_sq += standardized_step * standardized_step;
            row.push((value - s.mean) / s.std);
        }
        design_rows.push(row);
        weights.push((-dist_sq / (kernel_width * kernel_width)).exp());
        responses.push(model.predict_one(&z));
    }

    let design = Matrix::from_rows(&design_rows)?;
    let solution = weighted_least_squares(&design, &weights, &responses)?;
    let intercept_std = solution.coefficients[0];
    let mut beta: Vec<f64> = solution.coefficients[1..].to_vec();

    // Keep the top_k standardized coefficients by magnitude (ties go to
    // the lower feature index); zero out the rest.
    if beta.len() > config.top_k {
        let mut order: Vec<usize> = (0..beta.len()).collect();
        order.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
        for &a in &order[config.top_k..] {
            beta[a] = 0.0;
        }
    }

    let mut coefficients = vec![0.0f64; d];
    let mut phi = vec![0.0f64; d];
    for (a, &j) in active.iter().enumerate() {
        let s = stats.get(j);
        coefficients[j] = beta[a] / s.std;
        phi[j] = beta[a] * (x[j] - s.mean) / s.std;
    }
    let intercept = intercept_std
        - active
            .iter()
            .map(|&j| coefficients[j] * stats.get(j).mean)
            .sum::<f64>();

    let note = solution
        .stabilized
        .then(|| "ridge-stabilized surrogate fit".to_string());
    let attribution = Attribution::new(
        feature_names.to_vec(),
        x.to_vec(),
        phi,
        intercept_std,
        model.predict_one(x),
        AttributionMethod::Lime,
        Some(config.seed),
        note,
    )?;
    Ok(LimeResult {
        attribution,
        coefficients,
        intercept,
        stabilized: solution.stabilized,
    })
}

/// Explains every row of `instances` with LIME and aggregates the
/// attributions into a [`GlobalSummary`].
///
/// Instance `i` runs with the seed `(config.seed, "instance", i)`, so the
/// summary is reproducible and independent of evaluation order.
pub fn lime_summary<P: Predictor>(
    model: &P,
    feature_names: &[String],
    instances: &Matrix,
    stats: &FeatureStats,
    config: &LimeConfig,
) -> Result<GlobalSummary> {
    if instances.n_rows() == 0 {
        return Err(Error::invalid("summary needs at least one instance"));
    }
    if instances.n_cols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            actual: instances.n_cols(),
        });
    }
    let results: Vec<LimeResult> = (0..instances.n_rows())
        .into_par_iter()
        .map(|i| {
            let per_instance = LimeConfig {
                seed: rng::sub_seed(config.seed, "instance", i as u64),
                ..*config
            };
            lime(model, feature_names, instances.row(i), stats, &per_instance)
        })
        .collect::<Result<_>>()?;

    let values: Vec<Vec<f64>> = results
        .iter()
        .map(|r| r.attribution.feature_values.clone())
        .collect();
    let phis: Vec<Vec<f64>> = results.iter().map(|r| r.attribution.phi.clone()).collect();
    GlobalSummary::build(
        AttributionMethod::Lime,
        Some(config.seed),
        feature_names,
        &values,
        &phis,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureStat;

    struct Affine {
        w: Vec<f64>,
        b: f64,
    }

    impl Predictor for Affine {
        fn n_features(&self) -> usize {
            self.w.len()
        }

        fn predict_one(&self, x: &[f64]) -> f64 {
            self.b + self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }
    }

    struct Constant(f64, usize);

    impl Predictor for Constant {
        fn n_features(&self) -> usize {
            self.1
        }

        fn predict_one(&self, _: &[f64]) -> f64 {
            self.0
        }
    }

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    fn spread_stats(d: usize) -> FeatureStats {
        FeatureStats::from_vec(
            (0..d)
                .map(|j| FeatureStat {
                    mean: j as f64 * 0.5,
                    std: 1.0 + 0.25 * j as f64,
                    min: -10.0,
                    max: 10.0,
                })
                .collect(),
        )
    }

    #[test]
    fn constant_model_gives_zero_attributions_and_exact_prediction() {
        let model = Constant(13.53, 3);
        let cfg = LimeConfig {
            n_samples: 400,
            ..LimeConfig::new(1)
        };
        let result = lime(&model, &names(3), &[0.4, 1.0, -0.2], &spread_stats(3), &cfg).unwrap();
        assert_eq!(result.attribution.prediction, 13.53);
        for j in 0..3 {
            assert!(result.attribution.phi[j].abs() < 1e-9);
            assert!(result.coefficients[j].abs() < 1e-9);
        }
        assert!((result.intercept - 13.53).abs() < 1e-9);
    }

    #[test]
    fn exactly_affine_model_is_recovered() {
        // f(x) = 2 x0 - 3 x1 + 42: the surrogate family contains the
        // model, so the weighted fit recovers it to solver precision.
        let model = Affine {
            w: vec![2.0, -3.0],
            b: 42.0,
        };
        let cfg = LimeConfig {
            n_samples: 300,
            ..LimeConfig::new(5)
        };
        let x = [1.0, 2.0];
        let result = lime(&model, &names(2), &x, &spread_stats(2), &cfg).unwrap();
        assert!((result.coefficients[0] - 2.0).abs() < 1e-9);
        assert!((result.coefficients[1] + 3.0).abs() < 1e-9);
        assert!((result.intercept - 42.0).abs() < 1e-8);
        assert_eq!(result.attribution.prediction, model.predict_one(&x));
        assert!(!result.stabilized);
    }

    #[test]
    fn constant_features_are_held_fixed_and_report_zero() {
        let model = Affine {
            w: vec![1.5, 4.0, -2.0],
            b: 0.0,
        };
        let mut stats = vec![
            FeatureStat {
                mean: 0.0,
                std: 1.0,
                min: -3.0,
                max: 3.0,
            };
            3
        ];
        stats[1] = FeatureStat {
            mean: 7.0,
            std: 0.0,
            min: 7.0,
            max: 7.0,
        };
        let stats = FeatureStats::from_vec(stats);
        let cfg = LimeConfig {
            n_samples: 500,
            ..LimeConfig::new(2)
        };
        let result = lime(&model, &names(3), &[0.5, 7.0, -0.5], &stats, &cfg).unwrap();
        assert_eq!(result.attribution.phi[1], 0.0);
        assert_eq!(result.coefficients[1], 0.0);
        // The varying features are still recovered.
        assert!((result.coefficients[0] - 1.5).abs() < 1e-8);
        assert!((result.coefficients[2] + 2.0).abs() < 1e-8);
    }

    #[test]
    fn top_k_trims_to_the_largest_coefficients() {
        let model = Affine {
            w: vec![0.1, 5.0, 0.2, -4.0, 0.05],
            b: 1.0,
        };
        let cfg = LimeConfig {
            n_samples: 600,
            top_k: 2,
            ..LimeConfig::new(3)
        };
        let x = [1.0, 1.0, 1.0, 1.0, 1.0];
        let result = lime(&model, &names(5), &x, &spread_stats(5), &cfg).unwrap();
        let nonzero: Vec<usize> = (0..5).filter(|&j| result.coefficients[j] != 0.0).collect();
        assert_eq!(nonzero, vec![1, 3]);
        assert!(result.attribution.phi[0] == 0.0 && result.attribution.phi[2] == 0.0);
    }

    #[test]
    fn lime_is_deterministic_per_seed() {
        let model = Affine {
            w: vec![1.0, -2.0],
            b: 5.0,
        };
        let cfg = LimeConfig {
            n_samples: 200,
            ..LimeConfig::new(8)
        };
        let x = [0.3, -0.6];
        let a = lime(&model, &names(2), &x, &spread_stats(2), &cfg).unwrap();
        let b = lime(&model, &names(2), &x, &spread_stats(2), &cfg).unwrap();
        assert_eq!(a, b);
        let c = lime(
            &model,
            &names(2),
            &x,
            &spread_stats(2),
            &LimeConfig { seed: 9, ..cfg },
        )
        .unwrap();
        assert_ne!(a.attribution.phi, c.attribution.phi);
    }

    #[test]
    fn explicit_default_kernel_width_matches_automatic() {
        let model = Affine {
            w: vec![1.0, 2.0, 3.0, 4.0],
            b: 0.0,
        };
        let x = [0.1, 0.2, 0.3, 0.4];
        let auto = LimeConfig {
            n_samples: 150,
            ..LimeConfig::new(4)
        };
        let explicit = LimeConfig {
            kernel_width: Some(0.75 * 2.0),
            ..auto
        };
        let a = lime(&model, &names(4), &x, &spread_stats(4), &auto).unwrap();
        let b = lime(&model, &names(4), &x, &spread_stats(4), &explicit).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_samples_error() {
        let model = Affine {
            w: vec![1.0, 2.0, 3.0],
            b: 0.0,
        };
        let cfg = LimeConfig {
            n_samples: 3,
            ..LimeConfig::new(1)
        };
        assert!(lime(&model, &names(3), &[0.0; 3], &spread_stats(3), &cfg).is_err());
    }

    #[test]
    fn summary_over_instances_is_deterministic() {
        let model = Affine {
            w: vec![3.0, -1.0],
            b: 2.0,
        };
        let instances =
            Matrix::from_rows(&[vec![0.5, 1.5], vec![-1.0, 0.2], vec![2.0, -0.7]]).unwrap();
        let cfg = LimeConfig {
            n_samples: 150,
            ..LimeConfig::new(6)
        };
        let a = lime_summary(&model, &names(2), &instances, &spread_stats(2), &cfg).unwrap();
        let b = lime_summary(&model, &names(2), &instances, &spread_stats(2), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_instances, 3);
        assert_eq!(a.features[0].name, "f0");
    }
}
