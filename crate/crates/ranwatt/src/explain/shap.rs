//! Shapley-value attribution with interventional (marginal) value
//! functions.
//!
//! The value of a feature coalition `S` is the model's mean prediction
//! over composites that take the coalition's features from the explained
//! instance and every other feature from a background row:
//! `v(S) = mean_b f(x_S : background_b_rest)`. Exact attribution
//! enumerates all `2^d` coalitions and applies the classic factorial
//! weights; the sampled engine averages marginal contributions over
//! random feature orderings and then spreads any leftover additivity
//! residual over the features in proportion to their attribution
//! magnitudes, so plots still decompose the prediction.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{Attribution, AttributionMethod, Background, GlobalSummary, Predictor};
use crate::dataset::Matrix;
use crate::rng;
use crate::{Error, Result};

/// Largest dimensionality explained by exact coalition enumeration;
/// above this, `shap_auto` and summaries switch to the sampled engine.
pub const EXACT_ENUMERATION_LIMIT: usize = 14;

fn check_inputs<P: Predictor>(
    model: &P,
    feature_names: &[String],
    x: &[f64],
    background: &Background,
) -> Result<usize> {
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
    if background.n_cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: background.n_cols(),
        });
    }
    Ok(d)
}

/// Mean prediction over the raw background rows; the value of the empty
/// coalition.
fn mean_background_prediction<P: Predictor>(model: &P, background: &Background) -> f64 {
    let k = background.n_rows();
    let mut sum = 0.0;
    for row in background.matrix().rows() {
        sum += model.predict_one(row);
    }
    sum / k as f64
}

/// Exact Shapley attribution by full coalition enumeration.
///
/// Cost is `2^d * k` model evaluations for `k` background rows, so the
/// dimensionality is capped at [`EXACT_ENUMERATION_LIMIT`]. The result
/// satisfies the efficiency property by construction: the attributions
/// plus the base value telescope to the full-coalition value.
pub fn shap_exact<P: Predictor>(
    model: &P,
    feature_names: &[String],
    x: &[f64],
    background: &Background,
) -> Result<Attribution> {
    let d = check_inputs(model, feature_names, x, background)?;
    if d > EXACT_ENUMERATION_LIMIT {
        return Err(Error::invalid(format!(
            "exact enumeration is capped at {EXACT_ENUMERATION_LIMIT} features, got {d}; \
             use the sampled engine"
        )));
    }

    let k = background.n_rows();
    let n_masks = 1usize << d;
    let bg = background.matrix();

    // v[mask] = mean prediction with mask features from x, rest background.
    let v: Vec<f64> = (0..n_masks)
        .into_par_iter()
        .map(|mask| {
            let mut z = vec![0.0f64; d];
            let mut sum = 0.0;
            for b in 0..k {
                let row = bg.row(b);
                for j in 0..d {
                    z[j] = if mask & (1 << j) != 0 { x[j] } else { row[j] };
                }
                sum += model.predict_one(&z);
            }
            sum / k as f64
        })
        .collect();

    // w[s] = s! (d-1-s)! / d!, the weight of a coalition of size s.
    let mut factorial = vec![1.0f64; d + 1];
    for i in 1..=d {
        factorial[i] = factorial[i - 1] * i as f64;
    }
    let weights: Vec<f64> = (0..d)
        .map(|s| factorial[s] * factorial[d - 1 - s] / factorial[d])
        .collect();

    let mut phi = vec![0.0f64; d];
    for (j, phi_j) in phi.iter_mut().enumerate() {
        let bit = 1usize << j;
        for mask in 0..n_masks {
            if mask & bit == 0 {
                *phi_j += weights[(mask as u32).count_ones() as usize] * (v[mask | bit] - v[mask]);
            }
        }
    }

    Attribution::new(
        feature_names.to_vec(),
        x.to_vec(),
        phi,
        v[0],
        model.predict_one(x),
        AttributionMethod::ShapExact,
        None,
        None,
    )
}

/// Sampled Shapley attribution by averaging marginal contributions over
/// random feature orderings.
///
/// Draw `t` shuffles its ordering on the independent stream
/// `(seed, "draw", t)`, so results do not depend on evaluation order.
/// `n_draws` must be at least `2 * d`. After averaging, the difference
/// between `prediction - base_value` and the attribution total is spread
/// over the features in proportion to `|phi|` (uniformly when all
/// attributions are zero), restoring additivity for plotting.
pub fn shap_sampled<P: Predictor>(
    model: &P,
    feature_names: &[String],
    x: &[f64],
    background: &Background,
    n_draws: usize,
    seed: u64,
) -> Result<Attribution> {
    let d = check_inputs(model, feature_names, x, background)?;
    if n_draws < 2 * d {
        return Err(Error::invalid(format!(
            "need at least {} permutation draws for {d} features, got {n_draws}",
            2 * d
        )));
    }

    let k = background.n_rows();
    let bg = background.matrix();
    let v_empty = mean_background_prediction(model, background);

    let per_draw: Vec<Vec<f64>> = (0..n_draws)
        .into_par_iter()
        .map(|t| {
            let mut draw_rng = rng::stream(seed, "draw", t as u64);
            let mut order: Vec<usize> = (0..d).collect();
            order.shuffle(&mut draw_rng);

            // Composite rows start as raw background and absorb the
            // instance one feature at a time, in permutation order.
            let mut composites: Vec<Vec<f64>> = (0..k).map(|b| bg.row(b).to_vec()).collect();
            let mut contributions = vec![0.0f64; d];
            let mut v_prev = v_empty;
            for &j in &order {
                let mut sum = 0.0;
                for comp in composites.iter_mut() {
                    comp[j] = x[j];
                    sum += model.predict_one(comp);
                }
                let v_cur = sum / k as f64;
                contributions[j] = v_cur - v_prev;
                v_prev = v_cur;
            }
            contributions
        })
        .collect();

    let mut phi = vec![0.0f64; d];
    for contributions in &per_draw {
        for j in 0..d {
            phi[j] += contributions[j];
        }
    }
    for p in phi.iter_mut() {
        *p /= n_draws as f64;
    }

    let prediction = model.predict_one(x);
    let residual = (prediction - v_empty) - phi.iter().sum::<f64>();
    let magnitude: f64 = phi.iter().map(|p| p.abs()).sum();
    if magnitude > 0.0 {
        for p in phi.iter_mut() {
            *p += residual * p.abs() / magnitude;
        }
    } else {
        for p in phi.iter_mut() {
            *p += residual / d as f64;
        }
    }

    Attribution::new(
        feature_names.to_vec(),
        x.to_vec(),
        phi,
        v_empty,
        prediction,
        AttributionMethod::ShapSampled,
        Some(seed),
        None,
    )
}

/// Exact attribution when the dimensionality permits it, sampled
/// otherwise.
pub fn shap_auto<P: Predictor>(
    model: &P,
    feature_names: &[String],
    x: &[f64],
    background: &Background,
    n_draws: usize,
    seed: u64,
) -> Result<Attribution> {
    if model.n_features() <= EXACT_ENUMERATION_LIMIT {
        shap_exact(model, feature_names, x, background)
    } else {
        shap_sampled(model, feature_names, x, background, n_draws, seed)
    }
}

/// Settings for summarizing attributions over an instance set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryConfig {
    /// Permutation draws per instance when the sampled engine is used.
    pub sampled_draws: usize,
    pub seed: u64,
}

impl SummaryConfig {
    pub fn new(seed: u64) -> Self {
        SummaryConfig {
            sampled_draws: 200,
            seed,
        }
    }
}

/// Explains every row of `instances` and aggregates the attributions
/// into a [`GlobalSummary`].
///
/// Instance `i` uses the exact engine when the dimensionality is within
/// [`EXACT_ENUMERATION_LIMIT`], otherwise the sampled engine seeded from
/// `(config.seed, "instance", i)`.
pub fn shap_summary<P: Predictor>(
    model: &P,
    feature_names: &[String],
    instances: &Matrix,
    background: &Background,
    config: &SummaryConfig,
) -> Result<GlobalSummary> {
    let d = model.n_features();
    if instances.n_rows() == 0 {
        return Err(Error::invalid("summary needs at least one instance"));
    }
    if instances.n_cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: instances.n_cols(),
        });
    }
    let exact = d <= EXACT_ENUMERATION_LIMIT;
    let attributions: Vec<Attribution> = (0..instances.n_rows())
        .into_par_iter()
        .map(|i| {
            let x = instances.row(i);
            if exact {
                shap_exact(model, feature_names, x, background)
            } else {
                shap_sampled(
                    model,
                    feature_names,
                    x,
                    background,
                    config.sampled_draws,
                    rng::sub_seed(config.seed, "instance", i as u64),
                )
            }
        })
        .collect::<Result<_>>()?;

    let values: Vec<Vec<f64>> = attributions.iter().map(|a| a.feature_values.clone()).collect();
    let phis: Vec<Vec<f64>> = attributions.iter().map(|a| a.phi.clone()).collect();
    GlobalSummary::build(
        if exact {
            AttributionMethod::ShapExact
        } else {
            AttributionMethod::ShapSampled
        },
        if exact { None } else { Some(config.seed) },
        feature_names,
        &values,
        &phis,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Matrix;

    /// f(x) = b + w . x — Shapley values against a background have the
    /// closed form w_j * (x_j - mean(bg_j)).
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

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    fn grid_background(d: usize, k: usize) -> Background {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|b| (0..d).map(|j| ((b * (j + 3) + j) % 7) as f64 * 0.5 - 1.0).collect())
            .collect();
        Background::new(Matrix::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn exact_matches_affine_closed_form() {
        let model = Affine {
            w: vec![2.0, -1.5, 0.25, 3.0],
            b: 7.0,
        };
        let bg = grid_background(4, 9);
        let x = [1.0, 0.5, -2.0, 0.75];
        let attr = shap_exact(&model, &names(4), &x, &bg).unwrap();
        for j in 0..4 {
            let mean_j = (0..9).map(|b| bg.matrix().get(b, j)).sum::<f64>() / 9.0;
            let expected = model.w[j] * (x[j] - mean_j);
            assert!(
                (attr.phi[j] - expected).abs() < 1e-12,
                "phi[{j}] = {}, expected {expected}",
                attr.phi[j]
            );
        }
        // Efficiency: base + total reproduces the prediction.
        let total: f64 = attr.phi.iter().sum();
        assert!((attr.base_value + total - attr.prediction).abs() < 1e-12);
    }

    #[test]
    fn unused_feature_gets_exactly_zero() {
        // Model ignores feature 1 entirely.
        let model = Affine {
            w: vec![4.0, 0.0, -2.0],
            b: 1.0,
        };
        let bg = grid_background(3, 5);
        let attr = shap_exact(&model, &names(3), &[0.3, 99.0, -0.7], &bg).unwrap();
        assert_eq!(attr.phi[1], 0.0);

        let sampled =
            shap_sampled(&model, &names(3), &[0.3, 99.0, -0.7], &bg, 16, 5).unwrap();
        assert_eq!(sampled.phi[1], 0.0);
    }

    #[test]
    fn exact_matches_all_permutations_oracle() {
        // Independent oracle: average marginal contributions over every
        // permutation of a 4-feature product model.
        struct Product;
        impl Predictor for Product {
            fn n_features(&self) -> usize {
                4
            }
            fn predict_one(&self, x: &[f64]) -> f64 {
                x[0] * x[1] + 2.0 * x[2] - x[3] * x[0] + 0.5
            }
        }
        let model = Product;
        let bg = grid_background(4, 6);
        let x = [1.5, -0.5, 2.0, 1.0];
        let attr = shap_exact(&model, &names(4), &x, &bg).unwrap();

        let d = 4usize;
        let k = bg.n_rows();
        let value = |mask: usize| -> f64 {
            let mut sum = 0.0;
            for b in 0..k {
                let mut z: Vec<f64> = bg.matrix().row(b).to_vec();
                for j in 0..d {
                    if mask & (1 << j) != 0 {
                        z[j] = x[j];
                    }
                }
                sum += model.predict_one(&z);
            }
            sum / k as f64
        };
        let mut oracle = vec![0.0f64; d];
        let mut perm: Vec<usize> = (0..d).collect();
        let mut count = 0usize;
        // Heap's algorithm over all 24 permutations.
        fn heaps(k: usize, perm: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
            if k == 1 {
                visit(perm);
                return;
            }
            for i in 0..k {
                heaps(k - 1, perm, visit);
                if k % 2 == 0 {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        heaps(d, &mut perm, &mut |p: &[usize]| {
            let mut mask = 0usize;
            let mut prev = value(0);
            for &j in p {
                mask |= 1 << j;
                let cur = value(mask);
                oracle[j] += cur - prev;
                prev = cur;
            }
            count += 1;
        });
        for o in oracle.iter_mut() {
            *o /= count as f64;
        }

        for j in 0..d {
            assert!(
                (attr.phi[j] - oracle[j]).abs() < 1e-10,
                "phi[{j}] = {} vs oracle {}",
                attr.phi[j],
                oracle[j]
            );
        }
    }

    #[test]
    fn sampled_approaches_exact_and_repairs_additivity() {
        struct Bumpy;
        impl Predictor for Bumpy {
            fn n_features(&self) -> usize {
                5
            }
            fn predict_one(&self, x: &[f64]) -> f64 {
                x[0].max(x[1]) + x[2] * x[3] - 0.5 * x[4] + x[0] * x[2]
            }
        }
        let model = Bumpy;
        let bg = grid_background(5, 8);
        let x = [1.2, -0.3, 0.8, 1.5, -1.0];
        let exact = shap_exact(&model, &names(5), &x, &bg).unwrap();
        let sampled = shap_sampled(&model, &names(5), &x, &bg, 4000, 11).unwrap();

        let scale = exact.phi.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        for j in 0..5 {
            assert!(
                (exact.phi[j] - sampled.phi[j]).abs() <= 0.05 * scale,
                "phi[{j}]: exact {} sampled {}",
                exact.phi[j],
                sampled.phi[j]
            );
        }
        let total: f64 = sampled.phi.iter().sum();
        assert!((sampled.base_value + total - sampled.prediction).abs() < 1e-9);
    }

    #[test]
    fn sampled_requires_enough_draws_and_is_deterministic() {
        let model = Affine {
            w: vec![1.0, 2.0, 3.0],
            b: 0.0,
        };
        let bg = grid_background(3, 4);
        let x = [0.1, 0.2, 0.3];
        assert!(shap_sampled(&model, &names(3), &x, &bg, 5, 1).is_err());

        let a = shap_sampled(&model, &names(3), &x, &bg, 24, 9).unwrap();
        let b = shap_sampled(&model, &names(3), &x, &bg, 24, 9).unwrap();
        assert_eq!(a, b);
        let c = shap_sampled(&model, &names(3), &x, &bg, 24, 10).unwrap();
        assert_ne!(a.phi, c.phi);
    }

    #[test]
    fn exact_rejects_too_many_features() {
        let d = EXACT_ENUMERATION_LIMIT + 1;
        let model = Affine {
            w: vec![1.0; d],
            b: 0.0,
        };
        let bg = grid_background(d, 2);
        let x = vec![0.0; d];
        assert!(shap_exact(&model, &names(d), &x, &bg).is_err());
        // shap_auto falls back to the sampled engine instead.
        let attr = shap_auto(&model, &names(d), &x, &bg, 2 * d, 3).unwrap();
        assert_eq!(attr.method, AttributionMethod::ShapSampled);
    }

    #[test]
    fn summary_aggregates_and_orders_features() {
        let model = Affine {
            w: vec![0.1, 5.0, -2.0],
            b: 1.0,
        };
        let bg = grid_background(3, 4);
        let instances = Matrix::from_rows(&[
            vec![0.5, 1.0, -0.5],
            vec![-0.2, 2.0, 0.3],
            vec![0.9, -1.0, 0.8],
        ])
        .unwrap();
        let summary = shap_summary(
            &model,
            &names(3),
            &instances,
            &bg,
            &SummaryConfig::new(4),
        )
        .unwrap();
        assert_eq!(summary.n_instances, 3);
        assert_eq!(summary.method, AttributionMethod::ShapExact);
        // The heavy-coefficient feature dominates the ranking.
        assert_eq!(summary.features[0].name, "f1");
        assert!(summary.features[0].mean_abs_phi >= summary.features[1].mean_abs_phi);
        assert_eq!(summary.features[0].points.len(), 3);
    }
}
