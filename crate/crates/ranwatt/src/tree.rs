//! CART-style regression trees with axis-aligned splits.
//!
//! Trees grow greedily: at each node the builder scans a (possibly
//! subsampled) set of candidate features and every midpoint between
//! consecutive distinct sorted values, keeping the split with the highest
//! gain. Two scoring modes share one implementation:
//!
//! * `VarianceReduction` fits raw targets; internally the targets `y` are
//!   treated as gradients `g = -y` with unit curvature `h = 1` and no
//!   regularization, which makes the gain identical to the classic
//!   squared-error variance reduction (scaled by a constant factor of two,
//!   which does not change the argmax) and the leaf value the arithmetic
//!   mean of the targets.
//! * `SecondOrderGain` fits caller-supplied gradient/curvature pairs with
//!   an L2 leaf penalty `lambda`; gain is
//!   `G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)` and the
//!   leaf value is `-G/(H+lambda)`.
//!
//! Ties are broken deterministically: the lowest feature index wins, and
//! within a feature the smallest threshold wins. A node becomes a leaf
//! when the depth limit is reached, when a split would leave a child with
//! fewer than `min_samples_leaf` rows, or when all gradients (and
//! curvatures) in the node are identical — so a constant target column
//! yields a single-leaf tree exactly, with no epsilon involved.

use rand_chacha::ChaCha8Rng;

use crate::dataset::Matrix;
use crate::rng::sample_without_replacement;
use crate::{Error, Result};

/// How many candidate features each node considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSubset {
    /// Every feature is a candidate (no generator draw is consumed).
    All,
    /// A uniform draw of this many distinct features per node.
    Count(usize),
}

/// Split scoring mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    VarianceReduction,
    SecondOrderGain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// Maximum number of split levels above a leaf; at least 1.
    pub max_depth: usize,
    /// Minimum training rows in every leaf; at least 1.
    pub min_samples_leaf: usize,
    pub features_per_split: FeatureSubset,
    pub split_mode: SplitMode,
    /// L2 leaf penalty, used only in `SecondOrderGain` mode.
    pub second_order_lambda: f64,
}

/// What the tree is fit against.
pub enum FitTarget<'a> {
    /// Raw regression targets, for `VarianceReduction` mode.
    Targets(&'a [f64]),
    /// Per-row gradient and curvature, for `SecondOrderGain` mode.
    Gradients { grad: &'a [f64], hess: &'a [f64] },
}

/// A tree node; children are indices into the owning tree's node array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A fitted regression tree. The root is node 0 and children always have
/// larger indices than their parent (preorder layout).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    n_features: usize,
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    /// Grows a tree on `x` against `target` under `params`, drawing any
    /// per-node feature subsets from `rng`.
    pub fn fit(
        x: &Matrix,
        target: FitTarget<'_>,
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let n = x.n_rows();
        let d = x.n_cols();
        if n == 0 || d == 0 {
            return Err(Error::invalid("cannot fit a tree on an empty matrix"));
        }
        validate_params(params, d)?;
        if n < params.min_samples_leaf {
            return Err(Error::invalid(format!(
                "{n} rows cannot satisfy min_samples_leaf = {}",
                params.min_samples_leaf
            )));
        }

        // Reduce both modes to (gradient, curvature, lambda).
        let (grad, hess, lambda): (Vec<f64>, Vec<f64>, f64) = match (params.split_mode, target) {
            (SplitMode::VarianceReduction, FitTarget::Targets(y)) => {
                if y.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: y.len(),
                    });
                }
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("target contains a non-finite value"));
                }
                (y.iter().map(|v| -v).collect(), vec![1.0; n], 0.0)
            }
            (SplitMode::SecondOrderGain, FitTarget::Gradients { grad, hess }) => {
                if grad.len() != n || hess.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: grad.len().min(hess.len()),
                    });
                }
                if grad.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("gradient contains a non-finite value"));
                }
                if hess.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::invalid(
                        "curvature contains a negative or non-finite value",
                    ));
                }
                (grad.to_vec(), hess.to_vec(), params.second_order_lambda)
            }
            (SplitMode::VarianceReduction, FitTarget::Gradients { .. }) => {
                return Err(Error::invalid(
                    "variance-reduction mode takes raw targets, not gradients",
                ));
            }
            (SplitMode::SecondOrderGain, FitTarget::Targets(_)) => {
                return Err(Error::invalid(
                    "second-order mode takes gradient/curvature pairs, not raw targets",
                ));
            }
        };

        let mut builder = Builder {
            x,
            grad: &grad,
            hess: &hess,
            lambda,
            params,
            rng,
            nodes: Vec::new(),
        };
        let rows: Vec<usize> = (0..n).collect();
        builder.build(rows, 0);
        Ok(RegressionTree {
            n_features: d,
            nodes: builder.nodes,
        })
    }

    /// Builds a tree from explicit nodes, validating the structure: node 0
    /// is the root, every node is reached exactly once, child indices are
    /// in range, and all values are finite.
    pub fn from_nodes(n_features: usize, nodes: Vec<TreeNode>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::invalid("tree needs at least one feature"));
        }
        if nodes.is_empty() {
            return Err(Error::invalid("tree needs at least one node"));
        }
        let mut visited = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= nodes.len() {
                return Err(Error::invalid(format!("child index {i} out of range")));
            }
            if visited[i] {
                return Err(Error::invalid(format!(
                    "node {i} is reachable more than once; not a tree"
                )));
            }
            visited[i] = true;
            match nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= n_features {
                        return Err(Error::invalid(format!(
                            "split on feature {feature} but tree has {n_features} features"
                        )));
                    }
                    if !threshold.is_finite() {
                        return Err(Error::invalid("split threshold is not finite"));
                    }
                    if left == right {
                        return Err(Error::invalid(format!(
                            "node {i} has identical children"
                        )));
                    }
                    stack.push(right);
                    stack.push(left);
                }
                TreeNode::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(Error::invalid("leaf value is not finite"));
                    }
                }
            }
        }
        if let Some(orphan) = visited.iter().position(|v| !v) {
            return Err(Error::invalid(format!(
                "node {orphan} is unreachable from the root"
            )));
        }
        Ok(RegressionTree { n_features, nodes })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Longest split chain above any leaf.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left).max(walk(nodes, right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    /// Routes `x` to a leaf: at each split take the left child when the
    /// feature value is less than or equal to the threshold.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return Ok(value),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// Serializes to the versioned portable text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "tree v1 features {} nodes {}\n",
            self.n_features,
            self.nodes.len()
        ));
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => out.push_str(&format!("{i} split {feature} {threshold} {left} {right}\n")),
                TreeNode::Leaf { value } => out.push_str(&format!("{i} leaf {value}\n")),
            }
        }
        out
    }

    /// Parses the text form produced by [`RegressionTree::to_text`],
    /// re-validating the structure.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse("empty tree text"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 6 || parts[0] != "tree" || parts[1] != "v1" || parts[2] != "features"
            || parts[4] != "nodes"
        {
            return Err(Error::parse(format!("bad tree header: {header:?}")));
        }
        let n_features: usize = parts[3]
            .parse()
            .map_err(|_| Error::parse("bad feature count in tree header"))?;
        let n_nodes: usize = parts[5]
            .parse()
            .map_err(|_| Error::parse("bad node count in tree header"))?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for (expect_idx, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let idx: usize = parts
                .first()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(format!("bad node line: {line:?}")))?;
            if idx != expect_idx {
                return Err(Error::parse(format!(
                    "node lines out of order: expected {expect_idx}, got {idx}"
                )));
            }
            match parts.get(1) {
                Some(&"split") if parts.len() == 6 => {
                    let feature = parts[2]
                        .parse()
                        .map_err(|_| Error::parse(format!("bad split feature: {line:?}")))?;
                    let threshold = parts[3]
                        .parse()
                        .map_err(|_| Error::parse(format!("bad split threshold: {line:?}")))?;
                    let left = parts[4]
                        .parse()
                        .map_err(|_| Error::parse(format!("bad split child: {line:?}")))?;
                    let right = parts[5]
                        .parse()
                        .map_err(|_| Error::parse(format!("bad split child: {line:?}")))?;
                    nodes.push(TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    });
                }
                Some(&"leaf") if parts.len() == 3 => {
                    let value = parts[2]
                        .parse()
                        .map_err(|_| Error::parse(format!("bad leaf value: {line:?}")))?;
                    nodes.push(TreeNode::Leaf { value });
                }
                _ => return Err(Error::parse(format!("bad node line: {line:?}"))),
            }
        }
        if nodes.len() != n_nodes {
            return Err(Error::parse(format!(
                "tree header promised {n_nodes} nodes, found {}",
                nodes.len()
            )));
        }
        RegressionTree::from_nodes(n_features, nodes)
    }
}

fn validate_params(params: &TreeParams, d: usize) -> Result<()> {
    if params.max_depth == 0 {
        return Err(Error::invalid("max_depth must be at least 1"));
    }
    if params.min_samples_leaf == 0 {
        return Err(Error::invalid("min_samples_leaf must be at least 1"));
    }
    if let FeatureSubset::Count(k) = params.features_per_split {
        if k == 0 || k > d {
            return Err(Error::invalid(format!(
                "features_per_split = {k} is outside 1..={d}"
            )));
        }
    }
    if !(params.second_order_lambda.is_finite() && params.second_order_lambda >= 0.0) {
        return Err(Error::invalid("second_order_lambda must be finite and >= 0"));
    }
    Ok(())
}

struct Builder<'a> {
    x: &'a Matrix,
    grad: &'a [f64],
    hess: &'a [f64],
    lambda: f64,
    params: &'a TreeParams,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let mut g_sum = 0.0;
        let mut h_sum = 0.0;
        for &r in &rows {
            g_sum += self.grad[r];
            h_sum += self.hess[r];
        }

        let splittable = depth < self.params.max_depth
            && rows.len() >= 2 * self.params.min_samples_leaf
            && !self.is_degenerate(&rows);
        if splittable {
            if let Some((feature, threshold)) = self.best_split(&rows, g_sum, h_sum) {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&r| self.x.get(r, feature) <= threshold);
                let idx = self.nodes.len();
                self.nodes.push(TreeNode::Leaf { value: 0.0 }); // patched below
                let left = self.build(left_rows, depth + 1);
                let right = self.build(right_rows, depth + 1);
                self.nodes[idx] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                return idx;
            }
        }

        let idx = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            value: -g_sum / (h_sum + self.lambda),
        });
        idx
    }

    /// True when every gradient (and curvature) in the node is bitwise
    /// identical, in which case no split can improve the fit.
    fn is_degenerate(&self, rows: &[usize]) -> bool {
        let g0 = self.grad[rows[0]];
        let h0 = self.hess[rows[0]];
        rows.iter()
            .all(|&r| self.grad[r] == g0 && self.hess[r] == h0)
    }

    fn best_split(&mut self, rows: &[usize], g_sum: f64, h_sum: f64) -> Option<(usize, f64)> {
        let d = self.x.n_cols();
        let candidates: Vec<usize> = match self.params.features_per_split {
            FeatureSubset::All => (0..d).collect(),
            FeatureSubset::Count(k) => {
                let mut drawn = sample_without_replacement(self.rng, d, k);
                drawn.sort_unstable();
                drawn
            }
        };

        let parent_score = g_sum * g_sum / (h_sum + self.lambda);
        let min_leaf = self.params.min_samples_leaf;
        let n = rows.len();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<(f64, f64, f64)> = Vec::with_capacity(n);

        // Candidates are scanned in ascending feature order and, within a
        // feature, ascending threshold order; only strictly larger gains
        // replace the incumbent, so the lowest feature index and smallest
        // threshold win ties.
        for &f in &candidates {
            sorted.clear();
            sorted.extend(
                rows.iter()
                    .map(|&r| (self.x.get(r, f), self.grad[r], self.hess[r])),
            );
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut g_left = 0.0;
            let mut h_left = 0.0;
            for i in 0..n - 1 {
                g_left += sorted[i].1;
                h_left += sorted[i].2;
                if sorted[i].0 >= sorted[i + 1].0 {
                    continue; // threshold only between distinct values
                }
                let n_left = i + 1;
                if n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let g_right = g_sum - g_left;
                let h_right = h_sum - h_left;
                let gain = g_left * g_left / (h_left + self.lambda)
                    + g_right * g_right / (h_right + self.lambda)
                    - parent_score;
                if gain > 0.0 && best.is_none_or(|(b, _, _)| gain > b) {
                    let mut threshold = 0.5 * (sorted[i].0 + sorted[i + 1].0);
                    if threshold >= sorted[i + 1].0 {
                        // Midpoint of adjacent representable values can
                        // round up to the upper value; fall back to the
                        // lower value so routing matches the scanned
                        // partition.
                        threshold = sorted[i].0;
                    }
                    best = Some((gain, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    fn params(max_depth: usize, min_leaf: usize) -> TreeParams {
        TreeParams {
            max_depth,
            min_samples_leaf: min_leaf,
            features_per_split: FeatureSubset::All,
            split_mode: SplitMode::VarianceReduction,
            second_order_lambda: 0.0,
        }
    }

    fn column(values: &[f64]) -> Matrix {
        Matrix::from_rows(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn depth_one_stump_splits_at_best_midpoint() {
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let y = [1.0, 2.0, 3.0, 4.0];
        let tree = RegressionTree::fit(&x, FitTarget::Targets(&y), &params(1, 1), &mut rng_from(0))
            .unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.n_leaves(), 2);
        match tree.nodes()[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 2.5);
            }
            _ => panic!("root should be a split"),
        }
        // Leaf values are the arithmetic means of each side.
        assert_eq!(tree.predict(&[1.0]).unwrap(), 1.5);
        assert_eq!(tree.predict(&[2.5]).unwrap(), 1.5); // equal routes left
        assert_eq!(tree.predict(&[3.0]).unwrap(), 3.5);
    }

    #[test]
    fn constant_target_yields_single_leaf_exactly() {
        let x = column(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = [0.1, 0.1, 0.1, 0.1, 0.1];
        let tree = RegressionTree::fit(&x, FitTarget::Targets(&y), &params(8, 1), &mut rng_from(0))
            .unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.predict(&[2.0]).unwrap(), 0.1);
    }

    #[test]
    fn min_samples_leaf_is_honored() {
        let x = column(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let y = [1.0, 1.0, 1.0, 10.0, 10.0, 10.0];
        let tree =
            RegressionTree::fit(&x, FitTarget::Targets(&y), &params(10, 3), &mut rng_from(0))
                .unwrap();
        // Only the 3|3 cut is legal; both leaves hold exactly 3 rows.
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.predict(&[0.0]).unwrap(), 1.0);
        assert_eq!(tree.predict(&[9.9]).unwrap(), 10.0);

        // Every leaf of a deeper tree still holds >= min_samples_leaf rows.
        let y2 = [5.0, 1.0, 8.0, 2.0, 9.0, 3.0];
        let tree2 =
            RegressionTree::fit(&x, FitTarget::Targets(&y2), &params(10, 2), &mut rng_from(0))
                .unwrap();
        let mut leaf_counts = std::collections::HashMap::new();
        for v in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0] {
            let mut i = 0usize;
            loop {
                match tree2.nodes()[i] {
                    TreeNode::Leaf { .. } => break,
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => i = if [v][feature] <= threshold { left } else { right },
                }
            }
            *leaf_counts.entry(i).or_insert(0usize) += 1;
        }
        assert!(leaf_counts.values().all(|&c| c >= 2));
    }

    #[test]
    fn equal_gain_prefers_lower_feature_index() {
        // Two identical columns: every split gain ties, so feature 0 wins.
        let x = Matrix::from_rows(&[
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
            vec![4.0, 4.0],
        ])
        .unwrap();
        let y = [1.0, 2.0, 3.0, 4.0];
        let tree = RegressionTree::fit(&x, FitTarget::Targets(&y), &params(3, 1), &mut rng_from(0))
            .unwrap();
        for node in tree.nodes() {
            if let TreeNode::Split { feature, .. } = node {
                assert_eq!(*feature, 0);
            }
        }
    }

    #[test]
    fn depth_limit_caps_tree_depth() {
        let x = column(&(0..64).map(|i| i as f64).collect::<Vec<_>>());
        let y: Vec<f64> = (0..64).map(|i| (i * 7 % 13) as f64).collect();
        for max_depth in [1, 2, 3, 5] {
            let tree = RegressionTree::fit(
                &x,
                FitTarget::Targets(&y),
                &params(max_depth, 1),
                &mut rng_from(0),
            )
            .unwrap();
            assert!(tree.depth() <= max_depth);
        }
    }

    #[test]
    fn second_order_with_zero_lambda_matches_variance_tree() {
        let x = Matrix::from_rows(
            &(0..40)
                .map(|i| vec![(i % 7) as f64, (i % 5) as f64, (i * 3 % 11) as f64])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let y: Vec<f64> = (0..40).map(|i| ((i * i) % 17) as f64 * 0.25 + 3.0).collect();

        let variance =
            RegressionTree::fit(&x, FitTarget::Targets(&y), &params(6, 2), &mut rng_from(9))
                .unwrap();

        let grad: Vec<f64> = y.iter().map(|v| -v).collect();
        let hess = vec![1.0; y.len()];
        let mut p2 = params(6, 2);
        p2.split_mode = SplitMode::SecondOrderGain;
        p2.second_order_lambda = 0.0;
        let second = RegressionTree::fit(
            &x,
            FitTarget::Gradients {
                grad: &grad,
                hess: &hess,
            },
            &p2,
            &mut rng_from(9),
        )
        .unwrap();

        assert_eq!(variance, second);
    }

    #[test]
    fn lambda_shrinks_leaf_values_toward_zero() {
        let x = column(&[1.0, 2.0]);
        let grad = [-4.0, -4.0];
        let hess = [1.0, 1.0];
        let mut p = params(3, 1);
        p.split_mode = SplitMode::SecondOrderGain;
        p.second_order_lambda = 2.0;
        let tree = RegressionTree::fit(
            &x,
            FitTarget::Gradients {
                grad: &grad,
                hess: &hess,
            },
            &p,
            &mut rng_from(0),
        )
        .unwrap();
        // Degenerate gradients: single leaf -G/(H+lambda) = 8/(2+2) = 2.
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.predict(&[1.5]).unwrap(), 2.0);
    }

    #[test]
    fn mode_and_target_kind_must_agree() {
        let x = column(&[1.0, 2.0]);
        let y = [1.0, 2.0];
        let grad = [-1.0, -2.0];
        let hess = [1.0, 1.0];
        let mut p2 = params(2, 1);
        p2.split_mode = SplitMode::SecondOrderGain;
        assert!(RegressionTree::fit(&x, FitTarget::Targets(&y), &p2, &mut rng_from(0)).is_err());
        assert!(RegressionTree::fit(
            &x,
            FitTarget::Gradients {
                grad: &grad,
                hess: &hess
            },
            &params(2, 1),
            &mut rng_from(0)
        )
        .is_err());
    }

    #[test]
    fn feature_subset_draws_are_deterministic() {
        let x = Matrix::from_rows(
            &(0..30)
                .map(|i| vec![(i % 3) as f64, (i % 4) as f64, (i % 5) as f64, i as f64])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let y: Vec<f64> = (0..30).map(|i| (i % 6) as f64).collect();
        let mut p = params(5, 1);
        p.features_per_split = FeatureSubset::Count(2);
        let a = RegressionTree::fit(&x, FitTarget::Targets(&y), &p, &mut rng_from(3)).unwrap();
        let b = RegressionTree::fit(&x, FitTarget::Targets(&y), &p, &mut rng_from(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn text_round_trip_preserves_tree() {
        let x = Matrix::from_rows(
            &(0..25)
                .map(|i| vec![(i % 5) as f64 * 0.3, (i % 7) as f64 - 2.5])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let y: Vec<f64> = (0..25).map(|i| (i % 4) as f64 * 1.7 - 0.9).collect();
        let tree = RegressionTree::fit(&x, FitTarget::Targets(&y), &params(4, 2), &mut rng_from(1))
            .unwrap();
        let text = tree.to_text();
        let back = RegressionTree::from_text(&text).unwrap();
        assert_eq!(tree, back);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn from_nodes_rejects_malformed_structures() {
        // Child index out of range.
        assert!(RegressionTree::from_nodes(
            1,
            vec![TreeNode::Split {
                feature: 0,
                threshold: 0.0,
                left: 1,
                right: 5
            }]
        )
        .is_err());
        // Cycle back to the root.
        assert!(RegressionTree::from_nodes(
            1,
            vec![
                TreeNode::Split {
                    feature: 0,
                    threshold: 0.0,
                    left: 0,
                    right: 1
                },
                TreeNode::Leaf { value: 1.0 }
            ]
        )
        .is_err());
        // Orphan node.
        assert!(RegressionTree::from_nodes(1, vec![TreeNode::Leaf { value: 1.0 }, TreeNode::Leaf { value: 2.0 }]).is_err());
        // Feature index beyond dimensionality.
        assert!(RegressionTree::from_nodes(
            1,
            vec![
                TreeNode::Split {
                    feature: 3,
                    threshold: 0.0,
                    left: 1,
                    right: 2
                },
                TreeNode::Leaf { value: 1.0 },
                TreeNode::Leaf { value: 2.0 }
            ]
        )
        .is_err());
    }

    #[test]
    fn predict_checks_dimension() {
        let x = column(&[1.0, 2.0, 3.0]);
        let y = [1.0, 2.0, 3.0];
        let tree = RegressionTree::fit(&x, FitTarget::Targets(&y), &params(2, 1), &mut rng_from(0))
            .unwrap();
        assert!(tree.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn fit_rejects_fewer_rows_than_min_leaf() {
        let x = column(&[1.0]);
        let y = [1.0];
        assert!(
            RegressionTree::fit(&x, FitTarget::Targets(&y), &params(2, 2), &mut rng_from(0))
                .is_err()
        );
    }
}
