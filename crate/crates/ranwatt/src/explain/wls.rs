//! Weighted least squares via normal equations.

use crate::dataset::Matrix;
use crate::{Error, Result};

/// Solution of a weighted least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct WlsSolution {
    pub coefficients: Vec<f64>,
    /// True when the normal equations were near-singular and a small
    /// ridge term was added to solve them.
    pub stabilized: bool,
}

/// Relative pivot threshold below which the system counts as singular.
const SINGULAR_TOL: f64 = 1e-12;
/// Ridge scales tried on a singular system, relative to the mean
/// diagonal of the normal matrix.
const RIDGE_EPSILONS: [f64; 2] = [1e-8, 1e-4];

/// Minimizes `sum_i w_i (design_i . beta - response_i)^2`.
///
/// The normal equations are formed explicitly and solved by Gaussian
/// elimination with partial pivoting. A near-singular system (for
/// example, a duplicated design column) is retried with a small ridge
/// term added to the diagonal and reported through
/// [`WlsSolution::stabilized`] rather than treated as an error.
pub fn weighted_least_squares(
    design: &Matrix,
    weights: &[f64],
    response: &[f64],
) -> Result<WlsSolution> {
    let m = design.n_rows();
    let p = design.n_cols();
    if p == 0 {
        return Err(Error::invalid("design matrix has no columns"));
    }
    if m < p {
        return Err(Error::invalid(format!(
            "need at least as many rows as columns, got {m} rows for {p} columns"
        )));
    }
    if weights.len() != m || response.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: weights.len().min(response.len()),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("weights must be finite and non-negative"));
    }
    if !weights.iter().any(|w| *w > 0.0) {
        return Err(Error::invalid("all sample weights are zero"));
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("response contains a non-finite value"));
    }

    // A = X^T W X, b = X^T W y.
    let mut a = vec![vec![0.0f64; p]; p];
    let mut b = vec![0.0f64; p];
    for i in 0..m {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        let row = design.row(i);
        for j in 0..p {
            let wj = w * row[j];
            b[j] += wj * response[i];
            for k in j..p {
                a[j][k] += wj * row[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[j][k] = a[k][j];
        }
    }

    if let Some(coefficients) = solve(&a, &b) {
        return Ok(WlsSolution {
            coefficients,
            stabilized: false,
        });
    }

    let mean_diag = (0..p).map(|j| a[j][j].abs()).sum::<f64>() / p as f64;
    let scale = if mean_diag > 0.0 { mean_diag } else { 1.0 };
    for eps in RIDGE_EPSILONS {
        let mut ridged = a.clone();
        for (j, row) in ridged.iter_mut().enumerate() {
            row[j] += eps * scale;
        }
        if let Some(coefficients) = solve(&ridged, &b) {
            return Ok(WlsSolution {
                coefficients,
                stabilized: true,
            });
        }
    }
    Err(Error::invalid(
        "normal equations are singular even after ridge stabilization",
    ))
}

/// Gaussian elimination with partial pivoting; `None` when a pivot falls
/// below the relative singularity threshold.
fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let p = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();

    let scale = m
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let tol = scale * SINGULAR_TOL;

    for col in 0..p {
        let mut pivot = col;
        for row in col + 1..p {
            if m[row][col].abs() > m[pivot][col].abs() {
                pivot = row;
            }
        }
        if m[pivot][col].abs() < tol {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..p {
            let factor = m[row][col] / m[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..p {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }

    let mut x = vec![0.0f64; p];
    for col in (0..p).rev() {
        let mut acc = rhs[col];
        for k in col + 1..p {
            acc -= m[col][k] * x[k];
        }
        x[col] = acc / m[col][col];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn unit_weights_reproduce_ordinary_least_squares() {
        // y = 2x + 1 exactly; OLS must recover it exactly.
        let x = design(&[
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 2.0],
            vec![1.0, 3.0],
        ]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let w = [1.0, 1.0, 1.0, 1.0];
        let sol = weighted_least_squares(&x, &w, &y).unwrap();
        assert!(!sol.stabilized);
        assert!((sol.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((sol.coefficients[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_excludes_a_point() {
        // Outlier at x=2 carries no weight, so the line ignores it.
        let x = design(&[
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 2.0],
            vec![1.0, 3.0],
        ]);
        let y = [1.0, 3.0, 100.0, 7.0];
        let w = [1.0, 1.0, 0.0, 1.0];
        let sol = weighted_least_squares(&x, &w, &y).unwrap();
        assert!((sol.coefficients[0] - 1.0).abs() < 1e-10);
        assert!((sol.coefficients[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn all_zero_weights_error() {
        let x = design(&[vec![1.0], vec![1.0]]);
        assert!(weighted_least_squares(&x, &[0.0, 0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn duplicate_column_takes_the_stabilized_path() {
        let x = design(&[
            vec![1.0, 2.0, 2.0],
            vec![1.0, 3.0, 3.0],
            vec![1.0, 5.0, 5.0],
            vec![1.0, 7.0, 7.0],
        ]);
        let y = [5.0, 7.0, 11.0, 15.0];
        let w = [1.0; 4];
        let sol = weighted_least_squares(&x, &w, &y).unwrap();
        assert!(sol.stabilized);
        assert!(sol.coefficients.iter().all(|c| c.is_finite()));
        // The duplicated columns share the slope; their sum carries it.
        let slope = sol.coefficients[1] + sol.coefficients[2];
        assert!((slope - 2.0).abs() < 1e-3, "combined slope {slope}");
    }

    #[test]
    fn residuals_are_weight_orthogonal_to_the_design() {
        // First-order optimality: X^T W (X beta - y) = 0.
        let x = design(&[
            vec![1.0, 0.3, -1.0],
            vec![1.0, 1.7, 0.4],
            vec![1.0, 2.2, 2.1],
            vec![1.0, 3.9, -0.7],
            vec![1.0, 4.1, 1.3],
            vec![1.0, 5.6, 0.2],
        ]);
        let y = [0.2, 1.9, 3.4, 2.8, 5.0, 4.4];
        let w = [0.5, 1.0, 2.0, 1.0, 0.1, 3.0];
        let sol = weighted_least_squares(&x, &w, &y).unwrap();
        for j in 0..3 {
            let mut dot = 0.0;
            for i in 0..6 {
                let fitted: f64 = (0..3).map(|k| x.get(i, k) * sol.coefficients[k]).sum();
                dot += w[i] * x.get(i, j) * (fitted - y[i]);
            }
            assert!(dot.abs() < 1e-9, "gradient component {j} = {dot}");
        }
    }

    #[test]
    fn matches_gradient_descent_oracle() {
        let x = design(&[
            vec![1.0, 0.0],
            vec![1.0, 0.5],
            vec![1.0, 1.0],
            vec![1.0, 1.5],
            vec![1.0, 2.0],
        ]);
        let y = [1.1, 1.9, 3.2, 3.8, 5.1];
        let w = [1.0, 2.0, 1.0, 0.5, 1.5];
        let sol = weighted_least_squares(&x, &w, &y).unwrap();

        // Independent oracle: plain gradient descent on the weighted SSE.
        let mut beta = [0.0f64; 2];
        let lr = 0.02;
        for _ in 0..200_000 {
            let mut grad = [0.0f64; 2];
            for i in 0..5 {
                let fitted = beta[0] * x.get(i, 0) + beta[1] * x.get(i, 1);
                let err = fitted - y[i];
                grad[0] += 2.0 * w[i] * err * x.get(i, 0);
                grad[1] += 2.0 * w[i] * err * x.get(i, 1);
            }
            beta[0] -= lr * grad[0];
            beta[1] -= lr * grad[1];
        }
        assert!((sol.coefficients[0] - beta[0]).abs() < 1e-6);
        assert!((sol.coefficients[1] - beta[1]).abs() < 1e-6);
    }

    #[test]
    fn underdetermined_system_errors() {
        let x = design(&[vec![1.0, 2.0, 3.0]]);
        assert!(weighted_least_squares(&x, &[1.0], &[1.0]).is_err());
    }
}
