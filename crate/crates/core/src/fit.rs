//! Damped least-squares (Levenberg-Marquardt) fitting for the small curve
//! models in this crate (at most six parameters), with the covariance of
//! the fitted parameters.
//!
//! The Jacobian is taken by central differences with per-parameter steps
//! h_j = 1e-7 (|p_j| + scale_j), where scale_j is frozen from the initial
//! guess (or 1 if that guess is 0, which is what the phase parameters
//! need). Normal equations use Marquardt's multiplicative damping and are
//! solved by Gaussian elimination with partial pivoting.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("fit did not converge after {iterations} iterations (chi2 = {chi_squared:.6e})")]
    DidNotConverge { iterations: usize, chi_squared: f64 },
    #[error("normal equations are singular; a parameter has no influence on the model")]
    SingularNormalEquations,
    #[error("invalid fit input: {0}")]
    Invalid(String),
}

/// An accepted step whose chi2 drop is below this fraction counts as slow;
/// RIDGE_PATIENCE consecutive slow steps end the fit as converged.
const RIDGE_RELATIVE_DROP: f64 = 1e-6;
const RIDGE_PATIENCE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Converged when an accepted step reduces chi2 by less than this
    /// fraction, or moves every parameter by less than this fraction of
    /// its scale.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            lambda_init: 1e-3,
            lambda_up: 10.0,
            lambda_down: 3.0,
            // Roughly sqrt(machine epsilon), the usual least-squares
            // stopping scale; much tighter and noisy-data fits crawl along
            // flat valleys without ever firing the step criterion.
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Parameter covariance, scaled by the reduced chi-square so it stays
    /// meaningful when the supplied weights are only relative.
    pub covariance: Vec<Vec<f64>>,
    pub chi_squared: f64,
    pub degrees_of_freedom: usize,
    pub iterations: usize,
}

impl FitResult {
    pub fn sigma(&self, j: usize) -> f64 {
        self.covariance[j][j].max(0.0).sqrt()
    }
}

/// Fit `model(params, x)` to (x, y) with weights w (typically 1/sigma^2)
/// starting from `initial`.
pub fn levenberg_marquardt(
    model: impl Fn(&[f64], f64) -> f64,
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    initial: &[f64],
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    let n = x.len();
    let p = initial.len();
    if n != y.len() || n != weights.len() {
        return Err(FitError::Invalid(format!(
            "length mismatch: {} x, {} y, {} weights",
            n,
            y.len(),
            weights.len()
        )));
    }
    if p == 0 || n < p {
        return Err(FitError::Invalid(format!(
            "{n} points cannot constrain {p} parameters"
        )));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(FitError::Invalid("non-finite initial guess".to_string()));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(FitError::Invalid("weights must be finite and >= 0".to_string()));
    }

    let scales: Vec<f64> = initial
        .iter()
        .map(|v| if *v == 0.0 { 1.0 } else { v.abs() })
        .collect();
    let chi2_of = |params: &[f64]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let r = y[i] - model(params, x[i]);
            total += weights[i] * r * r;
        }
        total
    };

    let mut params = initial.to_vec();
    let mut chi2 = chi2_of(&params);
    if !chi2.is_finite() {
        return Err(FitError::Invalid(
            "model is non-finite at the initial guess".to_string(),
        ));
    }
    let mut lambda = options.lambda_init;
    let mut jac = vec![vec![0.0; p]; n];
    let mut iterations = 0;
    let mut slow_steps = 0usize;

    while iterations < options.max_iterations {
        iterations += 1;

        // Central-difference Jacobian at the current point.
        let mut probe = params.clone();
        for j in 0..p {
            let h = 1e-7 * (params[j].abs() + scales[j]);
            probe[j] = params[j] + h;
            let mut column: Vec<f64> = Vec::with_capacity(n);
            for i in 0..n {
                column.push(model(&probe, x[i]));
            }
            probe[j] = params[j] - h;
            for (i, high) in column.iter_mut().enumerate() {
                *high = (*high - model(&probe, x[i])) / (2.0 * h);
            }
            probe[j] = params[j];
            for i in 0..n {
                jac[i][j] = column[i];
            }
        }

        // Normal equations A delta = g with A = J'WJ, g = J'W r.
        let mut a = vec![vec![0.0; p]; p];
        let mut g = vec![0.0; p];
        for i in 0..n {
            let r = y[i] - model(&params, x[i]);
            let w = weights[i];
            for j in 0..p {
                g[j] += w * jac[i][j] * r;
                for l in j..p {
                    a[j][l] += w * jac[i][j] * jac[i][l];
                }
            }
        }
        for j in 0..p {
            for l in 0..j {
                a[j][l] = a[l][j];
            }
        }
        // Damping retry loop: exits by accepting a step or by lambda
        // overflowing into a hard error.
        loop {
            let mut damped = a.clone();
            for (j, row) in damped.iter_mut().enumerate() {
                row[j] = a[j][j] * (1.0 + lambda);
                if row[j] == 0.0 {
                    row[j] = lambda;
                }
            }
            let step = match solve(damped, g.clone()) {
                Some(s) => s,
                None => {
                    lambda *= options.lambda_up;
                    if lambda > 1e14 {
                        return Err(FitError::SingularNormalEquations);
                    }
                    continue;
                }
            };
            let trial: Vec<f64> = params.iter().zip(&step).map(|(p, d)| p + d).collect();
            let trial_chi2 = chi2_of(&trial);
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let tiny_step = step
                    .iter()
                    .enumerate()
                    .all(|(j, d)| d.abs() <= options.tolerance * (params[j].abs() + scales[j]));
                let tiny_drop = (chi2 - trial_chi2)
                    <= options.tolerance * chi2.max(f64::MIN_POSITIVE);
                // Ridge watch: a run of accepted steps that each shave a
                // negligible fraction of chi2 means the remaining motion is
                // along a degenerate direction (for the fringe model,
                // i0 * sinc^2(phi1) = const with the envelope flattening
                // out). The run length guards against stopping during a
                // lambda-recovery phase, where one small step is normal.
                if chi2 - trial_chi2 <= RIDGE_RELATIVE_DROP * chi2.max(f64::MIN_POSITIVE) {
                    slow_steps += 1;
                } else {
                    slow_steps = 0;
                }
                params = trial;
                chi2 = trial_chi2;
                lambda = (lambda / options.lambda_down).max(1e-14);
                if tiny_step || tiny_drop || slow_steps >= RIDGE_PATIENCE {
                    return finish(model, x, weights, params, &scales, chi2, iterations);
                }
                break;
            }
            lambda *= options.lambda_up;
            if lambda > 1e14 {
                // Stuck in a corner the damping cannot leave.
                return Err(FitError::DidNotConverge {
                    iterations,
                    chi_squared: chi2,
                });
            }
        }
    }
    Err(FitError::DidNotConverge {
        iterations,
        chi_squared: chi2,
    })
}

/// Covariance at the solution: (J'WJ)^-1 times the reduced chi-square
/// (1 when there are no spare degrees of freedom). `scales` are the same
/// frozen step scales the iteration used; recomputing them from the
/// solution would collapse the difference step for parameters that
/// converged near zero. A parameter the model has stopped responding to
/// gets infinite variance rather than poisoning the whole inverse.
fn finish(
    model: impl Fn(&[f64], f64) -> f64,
    x: &[f64],
    weights: &[f64],
    params: Vec<f64>,
    scales: &[f64],
    chi_squared: f64,
    iterations: usize,
) -> Result<FitResult, FitError> {
    let n = x.len();
    let p = params.len();
    let mut a = vec![vec![0.0; p]; p];
    let mut probe = params.clone();
    let mut jac = vec![vec![0.0; p]; n];
    for j in 0..p {
        let h = 1e-7 * (params[j].abs() + scales[j]);
        probe[j] = params[j] + h;
        let mut column: Vec<f64> = (0..n).map(|i| model(&probe, x[i])).collect();
        probe[j] = params[j] - h;
        for (i, high) in column.iter_mut().enumerate() {
            *high = (*high - model(&probe, x[i])) / (2.0 * h);
        }
        probe[j] = params[j];
        for i in 0..n {
            jac[i][j] = column[i];
        }
    }
    for i in 0..n {
        for j in 0..p {
            for l in j..p {
                a[j][l] += weights[i] * jac[i][j] * jac[i][l];
            }
        }
    }
    for j in 0..p {
        for l in 0..j {
            a[j][l] = a[l][j];
        }
    }

    // Equilibrate to unit diagonal before inverting; the raw normal matrix
    // mixes parameter units spanning many orders of magnitude.
    let d: Vec<f64> = (0..p).map(|j| a[j][j].sqrt()).collect();
    let live: Vec<bool> = d.iter().map(|v| *v > 0.0 && v.is_finite()).collect();
    let mut hat = vec![vec![0.0; p]; p];
    for j in 0..p {
        if !live[j] {
            hat[j][j] = 1.0;
            continue;
        }
        for l in 0..p {
            if live[l] {
                hat[j][l] = a[j][l] / (d[j] * d[l]);
            }
        }
    }
    let hat_inverse = invert(&hat).ok_or(FitError::SingularNormalEquations)?;
    let dof = n - p;
    let scale = if dof > 0 { chi_squared / dof as f64 } else { 1.0 };
    let mut covariance = vec![vec![0.0; p]; p];
    for j in 0..p {
        for l in 0..p {
            covariance[j][l] = if live[j] && live[l] {
                hat_inverse[j][l] / (d[j] * d[l]) * scale
            } else if j == l {
                f64::INFINITY
            } else {
                0.0
            };
        }
    }
    Ok(FitResult {
        params,
        covariance,
        chi_squared,
        degrees_of_freedom: dof,
        iterations,
    })
}

/// Gaussian elimination with partial pivoting; None when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < f64::MIN_POSITIVE {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for k in (row + 1)..n {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        columns.push(solve(a.to_vec(), e)?);
    }
    // columns[j][i] is the (i, j) entry of the inverse.
    let mut inv = vec![vec![0.0; n]; n];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&xi| 3.0 - 0.5 * xi).collect();
        let w = vec![1.0; x.len()];
        let fit = levenberg_marquardt(
            |p, xi| p[0] + p[1] * xi,
            &x,
            &y,
            &w,
            &[1.0, 1.0],
            &FitOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(fit.params[0], 3.0, epsilon = 1e-9);
        assert_relative_eq!(fit.params[1], -0.5, epsilon = 1e-9);
        assert!(fit.chi_squared < 1e-18);
    }

    #[test]
    fn constant_model_covariance_is_standard_error_of_mean() {
        // Data {1, 2, 3} under y = p0: optimum 2, chi2 = 2, dof = 2, so
        // cov = (chi2/dof)/n = 1/3.
        let x = vec![0.0, 1.0, 2.0];
        let y = vec![1.0, 2.0, 3.0];
        let w = vec![1.0; 3];
        let fit = levenberg_marquardt(|p, _| p[0], &x, &y, &w, &[0.7], &FitOptions::default())
            .unwrap();
        assert_relative_eq!(fit.params[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(fit.chi_squared, 2.0, epsilon = 1e-10);
        assert_relative_eq!(fit.covariance[0][0], 1.0 / 3.0, epsilon = 1e-8);
    }

    #[test]
    fn recovers_gaussian_from_rough_start() {
        let truth = [2.5, 1.3];
        let x: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.1).collect();
        let model = |p: &[f64], xi: f64| p[0] * (-0.5 * (xi / p[1]).powi(2)).exp();
        let y: Vec<f64> = x.iter().map(|&xi| model(&truth, xi)).collect();
        let w = vec![1.0; x.len()];
        let fit = levenberg_marquardt(model, &x, &y, &w, &[1.0, 0.5], &FitOptions::default())
            .unwrap();
        assert_relative_eq!(fit.params[0], truth[0], epsilon = 1e-7);
        assert_relative_eq!(fit.params[1], truth[1], epsilon = 1e-7);
    }

    #[test]
    fn weights_favor_the_heavy_points() {
        // Two incompatible clusters; the fit of a constant must land on the
        // weighted mean.
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y = vec![0.0, 0.0, 1.0, 1.0];
        let w = vec![9.0, 9.0, 1.0, 1.0];
        let fit = levenberg_marquardt(|p, _| p[0], &x, &y, &w, &[0.5], &FitOptions::default())
            .unwrap();
        assert_relative_eq!(fit.params[0], 0.1, epsilon = 1e-9);
    }

    #[test]
    fn unused_parameter_gets_infinite_variance() {
        // The model never reads p[1]; the fit must still determine p[0]
        // and report that p[1] is unconstrained instead of failing.
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y = vec![1.0, 2.0, 3.0, 4.0];
        let w = vec![1.0; 4];
        let fit = levenberg_marquardt(
            |p, xi| p[0] + 0.0 * p[1] + xi,
            &x,
            &y,
            &w,
            &[0.0, 1.0],
            &FitOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(fit.params[0], 1.0, epsilon = 1e-9);
        assert!(fit.sigma(0).is_finite());
        assert_eq!(fit.sigma(1), f64::INFINITY);
        assert_eq!(fit.covariance[0][1], 0.0);
    }

    #[test]
    fn rejects_malformed_input() {
        let opts = FitOptions::default();
        assert!(levenberg_marquardt(|p, _| p[0], &[1.0], &[1.0, 2.0], &[1.0], &[0.0], &opts)
            .is_err());
        assert!(levenberg_marquardt(|p, _| p[0], &[1.0], &[1.0], &[-1.0], &[0.0], &opts).is_err());
        assert!(
            levenberg_marquardt(|p, _| p[0] + p[1], &[1.0], &[1.0], &[1.0], &[0.0, 0.0], &opts)
                .is_err()
        );
        assert!(
            levenberg_marquardt(|p, _| p[0], &[1.0], &[1.0], &[1.0], &[f64::NAN], &opts).is_err()
        );
    }

    #[test]
    fn solver_handles_pivoting() {
        // Leading zero forces a row swap.
        let a = vec![vec![0.0, 2.0], vec![3.0, 1.0]];
        let x = solve(a, vec![4.0, 5.0]).unwrap();
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert!(solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }
}
