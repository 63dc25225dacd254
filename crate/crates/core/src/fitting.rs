//! Least-squares fit of the scaled universal scalability law
//! `k·n / (1 + α(n - 1) + βn(n - 1))` to measured `(n, performance)` points.
//!
//! Damped Gauss-Newton (Marquardt scaling of the normal equations) with an
//! analytic Jacobian, bound constraints `α >= 0`, `β >= 0`, `k > 0` handled by
//! fixing active variables, and a log-spaced multi-start grid over `(α, β)`. For
//! every start `k` is initialized in closed form since the model is linear in it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions<S> {
    pub max_iterations: usize,
    /// Starts per axis of the `(α, β)` grid.
    pub grid_size: usize,
    pub alpha_range: (S, S),
    pub beta_range: (S, S),
    /// Stop when the projected gradient norm is below `tol · (1 + loss)`.
    pub gradient_tolerance: S,
}

impl<S: Scalar> Default for FitOptions<S> {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            grid_size: 5,
            alpha_range: (S::lit(1e-3), S::one()),
            beta_range: (S::lit(1e-5), S::lit(1e-1)),
            gradient_tolerance: S::lit(1e-8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult<S> {
    pub alpha: S,
    pub beta: S,
    pub k: S,
    pub rmse: S,
    pub n_points: usize,
    pub converged: bool,
    pub iterations: usize,
    /// The minimizer sits on a bound or the Jacobian is rank deficient, so the
    /// parameters are not uniquely determined by the data.
    pub degenerate: bool,
}

impl<S: Scalar> FitResult<S> {
    pub fn predict(&self, n: usize) -> S {
        usl_model(self.alpha, self.beta, self.k, S::from_count(n))
    }
}

pub fn usl_model<S: Scalar>(alpha: S, beta: S, k: S, n: S) -> S {
    k * n / (S::one() + alpha * (n - S::one()) + beta * n * (n - S::one()))
}

/// Partial derivatives of [`usl_model`] with respect to `(α, β, k)`.
pub fn usl_gradient<S: Scalar>(alpha: S, beta: S, k: S, n: S) -> [S; 3] {
    let nm1 = n - S::one();
    let d = S::one() + alpha * nm1 + beta * n * nm1;
    let base = n / d;
    let scaled = k * base / d;
    [-scaled * nm1, -scaled * n * nm1, base]
}

/// Root mean square residual of `fit` over `points`.
pub fn rmse<S: Scalar>(points: &[(usize, S)], fit: &FitResult<S>) -> Result<S> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(loss_at(points, [fit.alpha, fit.beta, fit.k]).sqrt() / S::from_count(points.len()).sqrt())
}

pub fn fit_usl<S: Scalar>(points: &[(usize, S)]) -> Result<FitResult<S>> {
    fit_usl_with(points, &FitOptions::default())
}

pub fn fit_usl_with<S: Scalar>(points: &[(usize, S)], options: &FitOptions<S>) -> Result<FitResult<S>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if points.iter().any(|&(n, _)| n == 0) {
        return Err(Error::Domain("group sizes must be positive".into()));
    }
    if points.iter().any(|&(_, y)| !y.is_finite()) {
        return Err(Error::Domain("performance values must be finite".into()));
    }
    let distinct = points.iter().map(|&(n, _)| n).collect::<BTreeSet<_>>().len();
    if distinct < 4 {
        return Err(Error::InsufficientPoints { needed: 4, got: distinct });
    }

    let alphas = log_grid(options.alpha_range, options.grid_size);
    let betas = log_grid(options.beta_range, options.grid_size);
    let mut best: Option<FitResult<S>> = None;
    for &alpha in &alphas {
        for &beta in &betas {
            let fit = descend(points, alpha, beta, options);
            if best.is_none_or(|b| fit.rmse < b.rmse) {
                best = Some(fit);
            }
        }
    }
    Ok(best.expect("non-empty grid"))
}

fn log_grid<S: Scalar>((lo, hi): (S, S), size: usize) -> Vec<S> {
    if size <= 1 {
        return vec![(lo * hi).sqrt()];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..size)
        .map(|i| (llo + (lhi - llo) * S::from_count(i) / S::from_count(size - 1)).exp())
        .collect()
}

const K_FLOOR: f64 = 1e-12;

fn loss_at<S: Scalar>(points: &[(usize, S)], [alpha, beta, k]: [S; 3]) -> S {
    points.iter().fold(S::zero(), |acc, &(n, y)| {
        let r = usl_model(alpha, beta, k, S::from_count(n)) - y;
        acc + r * r
    })
}

fn lower_bounds<S: Scalar>() -> [S; 3] {
    [S::zero(), S::zero(), S::lit(K_FLOOR)]
}

/// One damped Gauss-Newton descent from `(alpha, beta)` with the best `k` for them.
fn descend<S: Scalar>(points: &[(usize, S)], alpha: S, beta: S, options: &FitOptions<S>) -> FitResult<S> {
    let (num, den) = points.iter().fold((S::zero(), S::zero()), |(num, den), &(n, y)| {
        let g = usl_model(alpha, beta, S::one(), S::from_count(n));
        (num + g * y, den + g * g)
    });
    let k0 = if den > S::zero() { num / den } else { S::one() };
    let bounds = lower_bounds::<S>();
    let mut x = [alpha, beta, k0.max(bounds[2])];
    let mut loss = loss_at(points, x);
    let mut damping = S::lit(1e-3);
    let mut converged = false;
    let mut iterations = 0;
    let mut singular = false;

    while iterations < options.max_iterations {
        let (jtj, jtr) = normal_equations(points, x);
        // Gradient of the sum of squares is 2 Jᵀr.
        let grad = jtr.map(|v| v + v);
        let free: [bool; 3] = std::array::from_fn(|j| !(x[j] <= bounds[j] && grad[j] > S::zero()));
        let gnorm = (0..3)
            .filter(|&j| free[j])
            .fold(S::zero(), |acc, j| acc + grad[j] * grad[j])
            .sqrt();
        if gnorm <= options.gradient_tolerance * (S::one() + loss) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut accepted = false;
        while damping < S::lit(1e20) {
            let mut a = jtj;
            for j in 0..3 {
                a[j][j] = a[j][j] + damping * a[j][j].max(S::lit(1e-30));
            }
            let rhs = jtr.map(|v| -v);
            let Some(step) = solve_masked(a, rhs, free) else {
                singular = true;
                damping = damping * S::lit(10.0);
                continue;
            };
            let candidate: [S; 3] = std::array::from_fn(|j| (x[j] + step[j]).max(bounds[j]));
            let candidate_loss = loss_at(points, candidate);
            if candidate_loss < loss {
                x = candidate;
                loss = candidate_loss;
                damping = (damping / S::lit(3.0)).max(S::lit(1e-15));
                accepted = true;
                break;
            }
            damping = damping * S::lit(4.0);
        }
        if !accepted {
            break;
        }
    }

    let (jtj, _) = normal_equations(points, x);
    let rank_deficient = solve_masked(jtj, [S::one(); 3], [true; 3]).is_none();
    // β is effectively on its bound when its share of the denominator is at
    // rounding level over the whole sampled range.
    let n_max = S::from_count(points.iter().map(|&(n, _)| n).max().unwrap_or(1));
    let beta_share = x[1] * n_max * (n_max - S::one());
    let beta_negligible = beta_share <= S::epsilon().sqrt() * (S::one() + x[0] * (n_max - S::one()));
    let degenerate = beta_negligible || x[2] <= bounds[2] || rank_deficient || (singular && !converged);
    FitResult {
        alpha: x[0],
        beta: x[1],
        k: x[2],
        rmse: (loss / S::from_count(points.len())).sqrt(),
        n_points: points.len(),
        converged,
        iterations,
        degenerate,
    }
}

/// `JᵀJ` and `Jᵀr` at `x`.
fn normal_equations<S: Scalar>(points: &[(usize, S)], [alpha, beta, k]: [S; 3]) -> ([[S; 3]; 3], [S; 3]) {
    let mut jtj = [[S::zero(); 3]; 3];
    let mut jtr = [S::zero(); 3];
    for &(n, y) in points {
        let n = S::from_count(n);
        let r = usl_model(alpha, beta, k, n) - y;
        let g = usl_gradient(alpha, beta, k, n);
        for i in 0..3 {
            jtr[i] = jtr[i] + g[i] * r;
            for j in 0..3 {
                jtj[i][j] = jtj[i][j] + g[i] * g[j];
            }
        }
    }
    (jtj, jtr)
}

/// Solves `a x = b` restricted to the `free` coordinates (the others stay zero),
/// by Gaussian elimination with partial pivoting on an equilibrated system.
fn solve_masked<S: Scalar>(a: [[S; 3]; 3], b: [S; 3], free: [bool; 3]) -> Option<[S; 3]> {
    let idx: Vec<usize> = (0..3).filter(|&j| free[j]).collect();
    let m = idx.len();
    let mut out = [S::zero(); 3];
    if m == 0 {
        return Some(out);
    }
    // Symmetric diagonal scaling so the pivot test is scale free.
    let scale: Vec<S> = idx
        .iter()
        .map(|&i| {
            let d = a[i][i];
            if d > S::zero() {
                d.sqrt().recip()
            } else {
                S::one()
            }
        })
        .collect();
    let mut mat = vec![vec![S::zero(); m + 1]; m];
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            mat[r][c] = a[i][j] * scale[r] * scale[c];
        }
        mat[r][m] = b[i] * scale[r];
    }
    let eps = S::epsilon() * S::lit(1e3);
    for col in 0..m {
        let pivot = (col..m).max_by(|&p, &q| {
            mat[p][col]
                .abs()
                .partial_cmp(&mat[q][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(mat[pivot][col].abs() > eps) {
            return None;
        }
        mat.swap(col, pivot);
        for row in col + 1..m {
            let f = mat[row][col] / mat[col][col];
            for c in col..=m {
                let v = mat[col][c];
                mat[row][c] = mat[row][c] - f * v;
            }
        }
    }
    let mut sol = vec![S::zero(); m];
    for row in (0..m).rev() {
        let tail = (row + 1..m).fold(S::zero(), |acc, c| acc + mat[row][c] * sol[c]);
        sol[row] = (mat[row][m] - tail) / mat[row][row];
    }
    for (r, &i) in idx.iter().enumerate() {
        out[i] = sol[r] * scale[r];
    }
    Some(out)
}
