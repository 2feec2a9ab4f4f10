//! Damped Newton on the entropy-balancing dual.
//!
//! With columns standardized to `z~` and the normalization multiplier
//! eliminated in closed form, the dual becomes
//!
//! ```text
//! f(theta) = log sum_i exp(a_i + z~_i . theta) - t~ . theta
//! ```
//!
//! where `a_i` are optional base log-weights (zero for plain balancing). `f`
//! is smooth and convex; its gradient is the standardized moment residual of
//! `w = softmax(a + Z~ theta)` and its Hessian is the `w`-weighted covariance
//! of the rows. Minimizing `f` is the same as maximizing the Lagrange dual,
//! and the primal optimum is `w(theta*)`.
//!
//! An optional ridge term `mu/2 |theta|^2` turns `f` into the dual of the
//! penalized problem `|Z~^T w - t~|^2 + lambda KL(w)` with `mu = lambda/2`;
//! at its minimizer the moment residual equals `-mu theta`.

use nalgebra::{DMatrix, DVector};

use crate::Matrix;

/// Columns shifted to zero mean and scaled to unit SD; `target` mapped by
/// the same affine change. Weights are invariant to this transformation.
#[derive(Clone, Debug)]
pub(crate) struct Standardized {
    pub z: Matrix,
    pub target: Vec<f64>,
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardized {
    pub fn new(z: &Matrix, target: &[f64]) -> Self {
        let (n, k) = (z.nrows(), z.ncols());
        let shift = z.column_means();
        let scale: Vec<f64> = (0..k)
            .map(|j| {
                let var = z.column(j).map(|v| (v - shift[j]).powi(2)).sum::<f64>() / n as f64;
                let sd = var.sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let mut data = Vec::with_capacity(n * k);
        for row in z.rows_iter() {
            data.extend((0..k).map(|j| (row[j] - shift[j]) / scale[j]));
        }
        let target = (0..k).map(|j| (target[j] - shift[j]) / scale[j]).collect();
        Standardized {
            z: Matrix::from_row_major(n, k, data).expect("shape preserved"),
            target,
            shift,
            scale,
        }
    }

    pub fn k(&self) -> usize {
        self.z.ncols()
    }

    /// Maps a standardized-coordinate solution to the multipliers of the
    /// original problem, `w_i = exp(-1 - z_i . nu - nu_0)`. Output is
    /// `(nu_1..nu_k, nu_0)`.
    pub fn raw_dual(&self, theta: &[f64], log_norm: f64) -> Vec<f64> {
        let mut dual: Vec<f64> = theta.iter().zip(&self.scale).map(|(t, s)| -t / s).collect();
        let offset: f64 = theta
            .iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(t, (m, s))| t * m / s)
            .sum();
        dual.push(offset + log_norm - 1.0);
        dual
    }
}

/// `w = softmax(a + Z~ theta)` and its log-normalizer.
#[derive(Clone, Debug)]
pub(crate) struct DualPoint {
    pub theta: Vec<f64>,
    /// `log w_i`
    pub log_weights: Vec<f64>,
    pub weights: Vec<f64>,
    /// `log sum_i exp(a_i + z~_i . theta)`
    pub log_norm: f64,
    /// `f(theta)`, ridge included
    pub value: f64,
    /// `Z~^T w - t~`
    pub residual: Vec<f64>,
    /// `residual + mu theta`
    pub gradient: Vec<f64>,
}

pub(crate) fn evaluate(
    std: &Standardized,
    base: Option<&[f64]>,
    ridge: f64,
    theta: &[f64],
) -> DualPoint {
    let n = std.z.nrows();
    let mut scores: Vec<f64> = std
        .z
        .rows_iter()
        .map(|row| row.iter().zip(theta).map(|(z, t)| z * t).sum::<f64>())
        .collect();
    if let Some(a) = base {
        for (s, ai) in scores.iter_mut().zip(a) {
            *s += ai;
        }
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let log_norm = max + sum.ln();
    let log_weights: Vec<f64> = scores.iter().map(|s| s - log_norm).collect();
    let weights: Vec<f64> = log_weights.iter().map(|l| l.exp()).collect();
    let mut residual = std.z.weighted_column_sums(&weights);
    for (g, t) in residual.iter_mut().zip(&std.target) {
        *g -= t;
    }
    let gradient = residual
        .iter()
        .zip(theta)
        .map(|(r, t)| r + ridge * t)
        .collect();
    let value = log_norm
        - theta
            .iter()
            .zip(&std.target)
            .map(|(a, b)| a * b)
            .sum::<f64>()
        + 0.5 * ridge * theta.iter().map(|t| t * t).sum::<f64>();
    debug_assert_eq!(weights.len(), n);
    DualPoint {
        theta: theta.to_vec(),
        log_weights,
        weights,
        log_norm,
        value,
        residual,
        gradient,
    }
}

fn value_at(std: &Standardized, base: Option<&[f64]>, ridge: f64, theta: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let scores: Vec<f64> = std
        .z
        .rows_iter()
        .enumerate()
        .map(|(i, row)| {
            let s =
                row.iter().zip(theta).map(|(z, t)| z * t).sum::<f64>() + base.map_or(0.0, |a| a[i]);
            max = max.max(s);
            s
        })
        .collect();
    let sum: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    max + sum.ln()
        - theta
            .iter()
            .zip(&std.target)
            .map(|(a, b)| a * b)
            .sum::<f64>()
        + 0.5 * ridge * theta.iter().map(|t| t * t).sum::<f64>()
}

/// Weighted covariance of the standardized rows (accumulated from centered
/// rows to avoid cancellation) plus `ridge * I`.
fn hessian(std: &Standardized, point: &DualPoint, ridge: f64) -> DMatrix<f64> {
    let k = std.k();
    let mean: Vec<f64> = point
        .residual
        .iter()
        .zip(&std.target)
        .map(|(g, t)| g + t)
        .collect();
    let mut h = DMatrix::<f64>::zeros(k, k);
    let mut c = vec![0.0; k];
    for (row, &w) in std.z.rows_iter().zip(&point.weights) {
        if w == 0.0 {
            continue;
        }
        for ((ci, z), m) in c.iter_mut().zip(row).zip(&mean) {
            *ci = z - m;
        }
        for a in 0..k {
            let wa = w * c[a];
            for b in 0..=a {
                h[(a, b)] += wa * c[b];
            }
        }
    }
    for a in 0..k {
        h[(a, a)] += ridge;
        for b in 0..a {
            h[(b, a)] = h[(a, b)];
        }
    }
    h
}

/// Solves `(H + delta I) step = -g`, raising `delta` until the factorization
/// succeeds.
fn damped_newton_step(h: &DMatrix<f64>, g: &[f64]) -> Option<Vec<f64>> {
    let k = g.len();
    let rhs = DVector::from_iterator(k, g.iter().map(|v| -v));
    let scale = (h.trace() / k as f64).max(1e-300);
    let mut delta = 0.0;
    for _ in 0..30 {
        let mut m = h.clone();
        for i in 0..k {
            m[(i, i)] += delta;
        }
        if let Some(chol) = m.cholesky() {
            let step = chol.solve(&rhs);
            if step.iter().all(|v| v.is_finite()) {
                return Some(step.iter().copied().collect());
            }
        }
        delta = if delta == 0.0 {
            1e-12 * scale
        } else {
            delta * 10.0
        };
    }
    None
}

#[derive(Clone, Debug)]
pub(crate) struct NewtonOutcome {
    pub point: DualPoint,
    pub iterations: usize,
    pub warning: Option<String>,
}

pub(crate) fn grad_inf(point: &DualPoint) -> f64 {
    point.gradient.iter().fold(0.0, |m, g| m.max(g.abs()))
}

/// Minimizes `f` from `theta = 0` by Newton's method with Armijo
/// backtracking; stops when `|grad f|_inf <= grad_tol`.
pub(crate) fn minimize(
    std: &Standardized,
    base: Option<&[f64]>,
    ridge: f64,
    grad_tol: f64,
    max_iter: usize,
) -> NewtonOutcome {
    const ARMIJO: f64 = 1e-4;
    let k = std.k();
    let mut point = evaluate(std, base, ridge, &vec![0.0; k]);
    if k == 0 {
        return NewtonOutcome {
            point,
            iterations: 0,
            warning: None,
        };
    }
    for iter in 0..max_iter {
        if grad_inf(&point) <= grad_tol {
            return NewtonOutcome {
                point,
                iterations: iter,
                warning: None,
            };
        }
        let h = hessian(std, &point, ridge);
        let g = &point.gradient;
        let mut step = match damped_newton_step(&h, g) {
            Some(s) => s,
            None => g.iter().map(|v| -v).collect(),
        };
        let mut slope: f64 = step.iter().zip(g).map(|(s, g)| s * g).sum();
        if !(slope < 0.0) {
            step = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }

        // Close to the optimum the predicted decrease drops below the
        // resolution of f, so judge the full step by the gradient instead.
        if -slope <= 1e-10 * (1.0 + point.value.abs()) {
            let cand: Vec<f64> = point
                .theta
                .iter()
                .zip(&step)
                .map(|(th, s)| th + s)
                .collect();
            let next = evaluate(std, base, ridge, &cand);
            if next.value.is_finite() && grad_inf(&next) < grad_inf(&point) {
                point = next;
                continue;
            }
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = point
                .theta
                .iter()
                .zip(&step)
                .map(|(th, s)| th + t * s)
                .collect();
            let v = value_at(std, base, ridge, &cand);
            if v.is_finite() && v <= point.value + ARMIJO * t * slope {
                accepted = Some(cand);
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some(theta) => point = evaluate(std, base, ridge, &theta),
            None => {
                let converged = grad_inf(&point) <= grad_tol;
                return NewtonOutcome {
                    point,
                    iterations: iter + 1,
                    warning: (!converged).then(|| "line search stalled".to_string()),
                };
            }
        }
    }
    let converged = grad_inf(&point) <= grad_tol;
    NewtonOutcome {
        point,
        iterations: max_iter,
        warning: (!converged).then(|| format!("Newton iteration cap ({max_iter}) reached")),
    }
}
