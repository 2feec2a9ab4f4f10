//! Elastic-net logistic regression fitted by proximal gradient descent.
//!
//! Objective: mean negative log-likelihood `+ alpha_l1 |b|_1 + alpha_l2/2 |b|_2^2`,
//! intercept unpenalized. Each step is a gradient step on the smooth part
//! followed by soft-thresholding, with a backtracking step size that
//! guarantees the objective never increases.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::simulator::sigmoid;
use crate::{Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub alpha_l1: f64,
    pub alpha_l2: f64,
}

impl LinearModel {
    pub fn zeros(p: usize) -> Self {
        LinearModel {
            coefficients: vec![0.0; p],
            intercept: 0.0,
            alpha_l1: 0.0,
            alpha_l2: 0.0,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::simulator::write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let model: LinearModel = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if !model.intercept.is_finite() || model.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("model contains non-finite values"));
        }
        Ok(model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainConfig {
    pub alpha_l1: f64,
    pub alpha_l2: f64,
    pub max_iter: usize,
    /// Stop once the proximal-gradient mapping `(beta - beta') / step` has
    /// inf-norm below `tol`.
    pub tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha_l1: 1e-3,
            alpha_l2: 1e-3,
            max_iter: 20_000,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Fit {
    pub model: LinearModel,
    pub iterations: usize,
    pub converged: bool,
    pub warning: Option<String>,
    /// Penalized objective after every iteration (first entry at init),
    /// accumulated from exactly computed per-step changes.
    pub objective_trace: Vec<f64>,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Gradient of the mean negative log-likelihood given the linear predictor.
fn gradient_at(x: &Matrix, y: &[bool], eta: &[f64]) -> (Vec<f64>, f64) {
    let n = x.nrows() as f64;
    let mut grad = vec![0.0; x.ncols()];
    let mut grad_b = 0.0;
    for ((row, &e), &yi) in x.rows_iter().zip(eta).zip(y) {
        let r = sigmoid(e) - if yi { 1.0 } else { 0.0 };
        grad_b += r;
        for (g, v) in grad.iter_mut().zip(row) {
            *g += r * v;
        }
    }
    for g in grad.iter_mut() {
        *g /= n;
    }
    (grad, grad_b / n)
}

/// Mean negative log-likelihood and its gradient `(d/d coef, d/d intercept)`.
pub fn mean_nll_gradient(
    x: &Matrix,
    y: &[bool],
    coef: &[f64],
    intercept: f64,
) -> (f64, Vec<f64>, f64) {
    let eta = linear_predictor(x, coef, intercept);
    let (grad, grad_b) = gradient_at(x, y, &eta);
    (mean_nll(x, y, coef, intercept), grad, grad_b)
}

pub fn mean_nll(x: &Matrix, y: &[bool], coef: &[f64], intercept: f64) -> f64 {
    let n = x.nrows() as f64;
    x.rows_iter()
        .zip(y)
        .map(|(row, &yi)| {
            let eta = intercept + row.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>();
            softplus(eta) - if yi { eta } else { 0.0 }
        })
        .sum::<f64>()
        / n
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn linear_predictor(x: &Matrix, coef: &[f64], intercept: f64) -> Vec<f64> {
    x.rows_iter()
        .map(|row| intercept + row.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// `softplus(to) - softplus(from)` without cancellation when the two are close.
fn softplus_change(from: f64, to: f64) -> f64 {
    let d = to - from;
    if d.abs() < 1.0 {
        (sigmoid(from) * d.exp_m1()).ln_1p()
    } else {
        softplus(to) - softplus(from)
    }
}

/// Change in mean negative log-likelihood between two linear predictors,
/// summed row by row so tiny changes are not lost to rounding.
fn mean_nll_change(eta: &[f64], eta_new: &[f64], y: &[bool]) -> f64 {
    let total: f64 = eta
        .iter()
        .zip(eta_new)
        .zip(y)
        .map(|((&a, &b), &yi)| softplus_change(a, b) - if yi { b - a } else { 0.0 })
        .sum();
    total / eta.len() as f64
}

pub fn train(sample: &Sample, cfg: &TrainConfig) -> Result<Fit> {
    if !(cfg.alpha_l1 >= 0.0 && cfg.alpha_l2 >= 0.0) {
        return Err(Error::invalid("penalties must be >= 0"));
    }
    if cfg.max_iter == 0 || !(cfg.tol > 0.0) {
        return Err(Error::invalid("max_iter and tol must be positive"));
    }
    let y = sample.outcomes();
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::invalid("both outcome classes must be present"));
    }
    let x = sample.features();
    let p = x.ncols();

    let mut coef = vec![0.0; p];
    let mut intercept = 0.0;
    let mut eta = vec![0.0; x.nrows()];
    // Tracked as the initial value plus exactly computed decrements.
    let mut objective = mean_nll(x, y, &coef, intercept);
    let mut trace = vec![objective];
    let mut step = 1.0;

    for iter in 1..=cfg.max_iter {
        let (mut grad, grad_b) = gradient_at(x, y, &eta);
        for (g, c) in grad.iter_mut().zip(&coef) {
            *g += cfg.alpha_l2 * c;
        }

        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = coef
                .iter()
                .zip(&grad)
                .map(|(c, g)| soft_threshold(c - step * g, step * cfg.alpha_l1))
                .collect();
            let cand_b = intercept - step * grad_b;
            let cand_eta = linear_predictor(x, &cand, cand_b);
            let db = cand_b - intercept;
            let lin: f64 = cand
                .iter()
                .zip(&coef)
                .zip(&grad)
                .map(|((a, b), g)| (a - b) * g)
                .sum::<f64>()
                + db * grad_b;
            let sq: f64 = cand
                .iter()
                .zip(&coef)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                + db * db;
            let ridge: f64 = cand.iter().zip(&coef).map(|(a, b)| (a - b) * (a + b)).sum();
            let smooth_change = mean_nll_change(&eta, &cand_eta, y) + 0.5 * cfg.alpha_l2 * ridge;
            if smooth_change <= lin + sq / (2.0 * step) {
                accepted = Some((cand, cand_b, cand_eta, smooth_change));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cand_b, cand_eta, smooth_change)) = accepted else {
            return Ok(finish(
                coef,
                intercept,
                cfg,
                iter,
                false,
                Some("line search stalled".into()),
                trace,
            ));
        };
        let mapping = diff_inf(&cand, &coef).max((cand_b - intercept).abs()) / step;
        let l1_change: f64 = cand.iter().zip(&coef).map(|(a, b)| a.abs() - b.abs()).sum();
        let change = smooth_change + cfg.alpha_l1 * l1_change;
        // The descent lemma guarantees change <= 0 up to rounding; a
        // rounding-level rise is refused and retried with a smaller step.
        if change <= 0.0 {
            coef = cand;
            intercept = cand_b;
            eta = cand_eta;
            objective += change;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
        trace.push(objective);
        if mapping < cfg.tol {
            return Ok(finish(coef, intercept, cfg, iter, true, None, trace));
        }
    }
    let warning = Some(format!("iteration cap ({}) reached", cfg.max_iter));
    Ok(finish(
        coef,
        intercept,
        cfg,
        cfg.max_iter,
        false,
        warning,
        trace,
    ))
}

fn diff_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn finish(
    coefficients: Vec<f64>,
    intercept: f64,
    cfg: &TrainConfig,
    iterations: usize,
    converged: bool,
    warning: Option<String>,
    objective_trace: Vec<f64>,
) -> Fit {
    Fit {
        model: LinearModel {
            coefficients,
            intercept,
            alpha_l1: cfg.alpha_l1,
            alpha_l2: cfg.alpha_l2,
        },
        iterations,
        converged,
        warning,
        objective_trace,
    }
}

/// `sigmoid(intercept + coef . x)` per row.
pub fn predict_proba(model: &LinearModel, features: &Matrix) -> Result<Vec<f64>> {
    if features.ncols() != model.coefficients.len() {
        return Err(Error::invalid(format!(
            "model expects {} features, got {}",
            model.coefficients.len(),
            features.ncols()
        )));
    }
    Ok(features
        .rows_iter()
        .map(|row| {
            sigmoid(
                model.intercept
                    + row
                        .iter()
                        .zip(&model.coefficients)
                        .map(|(a, b)| a * b)
                        .sum::<f64>(),
            )
        })
        .collect())
}
