//! Entropic mirror descent for the penalized problem
//!
//! ```text
//! min_w |Z~^T w - t~|_2^2 + lambda * sum_i w_i log(n w_i)   over the simplex
//! ```
//!
//! in standardized coordinates. Iterates are kept as log-weights so that
//! weights far below `f64::MIN_POSITIVE` still move smoothly. The iteration
//! can start from uniform weights or from a supplied point, typically the
//! solution of the ridge-regularized dual.

use super::dual::Standardized;
use super::StepRule;

#[derive(Clone, Debug)]
pub(crate) struct MirrorOutcome {
    pub weights: Vec<f64>,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub warning: Option<String>,
}

struct State {
    log_w: Vec<f64>,
    w: Vec<f64>,
    objective: f64,
    gradient: Vec<f64>,
}

/// Normalizes log-weights in place and returns the weights.
fn normalize_log(u: &mut [f64]) -> Vec<f64> {
    let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = u.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = w.iter().sum();
    let lse = max + sum.ln();
    for v in u.iter_mut() {
        *v -= lse;
    }
    for wi in w.iter_mut() {
        *wi /= sum;
    }
    w
}

fn state(std: &Standardized, lambda: f64, mut log_w: Vec<f64>) -> State {
    let n = log_w.len() as f64;
    let ln_n = n.ln();
    let w = normalize_log(&mut log_w);
    let mut r = std.z.weighted_column_sums(&w);
    for (ri, t) in r.iter_mut().zip(&std.target) {
        *ri -= t;
    }
    let kl: f64 = w
        .iter()
        .zip(&log_w)
        .filter(|(wi, _)| **wi > 0.0)
        .map(|(wi, l)| wi * (l + ln_n))
        .sum();
    let objective = r.iter().map(|v| v * v).sum::<f64>() + lambda * kl;
    let gradient = std
        .z
        .rows_iter()
        .zip(&log_w)
        .map(|(row, l)| {
            2.0 * row.iter().zip(&r).map(|(z, ri)| z * ri).sum::<f64>() + lambda * (l + ln_n + 1.0)
        })
        .collect();
    State {
        log_w,
        w,
        objective,
        gradient,
    }
}

pub(crate) fn minimize(
    std: &Standardized,
    lambda: f64,
    rule: StepRule,
    tol: f64,
    max_iter: usize,
    start: Option<Vec<f64>>,
) -> MirrorOutcome {
    let n = std.z.nrows();
    let start = start.unwrap_or_else(|| vec![-(n as f64).ln(); n]);
    let mut cur = state(std, lambda, start);
    let mut trace = vec![cur.objective];
    let (mut eta, adaptive) = match rule {
        StepRule::Fixed(eta) => (eta, false),
        StepRule::Backtracking => (1.0, true),
    };

    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let cand_log: Vec<f64> = cur
            .log_w
            .iter()
            .zip(&cur.gradient)
            .map(|(l, g)| l - eta * g)
            .collect();
        let cand = state(std, lambda, cand_log);

        let accept = if adaptive {
            // Bregman sufficient-decrease: F(w') <= F(w) + <g, w'-w> + KL(w'||w)/eta
            let linear: f64 = cur
                .gradient
                .iter()
                .zip(cand.w.iter().zip(&cur.w))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            let bregman: f64 = cand
                .w
                .iter()
                .zip(cand.log_w.iter().zip(&cur.log_w))
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, (a, b))| w * (a - b))
                .sum();
            cand.objective <= cur.objective + linear + bregman / eta
                && cand.objective <= cur.objective
        } else {
            cand.objective <= cur.objective
        };

        if !accept {
            if !adaptive {
                return MirrorOutcome {
                    weights: cur.w,
                    trace,
                    iterations,
                    warning: Some(format!("objective increased with fixed step {eta}")),
                };
            }
            eta *= 0.5;
            if eta < 1e-300 {
                return MirrorOutcome {
                    weights: cur.w,
                    trace,
                    iterations,
                    warning: Some("mirror-descent step underflow".into()),
                };
            }
            continue;
        }

        let decrease = cur.objective - cand.objective;
        cur = cand;
        trace.push(cur.objective);
        if decrease < tol {
            return MirrorOutcome {
                weights: cur.w,
                trace,
                iterations,
                warning: None,
            };
        }
        if adaptive {
            eta = (eta * 2.0).min(1e300);
        }
    }
    MirrorOutcome {
        weights: cur.w,
        trace,
        iterations,
        warning: Some(format!("mirror-descent iteration cap ({max_iter}) reached")),
    }
}
