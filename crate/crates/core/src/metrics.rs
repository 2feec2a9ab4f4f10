//! Weighted performance measures and bootstrap intervals for them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::balancer::{balance_sample, SolverConfig};
use crate::data::{MomentTarget, Sample, TransformSpec};
use crate::par::{map_indices, Execution};
use crate::rng::{derive_seed, stream_rng};
use crate::{Error, Result};

/// Scores below `LOG_LOSS_EPS` (or above `1 - LOG_LOSS_EPS`) are clipped
/// before taking logs.
pub const LOG_LOSS_EPS: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auc,
    LogLoss,
    Brier,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Auc, Metric::LogLoss, Metric::Brier];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Auc => "auc",
            Metric::LogLoss => "logloss",
            Metric::Brier => "brier",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auc" => Ok(Metric::Auc),
            "logloss" | "log-loss" | "nll" => Ok(Metric::LogLoss),
            "brier" => Ok(Metric::Brier),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointwiseLoss {
    NegLogLikelihood,
    Brier,
}

/// Model scores, outcomes and simplex weights over the same rows.
#[derive(Clone, Copy, Debug)]
pub struct ScoredSample<'a> {
    scores: &'a [f64],
    outcomes: &'a [bool],
    weights: &'a [f64],
}

impl<'a> ScoredSample<'a> {
    pub fn new(scores: &'a [f64], outcomes: &'a [bool], weights: &'a [f64]) -> Result<Self> {
        let n = scores.len();
        if outcomes.len() != n || weights.len() != n {
            return Err(Error::invalid(format!(
                "length mismatch: {n} scores, {} outcomes, {} weights",
                outcomes.len(),
                weights.len()
            )));
        }
        if n == 0 {
            return Err(Error::invalid("empty scored sample"));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("scores must be finite"));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(ScoredSample {
            scores,
            outcomes,
            weights,
        })
    }

    pub fn scores(&self) -> &[f64] {
        self.scores
    }

    pub fn outcomes(&self) -> &[bool] {
        self.outcomes
    }

    pub fn weights(&self) -> &[f64] {
        self.weights
    }

    fn class_totals(&self) -> Result<(f64, f64)> {
        let (mut pos, mut neg) = (0.0, 0.0);
        for (&w, &y) in self.weights.iter().zip(self.outcomes) {
            if y {
                pos += w;
            } else {
                neg += w;
            }
        }
        if pos <= 0.0 || neg <= 0.0 {
            return Err(Error::AucUndefined(
                "both classes need positive total weight",
            ));
        }
        Ok((pos, neg))
    }
}

pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Weighted probability that a positive outscores a negative, ties counted
/// half. One sort plus a linear sweep over tie groups.
pub fn weighted_auc(s: &ScoredSample) -> Result<f64> {
    let (pos_total, neg_total) = s.class_totals()?;
    let mut order: Vec<usize> = (0..s.scores.len()).collect();
    order.sort_by(|&a, &b| s.scores[a].total_cmp(&s.scores[b]));

    let mut neg_below = 0.0;
    let mut concordant = 0.0;
    let mut start = 0;
    while start < order.len() {
        let score = s.scores[order[start]];
        let mut end = start;
        let (mut pos_group, mut neg_group) = (0.0, 0.0);
        while end < order.len() && s.scores[order[end]] == score {
            let i = order[end];
            if s.outcomes[i] {
                pos_group += s.weights[i];
            } else {
                neg_group += s.weights[i];
            }
            end += 1;
        }
        concordant += pos_group * (neg_below + 0.5 * neg_group);
        neg_below += neg_group;
        start = end;
    }
    Ok(concordant / (pos_total * neg_total))
}

/// Same quantity as [`weighted_auc`] by explicit pair enumeration; O(n^2).
pub fn weighted_auc_naive(s: &ScoredSample) -> Result<f64> {
    let (pos_total, neg_total) = s.class_totals()?;
    let mut total = 0.0;
    for i in (0..s.scores.len()).filter(|&i| s.outcomes[i]) {
        for j in (0..s.scores.len()).filter(|&j| !s.outcomes[j]) {
            let pair = s.weights[i] * s.weights[j];
            if s.scores[i] > s.scores[j] {
                total += pair;
            } else if s.scores[i] == s.scores[j] {
                total += 0.5 * pair;
            }
        }
    }
    Ok(total / (pos_total * neg_total))
}

/// `sum_i w_i * loss(s_i, y_i)`. Scores must lie in `[0, 1]`.
pub fn expected_pointwise_loss(s: &ScoredSample, loss: PointwiseLoss) -> Result<f64> {
    if s.scores.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("pointwise losses need scores in [0, 1]"));
    }
    let total = s
        .scores
        .iter()
        .zip(s.outcomes)
        .zip(s.weights)
        .map(|((&p, &y), &w)| {
            let l = match loss {
                PointwiseLoss::NegLogLikelihood => {
                    let p = p.clamp(LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS);
                    if y {
                        -p.ln()
                    } else {
                        -(1.0 - p).ln()
                    }
                }
                PointwiseLoss::Brier => {
                    let d = p - if y { 1.0 } else { 0.0 };
                    d * d
                }
            };
            w * l
        })
        .sum();
    Ok(total)
}

pub fn evaluate(metric: Metric, s: &ScoredSample) -> Result<f64> {
    match metric {
        Metric::Auc => weighted_auc(s),
        Metric::LogLoss => expected_pointwise_loss(s, PointwiseLoss::NegLogLikelihood),
        Metric::Brier => expected_pointwise_loss(s, PointwiseLoss::Brier),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricEstimate {
    pub metric: Metric,
    pub value: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub bootstrap_replicates: usize,
    /// Replicates skipped because weighting or the metric failed on them.
    pub failed_replicates: usize,
}

/// Linear-interpolation quantile of sorted data (R type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Largest tolerated share of failed replicates.
pub const MAX_BOOTSTRAP_FAILURE_RATE: f64 = 0.10;

/// Inputs shared by every bootstrap replicate.
#[derive(Clone, Copy, Debug)]
pub struct BootstrapInput<'a> {
    pub sample: &'a Sample,
    pub spec: &'a TransformSpec,
    pub target: &'a MomentTarget,
    pub scores: &'a [f64],
    pub solver: &'a SolverConfig,
}

fn estimate_once(
    input: &BootstrapInput,
    sample: &Sample,
    scores: &[f64],
    metrics: &[Metric],
) -> Result<Vec<f64>> {
    let balanced = balance_sample(sample, input.spec, input.target, input.solver)?;
    let w = &balanced.solution.weights;
    let scored = ScoredSample::new(scores, sample.outcomes(), w)?;
    metrics.iter().map(|&m| evaluate(m, &scored)).collect()
}

/// Point estimates on the full sample plus percentile intervals from
/// `replicates` row resamples, each re-weighted against the fixed target.
///
/// Replicate `r` draws its rows from the generator `(seed, r)`, so the result
/// does not depend on thread count or scheduling.
pub fn bootstrap_metrics(
    input: &BootstrapInput,
    metrics: &[Metric],
    replicates: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<MetricEstimate>> {
    if replicates == 0 {
        return Err(Error::invalid("replicates must be >= 1"));
    }
    let n = input.sample.len();
    if input.scores.len() != n {
        return Err(Error::invalid(format!(
            "{} scores for {n} internal rows",
            input.scores.len()
        )));
    }
    let point = estimate_once(input, input.sample, input.scores, metrics)?;
    let key = derive_seed(seed, &[0xB007]);

    let draws: Vec<Option<Vec<f64>>> = map_indices(replicates, exec, |r| {
        let mut rng = stream_rng(key, r as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let resample = input.sample.select_rows(&idx);
        let scores: Vec<f64> = idx.iter().map(|&i| input.scores[i]).collect();
        estimate_once(input, &resample, &scores, metrics).ok()
    });

    let failed = draws.iter().filter(|d| d.is_none()).count();
    if failed as f64 > MAX_BOOTSTRAP_FAILURE_RATE * replicates as f64 || failed == replicates {
        return Err(Error::BootstrapFailures {
            failed,
            total: replicates,
        });
    }
    Ok(metrics
        .iter()
        .enumerate()
        .map(|(m, &metric)| {
            let mut vals: Vec<f64> = draws.iter().flatten().map(|d| d[m]).collect();
            vals.sort_by(f64::total_cmp);
            MetricEstimate {
                metric,
                value: point[m],
                ci_lower: quantile_sorted(&vals, 0.025),
                ci_upper: quantile_sorted(&vals, 0.975),
                bootstrap_replicates: replicates,
                failed_replicates: failed,
            }
        })
        .collect())
}

/// Single-metric form of [`bootstrap_metrics`].
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_ci(
    sample: &Sample,
    spec: &TransformSpec,
    target: &MomentTarget,
    scores: &[f64],
    metric: Metric,
    replicates: usize,
    seed: u64,
    cfg: &SolverConfig,
    exec: Execution,
) -> Result<MetricEstimate> {
    let input = BootstrapInput {
        sample,
        spec,
        target,
        scores,
        solver: cfg,
    };
    Ok(bootstrap_metrics(&input, &[metric], replicates, seed, exec)?.remove(0))
}
