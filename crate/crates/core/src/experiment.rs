//! Synthetic study: draw a model, train a classifier on internal data,
//! estimate its external AUC from external summary statistics only, and
//! compare against the AUC actually observed externally.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::balancer::{balance_sample, SolverConfig, SolverStatus};
use crate::data::{stats_from_sample, TransformSpec};
use crate::glm::{predict_proba, train, TrainConfig};
use crate::metrics::{quantile_sorted, uniform_weights, weighted_auc, ScoredSample};
use crate::par::{map_indices, Execution};
use crate::rng::derive_seed;
use crate::simulator::{generate_triplet_in, Environment, SemConfig};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepetitionResult {
    #[serde(rename = "sigmaXAH")]
    pub sigma_xah: f64,
    pub n: usize,
    pub repetition_index: usize,
    pub internal_auc: f64,
    pub external_auc: f64,
    /// `None` when balancing failed outright.
    pub estimated_auc: Option<f64>,
    /// `|external_auc - estimated_auc|`.
    pub abs_error: Option<f64>,
    /// `|external_auc - internal_auc|`: the error of naive internal validation.
    pub naive_abs_error: f64,
    pub kl_divergence: Option<f64>,
    pub solver_status: Option<SolverStatus>,
    pub solver_message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentOptions {
    pub glm: TrainConfig,
    pub solver: SolverConfig,
    /// Environment of the "external" sample. `Internal` gives a no-shift control.
    pub external_environment: Environment,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            glm: TrainConfig::default(),
            solver: SolverConfig::default(),
            external_environment: Environment::External,
        }
    }
}

fn unweighted_auc(scores: &[f64], outcomes: &[bool]) -> Result<f64> {
    let w = uniform_weights(scores.len());
    weighted_auc(&ScoredSample::new(scores, outcomes, &w)?)
}

/// One repetition with `n` rows in each of the train, test and external
/// samples. `cfg.seed` fixes the model draw and all three samples.
pub fn run_repetition(
    cfg: &SemConfig,
    n: usize,
    repetition_index: usize,
    opts: &ExperimentOptions,
) -> Result<RepetitionResult> {
    let data = generate_triplet_in(cfg, n, n, n, opts.external_environment)?;
    let fit = train(&data.internal_train, &opts.glm)?;
    let test_scores = predict_proba(&fit.model, data.internal_test.features())?;
    let ext_scores = predict_proba(&fit.model, data.external.features())?;
    let internal_auc = unweighted_auc(&test_scores, data.internal_test.outcomes())?;
    let external_auc = unweighted_auc(&ext_scores, data.external.outcomes())?;

    let spec = TransformSpec::class_means_and_second_moments(data.external.feature_names());
    let target = stats_from_sample(&data.external, &spec)?;
    let mut result = RepetitionResult {
        sigma_xah: cfg.sigma_xah,
        n,
        repetition_index,
        internal_auc,
        external_auc,
        estimated_auc: None,
        abs_error: None,
        naive_abs_error: (internal_auc - external_auc).abs(),
        kl_divergence: None,
        solver_status: None,
        solver_message: None,
    };
    let balanced = match balance_sample(&data.internal_test, &spec, &target, &opts.solver) {
        Ok(b) => b,
        Err(e) => {
            result.solver_message = Some(e.to_string());
            return Ok(result);
        }
    };
    let sol = balanced.solution;
    result.solver_status = Some(sol.status);
    result.kl_divergence = Some(sol.kl_divergence);
    result.solver_message = sol.convergence.warning.clone();
    match ScoredSample::new(&test_scores, data.internal_test.outcomes(), &sol.weights)
        .and_then(|s| weighted_auc(&s))
    {
        Ok(est) => {
            result.estimated_auc = Some(est);
            result.abs_error = Some((external_auc - est).abs());
        }
        Err(e) => result.solver_message = Some(e.to_string()),
    }
    Ok(result)
}

/// Aggregates for one `(sigma, n)` cell over repetitions with an estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellSummary {
    pub sigma: f64,
    pub n: usize,
    pub mean_kl: f64,
    pub mean_internal_auc: f64,
    pub mean_external_auc: f64,
    pub mean_abs_error: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub mean_naive_abs_error: f64,
    /// Share of repetitions where the estimate beats naive internal validation.
    pub beats_naive_fraction: f64,
    pub reps: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub cells: Vec<CellSummary>,
    pub raw: Vec<RepetitionResult>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

pub fn summarize_cell(sigma: f64, n: usize, results: &[&RepetitionResult]) -> CellSummary {
    let ok: Vec<&&RepetitionResult> = results.iter().filter(|r| r.abs_error.is_some()).collect();
    let mut errors: Vec<f64> = ok.iter().filter_map(|r| r.abs_error).collect();
    errors.sort_by(f64::total_cmp);
    let q = |p| {
        if errors.is_empty() {
            f64::NAN
        } else {
            quantile_sorted(&errors, p)
        }
    };
    let beats = ok
        .iter()
        .filter(|r| r.abs_error.unwrap() < r.naive_abs_error)
        .count();
    CellSummary {
        sigma,
        n,
        mean_kl: mean(ok.iter().filter_map(|r| r.kl_divergence)),
        mean_internal_auc: mean(results.iter().map(|r| r.internal_auc)),
        mean_external_auc: mean(results.iter().map(|r| r.external_auc)),
        mean_abs_error: mean(errors.iter().copied()),
        q25: q(0.25),
        q50: q(0.5),
        q75: q(0.75),
        mean_naive_abs_error: mean(results.iter().map(|r| r.naive_abs_error)),
        beats_naive_fraction: if ok.is_empty() {
            f64::NAN
        } else {
            beats as f64 / ok.len() as f64
        },
        reps: results.len(),
        failed: results.len() - ok.len(),
    }
}

/// Every `(sigma, n, repetition)` combination. Repetition `r` uses the seed
/// `derive_seed(base.seed, [r])` in every cell, so cells share model draws
/// (paired comparisons across shift strengths and sample sizes) and the
/// output does not depend on scheduling.
pub fn run_grid(
    base: &SemConfig,
    sigmas: &[f64],
    ns: &[usize],
    repetitions: usize,
    opts: &ExperimentOptions,
    exec: Execution,
) -> Result<ExperimentSummary> {
    if sigmas.is_empty() || ns.is_empty() || repetitions == 0 {
        return Err(Error::invalid(
            "sigma list, n list and repetitions must be non-empty",
        ));
    }
    let jobs: Vec<(f64, usize, usize)> = sigmas
        .iter()
        .flat_map(|&s| {
            ns.iter()
                .flat_map(move |&n| (0..repetitions).map(move |r| (s, n, r)))
        })
        .collect();
    let raw = map_indices(jobs.len(), exec, |i| {
        let (sigma, n, r) = jobs[i];
        let cfg = SemConfig {
            sigma_xah: sigma,
            seed: derive_seed(base.seed, &[r as u64]),
            ..base.clone()
        };
        run_repetition(&cfg, n, r, opts)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let cells = raw
        .chunks(repetitions)
        .map(|chunk| {
            let refs: Vec<&RepetitionResult> = chunk.iter().collect();
            summarize_cell(chunk[0].sigma_xah, chunk[0].n, &refs)
        })
        .collect();
    Ok(ExperimentSummary { cells, raw })
}

impl ExperimentSummary {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::simulator::write_json(path.as_ref(), self)
    }

    /// One row per repetition, ready for plotting.
    pub fn write_long_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e: csv::Error| Error::Io {
            path: path.to_path_buf(),
            source: e.into(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        for r in &self.raw {
            w.serialize(r).map_err(io)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
