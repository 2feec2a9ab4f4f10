//! JSON documents written by the CLI.

use serde::{Deserialize, Serialize};

use extval_core::balancer::{SolverStatus, Violation, WeightSolution};
use extval_core::metrics::MetricEstimate;

/// Version of the report layouts below; bumped on breaking changes.
pub const SCHEMA_VERSION: &str = "1";

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub warning: Option<String>,
}

/// Diagnostics of a weight solution, without the weights themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolutionReport {
    pub status: SolverStatus,
    pub kl_divergence: f64,
    pub residual_norm: f64,
    pub effective_sample_size: f64,
    pub max_weight: f64,
    pub violations: Vec<Violation>,
    pub dual: Vec<f64>,
    pub convergence: ConvergenceReport,
}

impl From<&WeightSolution> for SolutionReport {
    fn from(s: &WeightSolution) -> Self {
        SolutionReport {
            status: s.status,
            kl_divergence: s.kl_divergence,
            residual_norm: s.residual_norm,
            effective_sample_size: s.effective_sample_size,
            max_weight: s.max_weight,
            violations: s.violations.clone(),
            dual: s.dual.clone(),
            convergence: ConvergenceReport {
                iterations: s.convergence.iterations,
                warning: s.convergence.warning.clone(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InputDigest {
    pub internal_rows: usize,
    pub internal_features: usize,
    pub spec_terms: usize,
    pub pruned_terms: Vec<String>,
    pub n_external: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimationReport {
    pub schema_version: String,
    pub tool_version: String,
    pub seed: u64,
    pub metrics: Vec<MetricEstimate>,
    pub solver: SolutionReport,
    pub inputs: InputDigest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TermDiagnostic {
    pub index: usize,
    pub term: String,
    pub internal_min: f64,
    pub internal_max: f64,
    pub internal_mean: f64,
    pub internal_sd: f64,
    pub target: f64,
    pub pruned: bool,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosisReport {
    pub schema_version: String,
    pub tool_version: String,
    pub feasible_by_range: bool,
    pub violations: Vec<Violation>,
    pub terms: Vec<TermDiagnostic>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentReport {
    pub schema_version: String,
    pub tool_version: String,
    pub seed: u64,
    pub p: usize,
    #[serde(flatten)]
    pub summary: extval_core::experiment::ExperimentSummary,
}
