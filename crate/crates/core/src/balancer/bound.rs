//! Loss-dependent weighting: the most pessimistic weighted loss among weight
//! sets that reproduce the external moments, regularized towards the
//! maximum-entropy solution.
//!
//! For losses `l` and `lambda > 0` the maximizer of
//! `sum_i w_i l_i - lambda * KL(w || uniform)` over the feasible set has the
//! form `w_i ∝ exp(l_i / lambda + z_i . theta)`, i.e. entropy balancing with
//! base log-weights `l / lambda`. It is solved with the same dual Newton
//! iteration as [`super::solve_exact`].

use serde::{Deserialize, Serialize};

use super::dual::{self, Standardized};
use super::{check_aligned, solve_exact, SolverConfig, SolverStatus, WeightSolution};
use crate::data::{MomentTarget, TransformedMatrix};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorstCaseBound {
    /// `sum w l - lambda * (KL(w) - KL(w*))`, where `w*` is the
    /// maximum-entropy solution. Never below `sum w* l`; tends to it as
    /// `lambda` grows.
    pub bound: f64,
    /// `sum w l - lambda * KL(w)`: the raw regularized objective.
    pub regularized_objective: f64,
    /// `sum w l` under the worst-case weights.
    pub expected_loss: f64,
    /// `sum w* l` under the maximum-entropy weights.
    pub baseline_loss: f64,
    pub solution: WeightSolution,
}

pub fn worst_case_bound(
    z: &TransformedMatrix,
    target: &MomentTarget,
    losses: &[f64],
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<WorstCaseBound> {
    check_aligned(z, target)?;
    cfg.validate()?;
    if losses.len() != z.nrows() {
        return Err(Error::invalid(format!(
            "{} losses for {} rows",
            losses.len(),
            z.nrows()
        )));
    }
    if losses.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::invalid("losses must be finite and non-negative"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be > 0, got {lambda}")));
    }

    let baseline = solve_exact(z, target, cfg)?;
    if baseline.status != SolverStatus::Exact {
        return Err(Error::Infeasible(
            "external moments are not attainable; estimate with the relaxed solver instead".into(),
        ));
    }
    let baseline_loss: f64 = baseline
        .weights
        .iter()
        .zip(losses)
        .map(|(w, l)| w * l)
        .sum();

    let std = Standardized::new(&z.z, &target.values);
    let lmax = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let base: Vec<f64> = losses.iter().map(|l| (l - lmax) / lambda).collect();
    let out = dual::minimize(&std, Some(&base), 0.0, cfg.grad_tol, cfg.max_newton_iter);
    let tilted = &out.point;

    // KL(w) - KL(w*) = KL(w || w*) + sum_i (w_i - w*_i) log(n w*_i); the second
    // sum vanishes up to the moment residuals, so evaluate it in the dual
    // parameterization rather than differencing two O(1) quantities.
    let star = dual::minimize(&std, None, 0.0, cfg.grad_tol, cfg.max_newton_iter).point;
    let kl_rel: f64 = tilted
        .weights
        .iter()
        .zip(tilted.log_weights.iter().zip(&star.log_weights))
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, (a, b))| w * (a - b))
        .sum();
    let moment_shift: f64 = (0..std.k())
        .map(|j| {
            let diff: f64 = std
                .z
                .rows_iter()
                .zip(tilted.weights.iter().zip(&star.weights))
                .map(|(row, (w, ws))| (w - ws) * row[j])
                .sum();
            diff * star.theta[j]
        })
        .sum();
    let excess = kl_rel + moment_shift;

    let solution = WeightSolution::from_weights(
        tilted.weights.clone(),
        z,
        target,
        SolverStatus::Exact,
        std.raw_dual(&tilted.theta, tilted.log_norm),
        super::Convergence {
            iterations: out.iterations,
            warning: out.warning.clone(),
            objective_trace: Vec::new(),
        },
    );
    if solution.residual_norm > cfg.residual_tol {
        return Err(Error::Infeasible(format!(
            "loss-tilted weights did not reach the moments (residual {:.3e})",
            solution.residual_norm
        )));
    }
    let expected_loss: f64 = solution
        .weights
        .iter()
        .zip(losses)
        .map(|(w, l)| w * l)
        .sum();
    Ok(WorstCaseBound {
        bound: expected_loss - lambda * excess,
        regularized_objective: expected_loss - lambda * solution.kl_divergence,
        expected_loss,
        baseline_loss,
        solution,
    })
}
