//! Sample weights that reproduce external moments while staying closest (in
//! KL divergence) to uniform.
//!
//! - [`solve_exact`]: equality-constrained entropy balancing via its dual.
//! - [`solve_relaxed`]: squared-residual + KL penalty, for unattainable targets.
//! - [`solve`]: feasibility screen, exact attempt, relaxed fallback, clamping.
//! - [`worst_case_bound`]: the loss-dependent counterpart that tilts weights
//!   towards high-loss rows.

mod bound;
mod dual;
mod relaxed;

use serde::{Deserialize, Serialize};

use crate::data::{
    apply_transforms, prune_low_variance_columns, MomentTarget, Sample, TransformSpec,
    TransformTerm, TransformedMatrix,
};
use crate::{Error, Result};

pub use bound::{worst_case_bound, WorstCaseBound};
use dual::Standardized;

/// Step-size policy for the relaxed mirror-descent solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StepRule {
    Fixed(f64),
    Backtracking,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolverConfig {
    /// Weight of the KL term in the relaxed problem.
    pub lambda: f64,
    /// Floor applied to every weight after optimization.
    pub min_weight: f64,
    /// Columns with a smaller sample SD are dropped before solving.
    pub sd_cutoff: f64,
    /// Stop when the dual gradient's inf-norm (standardized units) is below this.
    pub grad_tol: f64,
    /// Largest moment residual (original units) still called exact.
    pub residual_tol: f64,
    pub max_newton_iter: usize,
    pub max_mirror_iter: usize,
    pub mirror_step_rule: StepRule,
    /// Relaxed solver stops once an accepted step improves the objective by
    /// less than this.
    pub mirror_tol: f64,
    /// Start mirror descent from the ridge-dual Newton solution instead of
    /// uniform weights. Reaches the penalized optimum in a few steps; with a
    /// small `lambda` and an unattainable target that optimum puts nearly all
    /// mass on a face of the hull.
    #[serde(default)]
    pub mirror_warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 1e-6,
            min_weight: 1e-6,
            sd_cutoff: 1e-4,
            grad_tol: 1e-9,
            residual_tol: 1e-6,
            max_newton_iter: 200,
            max_mirror_iter: 50_000,
            mirror_step_rule: StepRule::Backtracking,
            mirror_tol: 1e-12,
            mirror_warm_start: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("lambda", self.lambda),
            ("minWeight", self.min_weight),
            ("sdCutoff", self.sd_cutoff),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be a finite value >= 0, got {v}"
                )));
            }
        }
        let positive = [
            ("gradTol", self.grad_tol),
            ("residualTol", self.residual_tol),
            ("mirrorTol", self.mirror_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.max_newton_iter == 0 || self.max_mirror_iter == 0 {
            return Err(Error::invalid("iteration caps must be positive"));
        }
        if let StepRule::Fixed(eta) = self.mirror_step_rule {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::invalid(format!(
                    "fixed mirror step must be > 0, got {eta}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverStatus {
    /// Moments reproduced within `residual_tol`.
    Exact,
    /// Best penalized trade-off; moments only approximately reproduced.
    Relaxed,
    /// The exact solver could not reach the target.
    Infeasible,
}

/// A target outside the internal range of its column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub term_index: usize,
    pub term: String,
    pub internal_min: f64,
    pub internal_max: f64,
    pub target_value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub warning: Option<String>,
    /// Relaxed-solver objective after each accepted step.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeightSolution {
    pub weights: Vec<f64>,
    /// `(nu_1..nu_k, nu_0)` with `w_i = exp(-1 - z_i . nu - nu_0)`; empty
    /// when the weights did not come from the dual solver.
    pub dual: Vec<f64>,
    pub kl_divergence: f64,
    /// `Z^T w - mu`
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    pub status: SolverStatus,
    pub effective_sample_size: f64,
    pub max_weight: f64,
    pub violations: Vec<Violation>,
    pub convergence: Convergence,
}

/// `sum_i w_i log(n w_i)`, with `0 log 0 = 0`.
pub fn kl_to_uniform(w: &[f64]) -> f64 {
    let n = w.len() as f64;
    w.iter()
        .filter(|&&wi| wi > 0.0)
        .map(|&wi| wi * (n * wi).ln())
        .sum::<f64>()
        .max(0.0)
}

pub fn effective_sample_size(w: &[f64]) -> f64 {
    1.0 / w.iter().map(|x| x * x).sum::<f64>()
}

impl WeightSolution {
    /// Normalizes `weights` and computes every diagnostic against `(z, target)`.
    fn from_weights(
        mut weights: Vec<f64>,
        z: &TransformedMatrix,
        target: &MomentTarget,
        status: SolverStatus,
        dual: Vec<f64>,
        convergence: Convergence,
    ) -> Self {
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        let mut residual = z.z.weighted_column_sums(&weights);
        for (r, t) in residual.iter_mut().zip(&target.values) {
            *r -= t;
        }
        let residual_norm = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        WeightSolution {
            kl_divergence: kl_to_uniform(&weights),
            effective_sample_size: effective_sample_size(&weights),
            max_weight: weights.iter().cloned().fold(0.0, f64::max),
            weights,
            dual,
            residual,
            residual_norm,
            status,
            violations: Vec::new(),
            convergence,
        }
    }

    fn promote(&mut self, residual_tol: f64) {
        if self.status == SolverStatus::Relaxed && self.residual_norm <= residual_tol {
            self.status = SolverStatus::Exact;
        }
    }
}

fn check_aligned(z: &TransformedMatrix, target: &MomentTarget) -> Result<()> {
    if z.nrows() == 0 {
        return Err(Error::invalid("transformed matrix has no rows"));
    }
    if z.ncols() != target.len() {
        return Err(Error::invalid(format!(
            "target has {} values for {} columns",
            target.len(),
            z.ncols()
        )));
    }
    if target.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("target contains non-finite values"));
    }
    Ok(())
}

/// Every term whose target lies outside the internal `[min, max]` of its
/// column. An empty list is necessary, not sufficient, for feasibility.
pub fn feasibility_check(z: &TransformedMatrix, target: &MomentTarget) -> Vec<Violation> {
    (0..z.ncols().min(target.len()))
        .filter_map(|j| {
            let (lo, hi) =
                z.z.column(j)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
            let t = target.values[j];
            (t < lo || t > hi).then(|| Violation {
                term_index: j,
                term: z.terms[j].to_string(),
                internal_min: lo,
                internal_max: hi,
                target_value: t,
            })
        })
        .collect()
}

/// Maximum-entropy weights matching `target` exactly, via damped Newton on
/// the dual. Unreachable targets come back with status
/// [`SolverStatus::Infeasible`] and the best iterate found.
pub fn solve_exact(
    z: &TransformedMatrix,
    target: &MomentTarget,
    cfg: &SolverConfig,
) -> Result<WeightSolution> {
    check_aligned(z, target)?;
    cfg.validate()?;
    let n = z.nrows();
    if n == 1 {
        let mut sol = WeightSolution::from_weights(
            vec![1.0],
            z,
            target,
            SolverStatus::Exact,
            Vec::new(),
            Convergence::default(),
        );
        if sol.residual_norm > cfg.residual_tol {
            sol.status = SolverStatus::Infeasible;
        }
        return Ok(sol);
    }
    let std = Standardized::new(&z.z, &target.values);
    let out = dual::minimize(&std, None, 0.0, cfg.grad_tol, cfg.max_newton_iter);
    let dual_vars = std.raw_dual(&out.point.theta, out.point.log_norm);
    let mut sol = WeightSolution::from_weights(
        out.point.weights,
        z,
        target,
        SolverStatus::Exact,
        dual_vars,
        Convergence {
            iterations: out.iterations,
            warning: out.warning,
            objective_trace: Vec::new(),
        },
    );
    if sol.residual_norm > cfg.residual_tol {
        sol.status = SolverStatus::Infeasible;
    }
    Ok(sol)
}

/// Minimizes `|Z^T w - mu|_2^2 + lambda * KL(w || uniform)` over the simplex
/// (columns standardized) by entropic mirror descent.
pub fn solve_relaxed(
    z: &TransformedMatrix,
    target: &MomentTarget,
    cfg: &SolverConfig,
) -> Result<WeightSolution> {
    check_aligned(z, target)?;
    cfg.validate()?;
    if !(cfg.lambda > 0.0) {
        return Err(Error::invalid("the relaxed solver needs lambda > 0"));
    }
    let std = Standardized::new(&z.z, &target.values);
    // The penalized problem's dual is the exact dual plus a ridge of lambda/2.
    let start = cfg.mirror_warm_start.then(|| {
        dual::minimize(
            &std,
            None,
            0.5 * cfg.lambda,
            cfg.grad_tol,
            cfg.max_newton_iter,
        )
        .point
        .log_weights
    });
    let out = relaxed::minimize(
        &std,
        cfg.lambda,
        cfg.mirror_step_rule,
        cfg.mirror_tol,
        cfg.max_mirror_iter,
        start,
    );
    let mut sol = WeightSolution::from_weights(
        out.weights,
        z,
        target,
        SolverStatus::Relaxed,
        Vec::new(),
        Convergence {
            iterations: out.iterations,
            warning: out.warning,
            objective_trace: out.trace,
        },
    );
    sol.promote(cfg.residual_tol);
    Ok(sol)
}

/// Raises every weight to at least `floor` and rescales the others so the
/// total stays one. Falls back to uniform weights when `n * floor >= 1`.
fn floor_weights(w: &[f64], floor: f64) -> Vec<f64> {
    let n = w.len();
    if floor * n as f64 >= 1.0 {
        return vec![1.0 / n as f64; n];
    }
    let total: f64 = w.iter().sum();
    let mut pinned = vec![false; n];
    loop {
        let free: f64 = w
            .iter()
            .zip(&pinned)
            .filter(|(_, p)| !**p)
            .map(|(v, _)| v / total)
            .sum();
        let budget = 1.0 - floor * pinned.iter().filter(|p| **p).count() as f64;
        let scale = budget / free;
        let mut changed = false;
        for (v, p) in w.iter().zip(pinned.iter_mut()) {
            if !*p && v / total * scale < floor {
                *p = true;
                changed = true;
            }
        }
        if !changed {
            return w
                .iter()
                .zip(&pinned)
                .map(|(v, p)| if *p { floor } else { v / total * scale })
                .collect();
        }
    }
}

fn clamp(
    sol: WeightSolution,
    z: &TransformedMatrix,
    target: &MomentTarget,
    cfg: &SolverConfig,
) -> WeightSolution {
    if cfg.min_weight <= 0.0 || sol.weights.iter().all(|&w| w >= cfg.min_weight) {
        return sol;
    }
    let weights = floor_weights(&sol.weights, cfg.min_weight);
    let mut out =
        WeightSolution::from_weights(weights, z, target, sol.status, sol.dual, sol.convergence);
    if out.status == SolverStatus::Exact && out.residual_norm > cfg.residual_tol {
        out.status = SolverStatus::Relaxed;
        let note = "minimum-weight clamping moved the residual above residualTol";
        out.convergence.warning = Some(match out.convergence.warning.take() {
            Some(w) => format!("{w}; {note}"),
            None => note.to_string(),
        });
    }
    out.promote(cfg.residual_tol);
    out
}

/// Full weighting step: range screen, exact solve when plausible, relaxed
/// fallback otherwise, then the minimum-weight floor.
pub fn solve(
    z: &TransformedMatrix,
    target: &MomentTarget,
    cfg: &SolverConfig,
) -> Result<WeightSolution> {
    check_aligned(z, target)?;
    cfg.validate()?;
    let violations = feasibility_check(z, target);
    let relaxed_cfg = || {
        let mut c = cfg.clone();
        if !(c.lambda > 0.0) {
            c.lambda = SolverConfig::default().lambda;
        }
        c
    };
    let sol = if violations.is_empty() {
        let exact = solve_exact(z, target, cfg)?;
        if exact.status == SolverStatus::Infeasible {
            let mut r = solve_relaxed(z, target, &relaxed_cfg())?;
            let note = format!(
                "exact solver failed after {} iterations",
                exact.convergence.iterations
            );
            r.convergence.warning = Some(match r.convergence.warning.take() {
                Some(w) => format!("{note}; {w}"),
                None => note,
            });
            r
        } else {
            exact
        }
    } else {
        solve_relaxed(z, target, &relaxed_cfg())?
    };
    let mut sol = clamp(sol, z, target, cfg);
    sol.violations = violations;
    Ok(sol)
}

/// Weights for a whole sample: transform, prune low-variance columns, solve.
#[derive(Clone, Debug)]
pub struct Balanced {
    pub solution: WeightSolution,
    pub pruned_terms: Vec<TransformTerm>,
    /// Transformed internal sample after pruning.
    pub matrix: TransformedMatrix,
}

pub fn balance_sample(
    sample: &Sample,
    spec: &TransformSpec,
    target: &MomentTarget,
    cfg: &SolverConfig,
) -> Result<Balanced> {
    let z = apply_transforms(sample, spec)?;
    let pruned = prune_low_variance_columns(&z, target, cfg.sd_cutoff)?;
    let mut solution = solve(&pruned.matrix, &pruned.target, cfg)?;
    // Report against every term, including pruned constant columns whose
    // value differs from the target.
    solution.violations = feasibility_check(&z, target);
    Ok(Balanced {
        solution,
        pruned_terms: pruned.pruned_terms,
        matrix: pruned.matrix,
    })
}
