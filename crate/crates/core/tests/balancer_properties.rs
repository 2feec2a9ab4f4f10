use proptest::prelude::*;

use extval_core::balancer::{
    effective_sample_size, kl_to_uniform, solve, solve_exact, SolverConfig, SolverStatus,
};
use extval_core::data::{prune_low_variance_columns, MomentTarget, TransformedMatrix};
use extval_core::Matrix;

fn exact_cfg() -> SolverConfig {
    SolverConfig {
        min_weight: 0.0,
        ..SolverConfig::default()
    }
}

/// Columns in `[-2, 2]`, a strictly positive weighting and the moments it attains.
fn feasible() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (1usize..=3, 6usize..=40).prop_flat_map(|(k, n)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), k),
            prop::collection::vec(0.2f64..1.0, n),
        )
            .prop_map(|(cols, raw)| {
                let s: f64 = raw.iter().sum();
                let w: Vec<f64> = raw.iter().map(|v| v / s).collect();
                let target = cols
                    .iter()
                    .map(|c| c.iter().zip(&w).map(|(a, b)| a * b).sum())
                    .collect();
                (cols, target, w)
            })
    })
}

fn matrix(cols: &[Vec<f64>]) -> TransformedMatrix {
    TransformedMatrix::from_matrix(Matrix::from_columns(cols).unwrap())
}

fn moments(cols: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    cols.iter()
        .map(|c| c.iter().zip(w).map(|(a, b)| a * b).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_solution_is_a_valid_weighting((cols, target, _) in feasible()) {
        let n = cols[0].len();
        let sol = solve_exact(&matrix(&cols), &MomentTarget::from_values(target.clone()), &exact_cfg()).unwrap();
        prop_assert_eq!(sol.status, SolverStatus::Exact);
        prop_assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(sol.weights.iter().all(|w| *w >= 0.0));
        prop_assert!(sol.kl_divergence >= 0.0);
        prop_assert!(sol.effective_sample_size >= 1.0 - 1e-9 && sol.effective_sample_size <= n as f64 + 1e-9);
        for (m, t) in moments(&cols, &sol.weights).iter().zip(&target) {
            prop_assert!((m - t).abs() <= 1e-8);
        }
    }

    #[test]
    fn exact_weights_have_exponential_form((cols, target, _) in feasible()) {
        let k = cols.len();
        let sol = solve_exact(&matrix(&cols), &MomentTarget::from_values(target), &exact_cfg()).unwrap();
        prop_assert_eq!(sol.dual.len(), k + 1);
        for (i, w) in sol.weights.iter().enumerate() {
            let lin: f64 = (0..k).map(|j| cols[j][i] * sol.dual[j]).sum();
            prop_assert!((w - (-1.0 - lin - sol.dual[k]).exp()).abs() <= 1e-8);
        }
    }

    #[test]
    fn generating_weights_never_beat_the_solution((cols, target, w) in feasible()) {
        let sol = solve_exact(&matrix(&cols), &MomentTarget::from_values(target), &exact_cfg()).unwrap();
        prop_assert!(kl_to_uniform(&w) >= sol.kl_divergence - 1e-8);
    }

    #[test]
    fn rescaling_a_column_leaves_weights_unchanged((cols, target, _) in feasible(), j in 0usize..3) {
        let j = j % cols.len();
        let base = solve_exact(&matrix(&cols), &MomentTarget::from_values(target.clone()), &exact_cfg()).unwrap();
        let mut cols2 = cols.clone();
        cols2[j].iter_mut().for_each(|v| *v *= 1e3);
        let mut target2 = target;
        target2[j] *= 1e3;
        let scaled = solve_exact(&matrix(&cols2), &MomentTarget::from_values(target2), &exact_cfg()).unwrap();
        for (a, b) in base.weights.iter().zip(&scaled.weights) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn internal_means_give_uniform_weights((cols, _, _) in feasible()) {
        let n = cols[0].len();
        let means = moments(&cols, &vec![1.0 / n as f64; n]);
        let sol = solve_exact(&matrix(&cols), &MomentTarget::from_values(means), &exact_cfg()).unwrap();
        let u = 1.0 / n as f64;
        prop_assert!(sol.weights.iter().all(|w| (w - u).abs() <= 1e-6));
        prop_assert!(sol.kl_divergence <= 1e-10);
    }

    #[test]
    fn relaxed_trace_is_non_increasing(
        (cols, _, _) in feasible(),
        shift in 2.5f64..6.0,
        lambda in prop::sample::select(vec![1e-6, 1e-3, 1e-1]),
    ) {
        let n = cols[0].len();
        let mut target = moments(&cols, &vec![1.0 / n as f64; n]);
        target[0] = shift;
        let cfg = SolverConfig { lambda, max_mirror_iter: 2000, ..SolverConfig::default() };
        let sol = solve(&matrix(&cols), &MomentTarget::from_values(target), &cfg).unwrap();
        prop_assert_eq!(sol.status, SolverStatus::Relaxed);
        let trace = &sol.convergence.objective_trace;
        prop_assert!(trace.len() >= 2);
        prop_assert!(trace.windows(2).all(|p| p[1] <= p[0]));
        prop_assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(sol.weights.iter().all(|w| *w >= cfg.min_weight * (1.0 - 1e-12)));
    }
}

#[test]
fn effective_sample_size_extremes() {
    assert!((effective_sample_size(&[0.25; 4]) - 4.0).abs() < 1e-12);
    assert!((effective_sample_size(&[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
}

#[test]
fn pruning_a_column_at_its_mean_changes_nothing() {
    let x = vec![0.3, -1.2, 0.8, 2.0, -0.4, 1.1, 0.0, -2.2, 0.9, 1.7];
    let c = vec![5.0; 10];
    let target = vec![0.4, 5.0];
    let full = matrix(&[x.clone(), c]);
    let t = MomentTarget::from_values(target);
    let pruned = prune_low_variance_columns(&full, &t, 1e-4).unwrap();
    assert_eq!(pruned.matrix.ncols(), 1);
    assert_eq!(pruned.pruned_terms.len(), 1);
    let a = solve(&pruned.matrix, &pruned.target, &exact_cfg()).unwrap();
    let b = solve(
        &matrix(&[x]),
        &MomentTarget::from_values(vec![0.4]),
        &exact_cfg(),
    )
    .unwrap();
    assert_eq!(a.status, SolverStatus::Exact);
    for (u, v) in a.weights.iter().zip(&b.weights) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn minimum_weight_is_enforced_after_solving() {
    let col = vec![0.0, 0.0, 0.0, 1.0];
    let cfg = SolverConfig {
        min_weight: 1e-3,
        ..SolverConfig::default()
    };
    let sol = solve(
        &matrix(&[col]),
        &MomentTarget::from_values(vec![0.999]),
        &cfg,
    )
    .unwrap();
    assert!(sol.weights.iter().all(|w| *w >= 1e-3 * (1.0 - 1e-12)));
    assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}
