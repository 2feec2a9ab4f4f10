use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

use extval_core::balancer::{balance_sample, feasibility_check, SolverConfig, SolverStatus};
use extval_core::data::{
    apply_transforms, column_sd, load_sample_csv, stats_from_sample, write_sample_csv, Sample,
    StatsDocument, TransformSpec,
};
use extval_core::experiment::{run_grid, ExperimentOptions};
use extval_core::metrics::{bootstrap_metrics, BootstrapInput};
use extval_core::par::{with_threads, Execution};
use extval_core::simulator::{generate_experiment_triplet, SemConfig};

use crate::io::{emit_json, read_scores, write_weights};
use crate::report::{
    DiagnosisReport, EstimationReport, ExperimentReport, InputDigest, SolutionReport,
    TermDiagnostic, SCHEMA_VERSION, TOOL_VERSION,
};
use crate::{
    BalanceArgs, Cli, Command, DiagnoseArgs, EstimateArgs, ExperimentArgs, GlobalOpts,
    SimulateArgs, SolverArgs, EXIT_INFEASIBLE, EXIT_OK,
};

pub fn dispatch(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    with_threads(g.threads, || match &cli.command {
        Command::Balance(a) => balance(g, a),
        Command::Estimate(a) => estimate(g, a),
        Command::Diagnose(a) => diagnose(g, a),
        Command::Simulate(a) => simulate(g, a),
        Command::Experiment(a) => experiment(g, a),
    })
}

fn resolve_seed(g: &GlobalOpts) -> Result<u64> {
    match g.seed {
        Some(s) => Ok(s),
        None if g.strict => bail!("--seed is required in --strict mode"),
        None => {
            let s = rand::random::<u64>();
            eprintln!("note: no --seed given, using {s}");
            Ok(s)
        }
    }
}

fn solver_config(a: &SolverArgs) -> Result<SolverConfig> {
    let cfg = SolverConfig {
        lambda: a.lambda,
        min_weight: a.min_weight,
        sd_cutoff: a.sd_cutoff,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_inputs(
    g: &GlobalOpts,
    internal: &Path,
    stats: &Path,
) -> Result<(Sample, TransformSpec, extval_core::data::MomentTarget)> {
    let sample = load_sample_csv(internal, &g.outcome_column)
        .with_context(|| format!("internal sample {}", internal.display()))?;
    let (spec, target) =
        StatsDocument::load(stats).with_context(|| format!("statistics {}", stats.display()))?;
    Ok((sample, spec, target))
}

fn exit_for(status: SolverStatus, violations: usize) -> i32 {
    if status == SolverStatus::Infeasible || violations > 0 {
        EXIT_INFEASIBLE
    } else {
        EXIT_OK
    }
}

fn balance(g: &GlobalOpts, a: &BalanceArgs) -> Result<i32> {
    let (sample, spec, target) = load_inputs(g, &a.internal, &a.stats)?;
    let cfg = solver_config(&a.solver)?;
    let balanced = balance_sample(&sample, &spec, &target, &cfg)?;
    let sol = &balanced.solution;
    write_weights(&a.out_weights, &sol.weights)?;
    emit_json(&SolutionReport::from(sol), a.out_report.as_deref())?;
    for v in &sol.violations {
        eprintln!(
            "violation: {} target {} outside internal range [{}, {}]",
            v.term, v.target_value, v.internal_min, v.internal_max
        );
    }
    Ok(exit_for(sol.status, sol.violations.len()))
}

fn estimate(g: &GlobalOpts, a: &EstimateArgs) -> Result<i32> {
    let seed = resolve_seed(g)?;
    let (sample, spec, target) = load_inputs(g, &a.internal, &a.stats)?;
    let scores = read_scores(&a.scores, sample.len())?;
    let cfg = solver_config(&a.solver)?;
    if a.metrics.is_empty() {
        bail!("--metrics: at least one metric is required");
    }
    let mut metrics = a.metrics.clone();
    let mut seen = std::collections::HashSet::new();
    metrics.retain(|m| seen.insert(*m));

    let balanced = balance_sample(&sample, &spec, &target, &cfg)?;
    let input = BootstrapInput {
        sample: &sample,
        spec: &spec,
        target: &target,
        scores: &scores,
        solver: &cfg,
    };
    let estimates = bootstrap_metrics(&input, &metrics, a.bootstrap, seed, Execution::Parallel)?;
    let report = EstimationReport {
        schema_version: SCHEMA_VERSION.into(),
        tool_version: TOOL_VERSION.into(),
        seed,
        metrics: estimates,
        solver: SolutionReport::from(&balanced.solution),
        inputs: InputDigest {
            internal_rows: sample.len(),
            internal_features: sample.num_features(),
            spec_terms: spec.len(),
            pruned_terms: balanced
                .pruned_terms
                .iter()
                .map(|t| t.to_string())
                .collect(),
            n_external: target.n_external,
        },
    };
    emit_json(&report, a.out.as_deref())?;
    Ok(exit_for(
        balanced.solution.status,
        balanced.solution.violations.len(),
    ))
}

fn diagnose(g: &GlobalOpts, a: &DiagnoseArgs) -> Result<i32> {
    let (sample, spec, target) = load_inputs(g, &a.internal, &a.stats)?;
    let z = apply_transforms(&sample, &spec)?;
    let violations = feasibility_check(&z, &target);
    let terms: Vec<TermDiagnostic> = (0..z.ncols())
        .map(|j| {
            let (lo, hi, sum) =
                z.z.column(j)
                    .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), v| {
                        (lo.min(v), hi.max(v), s + v)
                    });
            let sd = column_sd(&z.z, j);
            TermDiagnostic {
                index: j,
                term: z.terms[j].to_string(),
                internal_min: lo,
                internal_max: hi,
                internal_mean: sum / z.nrows() as f64,
                internal_sd: sd,
                target: target.values[j],
                pruned: !(sd >= a.sd_cutoff),
                violated: violations.iter().any(|v| v.term_index == j),
            }
        })
        .collect();

    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:<5} {:<32} {:>12} {:>12} {:>12} {:>12}  flags",
        "index", "term", "min", "max", "mean", "target"
    )?;
    for t in &terms {
        let mut flags = Vec::new();
        if t.violated {
            flags.push("OUT-OF-RANGE");
        }
        if t.pruned {
            flags.push("pruned");
        }
        writeln!(
            out,
            "{:<5} {:<32} {:>12.5} {:>12.5} {:>12.5} {:>12.5}  {}",
            t.index,
            t.term,
            t.internal_min,
            t.internal_max,
            t.internal_mean,
            t.target,
            flags.join(",")
        )?;
    }
    let report = DiagnosisReport {
        schema_version: SCHEMA_VERSION.into(),
        tool_version: TOOL_VERSION.into(),
        feasible_by_range: violations.is_empty(),
        violations,
        terms,
    };
    if let Some(p) = &a.out {
        emit_json(&report, Some(p))?;
    }
    emit_json(&report, None)?;
    Ok(if report.feasible_by_range {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}

fn simulate(g: &GlobalOpts, a: &SimulateArgs) -> Result<i32> {
    let seed = resolve_seed(g)?;
    let cfg = SemConfig {
        p: a.p,
        sigma_xah: a.sigma_xah,
        seed,
        ..SemConfig::default()
    };
    cfg.validate()?;
    if a.n == 0 {
        bail!("--n must be >= 1");
    }
    let data = generate_experiment_triplet(&cfg, a.n, a.n, a.n)?;
    std::fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let col = &g.outcome_column;
    write_sample_csv(
        a.out_dir.join("internal_train.csv"),
        &data.internal_train,
        col,
    )?;
    write_sample_csv(
        a.out_dir.join("internal_test.csv"),
        &data.internal_test,
        col,
    )?;
    write_sample_csv(a.out_dir.join("external.csv"), &data.external, col)?;
    data.model.save(a.out_dir.join("model.json"))?;
    let spec = TransformSpec::class_means_and_second_moments(data.external.feature_names());
    let target = stats_from_sample(&data.external, &spec)?;
    StatsDocument::new(&spec, &target).save(a.out_dir.join("external_stats.json"))?;
    Ok(EXIT_OK)
}

fn experiment(g: &GlobalOpts, a: &ExperimentArgs) -> Result<i32> {
    let seed = resolve_seed(g)?;
    if let Some(s) = a.sigma_xah.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        bail!("--sigma-xah: values must be >= 0, got {s}");
    }
    if a.n.contains(&0) {
        bail!("--n: sizes must be >= 1");
    }
    let base = SemConfig {
        p: a.p,
        seed,
        ..SemConfig::default()
    };
    base.validate()?;
    let mut out = std::io::stdout().lock();
    let summary = run_grid(
        &base,
        &a.sigma_xah,
        &a.n,
        a.reps,
        &ExperimentOptions::default(),
        Execution::Parallel,
    )?;
    writeln!(
        out,
        "{:>6} {:>6} {:>5} {:>8} {:>8} {:>8} {:>9} {:>8} {:>8} {:>8} {:>9}",
        "sigma",
        "n",
        "reps",
        "meanKL",
        "intAUC",
        "extAUC",
        "meanErr",
        "q25",
        "q50",
        "q75",
        "naiveErr"
    )?;
    for c in &summary.cells {
        writeln!(
            out,
            "{:>6} {:>6} {:>5} {:>8.3} {:>8.3} {:>8.3} {:>9.4} {:>8.4} {:>8.4} {:>8.4} {:>9.4}",
            c.sigma,
            c.n,
            c.reps,
            c.mean_kl,
            c.mean_internal_auc,
            c.mean_external_auc,
            c.mean_abs_error,
            c.q25,
            c.q50,
            c.q75,
            c.mean_naive_abs_error
        )?;
    }
    if let Some(p) = &a.out_csv {
        summary.write_long_csv(p)?;
    }
    if let Some(p) = &a.out_json {
        let report = ExperimentReport {
            schema_version: SCHEMA_VERSION.into(),
            tool_version: TOOL_VERSION.into(),
            seed,
            p: a.p,
            summary,
        };
        emit_json(&report, Some(p))?;
    }
    Ok(EXIT_OK)
}
