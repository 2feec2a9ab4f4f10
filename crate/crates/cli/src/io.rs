//! Row-indexed CSV files (weights out, scores in) and JSON output.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct WeightRow {
    row_index: usize,
    weight: f64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ScoreRow {
    row_index: usize,
    score: f64,
}

pub fn write_weights(path: &Path, weights: &[f64]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for (row_index, &weight) in weights.iter().enumerate() {
        w.serialize(WeightRow { row_index, weight })?;
    }
    w.flush()?;
    Ok(())
}

/// Scores ordered by `rowIndex`, which must cover `0..n` exactly once.
pub fn read_scores(path: &Path, n: usize) -> Result<Vec<f64>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut scores = vec![None; n];
    for (i, rec) in r.deserialize::<ScoreRow>().enumerate() {
        let rec = rec.with_context(|| format!("{}: data row {}", path.display(), i + 1))?;
        if rec.row_index >= n {
            bail!(
                "{}: rowIndex {} out of range for {n} internal rows",
                path.display(),
                rec.row_index
            );
        }
        if !rec.score.is_finite() {
            bail!(
                "{}: score at rowIndex {} is not finite",
                path.display(),
                rec.row_index
            );
        }
        if scores[rec.row_index].replace(rec.score).is_some() {
            bail!("{}: duplicate rowIndex {}", path.display(), rec.row_index);
        }
    }
    let missing = scores.iter().filter(|s| s.is_none()).count();
    if missing > 0 {
        bail!(
            "{}: {missing} of {n} internal rows have no score",
            path.display()
        );
    }
    Ok(scores.into_iter().flatten().collect())
}

pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
