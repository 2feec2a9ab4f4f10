//! Row-level samples, the moment transforms applied to them, and the external
//! moment targets those transforms must reproduce.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// Outcome class a per-class term conditions on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    Negative,
    Positive,
}

impl Class {
    pub fn from_u8(v: u8) -> Option<Class> {
        match v {
            0 => Some(Class::Negative),
            1 => Some(Class::Positive),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Class::Negative => 0,
            Class::Positive => 1,
        }
    }

    #[inline]
    pub fn indicator(self, outcome: bool) -> f64 {
        if outcome == (self == Class::Positive) {
            1.0
        } else {
            0.0
        }
    }
}

/// Internal row-level data: `n x p` features and a binary outcome per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    features: Matrix,
    outcomes: Vec<bool>,
    feature_names: Vec<String>,
}

impl Sample {
    pub fn new(features: Matrix, outcomes: Vec<bool>, feature_names: Vec<String>) -> Result<Self> {
        let (n, p) = (features.nrows(), features.ncols());
        if n == 0 || p == 0 {
            return Err(Error::invalid(format!(
                "sample must be non-empty, got {n}x{p}"
            )));
        }
        if outcomes.len() != n {
            return Err(Error::invalid(format!(
                "{} outcomes for {n} feature rows",
                outcomes.len()
            )));
        }
        if feature_names.len() != p {
            return Err(Error::invalid(format!(
                "{} feature names for {p} columns",
                feature_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name `{name}`")));
            }
        }
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature value at row {}, column `{}`",
                pos / p + 1,
                feature_names[pos % p]
            )));
        }
        Ok(Sample {
            features,
            outcomes,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn outcomes(&self) -> &[bool] {
        &self.outcomes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn prevalence(&self) -> f64 {
        self.outcomes.iter().filter(|&&y| y).count() as f64 / self.len() as f64
    }

    /// Rows `idx` (repeats allowed), e.g. for a bootstrap resample.
    pub fn select_rows(&self, idx: &[usize]) -> Sample {
        Sample {
            features: self.features.select_rows(idx),
            outcomes: idx.iter().map(|&i| self.outcomes[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let s = raw.trim();
    if s.is_empty() {
        return Err(Error::Csv {
            row,
            column: column.to_string(),
            message: "missing value".into(),
        });
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Csv {
            row,
            column: column.to_string(),
            message: format!("non-numeric value `{s}`"),
        }),
    }
}

/// Reads a sample from a CSV with a header row. `outcome_column` holds 0/1;
/// every other column is a numeric feature, kept in file order.
pub fn load_sample_csv(path: impl AsRef<Path>, outcome_column: &str) -> Result<Sample> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_sample_csv(BufReader::new(file), outcome_column)
}

pub fn read_sample_csv<R: std::io::Read>(reader: R, outcome_column: &str) -> Result<Sample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv {
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateHeader(h.clone()));
        }
    }
    let outcome_idx = headers
        .iter()
        .position(|h| h == outcome_column)
        .ok_or_else(|| Error::invalid(format!("outcome column `{outcome_column}` not found")))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != outcome_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut data = Vec::new();
    let mut outcomes = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        for (j, cell) in record.iter().enumerate() {
            let v = parse_cell(cell, row, &headers[j])?;
            if j == outcome_idx {
                if v == 0.0 {
                    outcomes.push(false);
                } else if v == 1.0 {
                    outcomes.push(true);
                } else {
                    return Err(Error::OutcomeNotBinary { row });
                }
            } else {
                data.push(v);
            }
        }
    }
    let n = outcomes.len();
    let features = Matrix::from_row_major(n, feature_names.len(), data)?;
    Sample::new(features, outcomes, feature_names)
}

/// Writes `sample` with features first and the outcome last, in shortest
/// round-trip float formatting so a reload is bit-exact.
pub fn write_sample_csv(
    path: impl AsRef<Path>,
    sample: &Sample,
    outcome_column: &str,
) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut header = sample.feature_names.join(",");
    header.push(',');
    header.push_str(outcome_column);
    writeln!(out, "{header}").map_err(io_err)?;
    for (row, &y) in sample.features.rows_iter().zip(&sample.outcomes) {
        let mut line = String::with_capacity(row.len() * 20);
        for v in row {
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push(if y { '1' } else { '0' });
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// One component of the transformation applied to each `(x, y)` row.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TermRecord", into = "TermRecord")]
pub enum TransformTerm {
    /// `x_f * 1[y = c]`
    PerClassMean { feature: String, class: Class },
    /// `x_f^2 * 1[y = c]`
    PerClassSecondMoment { feature: String, class: Class },
    /// `x_f`
    MarginalMean { feature: String },
    /// `y`
    Prevalence,
}

impl TransformTerm {
    pub fn per_class_mean(feature: impl Into<String>, class: Class) -> Self {
        TransformTerm::PerClassMean {
            feature: feature.into(),
            class,
        }
    }

    pub fn per_class_second_moment(feature: impl Into<String>, class: Class) -> Self {
        TransformTerm::PerClassSecondMoment {
            feature: feature.into(),
            class,
        }
    }

    pub fn marginal_mean(feature: impl Into<String>) -> Self {
        TransformTerm::MarginalMean {
            feature: feature.into(),
        }
    }

    pub fn feature(&self) -> Option<&str> {
        match self {
            TransformTerm::PerClassMean { feature, .. }
            | TransformTerm::PerClassSecondMoment { feature, .. }
            | TransformTerm::MarginalMean { feature } => Some(feature),
            TransformTerm::Prevalence => None,
        }
    }

    pub fn class(&self) -> Option<Class> {
        match self {
            TransformTerm::PerClassMean { class, .. }
            | TransformTerm::PerClassSecondMoment { class, .. } => Some(*class),
            _ => None,
        }
    }

    fn kind(&self) -> TermKind {
        match self {
            TransformTerm::PerClassMean { .. } => TermKind::PerClassMean,
            TransformTerm::PerClassSecondMoment { .. } => TermKind::PerClassSecondMoment,
            TransformTerm::MarginalMean { .. } => TermKind::MarginalMean,
            TransformTerm::Prevalence => TermKind::Prevalence,
        }
    }
}

impl fmt::Display for TransformTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformTerm::PerClassMean { feature, class } => {
                write!(f, "perClassMean({feature}, {})", class.as_u8())
            }
            TransformTerm::PerClassSecondMoment { feature, class } => {
                write!(f, "perClassSecondMoment({feature}, {})", class.as_u8())
            }
            TransformTerm::MarginalMean { feature } => write!(f, "marginalMean({feature})"),
            TransformTerm::Prevalence => write!(f, "prevalence"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TermKind {
    PerClassMean,
    PerClassSecondMoment,
    MarginalMean,
    Prevalence,
}

/// Wire form of a [`TransformTerm`]:
/// `{"kind": ..., "feature": <name|null>, "class": 0|1|null}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub kind: TermKind,
    #[serde(default)]
    pub feature: Option<String>,
    #[serde(default)]
    pub class: Option<u8>,
}

impl TryFrom<TermRecord> for TransformTerm {
    type Error = String;

    fn try_from(r: TermRecord) -> std::result::Result<Self, String> {
        let feature = || {
            r.feature
                .clone()
                .ok_or_else(|| format!("feature: required for kind {:?}", r.kind))
        };
        let class = || match r.class {
            Some(c) => Class::from_u8(c).ok_or_else(|| format!("class: must be 0 or 1, got {c}")),
            None => Err(format!("class: required for kind {:?}", r.kind)),
        };
        Ok(match r.kind {
            TermKind::PerClassMean => TransformTerm::PerClassMean {
                feature: feature()?,
                class: class()?,
            },
            TermKind::PerClassSecondMoment => TransformTerm::PerClassSecondMoment {
                feature: feature()?,
                class: class()?,
            },
            TermKind::MarginalMean => TransformTerm::MarginalMean {
                feature: feature()?,
            },
            TermKind::Prevalence => TransformTerm::Prevalence,
        })
    }
}

impl From<TransformTerm> for TermRecord {
    fn from(t: TransformTerm) -> Self {
        TermRecord {
            kind: t.kind(),
            feature: t.feature().map(str::to_string),
            class: t.class().map(Class::as_u8),
        }
    }
}

/// Ordered, duplicate-free list of transform terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TransformTerm>", into = "Vec<TransformTerm>")]
pub struct TransformSpec {
    terms: Vec<TransformTerm>,
}

impl TryFrom<Vec<TransformTerm>> for TransformSpec {
    type Error = Error;

    fn try_from(terms: Vec<TransformTerm>) -> Result<Self> {
        TransformSpec::new(terms)
    }
}

impl From<TransformSpec> for Vec<TransformTerm> {
    fn from(s: TransformSpec) -> Self {
        s.terms
    }
}

impl TransformSpec {
    pub fn new(terms: Vec<TransformTerm>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &terms {
            if !seen.insert(t) {
                return Err(Error::invalid(format!("duplicate transform term {t}")));
            }
        }
        Ok(TransformSpec { terms })
    }

    /// Per-class means of every feature (both classes) plus prevalence.
    pub fn class_means(features: &[String]) -> Self {
        let mut terms = Vec::with_capacity(2 * features.len() + 1);
        for f in features {
            terms.push(TransformTerm::per_class_mean(f, Class::Positive));
            terms.push(TransformTerm::per_class_mean(f, Class::Negative));
        }
        terms.push(TransformTerm::Prevalence);
        TransformSpec { terms }
    }

    /// Per-class first and second moments of every feature plus prevalence,
    /// i.e. what a "mean and variance by outcome class" table pins down.
    pub fn class_means_and_second_moments(features: &[String]) -> Self {
        let mut terms = Vec::with_capacity(4 * features.len() + 1);
        for f in features {
            for class in [Class::Positive, Class::Negative] {
                terms.push(TransformTerm::per_class_mean(f, class));
                terms.push(TransformTerm::per_class_second_moment(f, class));
            }
        }
        terms.push(TransformTerm::Prevalence);
        TransformSpec { terms }
    }

    pub fn terms(&self) -> &[TransformTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Resolves every feature reference against `sample`.
    fn resolve(&self, sample: &Sample) -> Result<Vec<Option<usize>>> {
        self.terms
            .iter()
            .map(|t| match t.feature() {
                Some(f) => sample
                    .feature_index(f)
                    .map(Some)
                    .ok_or_else(|| Error::UnknownFeature(f.to_string())),
                None => Ok(None),
            })
            .collect()
    }
}

/// `n x k` matrix whose row `i` is the transform of `(x_i, y_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedMatrix {
    pub z: Matrix,
    pub terms: Vec<TransformTerm>,
}

impl TransformedMatrix {
    pub fn new(z: Matrix, terms: Vec<TransformTerm>) -> Result<Self> {
        if z.ncols() != terms.len() {
            return Err(Error::invalid(format!(
                "{} columns but {} terms",
                z.ncols(),
                terms.len()
            )));
        }
        Ok(TransformedMatrix { z, terms })
    }

    /// Unlabelled columns, for tests and ad-hoc solves.
    pub fn from_matrix(z: Matrix) -> Self {
        let terms = (0..z.ncols())
            .map(|j| TransformTerm::marginal_mean(format!("z{}", j + 1)))
            .collect();
        TransformedMatrix { z, terms }
    }

    pub fn nrows(&self) -> usize {
        self.z.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.z.ncols()
    }
}

/// External expectations aligned with a [`TransformSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTarget {
    pub values: Vec<f64>,
    pub n_external: Option<u64>,
}

impl MomentTarget {
    pub fn new(values: Vec<f64>, n_external: Option<u64>, spec: &TransformSpec) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::invalid(format!(
                "values: {} entries for {} spec terms",
                values.len(),
                spec.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("values[{j}]: not finite")));
        }
        for (j, (t, &v)) in spec.terms().iter().zip(&values).enumerate() {
            if *t == TransformTerm::Prevalence && !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "values[{j}]: prevalence {v} outside [0, 1]"
                )));
            }
        }
        if n_external == Some(0) {
            return Err(Error::invalid("nExternal: must be positive"));
        }
        Ok(MomentTarget { values, n_external })
    }

    /// Target without a spec, for tests and ad-hoc solves.
    pub fn from_values(values: Vec<f64>) -> Self {
        MomentTarget {
            values,
            n_external: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn apply_transforms(sample: &Sample, spec: &TransformSpec) -> Result<TransformedMatrix> {
    let cols = spec.resolve(sample)?;
    let k = spec.len();
    let n = sample.len();
    let mut data = Vec::with_capacity(n * k);
    for (x, &y) in sample.features.rows_iter().zip(&sample.outcomes) {
        for (term, col) in spec.terms.iter().zip(&cols) {
            let v = match term {
                TransformTerm::PerClassMean { class, .. } => x[col.unwrap()] * class.indicator(y),
                TransformTerm::PerClassSecondMoment { class, .. } => {
                    let v = x[col.unwrap()];
                    v * v * class.indicator(y)
                }
                TransformTerm::MarginalMean { .. } => x[col.unwrap()],
                TransformTerm::Prevalence => {
                    if y {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            data.push(v);
        }
    }
    TransformedMatrix::new(Matrix::from_row_major(n, k, data)?, spec.terms.clone())
}

/// Column means of the transformed sample: the statistics an external site
/// holding `sample` would report.
pub fn stats_from_sample(sample: &Sample, spec: &TransformSpec) -> Result<MomentTarget> {
    let z = apply_transforms(sample, spec)?;
    Ok(MomentTarget {
        values: z.z.column_means(),
        n_external: Some(sample.len() as u64),
    })
}

/// Published per-class summary of one feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportedClassStats {
    pub feature: String,
    #[serde(with = "class_as_u8")]
    pub class: Class,
    pub class_mean: f64,
    pub class_variance: f64,
}

mod class_as_u8 {
    use super::Class;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Class, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(c.as_u8())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Class, D::Error> {
        let v = u8::deserialize(d)?;
        Class::from_u8(v).ok_or_else(|| serde::de::Error::custom("class must be 0 or 1"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum VarianceConvention {
    /// Divide-by-n variances.
    #[default]
    Population,
    /// Divide-by-(n-1) variances; needs the external sample size.
    Sample,
}

/// Empirical per-class means and population variances of every feature.
pub fn class_statistics(sample: &Sample) -> Vec<ReportedClassStats> {
    let mut out = Vec::with_capacity(2 * sample.num_features());
    for (j, name) in sample.feature_names.iter().enumerate() {
        for class in [Class::Positive, Class::Negative] {
            let vals: Vec<f64> = sample
                .features
                .column(j)
                .zip(&sample.outcomes)
                .filter(|&(_, &y)| class.indicator(y) == 1.0)
                .map(|(v, _)| v)
                .collect();
            let (mean, var) = if vals.is_empty() {
                (0.0, 0.0)
            } else {
                let m = vals.iter().sum::<f64>() / vals.len() as f64;
                let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / vals.len() as f64;
                (m, v)
            };
            out.push(ReportedClassStats {
                feature: name.clone(),
                class,
                class_mean: mean,
                class_variance: var,
            });
        }
    }
    out
}

/// Turns published class-wise means/variances and the prevalence into the
/// expectation vector for `spec`.
///
/// With [`VarianceConvention::Sample`], each class variance is rescaled by
/// `(m - 1) / m` where `m = n_external * class share`.
pub fn convert_reported_stats(
    report: &[ReportedClassStats],
    prevalence: f64,
    spec: &TransformSpec,
    convention: VarianceConvention,
    n_external: Option<u64>,
) -> Result<MomentTarget> {
    if !(prevalence > 0.0 && prevalence < 1.0) {
        return Err(Error::invalid(format!(
            "prevalence must lie in (0, 1), got {prevalence}"
        )));
    }
    if convention == VarianceConvention::Sample && n_external.is_none() {
        return Err(Error::invalid(
            "nExternal is required for the sample-variance convention",
        ));
    }
    let share = |c: Class| match c {
        Class::Positive => prevalence,
        Class::Negative => 1.0 - prevalence,
    };
    let lookup = |feature: &str, class: Class| -> Result<&ReportedClassStats> {
        report
            .iter()
            .find(|r| r.feature == feature && r.class == class)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "no reported statistics for feature `{feature}`, class {}",
                    class.as_u8()
                ))
            })
    };
    let variance = |r: &ReportedClassStats| -> f64 {
        match (convention, n_external) {
            (VarianceConvention::Sample, Some(n)) => {
                let m = n as f64 * share(r.class);
                if m > 1.0 {
                    r.class_variance * (m - 1.0) / m
                } else {
                    r.class_variance
                }
            }
            _ => r.class_variance,
        }
    };

    let mut values = Vec::with_capacity(spec.len());
    for term in spec.terms() {
        let v = match term {
            TransformTerm::PerClassMean { feature, class } => {
                lookup(feature, *class)?.class_mean * share(*class)
            }
            TransformTerm::PerClassSecondMoment { feature, class } => {
                let r = lookup(feature, *class)?;
                (r.class_mean * r.class_mean + variance(r)) * share(*class)
            }
            TransformTerm::MarginalMean { feature } => {
                lookup(feature, Class::Positive)?.class_mean * prevalence
                    + lookup(feature, Class::Negative)?.class_mean * (1.0 - prevalence)
            }
            TransformTerm::Prevalence => prevalence,
        };
        values.push(v);
    }
    MomentTarget::new(values, n_external, spec)
}

/// Result of [`prune_low_variance_columns`].
#[derive(Clone, Debug)]
pub struct Pruned {
    pub matrix: TransformedMatrix,
    pub target: MomentTarget,
    pub pruned_terms: Vec<TransformTerm>,
    /// Indices (into the input) of the retained columns.
    pub kept: Vec<usize>,
}

/// Sample standard deviation (n - 1 denominator; 0 for a single row).
pub fn column_sd(z: &Matrix, j: usize) -> f64 {
    let n = z.nrows();
    if n < 2 {
        return 0.0;
    }
    let mean = z.column(j).sum::<f64>() / n as f64;
    let ss: f64 = z.column(j).map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Drops columns whose sample SD is below `sd_cutoff`, together with the
/// aligned target entries.
pub fn prune_low_variance_columns(
    z: &TransformedMatrix,
    target: &MomentTarget,
    sd_cutoff: f64,
) -> Result<Pruned> {
    if !(sd_cutoff >= 0.0) {
        return Err(Error::invalid(format!(
            "sdCutoff must be >= 0, got {sd_cutoff}"
        )));
    }
    if target.len() != z.ncols() {
        return Err(Error::invalid(format!(
            "target has {} values for {} columns",
            target.len(),
            z.ncols()
        )));
    }
    let (kept, dropped): (Vec<usize>, Vec<usize>) =
        (0..z.ncols()).partition(|&j| column_sd(&z.z, j) >= sd_cutoff);
    if kept.is_empty() {
        return Err(Error::NoUsableConstraints);
    }
    Ok(Pruned {
        matrix: TransformedMatrix {
            z: z.z.select_columns(&kept),
            terms: kept.iter().map(|&j| z.terms[j].clone()).collect(),
        },
        target: MomentTarget {
            values: kept.iter().map(|&j| target.values[j]).collect(),
            n_external: target.n_external,
        },
        pruned_terms: dropped.iter().map(|&j| z.terms[j].clone()).collect(),
        kept,
    })
}

/// The statistics JSON document:
/// `{"spec": [...], "values": [...], "nExternal": <int|null>}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatsDocument {
    pub spec: Vec<TermRecord>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub n_external: Option<u64>,
}

impl StatsDocument {
    pub fn new(spec: &TransformSpec, target: &MomentTarget) -> Self {
        StatsDocument {
            spec: spec.terms().iter().cloned().map(TermRecord::from).collect(),
            values: target.values.clone(),
            n_external: target.n_external,
        }
    }

    /// Validates the document into a spec and an aligned target. Error
    /// messages name the offending field.
    pub fn into_parts(self) -> Result<(TransformSpec, MomentTarget)> {
        let terms = self
            .spec
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                TransformTerm::try_from(r).map_err(|e| Error::invalid(format!("spec[{i}].{e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = TransformSpec::new(terms).map_err(|e| Error::invalid(format!("spec: {e}")))?;
        let target = MomentTarget::new(self.values, self.n_external, &spec)?;
        Ok((spec, target))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(TransformSpec, MomentTarget)> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let doc: StatsDocument =
            serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
        doc.into_parts()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        std::fs::write(path, json + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
