//! Structural-equation generator for internal (`A = 0`) and external
//! (`A = 1`) environments:
//!
//! ```text
//! H = b_HA A + e_H
//! X = b_XA A + b_XH H + b_XAH A H + e_X
//! Y ~ Bernoulli(sigmoid(b_YA A + b_YH H + b_YX . X + b_YAX . (A X)))
//! ```
//!
//! with `e_H ~ N(0, 1)` and `e_X ~ N(0, I_p)`. `H` is never emitted. The
//! interaction `b_XAH` changes the feature correlation structure between
//! environments; its spread is the shift-strength knob.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::par::{map_indices, Execution};
use crate::rng::{derive_seed, row_rng, standard_normal, stream_rng};
use crate::{Error, Matrix, Result};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    Internal,
    External,
}

impl Environment {
    pub fn indicator(self) -> f64 {
        match self {
            Environment::Internal => 0.0,
            Environment::External => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SemCoefficients {
    pub beta_ha: f64,
    pub beta_xa: Vec<f64>,
    pub beta_xh: Vec<f64>,
    pub beta_xah: Vec<f64>,
    pub beta_ya: f64,
    pub beta_yh: f64,
    pub beta_yx: Vec<f64>,
    pub beta_yax: Vec<f64>,
}

impl SemCoefficients {
    pub fn p(&self) -> usize {
        self.beta_yx.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        let lens = [
            ("betaXA", self.beta_xa.len()),
            ("betaXH", self.beta_xh.len()),
            ("betaXAH", self.beta_xah.len()),
            ("betaYAX", self.beta_yax.len()),
        ];
        for (name, len) in lens {
            if len != p {
                return Err(Error::invalid(format!(
                    "{name} has length {len}, expected {p}"
                )));
            }
        }
        if p == 0 {
            return Err(Error::invalid("at least one feature is required"));
        }
        Ok(())
    }

    /// `E[X | A = 1]`: `b_XA + (b_XH + b_XAH) b_HA`.
    pub fn external_feature_means(&self) -> Vec<f64> {
        (0..self.p())
            .map(|j| self.beta_xa[j] + (self.beta_xh[j] + self.beta_xah[j]) * self.beta_ha)
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, json + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Standard deviations of the zero-mean normal coefficient draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoefficientScales {
    pub ha: f64,
    pub ya: f64,
    pub xa: f64,
    pub xh: f64,
    pub yh: f64,
}

impl Default for CoefficientScales {
    fn default() -> Self {
        CoefficientScales {
            ha: 0.2,
            ya: 0.2,
            xa: 0.2,
            xh: 1.0,
            yh: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SemConfig {
    pub p: usize,
    /// Standard deviation of the `b_XAH` draw (0, 0.5, 1 for weak, medium, strong shift).
    pub sigma_xah: f64,
    pub scales: CoefficientScales,
    pub seed: u64,
}

impl Default for SemConfig {
    fn default() -> Self {
        SemConfig {
            p: 10,
            sigma_xah: 0.0,
            scales: CoefficientScales::default(),
            seed: 0,
        }
    }
}

impl SemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::invalid(format!("p must be >= 2, got {}", self.p)));
        }
        if !(self.sigma_xah >= 0.0 && self.sigma_xah.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma_xah must be >= 0, got {}",
                self.sigma_xah
            )));
        }
        let s = &self.scales;
        if [s.ha, s.ya, s.xa, s.xh, s.yh]
            .iter()
            .any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return Err(Error::invalid("coefficient scales must be >= 0"));
        }
        Ok(())
    }
}

// Sub-seed paths under the configuration seed.
const COEFFICIENT_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;
const EXTERNAL_STREAM: u64 = 3;

/// Draws one model. Standard normals are drawn in a fixed order and then
/// scaled, so configurations that differ only in scales share draws.
pub fn sample_coefficients(cfg: &SemConfig) -> Result<SemCoefficients> {
    cfg.validate()?;
    let p = cfg.p;
    let mut rng = stream_rng(derive_seed(cfg.seed, &[COEFFICIENT_STREAM]), 0);
    let mut draw = |sd: f64| standard_normal(&mut rng) * sd;
    let s = &cfg.scales;
    let beta_ha = draw(s.ha);
    let beta_ya = draw(s.ya);
    let beta_yh = draw(s.yh);
    let beta_xa = (0..p).map(|_| draw(s.xa)).collect();
    let beta_xh = (0..p).map(|_| draw(s.xh)).collect();
    let beta_xah = (0..p).map(|_| draw(cfg.sigma_xah)).collect();
    let mut beta_yx = vec![0.0; p];
    beta_yx[0] = 1.0;
    beta_yx[1] = 1.0;
    let mut beta_yax = vec![0.0; p];
    beta_yax[0] = -0.8;
    beta_yax[1] = -0.2;
    Ok(SemCoefficients {
        beta_ha,
        beta_xa,
        beta_xh,
        beta_xah,
        beta_ya,
        beta_yh,
        beta_yx,
        beta_yax,
    })
}

pub fn feature_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

/// `n` rows from environment `env`. Row `i` uses its own generator stream,
/// so a sample of size `m < n` is a prefix of the size-`n` sample.
pub fn generate(model: &SemCoefficients, n: usize, env: Environment, seed: u64) -> Result<Sample> {
    generate_with(model, n, env, seed, Execution::default())
}

pub fn generate_with(
    model: &SemCoefficients,
    n: usize,
    env: Environment,
    seed: u64,
    exec: Execution,
) -> Result<Sample> {
    model.validate()?;
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let p = model.p();
    let a = env.indicator();
    let rows: Vec<(Vec<f64>, bool)> = map_indices(n, exec, |i| {
        let mut rng = row_rng(seed, i as u64);
        let h = model.beta_ha * a + standard_normal(&mut rng);
        let x: Vec<f64> = (0..p)
            .map(|j| {
                model.beta_xa[j] * a
                    + model.beta_xh[j] * h
                    + model.beta_xah[j] * a * h
                    + standard_normal(&mut rng)
            })
            .collect();
        let logit = model.beta_ya * a
            + model.beta_yh * h
            + (0..p)
                .map(|j| (model.beta_yx[j] + model.beta_yax[j] * a) * x[j])
                .sum::<f64>();
        let u: f64 = rand::Rng::random(&mut rng);
        (x, u < sigmoid(logit))
    });
    let mut data = Vec::with_capacity(n * p);
    let mut outcomes = Vec::with_capacity(n);
    for (x, y) in rows {
        data.extend(x);
        outcomes.push(y);
    }
    Sample::new(
        Matrix::from_row_major(n, p, data)?,
        outcomes,
        feature_names(p),
    )
}

#[derive(Clone, Debug)]
pub struct GeneratedData {
    pub internal_train: Sample,
    pub internal_test: Sample,
    pub external: Sample,
    pub model: SemCoefficients,
}

/// One coefficient draw and three independent samples (train and test from
/// the internal environment, one from `external_env`, normally
/// [`Environment::External`]).
pub fn generate_experiment_triplet(
    cfg: &SemConfig,
    n_train: usize,
    n_test: usize,
    n_external: usize,
) -> Result<GeneratedData> {
    generate_triplet_in(cfg, n_train, n_test, n_external, Environment::External)
}

pub fn generate_triplet_in(
    cfg: &SemConfig,
    n_train: usize,
    n_test: usize,
    n_external: usize,
    external_env: Environment,
) -> Result<GeneratedData> {
    let model = sample_coefficients(cfg)?;
    let sub = |stream| derive_seed(cfg.seed, &[stream]);
    Ok(GeneratedData {
        internal_train: generate(&model, n_train, Environment::Internal, sub(TRAIN_STREAM))?,
        internal_test: generate(&model, n_test, Environment::Internal, sub(TEST_STREAM))?,
        external: generate(&model, n_external, external_env, sub(EXTERNAL_STREAM))?,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_outcome_coefficients() {
        for sigma in [0.0, 0.5, 1.0] {
            let c = sample_coefficients(&SemConfig {
                sigma_xah: sigma,
                seed: 5,
                ..SemConfig::default()
            })
            .unwrap();
            assert_eq!(c.beta_yx[..2], [1.0, 1.0]);
            assert!(c.beta_yx[2..].iter().all(|&b| b == 0.0));
            assert_eq!(c.beta_yax[..2], [-0.8, -0.2]);
            assert!(c.beta_yax[2..].iter().all(|&b| b == 0.0));
            if sigma == 0.0 {
                assert!(c.beta_xah.iter().all(|&b| b == 0.0));
            } else {
                assert!(c.beta_xah.iter().any(|&b| b != 0.0));
            }
        }
    }

    #[test]
    fn coefficients_are_deterministic_and_share_draws_across_sigma() {
        let cfg = SemConfig {
            sigma_xah: 0.5,
            seed: 42,
            ..SemConfig::default()
        };
        assert_eq!(
            sample_coefficients(&cfg).unwrap(),
            sample_coefficients(&cfg).unwrap()
        );
        let strong = sample_coefficients(&SemConfig {
            sigma_xah: 1.0,
            ..cfg.clone()
        })
        .unwrap();
        let medium = sample_coefficients(&cfg).unwrap();
        assert_eq!(strong.beta_xh, medium.beta_xh);
        for (s, m) in strong.beta_xah.iter().zip(&medium.beta_xah) {
            assert!((s - m * 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SemConfig {
            p: 1,
            ..SemConfig::default()
        }
        .validate()
        .is_err());
        assert!(SemConfig {
            sigma_xah: -0.1,
            ..SemConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn prefix_property_and_thread_independence() {
        let model = sample_coefficients(&SemConfig::default()).unwrap();
        let big = generate_with(&model, 50, Environment::External, 9, Execution::Parallel).unwrap();
        let small =
            generate_with(&model, 20, Environment::External, 9, Execution::Sequential).unwrap();
        assert_eq!(
            &big.features().as_slice()[..20 * 10],
            small.features().as_slice()
        );
        assert_eq!(&big.outcomes()[..20], small.outcomes());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-1000.0) >= 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
