//! Experiment configuration, read from TOML. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use temsnn::TemParams64;

use crate::error::{ExperimentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemConfig {
    pub kappa: f64,
    pub delta: f64,
    pub beta: f64,
}

impl TemConfig {
    pub fn params(&self) -> temsnn::Result<TemParams64> {
        TemParams64::new(self.kappa, self.delta, self.beta)
    }
}

/// One-layer teacher-student setup, shared by the exposure grid and the
/// noise grid. Exposures are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleLayerConfig {
    pub n0: usize,
    pub n1: usize,
    pub input_bandwidth: usize,
    pub coefficient_scale: f64,
    pub tem: TemConfig,
    pub examples: Vec<usize>,
    pub exposures: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub examples: Vec<usize>,
    /// Seconds.
    pub exposure: f64,
    /// `inf` means noiseless.
    pub snr_db: Vec<f64>,
}

/// Two-layer teacher-student setup. Exposures are whole periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLayerConfig {
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
    pub examples: usize,
    pub input_bandwidth: usize,
    pub coefficient_scale: f64,
    /// Defaults to the largest per-example hidden spike count of each trial.
    #[serde(default)]
    pub filter_passband: Option<usize>,
    pub hidden_tem: TemConfig,
    pub output_tem: TemConfig,
    pub exposures: Vec<u32>,
    #[serde(default = "default_restarts")]
    pub kmeans_restarts: usize,
}

fn default_restarts() -> usize {
    temsnn::two_layer::DEFAULT_RESTARTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub trials: usize,
    pub output_dir: PathBuf,
    pub period: f64,
    pub single_layer: SingleLayerConfig,
    pub noise: NoiseConfig,
    pub two_layer: TwoLayerConfig,
}

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

fn invalid(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(invalid(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn default_config() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("bundled config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be positive"));
        }
        positive("period", self.period)?;

        let s = &self.single_layer;
        if s.n0 == 0 || s.n1 == 0 {
            return Err(invalid("single_layer dimensions must be positive"));
        }
        positive("single_layer.coefficient_scale", s.coefficient_scale)?;
        s.tem.params()?;
        nonempty("single_layer.examples", &s.examples)?;
        nonempty("single_layer.exposures", &s.exposures)?;
        if s.examples.contains(&0) {
            return Err(invalid("single_layer.examples entries must be positive"));
        }
        for &e in &s.exposures {
            positive("single_layer.exposures", e)?;
        }

        let n = &self.noise;
        nonempty("noise.examples", &n.examples)?;
        nonempty("noise.snr_db", &n.snr_db)?;
        if n.examples.contains(&0) {
            return Err(invalid("noise.examples entries must be positive"));
        }
        positive("noise.exposure", n.exposure)?;
        if n.snr_db
            .iter()
            .any(|x| x.is_nan() || *x == f64::NEG_INFINITY)
        {
            return Err(invalid("noise.snr_db entries must be finite or +inf"));
        }

        let t = &self.two_layer;
        if t.n0 == 0 || t.n1 == 0 || t.n2 == 0 || t.examples == 0 {
            return Err(invalid("two_layer dimensions must be positive"));
        }
        if t.n1 > temsnn::metrics::MAX_EXHAUSTIVE_HIDDEN {
            return Err(invalid(format!(
                "two_layer.n1 = {} exceeds the permutation search limit {}",
                t.n1,
                temsnn::metrics::MAX_EXHAUSTIVE_HIDDEN
            )));
        }
        positive("two_layer.coefficient_scale", t.coefficient_scale)?;
        t.hidden_tem.params()?;
        t.output_tem.params()?;
        nonempty("two_layer.exposures", &t.exposures)?;
        if t.exposures.contains(&0) {
            return Err(invalid("two_layer.exposures entries must be positive"));
        }
        if t.kmeans_restarts == 0 {
            return Err(invalid("two_layer.kmeans_restarts must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_parses() {
        let cfg = ExperimentConfig::default_config();
        assert_eq!(cfg.two_layer.n2, 4);
        assert!(cfg.noise.snr_db.contains(&f64::INFINITY));
    }

    #[test]
    fn unknown_key_rejected() {
        let text = DEFAULT_CONFIG.replace("trials =", "colour = 3\ntrials =");
        assert!(matches!(
            ExperimentConfig::from_toml(&text),
            Err(ExperimentError::Config(_))
        ));
        let nested = DEFAULT_CONFIG.replace("[noise]", "[noise]\nwindow = 2");
        assert!(ExperimentConfig::from_toml(&nested).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = ExperimentConfig::default_config();
        cfg.single_layer.exposures.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default_config();
        cfg.period = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default_config();
        cfg.two_layer.n1 = 11;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default_config();
        cfg.single_layer.tem.beta = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let cfg = ExperimentConfig::default_config();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }
}
