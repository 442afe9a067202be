//! TOML configuration mirroring the CLI flags: one section per estimation
//! stage, each choosing a kernel, a semi-metric and a bandwidth (fixed or
//! `"auto"` for leave-one-out CV).

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bandwidth::{
    candidate_grid_with, cv_select_h1, cv_select_h2, cv_select_h3, cv_select_h4,
    select_bandwidths, CvOptions,
};
use crate::error::{FvolError, Result};
use crate::estimator::{EstimatorConfig, EstimatorMode};
use crate::fda::FdaDataset;
use crate::kernel::Kernel;
use crate::semimetric::{distance_matrix, SemiMetric, SemiMetricSpec};

/// A fixed bandwidth or `"auto"` (cross-validated).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Auto => s.serialize_str("auto"),
            Bandwidth::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v > 0.0 => Ok(Bandwidth::Fixed(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!(
                "bandwidth must be positive, got {v}"
            ))),
            Raw::Text(t) if t == "auto" => Ok(Bandwidth::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "bandwidth must be a positive number or \"auto\", got `{t}`"
            ))),
        }
    }
}

/// Configuration of one estimation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageConfig {
    pub bandwidth: Bandwidth,
    pub kernel: Kernel,
    pub semimetric: SemiMetricSpec,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::Auto,
            kernel: Kernel::Quadratic,
            semimetric: SemiMetricSpec::default(),
        }
    }
}

/// Cross-validation grid settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub candidates: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub pad_to_global: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        let d = CvOptions::default();
        Self {
            candidates: d.n_candidates,
            q_min: d.q_min,
            q_max: d.q_max,
            pad_to_global: d.pad_to_global,
        }
    }
}

impl CvConfig {
    pub fn to_options(self) -> CvOptions {
        CvOptions {
            n_candidates: self.candidates,
            q_min: self.q_min,
            q_max: self.q_max,
            pad_to_global: self.pad_to_global,
        }
    }
}

/// Whole-application configuration; every field mirrors a CLI flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub seed: u64,
    /// Worker threads; 0 leaves the pool at its default size.
    pub threads: usize,
    /// Two-sided CI miscoverage level.
    pub level: f64,
    pub regression: StageConfig,
    pub variance: StageConfig,
    pub omega: StageConfig,
    pub pi: StageConfig,
    pub cv: CvConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 0,
            level: 0.05,
            regression: StageConfig::default(),
            variance: StageConfig::default(),
            omega: StageConfig::default(),
            pi: StageConfig::default(),
            cv: CvConfig::default(),
        }
    }
}

impl AppConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map_err(|e| FvolError::InvalidParameter(format!("config parse error: {e}")))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn template(&self) -> EstimatorConfig {
        EstimatorConfig {
            kernel_k: self.regression.kernel,
            kernel_w: self.variance.kernel,
            kernel_h: self.omega.kernel,
            kernel_htilde: self.pi.kernel,
            sm1: self.regression.semimetric.clone(),
            sm2: self.variance.semimetric.clone(),
            sm3: self.omega.semimetric.clone(),
            sm4: self.pi.semimetric.clone(),
            h1: 1.0,
            h2: 1.0,
            h3: 1.0,
            h4: 1.0,
            pilot_h1: None,
            pilot_h2: None,
        }
    }

    /// Resolve the four bandwidths against a dataset: fixed values pass
    /// through, `"auto"` stages come from the CV cascade of the given mode.
    pub fn estimator_config(
        &self,
        data: &FdaDataset,
        mode: EstimatorMode,
    ) -> Result<EstimatorConfig> {
        let mut cfg = self.template();
        let fixed = [
            self.regression.bandwidth,
            self.variance.bandwidth,
            self.omega.bandwidth,
            self.pi.bandwidth,
        ];
        if fixed.iter().all(|b| matches!(b, Bandwidth::Fixed(_))) {
            let hs: Vec<f64> = fixed
                .iter()
                .map(|b| match b {
                    Bandwidth::Fixed(v) => *v,
                    Bandwidth::Auto => unreachable!(),
                })
                .collect();
            cfg.h1 = hs[0];
            cfg.h2 = hs[1];
            cfg.h3 = hs[2];
            cfg.h4 = hs[3];
            cfg.validate()?;
            return Ok(cfg);
        }

        let opts = self.cv.to_options();
        let selected = match mode {
            EstimatorMode::Imputed => {
                let sel = select_bandwidths(data, &cfg, &opts)?;
                sel.imputed
            }
            _ => {
                let sm = SemiMetric::resolve(&cfg.sm1, data)?;
                let dist = distance_matrix(data, &sm)?;
                let grid = candidate_grid_with(&dist, &opts)?;
                let mut c = cfg.clone();
                c.h1 = cv_select_h1(data, &c, &grid, EstimatorMode::Simplified)?;
                c.h2 = cv_select_h2(data, &c, &grid, EstimatorMode::Simplified)?;
                c.h3 = cv_select_h3(data, &c, &grid, EstimatorMode::Simplified)?;
                c.h4 = cv_select_h4(data, &c, &grid)?;
                crate::bandwidth::StageBandwidths {
                    h1: c.h1,
                    h2: c.h2,
                    h3: c.h3,
                    h4: c.h4,
                    pilot_h1: None,
                    pilot_h2: None,
                }
            }
        };
        cfg.h1 = selected.h1;
        cfg.h2 = selected.h2;
        cfg.h3 = selected.h3;
        cfg.h4 = selected.h4;
        cfg.pilot_h1 = selected.pilot_h1;
        cfg.pilot_h2 = selected.pilot_h2;
        for (fixed, slot) in fixed.iter().zip([&mut cfg.h1, &mut cfg.h2, &mut cfg.h3, &mut cfg.h4])
        {
            if let Bandwidth::Fixed(v) = fixed {
                *slot = *v;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
