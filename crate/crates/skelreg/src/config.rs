//! Run configuration as flat TOML. Absent keys take the defaults below and
//! unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use skelreg_core::pipeline::{PipelineConfig, SomStage};
use skelreg_core::register::IcpParams;
use skelreg_core::som::SomSchedule;

use crate::artifacts::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub som1_rows: usize,
    pub som1_cols: usize,
    pub som1_epochs: usize,
    pub som1_learning_rate_initial: f64,
    pub som1_learning_rate_final: f64,
    /// Lattice units; absent means half the larger grid dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub som1_radius_initial: Option<f64>,
    pub som1_radius_final: f64,
    pub som2_rows: usize,
    pub som2_cols: usize,
    pub som2_epochs: usize,
    pub som2_learning_rate_initial: f64,
    pub som2_learning_rate_final: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub som2_radius_initial: Option<f64>,
    pub som2_radius_final: f64,
    pub seed: u64,
    pub t_theta_deg: f64,
    /// Resampled key points for rib levels 2, 3, 4 and 5.
    pub rib_samples: [usize; 4],
    pub n_r: usize,
    pub downsample_target: usize,
    pub icp_max_iter: usize,
    pub icp_tol: f64,
    pub som2_attempts: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_pipeline(&PipelineConfig::default())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("invalid configuration field `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("malformed configuration: {0}")]
    Syntax(String),
}

fn schema(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Key of the `key = value` line containing byte offset `at`.
fn key_at(text: &str, at: usize) -> Option<String> {
    let start = text[..at.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?;
    let key = line.split('=').next()?.trim().trim_matches('"');
    (!key.is_empty()).then(|| key.to_string())
}

impl RunConfig {
    pub fn from_pipeline(p: &PipelineConfig) -> Self {
        let (s1, s2) = (&p.som1.schedule, &p.som2.schedule);
        RunConfig {
            som1_rows: p.som1.rows,
            som1_cols: p.som1.cols,
            som1_epochs: s1.epochs,
            som1_learning_rate_initial: s1.learning_rate_initial,
            som1_learning_rate_final: s1.learning_rate_final,
            som1_radius_initial: s1.radius_initial,
            som1_radius_final: s1.radius_final,
            som2_rows: p.som2.rows,
            som2_cols: p.som2.cols,
            som2_epochs: s2.epochs,
            som2_learning_rate_initial: s2.learning_rate_initial,
            som2_learning_rate_final: s2.learning_rate_final,
            som2_radius_initial: s2.radius_initial,
            som2_radius_final: s2.radius_final,
            seed: p.seed,
            t_theta_deg: p.t_theta_deg,
            rib_samples: p.rib_samples,
            n_r: p.n_r,
            downsample_target: p.downsample_target,
            icp_max_iter: p.icp.max_iter,
            icp_tol: p.icp.tol,
            som2_attempts: p.som2_attempts,
        }
    }

    pub fn to_pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            som1: SomStage {
                rows: self.som1_rows,
                cols: self.som1_cols,
                schedule: SomSchedule {
                    epochs: self.som1_epochs,
                    learning_rate_initial: self.som1_learning_rate_initial,
                    learning_rate_final: self.som1_learning_rate_final,
                    radius_initial: self.som1_radius_initial,
                    radius_final: self.som1_radius_final,
                },
            },
            som2: SomStage {
                rows: self.som2_rows,
                cols: self.som2_cols,
                schedule: SomSchedule {
                    epochs: self.som2_epochs,
                    learning_rate_initial: self.som2_learning_rate_initial,
                    learning_rate_final: self.som2_learning_rate_final,
                    radius_initial: self.som2_radius_initial,
                    radius_final: self.som2_radius_final,
                },
            },
            seed: self.seed,
            t_theta_deg: self.t_theta_deg,
            rib_samples: self.rib_samples,
            n_r: self.n_r,
            downsample_target: self.downsample_target,
            icp: IcpParams {
                max_iter: self.icp_max_iter,
                tol: self.icp_tol,
            },
            som2_attempts: self.som2_attempts,
        }
    }

    /// Checks every field, reporting the first offending one by name.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("som1_rows", self.som1_rows),
            ("som1_cols", self.som1_cols),
            ("som1_epochs", self.som1_epochs),
            ("som2_rows", self.som2_rows),
            ("som2_cols", self.som2_cols),
            ("som2_epochs", self.som2_epochs),
            ("downsample_target", self.downsample_target),
            ("icp_max_iter", self.icp_max_iter),
            ("som2_attempts", self.som2_attempts),
        ];
        for (field, v) in counts {
            if v == 0 {
                return Err(schema(field, "must be at least 1"));
            }
        }
        for (stage, lr0, lr1, r0, r1) in [
            (
                "som1",
                self.som1_learning_rate_initial,
                self.som1_learning_rate_final,
                self.som1_radius_initial,
                self.som1_radius_final,
            ),
            (
                "som2",
                self.som2_learning_rate_initial,
                self.som2_learning_rate_final,
                self.som2_radius_initial,
                self.som2_radius_final,
            ),
        ] {
            if !(lr0 > 0.0 && lr0 <= 1.0) {
                return Err(schema(&format!("{stage}_learning_rate_initial"), "must lie in (0, 1]"));
            }
            if !(lr1 > 0.0 && lr1 <= lr0) {
                return Err(schema(&format!("{stage}_learning_rate_final"), "must lie in (0, initial]"));
            }
            if r0.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
                return Err(schema(&format!("{stage}_radius_initial"), "must be positive"));
            }
            if !(r1 > 0.0 && r1.is_finite()) {
                return Err(schema(&format!("{stage}_radius_final"), "must be positive"));
            }
        }
        if !(self.t_theta_deg > 0.0 && self.t_theta_deg < 180.0) {
            return Err(schema("t_theta_deg", "must lie in (0, 180) degrees"));
        }
        if self.rib_samples.iter().any(|&n| n < 2) {
            return Err(schema("rib_samples", "every rib needs at least 2 samples"));
        }
        let total: usize = self.rib_samples.iter().sum();
        if self.n_r < 3 || self.n_r > total {
            return Err(schema("n_r", format!("must lie between 3 and {total}")));
        }
        if !(self.icp_tol >= 0.0 && self.icp_tol.is_finite()) {
            return Err(schema("icp_tol", "must be non-negative"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str::<toml::Table>(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let key = e.span().and_then(|s| key_at(text, s.start));
            match key {
                Some(key) => schema(&key, e.message()),
                None => ConfigError::Syntax(e.message().to_string()),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig, ConfigError> {
    RunConfig::parse(&std::fs::read_to_string(path)?)
}

pub fn write_config(config: &RunConfig, path: &Path) -> Result<(), ConfigError> {
    write_atomic(path, config.to_toml().as_bytes())?;
    Ok(())
}
