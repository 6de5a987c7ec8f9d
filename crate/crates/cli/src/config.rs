//! Experiment configuration: flat TOML keys in human units.
//!
//! Powers and thresholds are given in dBm, the SIR target in dB. They are
//! converted to watts / linear exactly once, in [`ExperimentConfig::radio_params`].

use std::path::Path;

use cra_core::policy::{MeanWeight, PStarForm, PolicyKind};
use cra_core::units::{db_to_linear, dbm_to_watts};
use cra_core::RadioParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CidDump,
    ValidateCid,
    AseSweepLambdaS,
    AseSweepLambdaP,
    SnapshotDump,
}

impl ExperimentKind {
    pub fn is_sweep(self) -> bool {
        matches!(
            self,
            ExperimentKind::AseSweepLambdaS | ExperimentKind::AseSweepLambdaP
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    Cid,
    Aloha,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingName {
    Rayleigh,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PStarName {
    Derived,
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanWeightName {
    /// Normalise by the sample mean of the weights in each slot.
    PerSnapshot,
    /// Normalise by a population mean estimated once before the run.
    Fixed,
}

/// Fully resolved experiment description. Every key has a default, so an
/// empty file is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,

    pub lambda_p: f64,
    pub lambda_s: f64,
    pub p_p_dbm: f64,
    pub p_s_dbm: f64,
    pub alpha: f64,
    pub beta_db: f64,
    pub tau: f64,
    pub d: f64,
    pub r_s: f64,
    pub r_p: f64,
    pub i_th_dbm: f64,
    pub noise: bool,
    pub noise_dbm: f64,
    pub area_side: f64,
    pub pathloss_bounded: bool,
    pub torus: bool,
    pub log_base: f64,
    pub fading: FadingName,

    pub snapshots: u64,
    pub master_seed: u64,

    /// Sensor measurement (W) for the CID dump and validation.
    pub m: f64,
    pub grid_points: usize,
    pub band: f64,
    pub n_target: usize,
    pub bins: usize,

    /// Sweep values. Empty selects the default grid for the sweep axis.
    pub grid: Vec<f64>,
    /// Outage caps evaluated at each sweep point. Empty selects the default.
    pub taus: Vec<f64>,
    pub p_star_form: PStarName,
    pub cid_mean_weight: MeanWeightName,
    pub mean_weight_samples: usize,
    /// Run ALOHA at the outage-tight mean probability instead of `aloha_p`.
    pub aloha_match_p_star: bool,
    pub aloha_p: f64,

    /// Policy whose probabilities the snapshot dump reports.
    pub policy: PolicyName,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::AseSweepLambdaS,
            lambda_p: 0.001,
            lambda_s: 0.01,
            p_p_dbm: 23.0,
            p_s_dbm: 5.0,
            alpha: 4.0,
            beta_db: 3.0,
            tau: 0.05,
            d: 1.0,
            r_s: 3.0,
            r_p: 3.0,
            i_th_dbm: 2.0,
            noise: true,
            noise_dbm: -70.0,
            area_side: 100.0,
            pathloss_bounded: true,
            torus: false,
            log_base: 2.0,
            fading: FadingName::Rayleigh,
            snapshots: 20_000,
            master_seed: 1,
            m: 0.01,
            grid_points: 200,
            band: 0.025,
            n_target: 10_000,
            bins: 50,
            grid: Vec::new(),
            taus: Vec::new(),
            p_star_form: PStarName::Derived,
            cid_mean_weight: MeanWeightName::PerSnapshot,
            mean_weight_samples: 100_000,
            aloha_match_p_star: true,
            aloha_p: 0.5,
            policy: PolicyName::Cid,
        }
    }
}

pub const DEFAULT_LAMBDA_S_GRID: [f64; 4] = [0.005, 0.01, 0.02, 0.03];
pub const DEFAULT_LAMBDA_P_GRID: [f64; 4] = [0.0005, 0.001, 0.0015, 0.002];
pub const DEFAULT_LAMBDA_P_TAUS: [f64; 3] = [0.02, 0.05, 0.1];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Recovers the config from the `#`-prefixed header of a data file.
    pub fn from_header(data: &str) -> Result<Self, ConfigError> {
        let body: String = data
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.strip_prefix("# "))
            .take_while(|l| !l.starts_with("---"))
            .map(|l| format!("{l}\n"))
            .collect();
        Self::parse(&body)
    }

    /// Canonical TOML text; parses back to an identical config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Fills empty sweep grids with the defaults for the sweep axis.
    pub fn resolve(&mut self) {
        if self.grid.is_empty() {
            match self.experiment {
                ExperimentKind::AseSweepLambdaS => self.grid = DEFAULT_LAMBDA_S_GRID.to_vec(),
                ExperimentKind::AseSweepLambdaP => self.grid = DEFAULT_LAMBDA_P_GRID.to_vec(),
                _ => {}
            }
        }
        if self.taus.is_empty() {
            match self.experiment {
                ExperimentKind::AseSweepLambdaS => self.taus = vec![self.tau],
                ExperimentKind::AseSweepLambdaP => self.taus = DEFAULT_LAMBDA_P_TAUS.to_vec(),
                _ => {}
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = |key, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be finite, got {v}")))
            }
        };
        for (key, v) in [
            ("p_p_dbm", self.p_p_dbm),
            ("p_s_dbm", self.p_s_dbm),
            ("beta_db", self.beta_db),
            ("i_th_dbm", self.i_th_dbm),
            ("noise_dbm", self.noise_dbm),
        ] {
            finite(key, v)?;
        }
        if self.master_seed > i64::MAX as u64 {
            return Err(invalid(
                "master_seed",
                format!("must be at most {}", i64::MAX),
            ));
        }
        if self.snapshots == 0 {
            return Err(invalid("snapshots", "must be at least 1"));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(invalid(
                "m",
                format!("must be a positive power in watts, got {}", self.m),
            ));
        }
        if self.grid_points < 2 {
            return Err(invalid("grid_points", "need at least 2 points"));
        }
        if !(self.band > 0.0 && self.band < 1.0) {
            return Err(invalid(
                "band",
                format!("must lie in (0, 1), got {}", self.band),
            ));
        }
        if self.n_target == 0 {
            return Err(invalid("n_target", "no accepted samples requested"));
        }
        if self.bins == 0 {
            return Err(invalid("bins", "must be at least 1"));
        }
        if self.mean_weight_samples == 0 {
            return Err(invalid("mean_weight_samples", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.aloha_p) {
            return Err(invalid(
                "aloha_p",
                format!("must lie in [0, 1], got {}", self.aloha_p),
            ));
        }
        if let Some(v) = self.grid.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(
                "grid",
                format!("densities must be finite and >= 0, got {v}"),
            ));
        }
        if let Some(v) = self.taus.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(invalid(
                "taus",
                format!("outage caps must lie in (0, 1), got {v}"),
            ));
        }
        self.radio_params().validate().map_err(|e| match e {
            cra_core::Error::InvalidParam { name, reason } => invalid(config_key(name), reason),
            other => invalid("config", other.to_string()),
        })
    }

    /// Physical parameters in SI units.
    pub fn radio_params(&self) -> RadioParams {
        RadioParams {
            lambda_p: self.lambda_p,
            lambda_s: self.lambda_s,
            power_p: dbm_to_watts(self.p_p_dbm),
            power_s: dbm_to_watts(self.p_s_dbm),
            alpha: self.alpha,
            beta: db_to_linear(self.beta_db),
            tau: self.tau,
            d: self.d,
            r_s: self.r_s,
            r_p: self.r_p,
            i_th: dbm_to_watts(self.i_th_dbm),
            noise: self.noise.then(|| dbm_to_watts(self.noise_dbm)),
            area_side: self.area_side,
            pathloss_bounded: self.pathloss_bounded,
            torus: self.torus,
            log_base: self.log_base,
        }
    }

    pub fn fading_model(&self) -> cra_core::model::FadingModel {
        match self.fading {
            FadingName::Rayleigh => cra_core::model::FadingModel::Rayleigh,
            FadingName::None => cra_core::model::FadingModel::None,
        }
    }

    pub fn p_star_form(&self) -> PStarForm {
        match self.p_star_form {
            PStarName::Derived => PStarForm::Derived,
            PStarName::AsPrinted => PStarForm::AsPrinted,
        }
    }

    /// The policy for `name`; `mean_weight` is only consulted for the
    /// cognitive policy in fixed-normalisation mode.
    pub fn policy_kind(&self, name: PolicyName, fixed_mean_weight: Option<f64>) -> PolicyKind {
        match name {
            PolicyName::Cid => PolicyKind::Cid {
                mean_weight: match (self.cid_mean_weight, fixed_mean_weight) {
                    (MeanWeightName::Fixed, Some(w)) => MeanWeight::Fixed(w),
                    _ => MeanWeight::PerSnapshot,
                },
            },
            PolicyName::Aloha => PolicyKind::Aloha {
                p: (!self.aloha_match_p_star).then_some(self.aloha_p),
            },
            PolicyName::Threshold => PolicyKind::Threshold,
        }
    }
}

/// Maps a physical parameter name to the config key that sets it.
fn config_key(param: &'static str) -> &'static str {
    match param {
        "power_p" => "p_p_dbm",
        "power_s" => "p_s_dbm",
        "beta" => "beta_db",
        "i_th" => "i_th_dbm",
        "noise" => "noise_dbm",
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.radio_params(), RadioParams::default());
    }

    #[test]
    fn dbm_converted_once() {
        let cfg = ExperimentConfig::parse("p_p_dbm = 23\n").unwrap();
        assert!((cfg.radio_params().power_p - 0.199_526_231_496_887_97).abs() < 1e-15);
        assert_eq!(cfg.p_p_dbm, 23.0);
    }

    #[test]
    fn diagnostics_name_the_key() {
        let err = ExperimentConfig::parse("alpha = 2\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("alpha"), "{err}");
        let err = ExperimentConfig::parse("alpah = 4\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("alpah"), "{err}");
        let err = ExperimentConfig::parse("tau = \"small\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("tau"), "{err}");
        let err = ExperimentConfig::parse("p_s_dbm = -1e400\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("p_s_dbm"), "{err}");
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig {
            experiment: ExperimentKind::AseSweepLambdaP,
            lambda_s: 0.0123456789,
            noise: false,
            master_seed: 987_654_321,
            ..Default::default()
        };
        cfg.resolve();
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }
}
