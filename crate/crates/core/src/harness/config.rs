//! Experiment configuration: TOML schema plus upfront validation so that a
//! bad config fails before any compute is spent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ConstellationKind;
use crate::detection::ML_ENUM_LIMIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Flat-fading i.i.d. Rayleigh channel.
    FlatIid,
    /// Flat fading with spatial correlation at the base station.
    FlatCorrelated,
    /// Frequency-selective channel with cyclic-prefix OFDM.
    Ofdm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Per-antenna SVM channel estimation.
    Svm,
    /// Joint SVM estimation under a Mahalanobis margin built from the
    /// per-user spatial covariances.
    SvmCorrelated,
    /// Pilot SVM estimate refined with detected data symbols.
    JointCeDd,
    /// Genie: the true channel is handed to the detector.
    PerfectCsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// SVM soft estimate, candidate sets, weighted Hamming re-ranking.
    SvmTwoStage,
    /// SVM soft estimate sliced directly (no second stage).
    SvmStage1,
    /// Exhaustive maximum-likelihood search over the symbol alphabet.
    Ml,
    /// Joint SVM detection across all subcarriers (OFDM scenario only).
    OfdmSvm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub estimator: EstimatorKind,
    pub detector: DetectorKind,
    pub constellation: ConstellationKind,
    pub k_users: usize,
    pub n_antennas: usize,
    /// Pilot block length (flat scenarios).
    #[serde(default)]
    pub t_train: usize,
    /// Data block length (flat scenarios).
    #[serde(default)]
    pub t_data: usize,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Fixed candidate-ratio threshold; when absent the built-in SNR
    /// schedule is used.
    #[serde(default)]
    pub gamma_override: Option<f64>,
    /// Antenna spacing in wavelengths (correlated scenario).
    #[serde(default = "default_spacing")]
    pub spacing_wavelengths: f64,
    /// Laplacian angular spread in degrees (correlated scenario).
    #[serde(default = "default_angle_spread")]
    pub angle_spread_deg: f64,
    /// Subcarrier count (OFDM scenario).
    #[serde(default)]
    pub nc: usize,
    /// Cyclic-prefix length (OFDM scenario).
    #[serde(default)]
    pub ncp: usize,
    /// Channel tap count (OFDM scenario).
    #[serde(default)]
    pub taps: usize,
    /// Data OFDM symbols per trial after the pilot symbol.
    #[serde(default = "default_ofdm_data_symbols")]
    pub ofdm_data_symbols: usize,
}

fn default_penalty() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-6
}
fn default_spacing() -> f64 {
    0.5
}
fn default_angle_spread() -> f64 {
    10.0
}
fn default_ofdm_data_symbols() -> usize {
    1
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config error: {0}")]
    Invalid(String),
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.k_users == 0 || self.n_antennas == 0 {
            return bad("k_users and n_antennas must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.snr_grid_db.is_empty() {
            return bad("snr_grid_db must be non-empty".into());
        }
        if !(self.penalty > 0.0) {
            return bad(format!("penalty must be positive, got {}", self.penalty));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if let Some(g) = self.gamma_override {
            if !(g >= 1.0) {
                return bad(format!("gamma_override must be >= 1, got {g}"));
            }
        }
        match self.scenario {
            ScenarioKind::Ofdm => {
                if self.detector != DetectorKind::OfdmSvm {
                    return bad("the ofdm scenario requires detector = \"ofdm_svm\"".into());
                }
                if self.estimator != EstimatorKind::Svm
                    && self.estimator != EstimatorKind::PerfectCsi
                {
                    return bad(
                        "the ofdm scenario supports estimator = \"svm\" or \"perfect_csi\""
                            .into(),
                    );
                }
                if self.nc == 0 || !self.nc.is_power_of_two() {
                    return bad(format!("nc = {} must be a power of two", self.nc));
                }
                if self.taps == 0 || self.ncp + 1 < self.taps || self.ncp > self.nc {
                    return bad(format!(
                        "need taps >= 1 and taps - 1 <= ncp <= nc, got taps = {}, ncp = {}, nc = {}",
                        self.taps, self.ncp, self.nc
                    ));
                }
                if 2 * self.nc < 2 * self.k_users * self.taps {
                    return bad(format!(
                        "pilot symbol is underdetermined: 2*nc = {} < 2*k_users*taps = {}",
                        2 * self.nc,
                        2 * self.k_users * self.taps
                    ));
                }
                if self.ofdm_data_symbols == 0 {
                    return bad("ofdm_data_symbols must be positive".into());
                }
            }
            _ => {
                if self.detector == DetectorKind::OfdmSvm {
                    return bad("detector = \"ofdm_svm\" requires scenario = \"ofdm\"".into());
                }
                if self.estimator != EstimatorKind::PerfectCsi && self.t_train == 0 {
                    return bad("t_train must be positive unless estimator = \"perfect_csi\"".into());
                }
                if self.t_data == 0 {
                    return bad("t_data must be positive".into());
                }
                if self.estimator == EstimatorKind::SvmCorrelated
                    && self.scenario != ScenarioKind::FlatCorrelated
                {
                    return bad(
                        "estimator = \"svm_correlated\" requires scenario = \"flat_correlated\""
                            .into(),
                    );
                }
                if self.detector == DetectorKind::Ml {
                    let m: u128 = match self.constellation {
                        ConstellationKind::Qpsk => 4,
                        ConstellationKind::Qam16 => 16,
                    };
                    let size = m.checked_pow(self.k_users as u32).unwrap_or(u128::MAX);
                    if size > ML_ENUM_LIMIT {
                        return bad(format!(
                            "ml detector needs M^K <= {ML_ENUM_LIMIT}; {m}^{} is too large",
                            self.k_users
                        ));
                    }
                }
            }
        }
        if self.scenario == ScenarioKind::FlatCorrelated {
            if !(self.spacing_wavelengths > 0.0) {
                return bad("spacing_wavelengths must be positive".into());
            }
            if !(self.angle_spread_deg > 0.0) {
                return bad("angle_spread_deg must be positive".into());
            }
        }
        Ok(())
    }
}
