//! TOML configuration: parsing, profile overlays and conversion into a
//! campaign specification.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use cfmimo_core::channel::{MeasuredDataset, PathLossModel, DEFAULT_INDOOR_PENALTY_DB};
use cfmimo_core::combining::CombinerKind;
use cfmimo_core::harness::{AlgorithmKind, AlgorithmSpec, CampaignSpec, ChannelSource, CsiMode, ScenarioSpec};
use cfmimo_core::metrics::SystemConfig;
use cfmimo_core::tpc::TpcOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const PAPER_PROFILE: &str = include_str!("../configs/paper.toml");
pub const DESK_PROFILE: &str = include_str!("../configs/desk.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    Paper,
    Desk,
}

impl Profile {
    pub fn source(self) -> &'static str {
        match self {
            Profile::Paper => PAPER_PROFILE,
            Profile::Desk => DESK_PROFILE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Synthetic,
    Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Adjusted,
    Literature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub source: SourceKind,
    pub preset: Preset,
    /// Per-field overrides of the preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadow_sigma: Option<f64>,
    pub indoor_penalty_db: f64,
    /// Measured dataset; relative paths are taken from the config file's
    /// directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            source: SourceKind::Synthetic,
            preset: Preset::Adjusted,
            intercept: None,
            slope: None,
            reference_distance: None,
            shadow_sigma: None,
            indoor_penalty_db: DEFAULT_INDOOR_PENALTY_DB,
            dataset: None,
        }
    }
}

impl ChannelConfig {
    pub fn model(&self) -> PathLossModel {
        let base = match self.preset {
            Preset::Adjusted => PathLossModel::ADJUSTED,
            Preset::Literature => PathLossModel::LITERATURE,
        };
        PathLossModel {
            intercept: self.intercept.unwrap_or(base.intercept),
            slope: self.slope.unwrap_or(base.slope),
            reference_distance: self.reference_distance.unwrap_or(base.reference_distance),
            shadow_sigma: self.shadow_sigma.unwrap_or(base.shadow_sigma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_se: Option<f64>,
}

impl AlgorithmConfig {
    pub fn new(kind: AlgorithmKind) -> Self {
        Self {
            kind,
            label: None,
            target_se: None,
        }
    }

    fn spec(&self) -> AlgorithmSpec {
        AlgorithmSpec {
            kind: self.kind,
            label: self.label.clone().unwrap_or_else(|| self.kind.as_str().to_string()),
            target_se: self.target_se,
        }
    }
}

/// Settings of the solver-versus-grid comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub instances: usize,
    pub num_antennas: usize,
    pub num_ues: usize,
    pub combiner: CombinerKind,
    pub snr_db: f64,
    pub gain_spread_db: f64,
    pub grid_points: usize,
    pub target_se: f64,
    /// Absolute min-SE gap allowed, bits/s/Hz.
    pub se_tolerance: f64,
    /// Relative min-EE gap allowed.
    pub ee_tolerance: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            instances: 20,
            num_antennas: 8,
            num_ues: 2,
            combiner: CombinerKind::Mr,
            snr_db: 10.0,
            gain_spread_db: 3.0,
            grid_points: 201,
            target_se: 1.0,
            se_tolerance: 1e-2,
            ee_tolerance: 1e-2,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub seed: u64,
    pub drops: u64,
    pub realizations_per_drop: u64,
    pub csi: CsiMode,
    pub combiners: Vec<CombinerKind>,
    pub scenario: ScenarioSpec,
    pub channel: ChannelConfig,
    pub system: SystemConfig,
    pub tpc: TpcOptions,
    pub algorithms: Vec<AlgorithmConfig>,
    pub oracle: OracleConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            drops: 100,
            realizations_per_drop: 1,
            csi: CsiMode::Estimated,
            combiners: vec![CombinerKind::Mmse],
            scenario: ScenarioSpec::default(),
            channel: ChannelConfig::default(),
            system: SystemConfig::default(),
            tpc: TpcOptions::default(),
            algorithms: vec![
                AlgorithmConfig::new(AlgorithmKind::MaxPower),
                AlgorithmConfig::new(AlgorithmKind::MaxMinSe),
                AlgorithmConfig::new(AlgorithmKind::MaxMinEe),
            ],
            oracle: OracleConfig::default(),
        }
    }
}

impl CliConfig {
    /// Parse one document on its own; errors carry line and key.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Configuration from an optional profile overlaid by an optional file.
    /// The file is first checked alone so that its errors point into it.
    pub fn load(profile: Option<Profile>, path: Option<&Path>) -> Result<Self, CliError> {
        let user = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                let mut cfg = Self::parse(&text).map_err(|e| e.in_file(p))?;
                if let Some(ds) = cfg.channel.dataset.as_mut() {
                    if ds.is_relative() {
                        *ds = p.parent().unwrap_or(Path::new(".")).join(&*ds);
                    }
                }
                Some((text, cfg))
            }
            None => None,
        };
        let cfg = match (profile, user) {
            (None, None) => Self::default(),
            (None, Some((_, cfg))) => cfg,
            (Some(profile), None) => Self::parse(profile.source())?,
            (Some(profile), Some((text, cfg))) => {
                let mut base: toml::Table = toml::from_str(profile.source()).map_err(|e| CliError::Config(e.to_string()))?;
                let overlay: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
                merge(&mut base, overlay);
                let mut merged: Self = base.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
                merged.channel.dataset = cfg.channel.dataset;
                merged
            }
        };
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checked campaign specification; loads the dataset for measured runs.
    pub fn campaign(&self) -> Result<CampaignSpec, CliError> {
        let channel = match self.channel.source {
            SourceKind::Synthetic => ChannelSource::Synthetic {
                model: self.channel.model(),
                indoor_penalty_db: self.channel.indoor_penalty_db,
            },
            SourceKind::Measured => {
                let path = self
                    .channel
                    .dataset
                    .as_ref()
                    .ok_or_else(|| CliError::Config("channel.dataset is required for a measured source".into()))?;
                let ds = MeasuredDataset::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                ChannelSource::Measured(Arc::new(ds))
            }
        };
        let spec = CampaignSpec {
            scenario: self.scenario.clone(),
            channel,
            csi: self.csi,
            system: self.system.clone(),
            combiners: self.combiners.clone(),
            algorithms: self.algorithms.iter().map(AlgorithmConfig::spec).collect(),
            tpc: self.tpc.clone(),
            drops: self.drops,
            realizations_per_drop: self.realizations_per_drop,
            base_seed: self.seed,
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }
}

/// Overlay `top` onto `base`, recursing into tables; arrays are replaced.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_profile_equals_defaults() {
        assert_eq!(CliConfig::parse(PAPER_PROFILE).unwrap(), CliConfig::default());
    }

    #[test]
    fn desk_profile_shape() {
        let cfg = CliConfig::parse(DESK_PROFILE).unwrap();
        assert_eq!(cfg.scenario.num_aps, 64);
        assert_eq!(cfg.scenario.antennas_per_ap, 1);
        assert_eq!(cfg.scenario.num_ues, 8);
        assert_eq!(cfg.drops, 200);
        cfg.campaign().unwrap();
    }

    #[test]
    fn unknown_key_is_named() {
        let err = CliConfig::parse("[system]\nbandwith = 1e6\n").unwrap_err().to_string();
        assert!(err.contains("bandwith"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn round_trip_is_canonical() {
        for src in [PAPER_PROFILE, DESK_PROFILE] {
            let cfg = CliConfig::parse(src).unwrap();
            let again = CliConfig::parse(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(cfg, again);
        }
    }

    #[test]
    fn overrides_apply_per_field() {
        let cfg = CliConfig::parse("[channel]\npreset = \"literature\"\nshadow_sigma = 0.0\n").unwrap();
        let m = cfg.channel.model();
        assert_eq!(m.intercept, PathLossModel::LITERATURE.intercept);
        assert_eq!(m.shadow_sigma, 0.0);
    }

    #[test]
    fn merge_recurses_into_tables() {
        let mut base: toml::Table = toml::from_str("a = 1\n[t]\nx = 1\ny = 2\n").unwrap();
        merge(&mut base, toml::from_str("[t]\ny = 3\n").unwrap());
        assert_eq!(base["a"].as_integer(), Some(1));
        assert_eq!(base["t"]["x"].as_integer(), Some(1));
        assert_eq!(base["t"]["y"].as_integer(), Some(3));
    }
}
