//! Run configuration: a TOML file with sections per stage, every option
//! carrying a default that mirrors the study design. Unknown keys are
//! rejected so typos fail loudly instead of silently using a default.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data_dir: PathBuf,
    pub ensemble_csv: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            ensemble_csv: "ensemble.csv".into(),
            out_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub subjects: usize,
    pub start_year: i32,
    pub ride_minutes_min: u32,
    pub ride_minutes_max: u32,
    /// Names of the synthetic ensemble members to generate.
    pub ensemble_models: Vec<String>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            subjects: 100,
            start_year: 2024,
            ride_minutes_min: 12,
            ride_minutes_max: 20,
            ensemble_models: vec!["member-a".into(), "member-b".into(), "member-c".into()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train: 0.5, valid: 0.25, test: 0.25 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub notears_lambda1: f64,
    pub notears_omegas: Vec<f64>,
    pub hillclimb_max_iters: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            notears_lambda1: 0.1,
            notears_omegas: vec![0.05, 0.1, 0.2],
            hillclimb_max_iters: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    pub ssps: Vec<String>,
    pub baseline_start: i32,
    pub baseline_end: i32,
    /// Inclusive (start, end) year windows.
    pub windows: Vec<(i32, i32)>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            ssps: vec!["ssp245".into()],
            baseline_start: 2023,
            baseline_end: 2025,
            windows: vec![
                (2026, 2030),
                (2031, 2040),
                (2041, 2050),
                (2051, 2060),
                (2061, 2070),
                (2071, 2080),
                (2081, 2090),
                (2091, 2100),
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurviveConfig {
    pub bootstrap_draws: usize,
}

impl Default for SurviveConfig {
    fn default() -> Self {
        Self { bootstrap_draws: 200 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub synth: SynthConfig,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub forecast: ForecastConfig,
    pub survive: SurviveConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                let config: RunConfig = toml::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?;
                config.validate()?;
                Ok(config)
            }
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let s = &self.split;
        if (s.train + s.valid + s.test - 1.0).abs() > 1e-9 {
            bail!("split ratios must sum to 1");
        }
        if self.synth.ride_minutes_min < 6 || self.synth.ride_minutes_min > self.synth.ride_minutes_max
        {
            bail!("ride minutes range must satisfy 6 <= min <= max");
        }
        if self.survive.bootstrap_draws < 2 {
            bail!("bootstrap_draws must be at least 2");
        }
        if self.forecast.windows.is_empty() {
            bail!("at least one forecast window is required");
        }
        for ssp in &self.forecast.ssps {
            heatcast_core::climate::Ssp::parse(ssp)
                .map_err(|e| anyhow::anyhow!("bad forecast.ssps entry: {}", e))?;
        }
        Ok(())
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(7)
    }

    /// Hash of the effective configuration; identical configs produce
    /// identical manifests and therefore byte-identical numeric outputs.
    pub fn manifest_hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            out.push_str(&format!("{:02x}", byte));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = toml::from_str::<RunConfig>("unknown_knob = 3\n").unwrap_err();
        assert!(err.to_string().contains("unknown_knob"));
    }

    #[test]
    fn hash_changes_with_seed() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.seed = Some(99);
        assert_ne!(a.manifest_hash(), b.manifest_hash());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(RunConfig::default().manifest_hash(), RunConfig::default().manifest_hash());
    }
}
