//! Experiment configuration files and their merge with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fbl_core::datagen::{CaseId, DEFAULT_SEED};
use fbl_core::probability::{LikelihoodSpec, SigmaPrior};
use fbl_core::sampler::{SamplerConfig, ScanOrder};
use serde::{Deserialize, Serialize};

/// Prior used for sigma when `--estimate-sigma` is given without an
/// explicit prior.
pub const ESTIMATED_SIGMA: SigmaPrior = SigmaPrior::Uniform { lo: 0.01, hi: 10.0 };

/// Sampler settings in a config file; anything left out keeps its default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerOverrides {
    pub n_iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub n_chains: Option<usize>,
    pub step_fraction: Option<f64>,
    pub adapt: Option<bool>,
    pub target_accept: Option<f64>,
    pub scan: Option<ScanOrder>,
    pub anneal_fraction: Option<f64>,
    pub explorers: Option<usize>,
}

/// One experiment. Either `preset` or both `rule_base` and `data` must be
/// given; with a preset, `rule_base` and `data` replace its fitted rule
/// base and generated data. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<CaseId>,
    pub rule_base: Option<PathBuf>,
    pub data: Option<PathBuf>,
    /// Response column of `data`; defaults to the last column.
    pub response: Option<String>,
    pub n_points: Option<usize>,
    pub noise_sd: Option<f64>,
    pub sigma: Option<SigmaPrior>,
    pub likelihood: Option<LikelihoodSpec>,
    pub select_rules: Option<bool>,
    pub estimate_sigma: Option<bool>,
    #[serde(default)]
    pub sampler: SamplerOverrides,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.rule_base, &mut cfg.data, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Sampler settings with the experiment seed.
    pub fn sampler_config(&self, default: SamplerConfig) -> SamplerConfig {
        let o = &self.sampler;
        SamplerConfig {
            n_iterations: o.n_iterations.unwrap_or(default.n_iterations),
            burn_in: o.burn_in.unwrap_or(default.burn_in),
            n_chains: o.n_chains.unwrap_or(default.n_chains),
            seed: self.seed(),
            step_fraction: o.step_fraction.unwrap_or(default.step_fraction),
            adapt: o.adapt.unwrap_or(default.adapt),
            target_accept: o.target_accept.unwrap_or(default.target_accept),
            scan: o.scan.unwrap_or(default.scan),
            anneal_fraction: o.anneal_fraction.unwrap_or(default.anneal_fraction),
            explorers: o.explorers.unwrap_or(default.explorers),
        }
    }

    /// Checks that referenced files exist and a source of data is named.
    pub fn validate(&self) -> anyhow::Result<()> {
        for p in [&self.rule_base, &self.data].into_iter().flatten() {
            if !p.is_file() {
                bail!("file not found: {}", p.display());
            }
        }
        if self.preset.is_none() && (self.rule_base.is_none() || self.data.is_none()) {
            bail!("give a preset, or both a rule base and a data file");
        }
        if let Some(sigma) = self.sigma {
            sigma.validate()?;
        }
        Ok(())
    }
}

/// Overlays the flags that were given on top of the file values.
#[derive(Clone, Debug, Default)]
pub struct FlagOverrides {
    pub preset: Option<CaseId>,
    pub seed: Option<u64>,
    pub chains: Option<usize>,
    pub iters: Option<usize>,
    pub burn_in: Option<usize>,
    pub select_rules: bool,
    pub estimate_sigma: bool,
    pub out: Option<PathBuf>,
    pub rule_base: Option<PathBuf>,
    pub data: Option<PathBuf>,
}

impl FlagOverrides {
    pub fn apply(self, cfg: &mut ExperimentConfig) {
        if self.preset.is_some() {
            cfg.preset = self.preset;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.chains.is_some() {
            cfg.sampler.n_chains = self.chains;
        }
        if self.iters.is_some() {
            cfg.sampler.n_iterations = self.iters;
        }
        if self.burn_in.is_some() {
            cfg.sampler.burn_in = self.burn_in;
        }
        if self.select_rules {
            cfg.select_rules = Some(true);
        }
        if self.estimate_sigma {
            cfg.estimate_sigma = Some(true);
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if self.rule_base.is_some() {
            cfg.rule_base = self.rule_base;
        }
        if self.data.is_some() {
            cfg.data = self.data;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file_values() {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(r#"{"preset": "case2", "seed": 3, "sampler": {"n_iterations": 50, "burn_in": 10}}"#)
                .unwrap();
        FlagOverrides {
            seed: Some(9),
            burn_in: Some(20),
            ..Default::default()
        }
        .apply(&mut cfg);
        let s = cfg.sampler_config(SamplerConfig::default());
        assert_eq!((s.seed, s.n_iterations, s.burn_in, s.n_chains), (9, 50, 20, 3));
        assert_eq!(cfg.preset, Some(CaseId::Case2));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"presett": "case1"}"#).is_err());
    }

    #[test]
    fn needs_a_data_source() {
        assert!(ExperimentConfig::default().validate().is_err());
        let cfg = ExperimentConfig {
            preset: Some(CaseId::Case1),
            ..Default::default()
        };
        assert!(cfg.validate().is_ok());
    }
}
