//! Calibration check: across replicated datasets, the posterior probability
//! `P(theta < theta_true | data)` should be uniform on [0, 1].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::datagen::{generate, CaseId, CasePreset};
use crate::error::{Error, Result};
use crate::sampler::{run_chains, SamplerConfig};

/// Fraction of `draws` below `truth`, ties counted as half.
pub fn posterior_below(draws: &[f64], truth: f64) -> f64 {
    if draws.is_empty() {
        return 0.5;
    }
    let score: f64 = draws
        .iter()
        .map(|&d| {
            if d < truth {
                1.0
            } else if d == truth {
                0.5
            } else {
                0.0
            }
        })
        .sum();
    score / draws.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityTest {
    pub counts: Vec<usize>,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
}

/// Pearson chi-squared test of `values` in [0, 1] against the uniform
/// distribution on `n_bins` equal-width bins.
pub fn uniformity_test(values: &[f64], n_bins: usize, alpha: f64) -> Result<UniformityTest> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument("need at least two bins".into()));
    }
    if values.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("probability {v} outside [0, 1]")));
        }
        counts[((v * n_bins as f64) as usize).min(n_bins - 1)] += 1;
    }
    let expected = values.len() as f64 / n_bins as f64;
    let statistic: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let df = n_bins - 1;
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let p_value = dist.sf(statistic);
    Ok(UniformityTest {
        counts,
        statistic,
        df,
        p_value,
        alpha,
        reject: p_value < alpha,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasStudyConfig {
    pub n_replicates: usize,
    /// Replicate `r` generates data with seed `preset.seed + r`.
    pub preset: CasePreset,
    /// Replicate `r` samples with seed `sampler.seed + r`.
    pub sampler: SamplerConfig,
    pub n_bins: usize,
    pub alpha: f64,
}

impl Default for BiasStudyConfig {
    /// 30 Case I replicates, each sampled like Case I itself (3 x 10,000
    /// iterations, 2,000 burn-in). The data carry noise with the same 0.001
    /// scale the likelihood assumes, so the posterior is calibrated by
    /// construction.
    fn default() -> Self {
        let mut preset = CasePreset::new(CaseId::Case1, 1000);
        preset.noise_sd = 0.001;
        Self {
            n_replicates: 30,
            preset,
            sampler: SamplerConfig::new(10_000, 2_000, 3, 7000),
            n_bins: 10,
            alpha: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasStudy {
    pub param_names: Vec<String>,
    /// `[replicate][parameter]` values of `P(theta < theta_true | data)`.
    pub probabilities: Vec<Vec<f64>>,
    pub test: UniformityTest,
}

/// Fits every replicate (in parallel) and tests the pooled posterior
/// probabilities for uniformity.
pub fn bias_study(config: &BiasStudyConfig) -> Result<BiasStudy> {
    if config.n_replicates == 0 {
        return Err(Error::InvalidArgument("n_replicates must be positive".into()));
    }
    let results = (0..config.n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut preset = config.preset.clone();
            preset.seed = preset.seed.wrapping_add(r as u64);
            let generated = generate(&preset)?;
            let model = generated.model()?;
            let mut sampler = config.sampler.clone();
            sampler.seed = sampler.seed.wrapping_add(r as u64);
            let chains = run_chains(&sampler, &model, None)?;
            let truth = model.flatten(&generated.truth).continuous;
            let probs: Vec<f64> = truth
                .iter()
                .enumerate()
                .map(|(p, &t)| posterior_below(&chains.pooled(p), t))
                .collect();
            Ok((chains.param_names[..truth.len()].to_vec(), probs))
        })
        .collect::<Result<Vec<_>>>()?;
    let param_names = results[0].0.clone();
    let probabilities: Vec<Vec<f64>> = results.into_iter().map(|(_, p)| p).collect();
    let pooled: Vec<f64> = probabilities.iter().flatten().copied().collect();
    let test = uniformity_test(&pooled, config.n_bins, config.alpha)?;
    Ok(BiasStudy {
        param_names,
        probabilities,
        test,
    })
}
