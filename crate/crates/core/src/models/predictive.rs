//! Posterior-predictive draws, point predictions and classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{glm_predict, FblModel, GlmModel};
use crate::error::{Error, Result};
use crate::fuzzy::ParamVector;
use crate::probability::LikelihoodKind;
use crate::sampler::{ChainSet, Target};

/// Observation noise attached to one posterior draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Noise {
    Gaussian(f64),
    /// The mean function is already a class probability; no noise is added.
    Probability,
}

/// A model whose chain rows can be turned into predictions.
pub trait PosteriorModel: Sync {
    fn n_inputs(&self) -> usize;

    /// Mean function `g(x; theta)` for the parameters in a chain row.
    fn mean_function(&self, row: &[f64], x: &[Vec<f64>]) -> Result<Vec<f64>>;

    fn noise(&self, row: &[f64]) -> Noise;
}

impl PosteriorModel for FblModel {
    fn n_inputs(&self) -> usize {
        self.rule_base.inputs.len()
    }

    fn mean_function(&self, row: &[f64], x: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.rule_base.bind(&self.theta_from_row(row))?.infer_batch(x)
    }

    fn noise(&self, row: &[f64]) -> Noise {
        match self.likelihood.kind {
            LikelihoodKind::BernoulliClassification => Noise::Probability,
            LikelihoodKind::GaussianRegression => Noise::Gaussian(
                self.fixed_sigma()
                    .unwrap_or_else(|| row[self.rule_base.phi_count()]),
            ),
        }
    }
}

impl PosteriorModel for GlmModel {
    fn n_inputs(&self) -> usize {
        self.data.n_features()
    }

    fn mean_function(&self, row: &[f64], x: &[Vec<f64>]) -> Result<Vec<f64>> {
        glm_predict(self, &row[..self.n_terms()], x)
    }

    fn noise(&self, row: &[f64]) -> Noise {
        Noise::Gaussian(self.sigma_of(row))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predictive {
    /// `[draw][row]`, one draw per retained chain row.
    pub draws: Vec<Vec<f64>>,
    /// Mean over draws; the point prediction.
    pub mean: Vec<f64>,
}

fn check_rows(model: &dyn PosteriorModel, x: &[Vec<f64>]) -> Result<()> {
    if let Some(row) = x.iter().find(|r| r.len() != model.n_inputs()) {
        return Err(Error::Dimension {
            expected: model.n_inputs(),
            got: row.len(),
        });
    }
    Ok(())
}

fn column_means(draws: &[Vec<f64>], n_rows: usize) -> Vec<f64> {
    let mut mean = vec![0.0; n_rows];
    for d in draws {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v;
        }
    }
    let n = draws.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// `g(x_new; theta)` for every retained draw, without observation noise.
pub fn posterior_mean_function<M: PosteriorModel>(
    chains: &ChainSet,
    model: &M,
    x_new: &[Vec<f64>],
) -> Result<Predictive> {
    check_rows(model, x_new)?;
    let rows: Vec<&[f64]> = chains.retained_rows().collect();
    if rows.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let draws = rows
        .par_iter()
        .map(|row| model.mean_function(row, x_new))
        .collect::<Result<Vec<_>>>()?;
    let mean = column_means(&draws, x_new.len());
    Ok(Predictive { draws, mean })
}

/// Posterior-predictive draws at `x_new`: each retained draw's mean
/// function plus `N(0, sigma^2)` noise (regression) or the class
/// probability itself (classification). Noise comes from a generator
/// seeded with `seed`.
pub fn posterior_predictive<M: PosteriorModel>(
    chains: &ChainSet,
    model: &M,
    x_new: &[Vec<f64>],
    seed: u64,
) -> Result<Predictive> {
    let Predictive { mut draws, .. } = posterior_mean_function(chains, model, x_new)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (d, row) in draws.iter_mut().zip(chains.retained_rows()) {
        if let Noise::Gaussian(sigma) = model.noise(row) {
            for v in d.iter_mut() {
                *v += sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    let mean = column_means(&draws, x_new.len());
    Ok(Predictive { draws, mean })
}

pub fn mse(y_pred: &[f64], y: &[f64]) -> Result<f64> {
    if y_pred.len() != y.len() {
        return Err(Error::Dimension {
            expected: y.len(),
            got: y_pred.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sse: f64 = y_pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sse / y.len() as f64)
}

/// Posterior-mean parameters of a fuzzy model.
pub fn posterior_mean_theta(chains: &ChainSet, model: &FblModel) -> Result<ParamVector> {
    let expected = model.n_continuous() + model.n_binary();
    if chains.n_params() != expected {
        return Err(Error::ParamCount {
            expected,
            got: chains.n_params(),
        });
    }
    Ok(model.theta_from_row(&chains.posterior_mean()))
}

/// Labels `1` where `g(x; theta_bar) > threshold`, with `theta_bar` the
/// posterior mean. A value exactly at the threshold is labelled `0`.
pub fn classify(chains: &ChainSet, model: &FblModel, x_new: &[Vec<f64>], threshold: f64) -> Result<Vec<u8>> {
    if !model.is_classification() {
        return Err(Error::InvalidConfig("classify needs a classification model".into()));
    }
    check_rows(model, x_new)?;
    let theta = posterior_mean_theta(chains, model)?;
    let psi = model.rule_base.bind(&theta)?.infer_batch(x_new)?;
    Ok(psi.iter().map(|&p| (p > threshold) as u8).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Dataset;
    use crate::presets;
    use crate::probability::SigmaPrior;
    use crate::sampler::{Chain, SamplerConfig};
    use rand::Rng;

    fn constant_chains(row: Vec<f64>, names: Vec<String>, n_cont: usize) -> ChainSet {
        let n = 20;
        let draws: Vec<f64> = (0..n).flat_map(|_| row.clone()).collect();
        let np = row.len();
        ChainSet {
            param_names: names,
            n_continuous: n_cont,
            chains: vec![Chain {
                draws,
                log_density: vec![0.0; n],
                accept_counts: vec![0; np],
                proposal_counts: vec![0; np],
                scales: vec![1.0; n_cont],
            }],
            burn_in: 5,
            seed: 0,
            config: SamplerConfig::new(n, 5, 1, 0),
        }
    }

    fn truth() -> Vec<f64> {
        let mut t = vec![5.0; 6];
        t.extend([50.0; 3]);
        t
    }

    fn case_model(sigma: f64) -> FblModel {
        let base = presets::downtime_rule_base();
        let x = vec![vec![1.1, 8.8], vec![7.7, 1.1]];
        let y = base.infer_batch(&x).unwrap();
        FblModel::regression(base, Dataset::unnamed(x, y).unwrap(), SigmaPrior::Fixed { value: sigma }, false)
            .unwrap()
    }

    #[test]
    fn degenerate_posterior_reproduces_infer() {
        let model = case_model(1e-12);
        let chains = constant_chains(truth(), model.param_names(), 9);
        let x = vec![vec![1.1, 8.8], vec![7.7, 1.1], vec![3.0, 3.0]];
        let exact = model.rule_base.infer_batch(&x).unwrap();
        let g = posterior_mean_function(&chains, &model, &x).unwrap();
        assert_eq!(g.draws.len(), 15);
        assert!(g.draws.iter().all(|d| d == &exact));
        let p = posterior_predictive(&chains, &model, &x, 1).unwrap();
        for d in &p.draws {
            for (a, b) in d.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn predictive_mean_is_draw_average() {
        let model = case_model(2.0);
        let mut chains = constant_chains(truth(), model.param_names(), 9);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for v in chains.chains[0].draws.iter_mut() {
            *v *= rng.random_range(0.9..1.0);
        }
        let x = vec![vec![1.1, 8.8], vec![7.7, 1.1]];
        let p = posterior_predictive(&chains, &model, &x, 9).unwrap();
        for j in 0..2 {
            let brute: f64 = p.draws.iter().map(|d| d[j]).sum::<f64>() / p.draws.len() as f64;
            assert!((brute - p.mean[j]).abs() < 1e-12);
        }
        assert_eq!(p, posterior_predictive(&chains, &model, &x, 9).unwrap());
        assert!(posterior_predictive(&chains, &model, &[vec![1.0]], 9).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let y = vec![0.0; 24];
        let p = vec![1.0; 24];
        assert_eq!(mse(&p, &y).unwrap(), 1.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..50).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..50).map(|_| rng.random()).collect();
        let mut total = 0.0;
        for i in 0..50 {
            total += (a[i] - b[i]) * (a[i] - b[i]);
        }
        assert_eq!(mse(&a, &b).unwrap(), total / 50.0);
    }

    #[test]
    fn classify_ties_and_self_consistency() {
        let base = presets::classification_rule_base();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: Vec<Vec<f64>> =
            (0..60).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
        let psi = base.infer_batch(&x).unwrap();
        let labels: Vec<f64> = psi.iter().map(|&p| (p > 0.5) as u8 as f64).collect();
        let model = FblModel::classification(base, Dataset::unnamed(x.clone(), labels.clone()).unwrap(), false)
            .unwrap();
        let mut t = vec![5.0; 6];
        t.extend([0.5; 3]);
        let chains = constant_chains(t, model.param_names(), 9);
        let got = classify(&chains, &model, &x, 0.5).unwrap();
        assert!(got.iter().zip(&labels).all(|(&g, &l)| g as f64 == l));
        // the symmetric point (5, 5) fires only the MED rule: psi is exactly 0.5
        assert_eq!(classify(&chains, &model, &[vec![5.0, 5.0]], 0.5).unwrap(), vec![0]);
        assert!(classify(&chains, &case_model(1.0), &x, 0.5).is_err());
    }
}
