//! Models tying a rule base (or a GLM) to data, priors and a likelihood.

mod bias;
mod glm;
mod predictive;

pub use bias::{bias_study, posterior_below, uniformity_test, BiasStudy, BiasStudyConfig, UniformityTest};
pub use glm::{fit_glm, glm_predict, GlmKind, GlmModel, Term};
pub use predictive::{
    classify, mse, posterior_mean_function, posterior_mean_theta, posterior_predictive, Noise,
    PosteriorModel, Predictive,
};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{ParamVector, RuleBase, RuleBaseDoc};
use crate::probability::{
    log_likelihood_bernoulli, log_likelihood_gaussian, log_posterior, log_prior, LikelihoodKind,
    LikelihoodSpec, PriorSpec, SigmaPrior,
};
use crate::sampler::{Density, State, Target};

/// Inputs `x` (one row per observation) and response `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub columns: Vec<String>,
    pub response: String,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, columns: Vec<String>, response: impl Into<String>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: y.len(),
            });
        }
        if let Some(row) = x.iter().find(|r| r.len() != columns.len()) {
            return Err(Error::Dimension {
                expected: columns.len(),
                got: row.len(),
            });
        }
        if x.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("dataset contains non-finite values".into()));
        }
        Ok(Self {
            x,
            y,
            columns,
            response: response.into(),
        })
    }

    /// Columns named `x1 .. xd` and response `y`.
    pub fn unnamed(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let d = x.first().map_or(0, Vec::len);
        let columns = (1..=d).map(|j| format!("x{j}")).collect();
        Self::new(x, y, columns, "y")
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn has_binary_response(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// A fuzzy rule base with its prior, likelihood and data.
#[derive(Clone, Debug, PartialEq)]
pub struct FblModel {
    pub rule_base: RuleBase,
    pub prior: PriorSpec,
    pub likelihood: LikelihoodSpec,
    pub data: Dataset,
    pub estimate_sigma: bool,
    pub select_rules: bool,
}

/// Rule-selection prior inclusion probability.
pub const DEFAULT_INCLUSION: f64 = 0.5;

impl FblModel {
    pub fn new(
        rule_base: RuleBase,
        data: Dataset,
        sigma: SigmaPrior,
        likelihood: LikelihoodSpec,
        select_rules: bool,
    ) -> Result<Self> {
        let inclusion = select_rules.then_some(DEFAULT_INCLUSION);
        let prior = PriorSpec::for_rule_base(&rule_base, sigma, inclusion);
        let model = Self {
            estimate_sigma: !sigma.is_fixed(),
            rule_base,
            prior,
            likelihood,
            data,
            select_rules,
        };
        model.validate()?;
        Ok(model)
    }

    /// Gaussian regression model.
    pub fn regression(rule_base: RuleBase, data: Dataset, sigma: SigmaPrior, select_rules: bool) -> Result<Self> {
        Self::new(rule_base, data, sigma, LikelihoodSpec::gaussian(), select_rules)
    }

    /// Bernoulli classification model; the output universe must be [0, 1].
    pub fn classification(rule_base: RuleBase, data: Dataset, select_rules: bool) -> Result<Self> {
        Self::new(
            rule_base,
            data,
            SigmaPrior::Fixed { value: 1.0 },
            LikelihoodSpec::bernoulli(),
            select_rules,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.rule_base.validate()?;
        self.prior.validate()?;
        self.likelihood.validate()?;
        if self.data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.data.n_features() != self.rule_base.inputs.len() {
            return Err(Error::Dimension {
                expected: self.rule_base.inputs.len(),
                got: self.data.n_features(),
            });
        }
        if self.prior.phi_upper.len() != self.rule_base.phi_count() {
            return Err(Error::ParamCount {
                expected: self.rule_base.phi_count(),
                got: self.prior.phi_upper.len(),
            });
        }
        if self.estimate_sigma == self.prior.sigma.is_fixed()
            || self.select_rules != self.prior.inclusion.is_some()
        {
            return Err(Error::InvalidConfig("model flags disagree with the prior".into()));
        }
        if self.is_classification() {
            let u = self.rule_base.output.universe;
            if u.lo != 0.0 || u.hi != 1.0 {
                return Err(Error::InvalidConfig(
                    "classification needs an output universe of [0, 1]".into(),
                ));
            }
            if self.estimate_sigma {
                return Err(Error::InvalidConfig("classification has no noise scale".into()));
            }
            if let Some((row, &value)) =
                self.data.y.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0)
            {
                return Err(Error::InvalidLabel { row, value });
            }
        }
        Ok(())
    }

    pub fn is_classification(&self) -> bool {
        self.likelihood.kind == LikelihoodKind::BernoulliClassification
    }

    pub fn fixed_sigma(&self) -> Option<f64> {
        match self.prior.sigma {
            SigmaPrior::Fixed { value } => Some(value),
            _ => None,
        }
    }

    pub fn log_likelihood(&self, theta: &ParamVector) -> Result<f64> {
        match self.likelihood.kind {
            LikelihoodKind::GaussianRegression => {
                let sigma = match (theta.sigma, self.fixed_sigma()) {
                    (Some(s), None) => s,
                    (None, Some(s)) => s,
                    _ => {
                        return Err(Error::InvalidArgument(
                            "sigma presence does not match the model".into(),
                        ))
                    }
                };
                log_likelihood_gaussian(theta, &self.rule_base, &self.data.x, &self.data.y, sigma)
            }
            LikelihoodKind::BernoulliClassification => log_likelihood_bernoulli(
                theta,
                &self.rule_base,
                &self.data.x,
                &self.data.y,
                self.likelihood.clamp_eps,
            ),
        }
    }

    pub fn log_posterior(&self, theta: &ParamVector) -> Result<f64> {
        log_posterior(theta, self)
    }

    /// Sampler coordinates of `theta`: half-widths, then sigma, then flags.
    pub fn flatten(&self, theta: &ParamVector) -> State {
        let mut continuous = theta.phi.clone();
        continuous.extend(theta.sigma);
        State::new(continuous, theta.beta.clone().unwrap_or_default())
    }

    pub fn unflatten(&self, state: &State) -> ParamVector {
        let n_phi = self.rule_base.phi_count();
        ParamVector {
            phi: state.continuous[..n_phi].to_vec(),
            sigma: self.estimate_sigma.then(|| state.continuous[n_phi]),
            beta: self.select_rules.then(|| state.binary.clone()),
        }
    }

    /// Parameter vector of a chain row. Binary entries above one half count
    /// as included, so a row of posterior means keeps the rules whose
    /// inclusion frequency exceeds one half.
    pub fn theta_from_row(&self, row: &[f64]) -> ParamVector {
        self.unflatten(&State::from_row(row, self.n_continuous()))
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            rule_base: RuleBaseDoc::from_rule_base(&self.rule_base),
            sigma: self.prior.sigma,
            likelihood: self.likelihood,
            select_rules: self.select_rules,
        }
    }
}

/// Serializable description of an [`FblModel`] without its data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub rule_base: RuleBaseDoc,
    pub sigma: SigmaPrior,
    pub likelihood: LikelihoodSpec,
    #[serde(default)]
    pub select_rules: bool,
}

impl ModelSpec {
    pub fn build(&self, data: Dataset) -> Result<FblModel> {
        FblModel::new(self.rule_base.build()?, data, self.sigma, self.likelihood, self.select_rules)
    }
}

/// Draw from `Cauchy(0, scale)` folded at zero.
pub(crate) fn half_cauchy_draw(scale: f64, rng: &mut dyn RngCore) -> f64 {
    let u: f64 = rng.random();
    (scale * (std::f64::consts::PI * (u - 0.5)).tan()).abs()
}

pub(crate) fn sigma_range(prior: &SigmaPrior) -> f64 {
    match *prior {
        SigmaPrior::Fixed { .. } => 0.0,
        SigmaPrior::Uniform { lo, hi } => hi - lo,
        SigmaPrior::HalfCauchy { scale } => scale,
    }
}

pub(crate) fn sigma_draw(prior: &SigmaPrior, rng: &mut dyn RngCore) -> f64 {
    match *prior {
        SigmaPrior::Fixed { value } => value,
        SigmaPrior::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        SigmaPrior::HalfCauchy { scale } => half_cauchy_draw(scale, rng),
    }
}

impl Target for FblModel {
    fn n_continuous(&self) -> usize {
        self.rule_base.phi_count() + self.estimate_sigma as usize
    }

    fn n_binary(&self) -> usize {
        if self.select_rules {
            self.rule_base.rules.len()
        } else {
            0
        }
    }

    fn param_names(&self) -> Vec<String> {
        let mut names = self.rule_base.phi_names();
        if self.estimate_sigma {
            names.push("sigma".into());
        }
        if self.select_rules {
            names.extend((1..=self.rule_base.rules.len()).map(|k| format!("beta.R{k}")));
        }
        names
    }

    fn proposal_range(&self, i: usize) -> f64 {
        match self.prior.phi_upper.get(i) {
            Some(&c) => c,
            None => sigma_range(&self.prior.sigma),
        }
    }

    /// Half-widths and sigma drawn from the prior, every rule included.
    fn initial_state(&self, rng: &mut dyn RngCore) -> State {
        let mut continuous: Vec<f64> = self
            .prior
            .phi_upper
            .iter()
            .map(|&c| c * (1.0 - rng.random::<f64>()))
            .collect();
        if self.estimate_sigma {
            continuous.push(sigma_draw(&self.prior.sigma, rng));
        }
        State::new(continuous, vec![true; self.n_binary()])
    }

    fn log_density(&self, state: &State) -> f64 {
        match self.log_posterior(&self.unflatten(state)) {
            Ok(v) if !v.is_nan() => v,
            _ => f64::NEG_INFINITY,
        }
    }

    fn log_density_parts(&self, state: &State) -> Density {
        let rejected = Density {
            base: f64::NEG_INFINITY,
            tempered: 0.0,
        };
        let theta = self.unflatten(state);
        let base = match log_prior(&theta, &self.prior) {
            Ok(v) if v > f64::NEG_INFINITY => v,
            _ => return rejected,
        };
        match self.log_likelihood(&theta) {
            Ok(tempered) if !tempered.is_nan() => Density { base, tempered },
            _ => rejected,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_data(base: &RuleBase) -> Dataset {
        let x = vec![vec![1.1, 8.8], vec![7.7, 1.1], vec![5.0, 5.0]];
        let y = base.infer_batch(&x).unwrap();
        Dataset::unnamed(x, y).unwrap()
    }

    #[test]
    fn dataset_checks_shapes() {
        assert!(Dataset::unnamed(vec![vec![1.0]], vec![]).is_err());
        assert!(Dataset::new(vec![vec![1.0, 2.0]], vec![0.0], vec!["a".into()], "y").is_err());
        assert!(Dataset::unnamed(vec![vec![f64::NAN]], vec![0.0]).is_err());
    }

    #[test]
    fn layout_and_names() {
        let base = presets::downtime_rule_base_with_spurious();
        let data = toy_data(&base);
        let m = FblModel::regression(base, data, SigmaPrior::Uniform { lo: 0.01, hi: 10.0 }, true).unwrap();
        assert_eq!(m.n_continuous(), 10);
        assert_eq!(m.n_binary(), 5);
        let names = m.param_names();
        assert_eq!(names.len(), 15);
        assert_eq!(names[0], "loc_risk.LO");
        assert_eq!(names[9], "sigma");
        assert_eq!(names[14], "beta.R5");
        let theta = ParamVector::new(vec![5.0; 6].into_iter().chain([50.0; 3]).collect())
            .with_sigma(1.0)
            .with_beta(vec![true, true, true, false, false]);
        assert_eq!(m.unflatten(&m.flatten(&theta)), theta);
        assert_eq!(m.theta_from_row(&m.flatten(&theta).to_row()), theta);
    }

    #[test]
    fn log_density_is_finite_at_prior_draws() {
        let base = presets::downtime_rule_base();
        let data = toy_data(&base);
        let m = FblModel::regression(base, data, SigmaPrior::Fixed { value: 1.0 }, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s = m.initial_state(&mut rng);
            assert!(m.log_density(&s).is_finite());
        }
        let mut s = m.initial_state(&mut rng);
        s.continuous[0] = -1.0;
        assert_eq!(m.log_density(&s), f64::NEG_INFINITY);
    }

    #[test]
    fn classification_requires_unit_output_and_labels() {
        let base = presets::downtime_rule_base();
        let data = Dataset::unnamed(vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        assert!(FblModel::classification(base, data, false).is_err());
        let base = presets::classification_rule_base();
        let bad = Dataset::unnamed(vec![vec![1.0, 1.0]], vec![0.3]).unwrap();
        assert!(FblModel::classification(base.clone(), bad, false).is_err());
        let good = Dataset::unnamed(vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        assert!(FblModel::classification(base, good, false).is_ok());
    }

    #[test]
    fn selection_with_all_rules_matches_plain_model() {
        let base = presets::downtime_rule_base();
        let data = toy_data(&base);
        let plain = FblModel::regression(base.clone(), data.clone(), SigmaPrior::Fixed { value: 1.0 }, false).unwrap();
        let select = FblModel::regression(base, data, SigmaPrior::Fixed { value: 1.0 }, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // the Bernoulli(0.5) flags add the constant 3 ln 0.5
        let offset = 3.0 * 0.5f64.ln();
        for _ in 0..100 {
            let s = plain.initial_state(&mut rng);
            let with_flags = State::new(s.continuous.clone(), vec![true; 3]);
            let a = plain.log_density(&s);
            let b = select.log_density(&with_flags);
            assert!((b - a - offset).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn spec_round_trip() {
        let base = presets::downtime_rule_base();
        let data = toy_data(&base);
        let m = FblModel::regression(base, data.clone(), SigmaPrior::HalfCauchy { scale: 10.0 }, false).unwrap();
        let text = serde_json::to_string(&m.spec()).unwrap();
        let spec: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec.build(data).unwrap(), m);
    }
}
