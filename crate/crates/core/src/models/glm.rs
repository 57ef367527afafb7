//! Gaussian linear models with polynomial terms and an identity link.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{sigma_draw, sigma_range, Dataset};
use crate::error::{Error, Result};
use crate::probability::{gaussian_log_density, normal_log_density, SigmaPrior};
use crate::sampler::{run_chains, ChainSet, Density, SamplerConfig, State, Target};

/// Product of the listed input columns; repeats give powers and the empty
/// product is the intercept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term(pub Vec<usize>);

impl Term {
    pub fn intercept() -> Self {
        Term(Vec::new())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&j| x[j]).product()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|j| format!("x{}", j + 1)).collect();
        write!(f, "{}", parts.join("*"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlmKind {
    Glm1,
    Glm2,
    Glm3,
    Glm4,
    Glm5,
    Glm6,
    Glm7,
}

impl GlmKind {
    pub const ALL: [GlmKind; 7] = [
        GlmKind::Glm1,
        GlmKind::Glm2,
        GlmKind::Glm3,
        GlmKind::Glm4,
        GlmKind::Glm5,
        GlmKind::Glm6,
        GlmKind::Glm7,
    ];

    /// Terms for `d` input columns. GLM1-4 use the first two columns with an
    /// intercept; GLM5-7 use every column, no intercept, and products over
    /// distinct unordered pairs (and triples for GLM7).
    pub fn terms(self, d: usize) -> Result<Vec<Term>> {
        let needed = match self {
            GlmKind::Glm1 | GlmKind::Glm2 | GlmKind::Glm3 | GlmKind::Glm4 => 2,
            GlmKind::Glm5 | GlmKind::Glm6 | GlmKind::Glm7 => 1,
        };
        if d < needed {
            return Err(Error::Dimension {
                expected: needed,
                got: d,
            });
        }
        let t = |v: &[usize]| Term(v.to_vec());
        let linear = || (0..d).map(|i| Term(vec![i]));
        let pairs = || (0..d).flat_map(move |i| (i + 1..d).map(move |j| Term(vec![i, j])));
        let triples = || {
            (0..d).flat_map(move |i| {
                (i + 1..d).flat_map(move |j| (j + 1..d).map(move |k| Term(vec![i, j, k])))
            })
        };
        Ok(match self {
            GlmKind::Glm1 => vec![t(&[]), t(&[0]), t(&[1])],
            GlmKind::Glm2 => vec![t(&[]), t(&[0, 1])],
            GlmKind::Glm3 => vec![t(&[]), t(&[0, 0]), t(&[1, 1]), t(&[0, 1])],
            GlmKind::Glm4 => vec![t(&[]), t(&[0]), t(&[1]), t(&[0, 0]), t(&[1, 1]), t(&[0, 1])],
            GlmKind::Glm5 => linear().collect(),
            GlmKind::Glm6 => linear().chain(pairs()).collect(),
            GlmKind::Glm7 => linear().chain(pairs()).chain(triples()).collect(),
        })
    }
}

impl fmt::Display for GlmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = GlmKind::ALL.iter().position(|k| k == self).unwrap_or(0) + 1;
        write!(f, "glm{n}")
    }
}

impl FromStr for GlmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GlmKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown GLM `{s}`")))
    }
}

/// Coefficient prior standard deviation.
pub const ALPHA_PRIOR_SD: f64 = 20.0;

#[derive(Clone, Debug, PartialEq)]
pub struct GlmModel {
    pub kind: Option<GlmKind>,
    pub terms: Vec<Term>,
    pub alpha_sd: f64,
    pub sigma_prior: SigmaPrior,
    pub data: Dataset,
    design: Vec<Vec<f64>>,
}

impl GlmModel {
    pub fn new(terms: Vec<Term>, sigma_prior: SigmaPrior, data: Dataset) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("a GLM needs at least one term".into()));
        }
        if let Some(&j) = terms.iter().flat_map(|t| &t.0).find(|&&j| j >= data.n_features()) {
            return Err(Error::Dimension {
                expected: data.n_features(),
                got: j + 1,
            });
        }
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        sigma_prior.validate()?;
        let design = design_matrix(&terms, &data.x);
        Ok(Self {
            kind: None,
            terms,
            alpha_sd: ALPHA_PRIOR_SD,
            sigma_prior,
            data,
            design,
        })
    }

    /// One of the named GLMs with a `HalfCauchy(10)` noise prior.
    pub fn named(kind: GlmKind, data: Dataset) -> Result<Self> {
        Self::with_sigma(kind, SigmaPrior::HalfCauchy { scale: 10.0 }, data)
    }

    pub fn with_sigma(kind: GlmKind, sigma_prior: SigmaPrior, data: Dataset) -> Result<Self> {
        let terms = kind.terms(data.n_features())?;
        let mut model = Self::new(terms, sigma_prior, data)?;
        model.kind = Some(kind);
        Ok(model)
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn estimate_sigma(&self) -> bool {
        !self.sigma_prior.is_fixed()
    }

    /// Noise scale of a chain row.
    pub fn sigma_of(&self, row: &[f64]) -> f64 {
        match self.sigma_prior {
            SigmaPrior::Fixed { value } => value,
            _ => row[self.n_terms()],
        }
    }
}

pub fn design_matrix(terms: &[Term], x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter().map(|row| terms.iter().map(|t| t.eval(row)).collect()).collect()
}

/// Linear predictor with identity link.
pub fn glm_predict(glm: &GlmModel, alpha: &[f64], x: &[Vec<f64>]) -> Result<Vec<f64>> {
    if alpha.len() != glm.n_terms() {
        return Err(Error::ParamCount {
            expected: glm.n_terms(),
            got: alpha.len(),
        });
    }
    let d = glm.data.n_features();
    if let Some(row) = x.iter().find(|r| r.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: row.len(),
        });
    }
    Ok(x
        .iter()
        .map(|row| glm.terms.iter().zip(alpha).map(|(t, a)| a * t.eval(row)).sum())
        .collect())
}

impl Target for GlmModel {
    fn n_continuous(&self) -> usize {
        self.n_terms() + self.estimate_sigma() as usize
    }

    fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.n_terms()).map(|k| format!("alpha{k}")).collect();
        if self.estimate_sigma() {
            names.push("sigma".into());
        }
        names
    }

    fn proposal_range(&self, i: usize) -> f64 {
        if i < self.n_terms() {
            4.0 * self.alpha_sd
        } else {
            sigma_range(&self.sigma_prior)
        }
    }

    fn initial_state(&self, rng: &mut dyn RngCore) -> State {
        let prior = Normal::new(0.0, self.alpha_sd).expect("positive sd");
        let mut continuous: Vec<f64> = (0..self.n_terms()).map(|_| prior.sample(rng)).collect();
        if self.estimate_sigma() {
            continuous.push(sigma_draw(&self.sigma_prior, rng));
        }
        State::new(continuous, Vec::new())
    }

    fn log_density(&self, state: &State) -> f64 {
        self.log_density_parts(state).total()
    }

    fn log_density_parts(&self, state: &State) -> Density {
        let rejected = Density {
            base: f64::NEG_INFINITY,
            tempered: 0.0,
        };
        let alpha = &state.continuous[..self.n_terms()];
        let sigma = self.sigma_of(&state.continuous);
        let sigma_lp = match self.sigma_prior {
            SigmaPrior::Fixed { .. } => 0.0,
            p => p.log_density(sigma),
        };
        if sigma_lp == f64::NEG_INFINITY || !(sigma > 0.0) {
            return rejected;
        }
        let base = sigma_lp
            + alpha.iter().map(|&a| normal_log_density(a, 0.0, self.alpha_sd)).sum::<f64>();
        let mu: Vec<f64> = self
            .design
            .iter()
            .map(|row| row.iter().zip(alpha).map(|(v, a)| v * a).sum())
            .collect();
        match gaussian_log_density(&mu, &self.data.y, sigma) {
            Ok(tempered) if !tempered.is_nan() && !base.is_nan() => Density { base, tempered },
            _ => rejected,
        }
    }
}

/// Samples the coefficients (and sigma when it is not fixed).
pub fn fit_glm(glm: &GlmModel, config: &SamplerConfig) -> Result<ChainSet> {
    run_chains(config, glm, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize, d: usize, f: impl Fn(&[f64]) -> f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let y = x.iter().map(|r| f(r)).collect();
        Dataset::unnamed(x, y).unwrap()
    }

    #[test]
    fn term_counts() {
        let counts: Vec<usize> = GlmKind::ALL.iter().map(|k| k.terms(3).unwrap().len()).collect();
        assert_eq!(counts, vec![3, 2, 4, 6, 3, 6, 7]);
        assert_eq!(GlmKind::Glm4.terms(2).unwrap().len(), 6);
        assert!(GlmKind::Glm1.terms(1).is_err());
    }

    #[test]
    fn term_order_matches_expansion() {
        let show = |k: GlmKind| -> Vec<String> {
            k.terms(3).unwrap().iter().map(ToString::to_string).collect()
        };
        assert_eq!(show(GlmKind::Glm1), ["1", "x1", "x2"]);
        assert_eq!(show(GlmKind::Glm2), ["1", "x1*x2"]);
        assert_eq!(show(GlmKind::Glm3), ["1", "x1*x1", "x2*x2", "x1*x2"]);
        assert_eq!(show(GlmKind::Glm4), ["1", "x1", "x2", "x1*x1", "x2*x2", "x1*x2"]);
        assert_eq!(show(GlmKind::Glm5), ["x1", "x2", "x3"]);
        assert_eq!(show(GlmKind::Glm6), ["x1", "x2", "x3", "x1*x2", "x1*x3", "x2*x3"]);
        assert_eq!(
            show(GlmKind::Glm7),
            ["x1", "x2", "x3", "x1*x2", "x1*x3", "x2*x3", "x1*x2*x3"]
        );
    }

    #[test]
    fn parse_names() {
        assert_eq!("GLM4".parse::<GlmKind>().unwrap(), GlmKind::Glm4);
        assert!("glm8".parse::<GlmKind>().is_err());
        assert_eq!(serde_json::to_string(&GlmKind::Glm7).unwrap(), "\"glm7\"");
    }

    #[test]
    fn predict_examples() {
        let d = data(5, 2, |_| 0.0);
        let g1 = GlmModel::named(GlmKind::Glm1, d.clone()).unwrap();
        let out = glm_predict(&g1, &[1.0, 0.0, 0.0], &d.x).unwrap();
        assert!(out.iter().all(|&v| v == 1.0));
        let g2 = GlmModel::named(GlmKind::Glm2, d).unwrap();
        assert_eq!(glm_predict(&g2, &[0.0, 1.0], &[vec![2.0, 3.0]]).unwrap(), vec![6.0]);
        assert!(glm_predict(&g2, &[0.0], &[vec![2.0, 3.0]]).is_err());
        assert!(glm_predict(&g2, &[0.0, 1.0], &[vec![2.0]]).is_err());
    }

    #[test]
    fn fit_recovers_noiseless_linear_coefficients() {
        let d = data(40, 2, |x| 3.0 + 2.0 * x[0] - 1.5 * x[1]);
        let glm = GlmModel::with_sigma(GlmKind::Glm1, SigmaPrior::Fixed { value: 0.05 }, d).unwrap();
        let chains = fit_glm(&glm, &SamplerConfig::new(6000, 2000, 2, 11)).unwrap();
        for (p, truth) in [3.0, 2.0, -1.5].iter().enumerate() {
            let (lo, hi) = crate::diagnostics::hdi(&chains.pooled(p), 0.95).unwrap();
            assert!(lo <= *truth && *truth <= hi, "alpha{p}: [{lo}, {hi}] vs {truth}");
        }
    }

    #[test]
    fn intercept_only_contains_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y: Vec<f64> = (0..30).map(|_| 4.0 + rng.random_range(-1.0..1.0)).collect();
        let mean = y.iter().sum::<f64>() / 30.0;
        let x = vec![vec![0.0]; 30];
        let d = Dataset::unnamed(x, y).unwrap();
        let glm = GlmModel::new(vec![Term::intercept()], SigmaPrior::HalfCauchy { scale: 10.0 }, d).unwrap();
        let chains = fit_glm(&glm, &SamplerConfig::new(4000, 1000, 2, 5)).unwrap();
        let (lo, hi) = crate::diagnostics::hdi(&chains.pooled(0), 0.95).unwrap();
        assert!(lo <= mean && mean <= hi);
        assert_eq!(chains.param_names, vec!["alpha0", "sigma"]);
    }
}
