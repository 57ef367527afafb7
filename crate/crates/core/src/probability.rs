//! Priors, likelihoods and the unnormalized log-posterior of a fuzzy model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{ParamVector, RuleBase};
use crate::models::FblModel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SigmaPrior {
    /// Noise scale is known; it is not part of the parameter vector.
    Fixed { value: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Cauchy(0, scale) left-truncated at zero.
    HalfCauchy { scale: f64 },
}

impl SigmaPrior {
    pub fn is_fixed(&self) -> bool {
        matches!(self, SigmaPrior::Fixed { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SigmaPrior::Fixed { value } => value > 0.0 && value.is_finite(),
            SigmaPrior::Uniform { lo, hi } => lo >= 0.0 && lo < hi && hi.is_finite(),
            SigmaPrior::HalfCauchy { scale } => scale > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid sigma prior {self:?}")))
        }
    }

    pub fn log_density(&self, sigma: f64) -> f64 {
        match *self {
            SigmaPrior::Fixed { value } => {
                if sigma == value {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            SigmaPrior::Uniform { lo, hi } => uniform_log_density(sigma, lo, hi),
            SigmaPrior::HalfCauchy { scale } => half_cauchy_log_density(sigma, scale),
        }
    }
}

pub fn uniform_log_density(x: f64, lo: f64, hi: f64) -> f64 {
    if x >= lo && x <= hi {
        -(hi - lo).ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `2 / (pi * s * (1 + (x / s)^2))` on `x >= 0`.
pub fn half_cauchy_log_density(x: f64, scale: f64) -> f64 {
    if x < 0.0 || x.is_nan() {
        return f64::NEG_INFINITY;
    }
    let z = x / scale;
    (2.0 / (PI * scale)).ln() - z.mul_add(z, 1.0).ln()
}

pub fn normal_log_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * PI).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// `C_max` for each half-width; `phi_i ~ Uniform(0, C_max_i)`.
    pub phi_upper: Vec<f64>,
    pub sigma: SigmaPrior,
    /// Rule inclusion probability; `None` when rules are not selected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion: Option<f64>,
}

impl PriorSpec {
    /// Uniform half-width priors bounded by each universe's span.
    pub fn for_rule_base(base: &RuleBase, sigma: SigmaPrior, inclusion: Option<f64>) -> Self {
        Self {
            phi_upper: base.phi_upper_bounds(),
            sigma,
            inclusion,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phi_upper.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidArgument("C_max must be positive".into()));
        }
        if let Some(p) = self.inclusion {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "inclusion probability {p} outside (0, 1)"
                )));
            }
        }
        self.sigma.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodKind {
    GaussianRegression,
    BernoulliClassification,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodSpec {
    pub kind: LikelihoodKind,
    #[serde(default = "default_clamp")]
    pub clamp_eps: f64,
}

fn default_clamp() -> f64 {
    1e-6
}

impl LikelihoodSpec {
    pub fn gaussian() -> Self {
        Self {
            kind: LikelihoodKind::GaussianRegression,
            clamp_eps: default_clamp(),
        }
    }

    pub fn bernoulli() -> Self {
        Self {
            kind: LikelihoodKind::BernoulliClassification,
            clamp_eps: default_clamp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "clamp_eps {} outside (0, 0.5)",
                self.clamp_eps
            )));
        }
        Ok(())
    }
}

/// Sum of independent prior log-densities; `-inf` outside the support.
pub fn log_prior(theta: &ParamVector, prior: &PriorSpec) -> Result<f64> {
    if theta.phi.len() != prior.phi_upper.len() {
        return Err(Error::ParamCount {
            expected: prior.phi_upper.len(),
            got: theta.phi.len(),
        });
    }
    let mut lp = 0.0;
    for (&phi, &cmax) in theta.phi.iter().zip(&prior.phi_upper) {
        if !(phi > 0.0 && phi <= cmax) {
            return Ok(f64::NEG_INFINITY);
        }
        lp -= cmax.ln();
    }
    match (prior.sigma, theta.sigma) {
        (SigmaPrior::Fixed { .. }, None) => {}
        (SigmaPrior::Fixed { .. }, Some(_)) | (_, None) => {
            return Err(Error::InvalidArgument(
                "sigma presence does not match the prior".into(),
            ))
        }
        (p, Some(s)) => lp += p.log_density(s),
    }
    match (prior.inclusion, &theta.beta) {
        (None, None) => {}
        (Some(p), Some(beta)) => {
            let (inc, exc) = (p.ln(), (1.0 - p).ln());
            lp += beta.iter().map(|&b| if b { inc } else { exc }).sum::<f64>();
        }
        _ => {
            return Err(Error::InvalidArgument(
                "rule inclusion flags do not match the prior".into(),
            ))
        }
    }
    Ok(lp)
}

/// `-(N/2) ln(2 pi sigma^2) - sum(residual^2) / (2 sigma^2)`.
pub fn gaussian_log_density(predicted: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if predicted.len() != y.len() {
        return Err(Error::Dimension {
            expected: y.len(),
            got: predicted.len(),
        });
    }
    let sse: f64 = predicted
        .iter()
        .zip(y)
        .map(|(p, t)| (t - p) * (t - p))
        .sum();
    let n = y.len() as f64;
    Ok(-0.5 * n * (2.0 * PI * sigma * sigma).ln() - sse / (2.0 * sigma * sigma))
}

/// Bernoulli log-likelihood with `psi` clamped to `[eps, 1 - eps]`.
pub fn bernoulli_log_density(psi: &[f64], y01: &[f64], clamp_eps: f64) -> Result<f64> {
    if psi.len() != y01.len() {
        return Err(Error::Dimension {
            expected: y01.len(),
            got: psi.len(),
        });
    }
    let mut ll = 0.0;
    for (row, (&p, &y)) in psi.iter().zip(y01).enumerate() {
        let p = p.clamp(clamp_eps, 1.0 - clamp_eps);
        ll += if y == 1.0 {
            p.ln()
        } else if y == 0.0 {
            (1.0 - p).ln()
        } else {
            return Err(Error::InvalidLabel { row, value: y });
        };
    }
    Ok(ll)
}

/// Gaussian log-likelihood of `y` around the fuzzy outputs at `theta`.
pub fn log_likelihood_gaussian(
    theta: &ParamVector,
    base: &RuleBase,
    x: &[Vec<f64>],
    y: &[f64],
    sigma: f64,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let predicted = base.bind(theta)?.infer_batch(x)?;
    gaussian_log_density(&predicted, y, sigma)
}

/// Bernoulli log-likelihood of 0/1 labels with `psi = g(x; theta)`.
pub fn log_likelihood_bernoulli(
    theta: &ParamVector,
    base: &RuleBase,
    x: &[Vec<f64>],
    y01: &[f64],
    clamp_eps: f64,
) -> Result<f64> {
    if let Some((row, &value)) = y01.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidLabel { row, value });
    }
    let psi = base.bind(theta)?.infer_batch(x)?;
    bernoulli_log_density(&psi, y01, clamp_eps)
}

/// `log_prior + log_likelihood`. The likelihood is skipped entirely when the
/// prior is `-inf`.
pub fn log_posterior(theta: &ParamVector, model: &FblModel) -> Result<f64> {
    let lp = log_prior(theta, &model.prior)?;
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + model.log_likelihood(theta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn downtime_prior() -> PriorSpec {
        PriorSpec::for_rule_base(
            &presets::downtime_rule_base(),
            SigmaPrior::Fixed { value: 1.0 },
            None,
        )
    }

    #[test]
    fn uniform_product() {
        let prior = downtime_prior();
        let theta = ParamVector::new(presets::downtime_rule_base().current_phi());
        let expected = -6.0 * 10f64.ln() - 3.0 * 100f64.ln();
        assert!((log_prior(&theta, &prior).unwrap() - expected).abs() < 1e-12);

        let equal = PriorSpec {
            phi_upper: vec![10.0; 4],
            sigma: SigmaPrior::Fixed { value: 1.0 },
            inclusion: None,
        };
        let lp = log_prior(&ParamVector::new(vec![1.0, 2.0, 3.0, 9.0]), &equal).unwrap();
        assert!((lp - 4.0 * (0.1f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn outside_support() {
        let prior = downtime_prior();
        let mut phi = presets::downtime_rule_base().current_phi();
        phi[2] = -0.5;
        assert_eq!(log_prior(&ParamVector::new(phi.clone()), &prior).unwrap(), f64::NEG_INFINITY);
        phi[2] = 0.0;
        assert_eq!(log_prior(&ParamVector::new(phi.clone()), &prior).unwrap(), f64::NEG_INFINITY);
        phi[2] = 10.5;
        assert_eq!(log_prior(&ParamVector::new(phi), &prior).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn bernoulli_inclusion_terms() {
        let base = presets::downtime_rule_base_with_spurious();
        let with = PriorSpec::for_rule_base(&base, SigmaPrior::Fixed { value: 1.0 }, Some(0.5));
        let without = PriorSpec::for_rule_base(&base, SigmaPrior::Fixed { value: 1.0 }, None);
        let phi = base.current_phi();
        let a = log_prior(
            &ParamVector::new(phi.clone()).with_beta(vec![true, true, true, false, false]),
            &with,
        )
        .unwrap();
        let b = log_prior(&ParamVector::new(phi), &without).unwrap();
        assert!((a - b - 5.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sigma_prior_terms() {
        let base = presets::downtime_rule_base();
        let prior = PriorSpec::for_rule_base(&base, SigmaPrior::Uniform { lo: 0.01, hi: 10.0 }, None);
        let theta = ParamVector::new(base.current_phi());
        assert!(log_prior(&theta, &prior).is_err());
        let inside = log_prior(&theta.clone().with_sigma(1.0), &prior).unwrap();
        let base_lp = log_prior(&theta, &downtime_prior()).unwrap();
        assert!((inside - base_lp + (9.99f64).ln()).abs() < 1e-12);
        assert_eq!(log_prior(&theta.with_sigma(0.001), &prior).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn half_cauchy_normalizes() {
        // Trapezoid over [0, 1e5] with the analytic tail 2/pi * atan(.)
        let s = 10.0;
        let n = 2_000_000;
        let upper = 1e5;
        let h = upper / n as f64;
        let mut mass = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            mass += w * half_cauchy_log_density(i as f64 * h, s).exp() * h;
        }
        let tail = 1.0 - 2.0 / PI * (upper / s).atan();
        assert!((mass + tail - 1.0).abs() < 1e-6, "{mass}");
        assert_eq!(half_cauchy_log_density(-1.0, s), f64::NEG_INFINITY);
    }

    #[test]
    fn gaussian_small_cases() {
        let half_log_2pi = 0.5 * (2.0 * PI).ln();
        assert!((gaussian_log_density(&[3.0], &[3.0], 1.0).unwrap() + half_log_2pi).abs() < 1e-15);
        assert!(
            (gaussian_log_density(&[3.0], &[4.0], 1.0).unwrap() + half_log_2pi + 0.5).abs() < 1e-15
        );
        assert!(matches!(
            gaussian_log_density(&[3.0], &[4.0], 0.0),
            Err(Error::NonPositiveSigma(_))
        ));
    }

    #[test]
    fn bernoulli_small_cases() {
        let eps = 1e-6;
        assert!((bernoulli_log_density(&[0.5], &[1.0], eps).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!((bernoulli_log_density(&[0.5], &[0.0], eps).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(bernoulli_log_density(&[1.0], &[1.0], eps).unwrap(), (1.0 - eps).ln());
        assert!((bernoulli_log_density(&[1.0], &[0.0], eps).unwrap() - eps.ln()).abs() < 1e-9);
        assert!(matches!(
            bernoulli_log_density(&[0.3], &[2.0], eps),
            Err(Error::InvalidLabel { row: 0, .. })
        ));
    }

    #[test]
    fn likelihood_spec_validation() {
        assert!(LikelihoodSpec::gaussian().validate().is_ok());
        let mut bad = LikelihoodSpec::bernoulli();
        bad.clamp_eps = 0.5;
        assert!(bad.validate().is_err());
    }
}
