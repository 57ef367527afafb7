//! Mamdani fuzzy inference over triangular membership functions.
//!
//! A [`RuleBase`] holds input variables, a single output variable and a list
//! of rules. Free variables are parameterized by one half-width per label:
//! label `j` of `m` has its apex fixed at the evenly spaced anchor
//! `lo + j * (hi - lo) / (m - 1)` and its base at `anchor ± half_width`.
//! Variables built from explicit triangles are fixed and contribute no
//! parameters.

mod inference;
mod json;
mod membership;

pub use inference::{centroid_on_grid, Defuzzifier, NoFire};
pub use json::{RuleBaseDoc, RuleDoc, VariableDoc};
pub use membership::{membership, TriangularMF, Universe};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LinguisticVariable {
    pub name: String,
    pub universe: Universe,
    pub labels: Vec<String>,
    pub mfs: Vec<TriangularMF>,
    free: bool,
}

impl LinguisticVariable {
    /// Variable with one free half-width per label. Missing half-widths
    /// default to the anchor spacing, which makes neighbouring triangles meet
    /// at each other's apex.
    pub fn parameterized(
        name: impl Into<String>,
        universe: Universe,
        labels: &[&str],
        half_widths: Option<&[f64]>,
    ) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(Error::InvalidRuleBase("variable needs at least one label".into()));
        }
        let default_width = if m > 1 {
            universe.span() / (m - 1) as f64
        } else {
            universe.span() / 2.0
        };
        let widths = match half_widths {
            Some(w) if w.len() != m => {
                return Err(Error::ParamCount {
                    expected: m,
                    got: w.len(),
                })
            }
            Some(w) => w.to_vec(),
            None => vec![default_width; m],
        };
        let mfs = widths
            .iter()
            .enumerate()
            .map(|(j, &w)| TriangularMF::centered(universe.anchor(j, m), w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: name.into(),
            universe,
            labels: labels.iter().map(|s| s.to_string()).collect(),
            mfs,
            free: true,
        })
    }

    /// Variable with explicit, non-estimated triangles.
    pub fn fixed(
        name: impl Into<String>,
        universe: Universe,
        labels: &[&str],
        mfs: Vec<TriangularMF>,
    ) -> Result<Self> {
        if labels.is_empty() || labels.len() != mfs.len() {
            return Err(Error::InvalidRuleBase(
                "fixed variable needs one membership function per label".into(),
            ));
        }
        let var = Self {
            name: name.into(),
            universe,
            labels: labels.iter().map(|s| s.to_string()).collect(),
            mfs,
            free: false,
        };
        var.validate()?;
        Ok(var)
    }

    pub fn is_free(&self) -> bool {
        self.free
    }

    pub fn free_param_count(&self) -> usize {
        if self.free {
            self.labels.len()
        } else {
            0
        }
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Current half-widths of a free variable (right half of each triangle).
    pub fn half_widths(&self) -> Vec<f64> {
        self.mfs.iter().map(|mf| mf.c - mf.b).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.labels.is_empty() || self.labels.len() != self.mfs.len() {
            return Err(Error::InvalidRuleBase(format!(
                "variable `{}` needs one membership function per label",
                self.name
            )));
        }
        for mf in &self.mfs {
            if !self.universe.contains(mf.b) {
                return Err(Error::InvalidRuleBase(format!(
                    "apex {} of variable `{}` lies outside [{}, {}]",
                    mf.b, self.name, self.universe.lo, self.universe.hi
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connective {
    And,
    Or,
}

/// `(input variable index, label index)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Antecedent {
    pub variable: usize,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub antecedents: Vec<Antecedent>,
    pub connective: Connective,
    /// Label index on the output variable.
    pub consequent: usize,
    pub included: bool,
}

impl Rule {
    pub fn new(antecedents: &[(usize, usize)], connective: Connective, consequent: usize) -> Self {
        Self {
            antecedents: antecedents
                .iter()
                .map(|&(variable, label)| Antecedent { variable, label })
                .collect(),
            connective,
            consequent,
            included: true,
        }
    }
}

/// Membership half-widths, optional noise scale and optional rule inclusion
/// flags: the sampler's state for a fuzzy model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub phi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<bool>>,
}

impl ParamVector {
    pub fn new(phi: Vec<f64>) -> Self {
        Self {
            phi,
            sigma: None,
            beta: None,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn with_beta(mut self, beta: Vec<bool>) -> Self {
        self.beta = Some(beta);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleBase {
    pub inputs: Vec<LinguisticVariable>,
    pub output: LinguisticVariable,
    pub rules: Vec<Rule>,
    pub defuzzifier: Defuzzifier,
    pub no_fire: NoFire,
}

impl RuleBase {
    pub fn new(
        inputs: Vec<LinguisticVariable>,
        output: LinguisticVariable,
        rules: Vec<Rule>,
    ) -> Result<Self> {
        let base = Self {
            inputs,
            output,
            rules,
            defuzzifier: Defuzzifier::default(),
            no_fire: NoFire::default(),
        };
        base.validate()?;
        Ok(base)
    }

    pub fn with_no_fire(mut self, no_fire: NoFire) -> Self {
        self.no_fire = no_fire;
        self
    }

    pub fn with_defuzzifier(mut self, defuzzifier: Defuzzifier) -> Self {
        self.defuzzifier = defuzzifier;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for var in self.inputs.iter().chain(std::iter::once(&self.output)) {
            var.validate()?;
        }
        for (k, rule) in self.rules.iter().enumerate() {
            if rule.antecedents.is_empty() {
                return Err(Error::InvalidRuleBase(format!("rule {} has no antecedent", k + 1)));
            }
            for ant in &rule.antecedents {
                let var = self.inputs.get(ant.variable).ok_or_else(|| {
                    Error::InvalidRuleBase(format!(
                        "rule {} references input variable {}",
                        k + 1,
                        ant.variable
                    ))
                })?;
                if ant.label >= var.labels.len() {
                    return Err(Error::InvalidRuleBase(format!(
                        "rule {} references label {} of `{}`",
                        k + 1,
                        ant.label,
                        var.name
                    )));
                }
            }
            if rule.consequent >= self.output.labels.len() {
                return Err(Error::InvalidRuleBase(format!(
                    "rule {} references output label {}",
                    k + 1,
                    rule.consequent
                )));
            }
        }
        if let Defuzzifier::Grid { points } = self.defuzzifier {
            if points < 2 {
                return Err(Error::InvalidRuleBase("defuzzification grid needs >= 2 points".into()));
            }
        }
        Ok(())
    }

    fn variables(&self) -> impl Iterator<Item = &LinguisticVariable> {
        self.inputs.iter().chain(std::iter::once(&self.output))
    }

    /// Number of membership half-widths (inputs first, then output).
    pub fn phi_count(&self) -> usize {
        self.variables().map(LinguisticVariable::free_param_count).sum()
    }

    /// Upper prior bound for each half-width: the span of its universe.
    pub fn phi_upper_bounds(&self) -> Vec<f64> {
        self.variables()
            .flat_map(|v| std::iter::repeat(v.universe.span()).take(v.free_param_count()))
            .collect()
    }

    /// `variable.label` for every half-width, in parameter order.
    pub fn phi_names(&self) -> Vec<String> {
        self.variables()
            .filter(|v| v.is_free())
            .flat_map(|v| v.labels.iter().map(move |l| format!("{}.{}", v.name, l)))
            .collect()
    }

    /// The half-widths currently stored in the rule base.
    pub fn current_phi(&self) -> Vec<f64> {
        self.variables()
            .filter(|v| v.is_free())
            .flat_map(LinguisticVariable::half_widths)
            .collect()
    }

    pub fn inclusion(&self) -> Vec<bool> {
        self.rules.iter().map(|r| r.included).collect()
    }

    /// Rebuilds every free triangle from `theta.phi` and copies `theta.beta`
    /// onto the rules when present.
    pub fn bind(&self, theta: &ParamVector) -> Result<RuleBase> {
        let expected = self.phi_count();
        if theta.phi.len() != expected {
            return Err(Error::ParamCount {
                expected,
                got: theta.phi.len(),
            });
        }
        let mut bound = self.clone();
        let mut offset = 0;
        for var in bound.inputs.iter_mut().chain(std::iter::once(&mut bound.output)) {
            if !var.free {
                continue;
            }
            let m = var.labels.len();
            for (j, mf) in var.mfs.iter_mut().enumerate() {
                *mf = TriangularMF::centered(var.universe.anchor(j, m), theta.phi[offset + j])?;
            }
            offset += m;
        }
        if let Some(beta) = &theta.beta {
            if beta.len() != bound.rules.len() {
                return Err(Error::ParamCount {
                    expected: bound.rules.len(),
                    got: beta.len(),
                });
            }
            for (rule, &b) in bound.rules.iter_mut().zip(beta) {
                rule.included = b;
            }
        }
        Ok(bound)
    }
}

/// Free-function form of [`RuleBase::bind`].
pub fn bind_params(base: &RuleBase, theta: &ParamVector) -> Result<RuleBase> {
    base.bind(theta)
}

/// Free-function form of [`RuleBase::infer`].
pub fn infer(base: &RuleBase, x: &[f64]) -> Result<f64> {
    base.infer(x)
}

/// Free-function form of [`RuleBase::infer_batch`].
pub fn infer_batch(base: &RuleBase, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    base.infer_batch(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn bind_rebuilds_nine_triangles() {
        let base = presets::downtime_rule_base();
        assert_eq!(base.phi_count(), 9);
        let theta = ParamVector::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 10.0, 20.0, 30.0]);
        let bound = base.bind(&theta).unwrap();
        let total: usize = bound.variables().map(|v| v.mfs.len()).sum();
        assert_eq!(total, 9);
        assert_eq!(bound.inputs[0].mfs[2], TriangularMF::new(7.0, 10.0, 13.0).unwrap());
        assert_eq!(bound.output.mfs[1], TriangularMF::new(30.0, 50.0, 70.0).unwrap());
        assert_eq!(bound.current_phi(), theta.phi);
    }

    #[test]
    fn bind_half_width_formula() {
        let base = presets::downtime_rule_base();
        let mut phi = vec![5.0; 6];
        phi.extend([50.0; 3]);
        let bound = base.bind(&ParamVector::new(phi)).unwrap();
        // loc_risk MED on [0, 10] with half-width 5
        assert_eq!(bound.inputs[0].mfs[1], TriangularMF::new(0.0, 5.0, 10.0).unwrap());
    }

    #[test]
    fn bind_rejects_wrong_length() {
        let base = presets::downtime_rule_base();
        let err = base.bind(&ParamVector::new(vec![5.0; 8])).unwrap_err();
        assert!(matches!(err, Error::ParamCount { expected: 9, got: 8 }));
    }

    #[test]
    fn bind_copies_beta() {
        let base = presets::downtime_rule_base_with_spurious();
        let mut theta = ParamVector::new(base.current_phi());
        theta.beta = Some(vec![true, true, true, false, false]);
        let bound = base.bind(&theta).unwrap();
        assert_eq!(bound.inclusion(), vec![true, true, true, false, false]);
        theta.beta = Some(vec![true; 4]);
        assert!(base.bind(&theta).is_err());
    }

    #[test]
    fn validation_catches_bad_indices() {
        let base = presets::downtime_rule_base();
        let mut bad = base.clone();
        bad.rules[0].antecedents[0].label = 7;
        assert!(bad.validate().is_err());
        let mut bad = base.clone();
        bad.rules[0].consequent = 3;
        assert!(bad.validate().is_err());
        let mut bad = base;
        bad.rules[0].antecedents.clear();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn names_and_bounds() {
        let base = presets::downtime_rule_base();
        assert_eq!(base.phi_names()[0], "loc_risk.LO");
        assert_eq!(base.phi_names()[8], "downtime.HI");
        assert_eq!(base.phi_upper_bounds(), vec![10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 100.0, 100.0, 100.0]);
    }
}
