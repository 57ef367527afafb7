//! JSON document form of a rule base.
//!
//! ```json
//! {
//!   "inputs": [
//!     { "name": "loc_risk", "lo": 0, "hi": 10, "labels": ["LO", "MED", "HI"] }
//!   ],
//!   "output": { "name": "downtime", "lo": 0, "hi": 100, "labels": ["LO", "MED", "HI"],
//!               "half_widths": [50, 50, 50] },
//!   "rules": [
//!     { "if": [{ "variable": "loc_risk", "label": "HI" }], "connective": "or", "then": "HI" }
//!   ],
//!   "no_fire": "midpoint"
//! }
//! ```
//!
//! A variable carrying `mfs` (a list of `[a, b, c]` triangles) is fixed;
//! otherwise it is parameterized by one half-width per label.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Antecedent, Connective, Defuzzifier, LinguisticVariable, NoFire, Rule, RuleBase,
    TriangularMF, Universe,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableDoc {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_widths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mfs: Option<Vec<[f64; 3]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntecedentDoc {
    pub variable: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleDoc {
    #[serde(rename = "if")]
    pub antecedents: Vec<AntecedentDoc>,
    #[serde(default = "default_connective")]
    pub connective: Connective,
    #[serde(rename = "then")]
    pub consequent: String,
    #[serde(default = "default_true")]
    pub included: bool,
}

fn default_connective() -> Connective {
    Connective::And
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleBaseDoc {
    pub inputs: Vec<VariableDoc>,
    pub output: VariableDoc,
    pub rules: Vec<RuleDoc>,
    #[serde(default)]
    pub defuzzifier: Defuzzifier,
    #[serde(default)]
    pub no_fire: NoFire,
}

impl VariableDoc {
    fn build(&self) -> Result<LinguisticVariable> {
        let universe = Universe::new(self.lo, self.hi)?;
        let labels: Vec<&str> = self.labels.iter().map(String::as_str).collect();
        match &self.mfs {
            Some(mfs) => {
                let mfs = mfs
                    .iter()
                    .map(|&[a, b, c]| TriangularMF::new(a, b, c))
                    .collect::<Result<Vec<_>>>()?;
                LinguisticVariable::fixed(&self.name, universe, &labels, mfs)
            }
            None => LinguisticVariable::parameterized(
                &self.name,
                universe,
                &labels,
                self.half_widths.as_deref(),
            ),
        }
    }

    fn from_variable(var: &LinguisticVariable) -> Self {
        let (half_widths, mfs) = if var.is_free() {
            (Some(var.half_widths()), None)
        } else {
            (None, Some(var.mfs.iter().map(|m| [m.a, m.b, m.c]).collect()))
        };
        Self {
            name: var.name.clone(),
            lo: var.universe.lo,
            hi: var.universe.hi,
            labels: var.labels.clone(),
            half_widths,
            mfs,
        }
    }
}

impl RuleBaseDoc {
    pub fn build(&self) -> Result<RuleBase> {
        let inputs = self
            .inputs
            .iter()
            .map(VariableDoc::build)
            .collect::<Result<Vec<_>>>()?;
        let output = self.output.build()?;
        let mut rules = Vec::with_capacity(self.rules.len());
        for (k, doc) in self.rules.iter().enumerate() {
            let antecedents = doc
                .antecedents
                .iter()
                .map(|a| {
                    let variable = inputs.iter().position(|v| v.name == a.variable).ok_or_else(|| {
                        Error::InvalidRuleBase(format!(
                            "rule {}: unknown input variable `{}`",
                            k + 1,
                            a.variable
                        ))
                    })?;
                    let label = inputs[variable].label_index(&a.label).ok_or_else(|| {
                        Error::InvalidRuleBase(format!(
                            "rule {}: `{}` has no label `{}`",
                            k + 1,
                            a.variable,
                            a.label
                        ))
                    })?;
                    Ok(Antecedent { variable, label })
                })
                .collect::<Result<Vec<_>>>()?;
            let consequent = output.label_index(&doc.consequent).ok_or_else(|| {
                Error::InvalidRuleBase(format!(
                    "rule {}: output has no label `{}`",
                    k + 1,
                    doc.consequent
                ))
            })?;
            rules.push(Rule {
                antecedents,
                connective: doc.connective,
                consequent,
                included: doc.included,
            });
        }
        Ok(RuleBase::new(inputs, output, rules)?
            .with_defuzzifier(self.defuzzifier)
            .with_no_fire(self.no_fire))
    }

    pub fn from_rule_base(base: &RuleBase) -> Self {
        let rules = base
            .rules
            .iter()
            .map(|r| RuleDoc {
                antecedents: r
                    .antecedents
                    .iter()
                    .map(|a| AntecedentDoc {
                        variable: base.inputs[a.variable].name.clone(),
                        label: base.inputs[a.variable].labels[a.label].clone(),
                    })
                    .collect(),
                connective: r.connective,
                consequent: base.output.labels[r.consequent].clone(),
                included: r.included,
            })
            .collect();
        Self {
            inputs: base.inputs.iter().map(VariableDoc::from_variable).collect(),
            output: VariableDoc::from_variable(&base.output),
            rules,
            defuzzifier: base.defuzzifier,
            no_fire: base.no_fire,
        }
    }
}

impl RuleBase {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str::<RuleBaseDoc>(s)?.build()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&RuleBaseDoc::from_rule_base(self))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}
