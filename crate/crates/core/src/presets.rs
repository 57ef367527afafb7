//! Rule bases used by the synthetic experiments.

use rand::Rng;

use crate::fuzzy::{
    Connective, LinguisticVariable, NoFire, Rule, RuleBase, TriangularMF, Universe,
};

fn unit_10() -> Universe {
    Universe::new(0.0, 10.0).expect("static universe")
}

fn downtime_variables(output_hi: f64) -> (Vec<LinguisticVariable>, LinguisticVariable) {
    let loc = LinguisticVariable::parameterized("loc_risk", unit_10(), &["LO", "MED", "HI"], None)
        .expect("static variable");
    let maint =
        LinguisticVariable::parameterized("maintenance", unit_10(), &["POOR", "AVG", "GOOD"], None)
            .expect("static variable");
    let out_u = Universe::new(0.0, output_hi).expect("static universe");
    let downtime = LinguisticVariable::parameterized("downtime", out_u, &["LO", "MED", "HI"], None)
        .expect("static variable");
    (vec![loc, maint], downtime)
}

fn downtime_rules() -> Vec<Rule> {
    vec![
        // loc_risk HI or maintenance POOR => downtime HI
        Rule::new(&[(0, 2), (1, 0)], Connective::Or, 2),
        // loc_risk MED or maintenance AVG => downtime MED
        Rule::new(&[(0, 1), (1, 1)], Connective::Or, 1),
        // loc_risk LO and maintenance GOOD => downtime LO
        Rule::new(&[(0, 0), (1, 2)], Connective::And, 0),
    ]
}

/// Three-rule downtime system on `loc_risk`, `maintenance` in [0, 10] and
/// `downtime` in [0, 100]. Default half-widths (5, 50) are the generating
/// values of the synthetic regression cases.
pub fn downtime_rule_base() -> RuleBase {
    let (inputs, output) = downtime_variables(100.0);
    RuleBase::new(inputs, output, downtime_rules()).expect("static rule base")
}

/// The downtime system plus two rules that contradict the data:
/// `loc_risk LO => downtime HI` and `maintenance POOR => downtime LO`.
pub fn downtime_rule_base_with_spurious() -> RuleBase {
    let (inputs, output) = downtime_variables(100.0);
    let mut rules = downtime_rules();
    rules.push(Rule::new(&[(0, 0)], Connective::And, 2));
    rules.push(Rule::new(&[(1, 0)], Connective::And, 0));
    RuleBase::new(inputs, output, rules).expect("static rule base")
}

/// Downtime rules with the output on [0, 1], used as a class probability.
pub fn classification_rule_base() -> RuleBase {
    let (inputs, output) = downtime_variables(1.0);
    RuleBase::new(inputs, output, downtime_rules()).expect("static rule base")
}

/// Half-width of the generating tomato triangles: neighbours touch but do
/// not overlap.
pub const TOMATO_HALF_WIDTH: f64 = 2.5;

/// Three one-to-one rules mapping colour to ripeness, both on [0, 10].
pub fn tomato_rule_base() -> RuleBase {
    let w = [TOMATO_HALF_WIDTH; 3];
    let colour = LinguisticVariable::parameterized(
        "colour",
        unit_10(),
        &["GREEN", "YELLOW", "RED"],
        Some(&w),
    )
    .expect("static variable");
    let ripeness = LinguisticVariable::parameterized(
        "ripeness",
        unit_10(),
        &["UNRIPE", "HALF_RIPE", "RIPE"],
        Some(&w),
    )
    .expect("static variable");
    let rules = (0..3).map(|j| Rule::new(&[(0, j)], Connective::And, j)).collect();
    RuleBase::new(vec![colour], ripeness, rules)
        .expect("static rule base")
        .with_no_fire(NoFire::Lower)
}

/// Tomato system without YELLOW / HALF_RIPE: only GREEN => UNRIPE and
/// RED => RIPE remain, leaving the middle of the colour axis uncovered.
pub fn tomato_sparse_rule_base() -> RuleBase {
    let w = [TOMATO_HALF_WIDTH; 2];
    let colour = LinguisticVariable::parameterized("colour", unit_10(), &["GREEN", "RED"], Some(&w))
        .expect("static variable");
    let ripeness =
        LinguisticVariable::parameterized("ripeness", unit_10(), &["UNRIPE", "RIPE"], Some(&w))
            .expect("static variable");
    let rules = vec![
        Rule::new(&[(0, 0)], Connective::And, 0),
        Rule::new(&[(0, 1)], Connective::And, 1),
    ];
    RuleBase::new(vec![colour], ripeness, rules)
        .expect("static rule base")
        .with_no_fire(NoFire::Lower)
}

/// The downtime system extended with `extra_inputs` dummy inputs, each with
/// fixed triangles, and one dummy rule per dummy input. The free parameters
/// are unchanged.
pub fn downtime_with_dummy_rules(extra_inputs: usize) -> RuleBase {
    let mut base = downtime_rule_base();
    let fixed = vec![
        TriangularMF::new(-5.0, 0.0, 5.0).expect("static triangle"),
        TriangularMF::new(0.0, 5.0, 10.0).expect("static triangle"),
        TriangularMF::new(5.0, 10.0, 15.0).expect("static triangle"),
    ];
    for d in 0..extra_inputs {
        let var = LinguisticVariable::fixed(
            format!("dummy{}", d + 1),
            unit_10(),
            &["LO", "MED", "HI"],
            fixed.clone(),
        )
        .expect("static variable");
        base.inputs.push(var);
        let idx = base.inputs.len() - 1;
        base.rules.push(Rule::new(&[(idx, d % 3)], Connective::And, 1));
    }
    base.validate().expect("dummy rule base");
    base
}

/// A random rule base and input vector, for property tests of the engine.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> (RuleBase, Vec<f64>) {
    let n_inputs = rng.random_range(1..=3);
    let mut inputs = Vec::with_capacity(n_inputs);
    for i in 0..n_inputs {
        let lo = rng.random_range(-10.0..10.0);
        let u = Universe::new(lo, lo + rng.random_range(1.0..20.0)).expect("ordered");
        let m = rng.random_range(2..=4);
        let labels: Vec<String> = (0..m).map(|j| format!("L{j}")).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let widths: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0) * u.span()).collect();
        inputs.push(
            LinguisticVariable::parameterized(format!("x{i}"), u, &refs, Some(&widths))
                .expect("valid variable"),
        );
    }
    let lo = rng.random_range(-50.0..50.0);
    let out_u = Universe::new(lo, lo + rng.random_range(1.0..200.0)).expect("ordered");
    let m = rng.random_range(2..=5);
    let labels: Vec<String> = (0..m).map(|j| format!("C{j}")).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let widths: Vec<f64> = (0..m).map(|_| rng.random_range(0.02..1.0) * out_u.span()).collect();
    let output = LinguisticVariable::parameterized("y", out_u, &refs, Some(&widths))
        .expect("valid variable");
    let n_rules = rng.random_range(1..=6);
    let rules = (0..n_rules)
        .map(|_| {
            let k = rng.random_range(1..=n_inputs);
            let ants: Vec<(usize, usize)> = (0..k)
                .map(|_| {
                    let v = rng.random_range(0..n_inputs);
                    (v, rng.random_range(0..inputs[v].labels.len()))
                })
                .collect();
            let conn = if rng.random_bool(0.5) {
                Connective::And
            } else {
                Connective::Or
            };
            Rule::new(&ants, conn, rng.random_range(0..m))
        })
        .collect();
    let x = inputs
        .iter()
        .map(|v| rng.random_range(v.universe.lo..=v.universe.hi))
        .collect();
    let base = RuleBase::new(inputs, output, rules).expect("valid rule base");
    (base, x)
}
