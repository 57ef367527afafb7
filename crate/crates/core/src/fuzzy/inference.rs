use serde::{Deserialize, Serialize};

use super::{Connective, RuleBase, TriangularMF, Universe};
use crate::error::{Error, Result};

/// How the aggregated output shape is reduced to a crisp value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Defuzzifier {
    /// Centroid of the piecewise-linear aggregate, integrated exactly between
    /// its breakpoints.
    #[default]
    Exact,
    /// Centroid `sum(u * mu(u)) / sum(mu(u))` over evenly spaced points.
    Grid { points: usize },
}

/// Output reported when no rule fires or the aggregate has zero area.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoFire {
    #[default]
    Midpoint,
    Lower,
    Upper,
    Value(f64),
}

impl NoFire {
    fn resolve(self, universe: &Universe) -> f64 {
        match self {
            NoFire::Midpoint => universe.midpoint(),
            NoFire::Lower => universe.lo,
            NoFire::Upper => universe.hi,
            NoFire::Value(v) => v,
        }
    }
}

impl RuleBase {
    /// Firing strength per output label: min/max connectives, max over rules
    /// sharing a consequent. Returns `None` when every rule is excluded.
    pub fn label_strengths(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        if x.len() != self.inputs.len() {
            return Err(Error::Dimension {
                expected: self.inputs.len(),
                got: x.len(),
            });
        }
        let mut strengths = vec![0.0f64; self.output.labels.len()];
        let mut any = false;
        for rule in self.rules.iter().filter(|r| r.included) {
            any = true;
            let memberships = rule.antecedents.iter().map(|ant| {
                self.inputs[ant.variable].mfs[ant.label].eval(x[ant.variable])
            });
            let fire = match rule.connective {
                Connective::And => memberships.fold(1.0, f64::min),
                Connective::Or => memberships.fold(0.0, f64::max),
            };
            let slot = &mut strengths[rule.consequent];
            *slot = slot.max(fire);
        }
        Ok(any.then_some(strengths))
    }

    /// Crisp Mamdani output for one input vector.
    pub fn infer(&self, x: &[f64]) -> Result<f64> {
        let strengths = self.label_strengths(x)?.ok_or(Error::EmptyRuleBase)?;
        let universe = &self.output.universe;
        let fallback = self.no_fire.resolve(universe);
        if strengths.iter().all(|&w| w <= 0.0) {
            return Ok(fallback);
        }
        let centroid = match self.defuzzifier {
            Defuzzifier::Exact => exact_centroid(&self.output.mfs, &strengths, universe),
            Defuzzifier::Grid { points } => {
                centroid_on_grid(&self.output.mfs, &strengths, universe, points)
            }
        };
        Ok(centroid.unwrap_or(fallback))
    }

    /// Row-wise [`RuleBase::infer`].
    pub fn infer_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|x| self.infer(x)).collect()
    }
}

#[inline]
fn aggregate(mfs: &[TriangularMF], strengths: &[f64], u: f64) -> f64 {
    mfs.iter()
        .zip(strengths)
        .filter(|(_, &w)| w > 0.0)
        .map(|(mf, &w)| mf.eval(u).min(w))
        .fold(0.0, f64::max)
}

/// Centroid of `max_k min(w_k, mf_k(u))` restricted to the universe, on an
/// evenly spaced grid of `points` values. `None` when the sampled area is 0.
pub fn centroid_on_grid(
    mfs: &[TriangularMF],
    strengths: &[f64],
    universe: &Universe,
    points: usize,
) -> Option<f64> {
    let step = universe.span() / (points - 1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..points {
        let u = universe.lo + i as f64 * step;
        let mu = aggregate(mfs, strengths, u);
        num += u * mu;
        den += mu;
    }
    (den > 0.0).then(|| num / den)
}

/// A line `y = slope * u + intercept`.
#[derive(Clone, Copy)]
struct Line {
    slope: f64,
    intercept: f64,
}

fn clipped_pieces(mf: &TriangularMF, w: f64) -> impl Iterator<Item = Line> {
    let rise = (mf.b > mf.a).then(|| Line {
        slope: 1.0 / (mf.b - mf.a),
        intercept: -mf.a / (mf.b - mf.a),
    });
    let fall = (mf.c > mf.b).then(|| Line {
        slope: -1.0 / (mf.c - mf.b),
        intercept: mf.c / (mf.c - mf.b),
    });
    let flat = Some(Line {
        slope: 0.0,
        intercept: w,
    });
    [rise, flat, fall].into_iter().flatten()
}

/// Exact centroid of the clipped-and-aggregated output shape.
///
/// Every clipped triangle is linear between its own kinks, so the aggregate
/// is linear between the union of all kinks and all pairwise crossings of
/// the pieces. Each such segment is integrated in closed form.
fn exact_centroid(mfs: &[TriangularMF], strengths: &[f64], universe: &Universe) -> Option<f64> {
    let active: Vec<(TriangularMF, f64)> = mfs
        .iter()
        .zip(strengths)
        .filter(|(_, &w)| w > 0.0)
        .map(|(mf, &w)| (*mf, w.min(1.0)))
        .collect();
    let mut knots = Vec::with_capacity(2 + active.len() * 5 + active.len() * active.len() * 5);
    knots.push(universe.lo);
    knots.push(universe.hi);
    for (mf, w) in &active {
        knots.extend([
            mf.a,
            mf.b,
            mf.c,
            mf.a + w * (mf.b - mf.a),
            mf.c - w * (mf.c - mf.b),
        ]);
    }
    for (i, (mf_i, w_i)) in active.iter().enumerate() {
        for (mf_j, w_j) in &active[i + 1..] {
            for p in clipped_pieces(mf_i, *w_i) {
                for q in clipped_pieces(mf_j, *w_j) {
                    let ds = p.slope - q.slope;
                    if ds != 0.0 {
                        knots.push((q.intercept - p.intercept) / ds);
                    }
                }
            }
        }
    }
    knots.retain(|u| u.is_finite() && *u >= universe.lo && *u <= universe.hi);
    knots.sort_unstable_by(f64::total_cmp);
    knots.dedup();

    let (mut area, mut moment) = (0.0, 0.0);
    let eval = |u: f64| {
        active
            .iter()
            .map(|(mf, w)| mf.eval(u).min(*w))
            .fold(0.0, f64::max)
    };
    for seg in knots.windows(2) {
        let (u0, u1) = (seg[0], seg[1]);
        let h = u1 - u0;
        if h <= 0.0 {
            continue;
        }
        // Sample at the quarter points so jumps at the knots themselves
        // (vertical triangle sides) never leak into the segment.
        let f1 = eval(u0 + 0.25 * h);
        let f3 = eval(u0 + 0.75 * h);
        let mean = 0.5 * (f1 + f3);
        let slope = 2.0 * (f3 - f1) / h;
        let mid = 0.5 * (u0 + u1);
        area += mean * h;
        moment += mean * mid * h + slope * h * h * h / 12.0;
    }
    (area > 0.0).then(|| moment / area)
}
