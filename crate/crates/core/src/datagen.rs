//! Seeded synthetic datasets, CSV input/output and dataset summaries.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{ParamVector, RuleBase};
use crate::models::{Dataset, FblModel};
use crate::presets;
use crate::probability::{LikelihoodSpec, SigmaPrior};
use crate::sampler::{run_chains, Density, SamplerConfig, State, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    #[serde(rename = "case1")]
    Case1,
    #[serde(rename = "case2")]
    Case2,
    #[serde(rename = "case3a")]
    Case3a,
    #[serde(rename = "case3b")]
    Case3b,
    #[serde(rename = "case4")]
    Case4,
    #[serde(rename = "tomato")]
    Tomato,
    #[serde(rename = "tomato-sparse")]
    TomatoSparse,
    #[serde(rename = "classification")]
    Classification,
    #[serde(rename = "scaling-bench")]
    ScalingBench,
}

impl CaseId {
    pub const ALL: [CaseId; 9] = [
        CaseId::Case1,
        CaseId::Case2,
        CaseId::Case3a,
        CaseId::Case3b,
        CaseId::Case4,
        CaseId::Tomato,
        CaseId::TomatoSparse,
        CaseId::Classification,
        CaseId::ScalingBench,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Case1 => "case1",
            CaseId::Case2 => "case2",
            CaseId::Case3a => "case3a",
            CaseId::Case3b => "case3b",
            CaseId::Case4 => "case4",
            CaseId::Tomato => "tomato",
            CaseId::TomatoSparse => "tomato-sparse",
            CaseId::Classification => "classification",
            CaseId::ScalingBench => "scaling-bench",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{s}`")))
    }
}

/// Default data seed. Inputs are drawn before noise, so under a shared
/// seed the first 15 Case II points are the Case I points. With this seed
/// the 15-point draw identifies all nine half-widths.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CasePreset {
    pub id: CaseId,
    pub n_points: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl CasePreset {
    pub fn new(id: CaseId, seed: u64) -> Self {
        let (n_points, noise_sd) = match id {
            CaseId::Case1 | CaseId::ScalingBench => (15, 0.0),
            CaseId::Case2 | CaseId::Tomato | CaseId::TomatoSparse | CaseId::Classification => (100, 0.0),
            CaseId::Case3a | CaseId::Case3b | CaseId::Case4 => (100, 1.0),
        };
        Self {
            id,
            n_points,
            noise_sd,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::InvalidConfig("n_points must be positive".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise_sd {} must be non-negative", self.noise_sd)));
        }
        Ok(())
    }

    /// Rule base that produces the data, at its true parameters.
    pub fn generating_base(&self) -> RuleBase {
        match self.id {
            CaseId::Tomato | CaseId::TomatoSparse => presets::tomato_rule_base(),
            CaseId::Classification => presets::classification_rule_base(),
            _ => presets::downtime_rule_base(),
        }
    }

    /// The model fitted to this preset's data.
    pub fn fit_spec(&self) -> FitSpec {
        let fixed = |value| SigmaPrior::Fixed { value };
        let vague = SigmaPrior::Uniform { lo: 0.01, hi: 10.0 };
        let gaussian = LikelihoodSpec::gaussian();
        let (rule_base, sigma, likelihood, select_rules) = match self.id {
            CaseId::Case1 | CaseId::Case2 | CaseId::ScalingBench => {
                (presets::downtime_rule_base(), fixed(0.001), gaussian, false)
            }
            CaseId::Case3a => (presets::downtime_rule_base(), fixed(1.0), gaussian, false),
            CaseId::Case3b => (presets::downtime_rule_base(), vague, gaussian, false),
            CaseId::Case4 => (presets::downtime_rule_base_with_spurious(), fixed(1.0), gaussian, true),
            CaseId::Tomato => (presets::tomato_rule_base(), vague, gaussian, false),
            CaseId::TomatoSparse => (presets::tomato_sparse_rule_base(), vague, gaussian, false),
            CaseId::Classification => (
                presets::classification_rule_base(),
                fixed(1.0),
                LikelihoodSpec::bernoulli(),
                false,
            ),
        };
        FitSpec {
            rule_base,
            sigma,
            likelihood,
            select_rules,
        }
    }

    /// Generating parameters in the layout of the generating base, with
    /// sigma when the fit estimates it and flags when it selects rules.
    pub fn truth(&self) -> ParamVector {
        let mut theta = ParamVector::new(self.generating_base().current_phi());
        let fit = self.fit_spec();
        if !fit.sigma.is_fixed() {
            theta = theta.with_sigma(self.noise_sd);
        }
        if fit.select_rules {
            let n_true = self.generating_base().rules.len();
            theta = theta.with_beta((0..fit.rule_base.rules.len()).map(|k| k < n_true).collect());
        }
        theta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitSpec {
    pub rule_base: RuleBase,
    pub sigma: SigmaPrior,
    pub likelihood: LikelihoodSpec,
    pub select_rules: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub preset: CasePreset,
    pub dataset: Dataset,
    pub truth: ParamVector,
    pub generating_base: RuleBase,
}

impl Generated {
    pub fn model(&self) -> Result<FblModel> {
        let fit = self.preset.fit_spec();
        FblModel::new(fit.rule_base, self.dataset.clone(), fit.sigma, fit.likelihood, fit.select_rules)
    }

    pub fn sidecar(&self) -> Truth {
        Truth {
            preset: self.preset.clone(),
            param_names: self.generating_base.phi_names(),
            truth: self.truth.clone(),
        }
    }
}

/// Contents of the JSON file written next to a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub preset: CasePreset,
    /// Names of the half-widths in `truth.phi`.
    pub param_names: Vec<String>,
    pub truth: ParamVector,
}

fn uniform_inputs(base: &RuleBase, n: usize, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            base.inputs
                .iter()
                .map(|v| v.universe.lo + v.universe.span() * rng.random::<f64>())
                .collect()
        })
        .collect()
}

/// Inputs uniform over each input universe; responses from the generating
/// base plus `N(0, noise_sd^2)`, or thresholded at 0.5 for classification.
pub fn generate(preset: &CasePreset) -> Result<Generated> {
    preset.validate()?;
    let base = preset.generating_base();
    let mut rng = ChaCha8Rng::seed_from_u64(preset.seed);
    let x = uniform_inputs(&base, preset.n_points, &mut rng);
    let clean = base.infer_batch(&x)?;
    let y: Vec<f64> = if preset.id == CaseId::Classification {
        clean.iter().map(|&p| if p > 0.5 { 1.0 } else { 0.0 }).collect()
    } else {
        clean
            .iter()
            .map(|&v| v + preset.noise_sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    let columns = base.inputs.iter().map(|v| v.name.clone()).collect();
    let dataset = Dataset::new(x, y, columns, base.output.name.clone())?;
    Ok(Generated {
        truth: preset.truth(),
        preset: preset.clone(),
        dataset,
        generating_base: base,
    })
}

/// Writes `data.csv` and `truth.json` into `dir`.
pub fn write_generated(generated: &Generated, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_csv(&generated.dataset, dir.join("data.csv"))?;
    fs::write(dir.join("truth.json"), serde_json::to_string_pretty(&generated.sidecar())? + "\n")?;
    Ok(())
}

/// Reads a headed CSV file whose last column is the response.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    load_csv_with_response(path, None)
}

/// Reads a headed CSV file, taking the named column (or the last one) as
/// the response.
pub fn load_csv_with_response(path: impl AsRef<Path>, response: Option<&str>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::EmptyDataset);
    }
    let target = match response {
        Some(name) => header.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidArgument(format!("no column named `{name}`"))
        })?,
        None => header.len() - 1,
    };
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let mut xs = Vec::with_capacity(header.len() - 1);
        for (j, field) in record.iter().enumerate() {
            let column = header.get(j).cloned().unwrap_or_else(|| format!("#{}", j + 1));
            if field.is_empty() {
                return Err(Error::Parse {
                    row,
                    column,
                    message: "missing value".into(),
                });
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column: column.clone(),
                message: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column,
                    message: format!("`{field}` is not finite"),
                });
            }
            if j == target {
                y.push(v);
            } else {
                xs.push(v);
            }
        }
        x.push(xs);
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let response = header[target].clone();
    let columns = header.into_iter().enumerate().filter(|&(j, _)| j != target).map(|(_, h)| h).collect();
    Dataset::new(x, y, columns, response)
}

/// Inputs followed by the response; values use the shortest exact decimal
/// form, so reading the file back gives identical numbers.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = data.columns.clone();
    header.push(data.response.clone());
    writer.write_record(&header)?;
    for (row, y) in data.x.iter().zip(&data.y) {
        let fields: Vec<String> = row.iter().chain(std::iter::once(y)).map(|v| v.to_string()).collect();
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (N - 1 denominator); 0 for one row.
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize_column(name: &str, values: &[f64]) -> ColumnSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    ColumnSummary {
        name: name.to_string(),
        count: n,
        mean,
        std,
        min: sorted[0],
        q25: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q75: quantile(&sorted, 0.75),
        max: sorted[n - 1],
    }
}

/// One summary per input column, then the response.
pub fn summarize_dataset(data: &Dataset) -> Result<Vec<ColumnSummary>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut out: Vec<ColumnSummary> = data
        .columns
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = data.x.iter().map(|r| r[j]).collect();
            summarize_column(name, &col)
        })
        .collect();
    out.push(summarize_column(&data.response, &data.y));
    Ok(out)
}

/// A target with `extra` dummy coordinates on [0, 1] that do not enter the
/// likelihood but are updated (and so re-evaluate it) every sweep.
struct Padded<'a> {
    inner: &'a FblModel,
    extra: usize,
}

impl Target for Padded<'_> {
    fn n_continuous(&self) -> usize {
        self.inner.n_continuous() + self.extra
    }

    fn param_names(&self) -> Vec<String> {
        let mut names = self.inner.param_names();
        names.extend((1..=self.extra).map(|k| format!("dummy{k}")));
        names
    }

    fn proposal_range(&self, i: usize) -> f64 {
        if i < self.inner.n_continuous() {
            self.inner.proposal_range(i)
        } else {
            1.0
        }
    }

    fn initial_state(&self, rng: &mut dyn RngCore) -> State {
        let mut s = self.inner.initial_state(rng);
        s.continuous.extend((0..self.extra).map(|_| rng.random::<f64>()));
        s
    }

    fn log_density(&self, state: &State) -> f64 {
        let n = self.inner.n_continuous();
        if !state.continuous[n..].iter().all(|v| (0.0..=1.0).contains(v)) {
            return f64::NEG_INFINITY;
        }
        let inner = State::new(state.continuous[..n].to_vec(), state.binary.clone());
        self.inner.log_density(&inner)
    }

    fn log_density_parts(&self, state: &State) -> Density {
        let n = self.inner.n_continuous();
        if !state.continuous[n..].iter().all(|v| (0.0..=1.0).contains(v)) {
            return Density {
                base: f64::NEG_INFINITY,
                tempered: 0.0,
            };
        }
        let inner = State::new(state.continuous[..n].to_vec(), state.binary.clone());
        self.inner.log_density_parts(&inner)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchAxis {
    Params,
    Rules,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub axis: BenchAxis,
    pub n_params: usize,
    pub n_rules: usize,
    pub iterations: usize,
    /// Mean wall-clock seconds over the repeats.
    pub seconds: f64,
}

/// Runs repeated to average each benchmark timing.
pub const BENCH_REPEATS: usize = 3;

fn time_run<T: Target>(target: &T, iterations: usize, seed: u64) -> Result<f64> {
    let mut total = 0.0;
    for r in 0..BENCH_REPEATS {
        let config = SamplerConfig::new(iterations, iterations / 5, 1, seed + r as u64);
        let start = Instant::now();
        run_chains(&config, target, None)?;
        total += start.elapsed().as_secs_f64();
    }
    Ok(total / BENCH_REPEATS as f64)
}

/// Sampler wall-clock time on Case I data, growing either the number of
/// sampled parameters (dummy coordinates beyond the nine half-widths) or
/// the number of rules (dummy inputs with fixed triangles, one rule each).
/// `param_counts` and `rule_counts` are totals and must be at least 9 and
/// 3 respectively.
pub fn scaling_bench(
    param_counts: &[usize],
    rule_counts: &[usize],
    iterations: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be positive".into()));
    }
    let preset = CasePreset::new(CaseId::ScalingBench, seed);
    let generated = generate(&preset)?;
    let model = generated.model()?;
    let base_params = model.n_continuous();
    let base_rules = model.rule_base.rules.len();
    let mut rows = Vec::new();
    for &p in param_counts {
        if p < base_params {
            return Err(Error::InvalidArgument(format!("parameter count {p} below {base_params}")));
        }
        let target = Padded {
            inner: &model,
            extra: p - base_params,
        };
        rows.push(BenchRow {
            axis: BenchAxis::Params,
            n_params: p,
            n_rules: base_rules,
            iterations,
            seconds: time_run(&target, iterations, seed)?,
        });
    }
    for &r in rule_counts {
        if r < base_rules {
            return Err(Error::InvalidArgument(format!("rule count {r} below {base_rules}")));
        }
        let base = presets::downtime_with_dummy_rules(r - base_rules);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = uniform_inputs(&base, preset.n_points, &mut rng);
        let y = base.infer_batch(&x)?;
        let data = Dataset::unnamed(x, y)?;
        let m = FblModel::regression(base, data, preset.fit_spec().sigma, false)?;
        rows.push(BenchRow {
            axis: BenchAxis::Rules,
            n_params: m.n_continuous(),
            n_rules: r,
            iterations,
            seconds: time_run(&m, iterations, seed)?,
        });
    }
    Ok(rows)
}
