//! Subcommand implementations. Every command computes its results in memory
//! and only then writes files into its output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fbl_core::datagen::{
    generate, load_csv, load_csv_with_response, scaling_bench, summarize_dataset, write_csv, write_generated,
    CaseId, CasePreset, ColumnSummary, Truth,
};
use fbl_core::diagnostics::{autocorrelation, density_histogram, geweke, hdi, summarize, GewekeConfig, PosteriorSummary};
use fbl_core::fuzzy::RuleBase;
use fbl_core::models::{
    bias_study, classify, fit_glm, mse, posterior_mean_function, posterior_predictive, BiasStudyConfig, Dataset,
    FblModel, GlmKind, GlmModel, ModelSpec,
};
use fbl_core::probability::{LikelihoodSpec, SigmaPrior};
use fbl_core::sampler::{run_chains, ChainSet, SamplerConfig};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ESTIMATED_SIGMA};

pub const HDI_MASS: f64 = 0.95;
const DENSITY_BINS: usize = 50;
const MAX_LAG: usize = 100;

/// Contents of `model.json` in a fit directory.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitRecord {
    pub model: ModelSpec,
    pub preset: Option<CasePreset>,
    pub response: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_generate(preset: CaseId, seed: u64, n_points: Option<usize>, out: &Path) -> anyhow::Result<()> {
    let mut p = CasePreset::new(preset, seed);
    if let Some(n) = n_points {
        p.n_points = n;
    }
    let g = generate(&p)?;
    write_generated(&g, out)?;
    println!("wrote {} rows to {}", g.dataset.len(), out.join("data.csv").display());
    Ok(())
}

/// Model and data described by an experiment config.
pub fn build_model(cfg: &ExperimentConfig) -> anyhow::Result<(FblModel, Option<CasePreset>, Option<Truth>)> {
    let preset = cfg.preset.map(|id| {
        let mut p = CasePreset::new(id, cfg.seed());
        if let Some(n) = cfg.n_points {
            p.n_points = n;
        }
        if let Some(sd) = cfg.noise_sd {
            p.noise_sd = sd;
        }
        p
    });
    let generated = preset.as_ref().map(generate).transpose()?;
    let data = match &cfg.data {
        Some(path) => load_csv_with_response(path, cfg.response.as_deref())
            .with_context(|| format!("loading {}", path.display()))?,
        None => generated.as_ref().map(|g| g.dataset.clone()).expect("validated config"),
    };
    let fit = preset.as_ref().map(CasePreset::fit_spec);
    let rule_base = match &cfg.rule_base {
        Some(path) => RuleBase::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => fit.as_ref().map(|f| f.rule_base.clone()).expect("validated config"),
    };
    let mut sigma = cfg
        .sigma
        .or(fit.as_ref().map(|f| f.sigma))
        .unwrap_or(SigmaPrior::Fixed { value: 1.0 });
    if cfg.estimate_sigma == Some(true) && sigma.is_fixed() {
        sigma = ESTIMATED_SIGMA;
    }
    let likelihood = cfg
        .likelihood
        .or(fit.as_ref().map(|f| f.likelihood))
        .unwrap_or_else(LikelihoodSpec::gaussian);
    let select_rules = cfg
        .select_rules
        .or(fit.as_ref().map(|f| f.select_rules))
        .unwrap_or(false);
    let model = FblModel::new(rule_base, data, sigma, likelihood, select_rules)?;
    // The truth only applies when the preset's own data and model are used.
    let truth = match (&generated, &cfg.data, &cfg.rule_base) {
        (Some(g), None, None) if g.model().map(|m| m.spec()).ok() == Some(model.spec()) => Some(g.sidecar()),
        _ => None,
    };
    Ok((model, preset, truth))
}

pub fn cmd_fit(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let (model, preset, truth) = build_model(cfg)?;
    let sampler = cfg.sampler_config(SamplerConfig::default());
    let chains = run_chains(&sampler, &model, None)?;
    let summary = summarize(&chains, HDI_MASS, &GewekeConfig::default())?;

    fs::create_dir_all(out)?;
    chains.write_dir(out)?;
    write_csv(&model.data, out.join("data.csv"))?;
    write_json(
        &out.join("model.json"),
        &FitRecord {
            model: model.spec(),
            preset,
            response: model.data.response.clone(),
        },
    )?;
    write_json(&out.join("summary.json"), &summary)?;
    if let Some(t) = truth {
        write_json(&out.join("truth.json"), &t)?;
    }
    print_summary(&summary);
    Ok(())
}

fn print_summary(summary: &PosteriorSummary) {
    println!(
        "{:<20} {:>12} {:>12} {:>12} {:>12} {:>9} {:>7}",
        "parameter", "mean", "sd", "hdi_lo", "hdi_hi", "ess", "r_hat"
    );
    for p in &summary.params {
        let fmt_opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |v| format!("{v:.prec$}"));
        println!(
            "{:<20} {:>12.5} {:>12.5} {:>12.5} {:>12.5} {:>9} {:>7}",
            p.name,
            p.mean,
            p.sd,
            p.hdi_lo,
            p.hdi_hi,
            fmt_opt(p.ess, 0),
            fmt_opt(p.gelman_rubin, 3)
        );
    }
}

/// A fit directory loaded back into memory.
pub struct Fit {
    pub model: FblModel,
    pub chains: ChainSet,
}

pub fn load_fit(dir: &Path) -> anyhow::Result<Fit> {
    if !dir.is_dir() {
        bail!("fit directory not found: {}", dir.display());
    }
    let record: FitRecord = serde_json::from_str(
        &fs::read_to_string(dir.join("model.json")).with_context(|| format!("reading {}/model.json", dir.display()))?,
    )?;
    let data = load_csv_with_response(dir.join("data.csv"), Some(&record.response))?;
    let model = record.model.build(data)?;
    let chains = ChainSet::read_dir(dir).with_context(|| format!("reading chains in {}", dir.display()))?;
    if chains.param_names != fbl_core::sampler::Target::param_names(&model) {
        bail!("chains in {} do not match model.json", dir.display());
    }
    Ok(Fit { model, chains })
}

/// Input rows from a headed CSV file (every column is an input) and from
/// `--x` values.
pub fn read_inputs(file: Option<&Path>, xs: &[String]) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    if let Some(path) = file {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("reading {}", path.display()))?;
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("{} row {}: not a number", path.display(), i + 1))?;
            rows.push(row);
        }
    }
    for x in xs {
        let row = x
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("bad --x value `{x}`"))?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("no input rows given");
    }
    Ok(rows)
}

pub fn cmd_predict(fit_dir: &Path, inputs: Vec<Vec<f64>>, seed: u64, out: &Path) -> anyhow::Result<()> {
    let Fit { model, chains } = load_fit(fit_dir)?;
    let pred = posterior_predictive(&chains, &model, &inputs, seed)?;
    let labels = if model.is_classification() {
        Some(classify(&chains, &model, &inputs, 0.5)?)
    } else {
        None
    };

    fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("predictive_draws.csv"))?;
    w.write_record((0..inputs.len()).map(|i| format!("row_{i}")))?;
    for d in &pred.draws {
        w.write_record(d.iter().map(f64::to_string))?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("predictions.csv"))?;
    let mut header: Vec<String> = model.data.columns.clone();
    header.extend(["mean", "hdi_lo", "hdi_hi"].map(String::from));
    if labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (i, x) in inputs.iter().enumerate() {
        let column: Vec<f64> = pred.draws.iter().map(|d| d[i]).collect();
        let (lo, hi) = hdi(&column, HDI_MASS)?;
        let mut rec: Vec<String> = x.iter().map(f64::to_string).collect();
        rec.extend([pred.mean[i], lo, hi].map(|v| v.to_string()));
        if let Some(l) = &labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
        println!("{:?} -> mean {:.4}, {}% HDI [{:.4}, {:.4}]", x, pred.mean[i], HDI_MASS * 100.0, lo, hi);
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MseRow {
    pub model: String,
    pub n_terms: Option<usize>,
    pub mse: f64,
}

/// Default GLM sampler: 2,000 iterations with 500 burn-in.
pub fn glm_sampler_default() -> SamplerConfig {
    SamplerConfig::new(2000, 500, 3, 0)
}

pub fn cmd_compare_glm(
    data: &Dataset,
    kinds: &[GlmKind],
    sampler: &SamplerConfig,
    fbl: Option<&Path>,
    out: &Path,
) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for &kind in kinds {
        let glm = GlmModel::named(kind, data.clone())?;
        let chains = fit_glm(&glm, sampler)?;
        let pred = posterior_mean_function(&chains, &glm, &data.x)?;
        rows.push(MseRow {
            model: kind.to_string(),
            n_terms: Some(glm.n_terms()),
            mse: mse(&pred.mean, &data.y)?,
        });
    }
    if let Some(dir) = fbl {
        let Fit { model, chains } = load_fit(dir)?;
        let pred = posterior_mean_function(&chains, &model, &data.x)?;
        rows.push(MseRow {
            model: "fbl".into(),
            n_terms: None,
            mse: mse(&pred.mean, &data.y)?,
        });
    }
    fs::create_dir_all(out)?;
    write_json(&out.join("mse.json"), &rows)?;
    for r in &rows {
        println!("{:<6} {:>4} {:>14.6}", r.model, r.n_terms.map_or("-".into(), |n| n.to_string()), r.mse);
    }
    Ok(())
}

pub fn load_dataset(data: Option<&Path>, preset: Option<CaseId>, seed: u64) -> anyhow::Result<Dataset> {
    match (data, preset) {
        (Some(path), _) => load_csv(path).with_context(|| format!("loading {}", path.display())),
        (None, Some(id)) => Ok(generate(&CasePreset::new(id, seed))?.dataset),
        (None, None) => bail!("give --data or --preset"),
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

pub fn cmd_diagnose(fit_dir: &Path, out: &Path) -> anyhow::Result<()> {
    if !fit_dir.is_dir() {
        bail!("fit directory not found: {}", fit_dir.display());
    }
    let chains = ChainSet::read_dir(fit_dir).with_context(|| format!("reading chains in {}", fit_dir.display()))?;
    let geweke_config = GewekeConfig::default();
    let summary = summarize(&chains, HDI_MASS, &geweke_config)?;
    let nc = chains.n_chains();
    let chain_header = |first: &str| -> Vec<String> {
        std::iter::once(first.to_string())
            .chain((0..nc).map(|c| format!("chain_{c}")))
            .collect()
    };

    fs::create_dir_all(out)?;
    for (p, name) in chains.param_names.iter().enumerate() {
        let dir = out.join(file_stem(name));
        fs::create_dir_all(&dir)?;

        let traces: Vec<Vec<f64>> = (0..nc).map(|c| chains.trace(c, p)).collect();
        let mut w = csv::Writer::from_path(dir.join("trace.csv"))?;
        let mut header = chain_header("iteration");
        header.push("burn_in".into());
        w.write_record(&header)?;
        for i in 0..chains.n_iterations() {
            let mut rec = vec![i.to_string()];
            rec.extend(traces.iter().map(|t| t[i].to_string()));
            rec.push(((i < chains.burn_in) as u8).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("density.csv"))?;
        w.write_record(["value", "density"])?;
        for (v, d) in density_histogram(&chains.pooled(p), DENSITY_BINS) {
            w.write_record([v.to_string(), d.to_string()])?;
        }
        w.flush()?;

        // A constant chain has autocorrelation 1 at lag 0 and none defined after.
        let retained: Vec<Vec<f64>> = (0..nc).map(|c| chains.retained(c, p)).collect();
        let max_lag = MAX_LAG.min(retained[0].len().saturating_sub(1));
        let acfs: Vec<Option<Vec<f64>>> = retained.iter().map(|r| autocorrelation(r, max_lag).ok()).collect();
        let mut w = csv::Writer::from_path(dir.join("autocorrelation.csv"))?;
        w.write_record(chain_header("lag"))?;
        for lag in 0..=max_lag {
            let mut rec = vec![lag.to_string()];
            rec.extend(acfs.iter().map(|a| match a {
                Some(a) => a[lag].to_string(),
                None if lag == 0 => "1".into(),
                None => String::new(),
            }));
            w.write_record(&rec)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("geweke.csv"))?;
        w.write_record(["chain", "start", "z", "degenerate"])?;
        for (c, r) in retained.iter().enumerate() {
            let g = geweke(r, &geweke_config)?;
            for (s, z) in g.starts.iter().zip(&g.z) {
                w.write_record([c.to_string(), s.to_string(), z.to_string(), g.degenerate.to_string()])?;
            }
        }
        w.flush()?;
    }
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "wrote diagnostics for {} parameters to {}",
        chains.n_params(),
        out.display()
    );
    Ok(())
}

pub fn cmd_bench(params: &[usize], rules: &[usize], iterations: usize, seed: u64, out: &Path) -> anyhow::Result<()> {
    let rows = scaling_bench(params, rules, iterations, seed)?;
    fs::create_dir_all(out)?;
    write_json(&out.join("bench.json"), &rows)?;
    for r in &rows {
        println!(
            "{:?}: params {:>3} rules {:>3} -> {:.3} s",
            r.axis, r.n_params, r.n_rules, r.seconds
        );
    }
    Ok(())
}

pub fn cmd_bias_study(config: &BiasStudyConfig, out: &Path) -> anyhow::Result<()> {
    let study = bias_study(config)?;
    fs::create_dir_all(out)?;
    write_json(&out.join("bias_study.json"), &study)?;
    let t = &study.test;
    println!(
        "chi2 = {:.3} (df {}), p = {:.4}: {} at alpha = {}",
        t.statistic,
        t.df,
        t.p_value,
        if t.reject { "uniformity rejected" } else { "uniformity not rejected" },
        t.alpha
    );
    Ok(())
}

pub fn cmd_summarize(data: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let dataset = load_csv(data).with_context(|| format!("loading {}", data.display()))?;
    let stats: Vec<ColumnSummary> = summarize_dataset(&dataset)?;
    println!(
        "{:<16} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "column", "count", "mean", "std", "min", "25%", "50%", "75%", "max"
    );
    for s in &stats {
        println!(
            "{:<16} {:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            s.name, s.count, s.mean, s.std, s.min, s.q25, s.median, s.q75, s.max
        );
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("data_summary.json"), &stats)?;
    }
    Ok(())
}

/// Path of the failure marker in an output directory.
pub fn failed_marker(out: &Path) -> PathBuf {
    out.join(".failed")
}
