//! `fbl`: generate synthetic data, fit fuzzy rule bases by MCMC, predict,
//! compare against GLMs and export convergence diagnostics.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! run fails. A failed run leaves only a `.failed` marker (holding the error
//! message) in its output directory.

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbl_core::datagen::{CaseId, CasePreset, DEFAULT_SEED};
use fbl_core::models::{BiasStudyConfig, GlmKind};
use fbl_core::sampler::SamplerConfig;

use commands::*;
use config::{ExperimentConfig, FlagOverrides};

#[derive(Parser)]
#[command(name = "fbl", version, about = "Bayesian learning of fuzzy rule bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct SamplerFlags {
    /// Number of chains.
    #[arg(long)]
    chains: Option<usize>,
    /// Iterations per chain, burn-in included.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a preset's synthetic dataset (data.csv) and true parameters (truth.json).
    Generate {
        #[arg(long)]
        preset: CaseId,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Override the preset's number of points.
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Sample the posterior of a rule base's parameters.
    Fit {
        /// JSON experiment config; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<CaseId>,
        /// Rule base JSON file.
        #[arg(long)]
        rule_base: Option<PathBuf>,
        /// Headed CSV file; the last column is the response.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        sampler: SamplerFlags,
        /// Sample an inclusion flag per rule.
        #[arg(long)]
        select_rules: bool,
        /// Treat the noise scale as unknown.
        #[arg(long)]
        estimate_sigma: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Posterior-predictive draws at new inputs from a fit directory.
    Predict {
        #[arg(long)]
        fit: PathBuf,
        /// Headed CSV of input rows.
        #[arg(long)]
        inputs: Option<PathBuf>,
        /// One input row as comma-separated values; may be repeated.
        #[arg(long = "x", allow_hyphen_values = true)]
        x: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Mean squared errors of Bayesian GLMs (and optionally a fuzzy fit).
    CompareGlm {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        preset: Option<CaseId>,
        /// Comma-separated GLM ids.
        #[arg(long, value_delimiter = ',', default_value = "glm1,glm2,glm3,glm4")]
        glm: Vec<GlmKind>,
        /// Fit directory whose posterior-mean predictions add an `fbl` row.
        #[arg(long)]
        fbl: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        sampler: SamplerFlags,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Trace, density, autocorrelation and Geweke tables per parameter.
    Diagnose {
        #[arg(long)]
        fit: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Sampler timings against parameter and rule counts.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "9,20,40,80")]
        params: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "3,5,7,9")]
        rules: Vec<usize>,
        #[arg(long, default_value_t = 5000)]
        iters: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Calibration check of posterior probabilities over replicated datasets.
    BiasStudy {
        #[arg(long, default_value_t = 30)]
        replicates: usize,
        #[arg(long)]
        preset: Option<CaseId>,
        /// Data seed of the first replicate.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        sampler: SamplerFlags,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Summary statistics of a dataset's columns.
    Summarize {
        #[arg(long)]
        data: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

fn usage<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn apply_sampler(flags: &SamplerFlags, mut s: SamplerConfig) -> SamplerConfig {
    if let Some(v) = flags.chains {
        s.n_chains = v;
    }
    if let Some(v) = flags.iters {
        s.n_iterations = v;
    }
    if let Some(v) = flags.burn_in {
        s.burn_in = v;
    }
    s
}

/// Runs `f`, then clears or writes the `.failed` marker in `out`.
fn guarded(out: &Path, f: impl FnOnce() -> anyhow::Result<()>) -> Result<(), Failure> {
    let marker = failed_marker(out);
    match f() {
        Ok(()) => {
            let _ = fs::remove_file(&marker);
            Ok(())
        }
        Err(e) => {
            if fs::create_dir_all(out).is_ok() {
                let _ = fs::write(&marker, format!("{e:#}\n"));
            }
            Err(Failure::Run(e))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            preset,
            seed,
            n_points,
            out,
        } => guarded(&out, || cmd_generate(preset, seed, n_points, &out)),
        Command::Fit {
            config,
            preset,
            rule_base,
            data,
            seed,
            sampler,
            select_rules,
            estimate_sigma,
            out,
        } => {
            let mut cfg = match &config {
                Some(path) => usage(ExperimentConfig::load(path))?,
                None => ExperimentConfig::default(),
            };
            FlagOverrides {
                preset,
                seed,
                chains: sampler.chains,
                iters: sampler.iters,
                burn_in: sampler.burn_in,
                select_rules,
                estimate_sigma,
                out,
                rule_base,
                data,
            }
            .apply(&mut cfg);
            usage(cfg.validate())?;
            usage(cfg.sampler_config(SamplerConfig::default()).validate().map_err(Into::into))?;
            let out = usage(cfg.out.clone().ok_or_else(|| anyhow::anyhow!("no output directory (-o/--out)")))?;
            guarded(&out, || cmd_fit(&cfg, &out))
        }
        Command::Predict {
            fit,
            inputs,
            x,
            seed,
            out,
        } => guarded(&out, || {
            let rows = read_inputs(inputs.as_deref(), &x)?;
            cmd_predict(&fit, rows, seed, &out)
        }),
        Command::CompareGlm {
            data,
            preset,
            glm,
            fbl,
            seed,
            sampler,
            out,
        } => {
            if data.is_none() && preset.is_none() {
                return Err(Failure::Usage(anyhow::anyhow!("give --data or --preset")));
            }
            let mut s = apply_sampler(&sampler, glm_sampler_default());
            s.seed = seed;
            usage(s.validate().map_err(Into::into))?;
            guarded(&out, || {
                let dataset = load_dataset(data.as_deref(), preset, seed)?;
                cmd_compare_glm(&dataset, &glm, &s, fbl.as_deref(), &out)
            })
        }
        Command::Diagnose { fit, out } => guarded(&out, || cmd_diagnose(&fit, &out)),
        Command::Bench {
            params,
            rules,
            iters,
            seed,
            out,
        } => guarded(&out, || cmd_bench(&params, &rules, iters, seed, &out)),
        Command::BiasStudy {
            replicates,
            preset,
            seed,
            sampler,
            out,
        } => {
            let mut config = BiasStudyConfig {
                n_replicates: replicates,
                ..BiasStudyConfig::default()
            };
            if let Some(id) = preset {
                // Noiseless presets get the default study's small noise so the
                // fixed-sigma likelihood stays calibrated.
                let noise = config.preset.noise_sd;
                config.preset = CasePreset::new(id, config.preset.seed);
                config.preset.noise_sd = config.preset.noise_sd.max(noise);
            }
            if let Some(s) = seed {
                config.preset.seed = s;
            }
            config.sampler = apply_sampler(&sampler, config.sampler);
            usage(config.sampler.validate().map_err(Into::into))?;
            guarded(&out, || cmd_bias_study(&config, &out))
        }
        Command::Summarize { data, out } => match &out {
            Some(dir) => guarded(dir, || cmd_summarize(&data, Some(dir))),
            None => cmd_summarize(&data, None).map_err(Failure::Run),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            eprintln!("run `fbl --help` for usage");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
