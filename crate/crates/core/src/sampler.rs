//! Metropolis-within-Gibbs sampling.
//!
//! Every sweep visits each coordinate once. Continuous coordinates get a
//! symmetric Gaussian random-walk proposal, binary coordinates get the
//! complement proposal, and both are accepted with probability
//! `min(1, exp(delta log density))`. Proposal scales may be tuned during
//! burn-in; they are frozen afterwards.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flattened sampler state: continuous coordinates then binary flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub continuous: Vec<f64>,
    pub binary: Vec<bool>,
}

impl State {
    pub fn new(continuous: Vec<f64>, binary: Vec<bool>) -> Self {
        Self { continuous, binary }
    }

    /// Row as written to a chain: binary flags as 0.0 / 1.0.
    pub fn to_row(&self) -> Vec<f64> {
        self.continuous
            .iter()
            .copied()
            .chain(self.binary.iter().map(|&b| if b { 1.0 } else { 0.0 }))
            .collect()
    }

    pub fn from_row(row: &[f64], n_continuous: usize) -> Self {
        Self {
            continuous: row[..n_continuous].to_vec(),
            binary: row[n_continuous..].iter().map(|&v| v > 0.5).collect(),
        }
    }
}

/// An unnormalized log-density the sampler can explore.
pub trait Target: Sync {
    fn n_continuous(&self) -> usize;

    fn n_binary(&self) -> usize {
        0
    }

    fn param_names(&self) -> Vec<String>;

    /// Width of the prior range of continuous coordinate `i`; proposal
    /// scales start at `step_fraction` times this value.
    fn proposal_range(&self, i: usize) -> f64;

    fn initial_state(&self, rng: &mut dyn RngCore) -> State;

    fn log_density(&self, state: &State) -> f64;

    /// The log density as `base + tempered`, where only `tempered` (the
    /// likelihood) is scaled down during an annealed burn-in. The default
    /// puts everything in `base`, which disables annealing.
    fn log_density_parts(&self, state: &State) -> Density {
        Density {
            base: self.log_density(state),
            tempered: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Density {
    pub base: f64,
    pub tempered: f64,
}

impl Density {
    pub fn total(&self) -> f64 {
        self.at(1.0)
    }

    /// `base + inv_temp * tempered`, or `-inf` when `base` is.
    pub fn at(&self, inv_temp: f64) -> f64 {
        if self.base == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.base + inv_temp * self.tempered
        }
    }
}

/// `target` with its tempered part scaled by `inv_temp`.
struct Tempered<'a, T: ?Sized> {
    target: &'a T,
    inv_temp: f64,
}

impl<T: Target + ?Sized> Target for Tempered<'_, T> {
    fn n_continuous(&self) -> usize {
        self.target.n_continuous()
    }

    fn n_binary(&self) -> usize {
        self.target.n_binary()
    }

    fn param_names(&self) -> Vec<String> {
        self.target.param_names()
    }

    fn proposal_range(&self, i: usize) -> f64 {
        self.target.proposal_range(i)
    }

    fn initial_state(&self, rng: &mut dyn RngCore) -> State {
        self.target.initial_state(rng)
    }

    fn log_density(&self, state: &State) -> f64 {
        if self.inv_temp == 1.0 {
            self.target.log_density(state)
        } else {
            self.target.log_density_parts(state).at(self.inv_temp)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    #[default]
    Fixed,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_iterations: usize,
    pub burn_in: usize,
    pub n_chains: usize,
    pub seed: u64,
    #[serde(default = "default_step_fraction")]
    pub step_fraction: f64,
    #[serde(default = "default_true")]
    pub adapt: bool,
    #[serde(default = "default_target_accept")]
    pub target_accept: f64,
    #[serde(default)]
    pub scan: ScanOrder,
    /// Leading fraction of burn-in over which the likelihood is annealed
    /// from a hot start down to temperature 1; 0 disables annealing.
    #[serde(default = "default_anneal_fraction")]
    pub anneal_fraction: f64,
    /// Independent annealed starts per chain; the best one is kept.
    #[serde(default = "default_explorers")]
    pub explorers: usize,
}

fn default_step_fraction() -> f64 {
    0.025
}

fn default_target_accept() -> f64 {
    0.35
}

fn default_anneal_fraction() -> f64 {
    0.5
}

fn default_explorers() -> usize {
    8
}

fn default_true() -> bool {
    true
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_iterations: 10_000,
            burn_in: 2_000,
            n_chains: 3,
            seed: 0,
            step_fraction: default_step_fraction(),
            adapt: true,
            target_accept: default_target_accept(),
            scan: ScanOrder::Fixed,
            anneal_fraction: default_anneal_fraction(),
            explorers: default_explorers(),
        }
    }
}

impl SamplerConfig {
    pub fn new(n_iterations: usize, burn_in: usize, n_chains: usize, seed: u64) -> Self {
        Self {
            n_iterations,
            burn_in,
            n_chains,
            seed,
            ..Self::default()
        }
    }

    /// Iterations at the start of burn-in with a tempered likelihood.
    pub fn anneal_len(&self) -> usize {
        (self.anneal_fraction * self.burn_in as f64) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_iterations {
            return Err(Error::InvalidConfig(format!(
                "burn_in ({}) must be below n_iterations ({})",
                self.burn_in, self.n_iterations
            )));
        }
        if self.n_chains == 0 {
            return Err(Error::InvalidConfig("n_chains must be at least 1".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "step_fraction {} outside (0, 1)",
                self.step_fraction
            )));
        }
        if self.explorers == 0 {
            return Err(Error::InvalidConfig("explorers must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.anneal_fraction) {
            return Err(Error::InvalidConfig(format!(
                "anneal_fraction {} outside [0, 1]",
                self.anneal_fraction
            )));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target_accept {} outside (0, 1)",
                self.target_accept
            )));
        }
        Ok(())
    }
}

/// Metropolis update of continuous coordinate `i` with proposal standard
/// deviation `scale`. `current` holds the log density of `state` and is
/// updated on acceptance. Returns whether the proposal was accepted.
pub fn draw_sample_continuous<T: Target + ?Sized>(
    i: usize,
    state: &mut State,
    current: &mut f64,
    target: &T,
    scale: f64,
    rng: &mut dyn RngCore,
) -> bool {
    let old = state.continuous[i];
    let step: f64 = rng.sample(StandardNormal);
    state.continuous[i] = old + scale * step;
    let proposed = target.log_density(state);
    if accept(proposed - *current, rng) {
        *current = proposed;
        true
    } else {
        state.continuous[i] = old;
        false
    }
}

/// Metropolis update of binary coordinate `k` by proposing its complement.
pub fn draw_sample_binary<T: Target + ?Sized>(
    k: usize,
    state: &mut State,
    current: &mut f64,
    target: &T,
    rng: &mut dyn RngCore,
) -> bool {
    state.binary[k] = !state.binary[k];
    let proposed = target.log_density(state);
    if accept(proposed - *current, rng) {
        *current = proposed;
        true
    } else {
        state.binary[k] = !state.binary[k];
        false
    }
}

#[inline]
fn accept(delta: f64, rng: &mut dyn RngCore) -> bool {
    if delta.is_nan() {
        return false;
    }
    delta >= 0.0 || rng.random::<f64>() < delta.exp()
}

/// One sweep over every coordinate in `order` (continuous indices first,
/// then `n_continuous + k` for binary flag `k`). Returns a per-coordinate
/// acceptance flag.
pub fn gibbs_sweep<T: Target + ?Sized>(
    state: &mut State,
    current: &mut f64,
    target: &T,
    scales: &[f64],
    order: &[usize],
    rng: &mut dyn RngCore,
) -> Vec<bool> {
    let nc = state.continuous.len();
    let mut accepted = vec![false; nc + state.binary.len()];
    for &j in order {
        accepted[j] = if j < nc {
            draw_sample_continuous(j, state, current, target, scales[j], rng)
        } else {
            draw_sample_binary(j - nc, state, current, target, rng)
        };
    }
    accepted
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    /// Row-major `[iteration x parameter]`.
    pub draws: Vec<f64>,
    pub log_density: Vec<f64>,
    /// Accepted proposals per parameter after burn-in.
    pub accept_counts: Vec<u64>,
    /// Proposals per parameter after burn-in.
    pub proposal_counts: Vec<u64>,
    /// Proposal scales in force after burn-in.
    pub scales: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSet {
    pub param_names: Vec<String>,
    pub n_continuous: usize,
    pub chains: Vec<Chain>,
    pub burn_in: usize,
    pub seed: u64,
    pub config: SamplerConfig,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChainManifest {
    pub param_names: Vec<String>,
    pub n_continuous: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub config: SamplerConfig,
    pub n_iterations: usize,
    pub chain_files: Vec<String>,
    /// `[chain][parameter]` post-burn-in acceptance rates.
    pub acceptance_rates: Vec<Vec<f64>>,
    pub accept_counts: Vec<Vec<u64>>,
    pub proposal_counts: Vec<Vec<u64>>,
    pub scales: Vec<Vec<f64>>,
}

impl ChainSet {
    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_iterations(&self) -> usize {
        self.chains
            .first()
            .map_or(0, |c| c.draws.len() / self.n_params().max(1))
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn row(&self, chain: usize, iteration: usize) -> &[f64] {
        let p = self.n_params();
        &self.chains[chain].draws[iteration * p..(iteration + 1) * p]
    }

    /// Full trace of one parameter in one chain, burn-in included.
    pub fn trace(&self, chain: usize, param: usize) -> Vec<f64> {
        let p = self.n_params();
        self.chains[chain]
            .draws
            .iter()
            .skip(param)
            .step_by(p)
            .copied()
            .collect()
    }

    /// Post-burn-in draws of one parameter in one chain.
    pub fn retained(&self, chain: usize, param: usize) -> Vec<f64> {
        let mut t = self.trace(chain, param);
        t.drain(..self.burn_in.min(t.len()));
        t
    }

    /// Post-burn-in draws of one parameter, all chains concatenated.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        (0..self.n_chains())
            .flat_map(|c| self.retained(c, param))
            .collect()
    }

    /// Post-burn-in rows of every chain, chain-major.
    pub fn retained_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_chains()).flat_map(move |c| {
            (self.burn_in..self.n_iterations()).map(move |i| self.row(c, i))
        })
    }

    pub fn acceptance_rates(&self) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| {
                c.accept_counts
                    .iter()
                    .zip(&c.proposal_counts)
                    .map(|(&a, &n)| if n == 0 { 0.0 } else { a as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }

    /// Post-burn-in mean of every parameter over all chains.
    pub fn posterior_mean(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_params()];
        let mut n = 0usize;
        for row in self.retained_rows() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
            n += 1;
        }
        sums.iter().map(|s| s / n.max(1) as f64).collect()
    }

    pub fn manifest(&self) -> ChainManifest {
        ChainManifest {
            param_names: self.param_names.clone(),
            n_continuous: self.n_continuous,
            burn_in: self.burn_in,
            seed: self.seed,
            config: self.config.clone(),
            n_iterations: self.n_iterations(),
            chain_files: (0..self.n_chains()).map(chain_file_name).collect(),
            acceptance_rates: self.acceptance_rates(),
            accept_counts: self.chains.iter().map(|c| c.accept_counts.clone()).collect(),
            proposal_counts: self.chains.iter().map(|c| c.proposal_counts.clone()).collect(),
            scales: self.chains.iter().map(|c| c.scales.clone()).collect(),
        }
    }

    /// Writes `chain_<k>.csv` (header = parameter names plus `log_density`)
    /// and `manifest.json` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let p = self.n_params();
        for (k, chain) in self.chains.iter().enumerate() {
            let mut w = csv::Writer::from_path(dir.join(chain_file_name(k)))?;
            let mut header = self.param_names.clone();
            header.push("log_density".into());
            w.write_record(&header)?;
            for (row, lp) in chain.draws.chunks(p).zip(&chain.log_density) {
                let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                record.push(lp.to_string());
                w.write_record(&record)?;
            }
            w.flush()?;
        }
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&self.manifest())?,
        )?;
        Ok(())
    }

    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: ChainManifest =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let p = manifest.param_names.len();
        let mut chains = Vec::with_capacity(manifest.chain_files.len());
        for (k, file) in manifest.chain_files.iter().enumerate() {
            let mut r = csv::Reader::from_path(dir.join(file))?;
            let mut draws = Vec::new();
            let mut log_density = Vec::new();
            for (i, record) in r.records().enumerate() {
                let record = record?;
                if record.len() != p + 1 {
                    return Err(Error::Parse {
                        row: i + 1,
                        column: format!("{file} (all)"),
                        message: format!("expected {} fields, found {}", p + 1, record.len()),
                    });
                }
                for (j, field) in record.iter().enumerate() {
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        row: i + 1,
                        column: manifest
                            .param_names
                            .get(j)
                            .cloned()
                            .unwrap_or_else(|| "log_density".into()),
                        message: format!("not a number: `{field}`"),
                    })?;
                    if j < p {
                        draws.push(v);
                    } else {
                        log_density.push(v);
                    }
                }
            }
            chains.push(Chain {
                draws,
                log_density,
                accept_counts: manifest.accept_counts.get(k).cloned().unwrap_or_default(),
                proposal_counts: manifest.proposal_counts.get(k).cloned().unwrap_or_default(),
                scales: manifest.scales.get(k).cloned().unwrap_or_default(),
            });
        }
        Ok(Self {
            param_names: manifest.param_names,
            n_continuous: manifest.n_continuous,
            chains,
            burn_in: manifest.burn_in,
            seed: manifest.seed,
            config: manifest.config,
        })
    }
}

fn chain_file_name(k: usize) -> String {
    format!("chain_{k}.csv")
}

/// Independent stream for chain `k` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

const INIT_ATTEMPTS: usize = 1000;

fn initial_state<T: Target + ?Sized>(
    target: &T,
    init: Option<&State>,
    rng: &mut ChaCha8Rng,
) -> Result<(State, Density)> {
    if let Some(s) = init {
        let parts = target.log_density_parts(s);
        if !parts.total().is_finite() {
            return Err(Error::Initialization(1));
        }
        return Ok((s.clone(), parts));
    }
    for _ in 0..INIT_ATTEMPTS {
        let s = target.initial_state(rng);
        let parts = target.log_density_parts(&s);
        if parts.total().is_finite() {
            return Ok((s, parts));
        }
    }
    Err(Error::Initialization(INIT_ATTEMPTS))
}

/// One Metropolis-within-Gibbs trajectory with its tuning state.
struct Walker {
    state: State,
    parts: Density,
    current: f64,
    log_t0: f64,
    log_scales: Vec<f64>,
    log_scale_sums: Vec<f64>,
    scales: Vec<f64>,
    draws: Vec<f64>,
    log_density: Vec<f64>,
}

impl Walker {
    fn new<T: Target + ?Sized>(config: &SamplerConfig, target: &T, state: State, parts: Density) -> Self {
        // Annealing starts hot enough that the initial likelihood contributes
        // about one nat, and cools geometrically to 1.
        let log_t0 = parts.tempered.abs().max(1.0).ln();
        let log_scales: Vec<f64> = (0..target.n_continuous())
            .map(|i| (config.step_fraction * target.proposal_range(i)).ln())
            .collect();
        let scales = log_scales.iter().map(|l| l.exp()).collect();
        let n = config.n_iterations;
        let mut w = Self {
            state,
            parts,
            current: 0.0,
            log_t0,
            log_scale_sums: vec![0.0; log_scales.len()],
            log_scales,
            scales,
            draws: Vec::with_capacity(n * (target.n_continuous() + target.n_binary())),
            log_density: Vec::with_capacity(n),
        };
        w.current = w.parts.at(w.inv_temp(0, config.anneal_len()));
        w
    }

    fn inv_temp(&self, t: usize, anneal_len: usize) -> f64 {
        if t >= anneal_len {
            1.0
        } else {
            (-self.log_t0 * (1.0 - t as f64 / anneal_len as f64)).exp()
        }
    }

    fn step<T: Target + ?Sized>(
        &mut self,
        t: usize,
        config: &SamplerConfig,
        target: &T,
        order: &mut [usize],
        rng: &mut ChaCha8Rng,
    ) -> Vec<bool> {
        if config.scan == ScanOrder::Random {
            order.shuffle(rng);
        }
        let anneal_len = config.anneal_len();
        let inv_temp = self.inv_temp(t, anneal_len);
        let accepted = if inv_temp < 1.0 {
            let tempered = Tempered { target, inv_temp };
            let acc = gibbs_sweep(&mut self.state, &mut self.current, &tempered, &self.scales, order, rng);
            self.parts = target.log_density_parts(&self.state);
            self.current = self.parts.at(self.inv_temp(t + 1, anneal_len));
            self.log_density.push(self.parts.total());
            acc
        } else {
            let acc = gibbs_sweep(&mut self.state, &mut self.current, target, &self.scales, order, rng);
            self.log_density.push(self.current);
            acc
        };
        if config.adapt && t < config.burn_in {
            let gain = (1.0 + t as f64 / 100.0).powf(-0.6);
            for (i, ls) in self.log_scales.iter_mut().enumerate() {
                let hit = if accepted[i] { 1.0 } else { 0.0 };
                let range = target.proposal_range(i);
                *ls = (*ls + gain * (hit - config.target_accept)).clamp((range * 1e-12).ln(), range.ln());
                self.scales[i] = ls.exp();
            }
        }
        if config.adapt {
            // The frozen scales are the average over the late part of
            // burn-in, which is steadier than the last iterate.
            let settle = (anneal_len + config.burn_in) / 2;
            if (settle..config.burn_in).contains(&t) {
                for (sum, ls) in self.log_scale_sums.iter_mut().zip(&self.log_scales) {
                    *sum += ls;
                }
                if t + 1 == config.burn_in {
                    let count = (config.burn_in - settle) as f64;
                    for (i, sum) in self.log_scale_sums.iter().enumerate() {
                        self.log_scales[i] = sum / count;
                        self.scales[i] = self.log_scales[i].exp();
                    }
                }
            }
        }
        self.draws.extend(self.state.to_row());
        accepted
    }

    fn total(&self) -> f64 {
        match self.log_density.last() {
            Some(&lp) => lp,
            None => self.parts.total(),
        }
    }
}

fn run_chain<T: Target + ?Sized>(
    config: &SamplerConfig,
    target: &T,
    init: Option<&State>,
    k: usize,
) -> Result<Chain> {
    let mut rng = chain_rng(config.seed, k);
    let np = target.n_continuous() + target.n_binary();
    let mut order: Vec<usize> = (0..np).collect();
    let anneal_len = config.anneal_len();

    // Several explorers anneal from independent starts; the chain continues
    // from the one that ends highest.
    let explorers = if init.is_none() && anneal_len > 0 { config.explorers.max(1) } else { 1 };
    let mut best: Option<Walker> = None;
    for _ in 0..explorers {
        let (state, parts) = initial_state(target, init, &mut rng)?;
        let mut w = Walker::new(config, target, state, parts);
        for t in 0..anneal_len {
            w.step(t, config, target, &mut order, &mut rng);
        }
        if best.as_ref().is_none_or(|b| w.total() > b.total()) {
            best = Some(w);
        }
    }
    let mut walker = best.expect("at least one explorer");

    let mut accept_counts = vec![0u64; np];
    let mut proposal_counts = vec![0u64; np];
    for t in anneal_len..config.n_iterations {
        let accepted = walker.step(t, config, target, &mut order, &mut rng);
        if t >= config.burn_in {
            for (j, &a) in accepted.iter().enumerate() {
                proposal_counts[j] += 1;
                accept_counts[j] += a as u64;
            }
        }
    }

    Ok(Chain {
        draws: walker.draws,
        log_density: walker.log_density,
        accept_counts,
        proposal_counts,
        scales: walker.scales,
    })
}

/// Runs `config.n_chains` independent chains in parallel. Chain `k` uses
/// stream `k` of a generator seeded with `config.seed`, so results do not
/// depend on the thread count.
pub fn run_chains<T: Target + ?Sized>(
    config: &SamplerConfig,
    target: &T,
    init: Option<&State>,
) -> Result<ChainSet> {
    config.validate()?;
    if let Some(s) = init {
        if s.continuous.len() != target.n_continuous() || s.binary.len() != target.n_binary() {
            return Err(Error::ParamCount {
                expected: target.n_continuous() + target.n_binary(),
                got: s.continuous.len() + s.binary.len(),
            });
        }
    }
    let chains = (0..config.n_chains)
        .into_par_iter()
        .map(|k| run_chain(config, target, init, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainSet {
        param_names: target.param_names(),
        n_continuous: target.n_continuous(),
        chains,
        burn_in: config.burn_in,
        seed: config.seed,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gaussian log-target in one coordinate, optionally truncated.
    struct Quadratic {
        mean: f64,
        sd: f64,
    }

    impl Target for Quadratic {
        fn n_continuous(&self) -> usize {
            1
        }
        fn param_names(&self) -> Vec<String> {
            vec!["x".into()]
        }
        fn proposal_range(&self, _: usize) -> f64 {
            20.0 * self.sd
        }
        fn initial_state(&self, rng: &mut dyn RngCore) -> State {
            State::new(vec![self.mean + rng.random_range(-1.0..1.0) * self.sd], vec![])
        }
        fn log_density(&self, s: &State) -> f64 {
            let z = (s.continuous[0] - self.mean) / self.sd;
            -0.5 * z * z
        }
    }

    /// Uniform over the box [0, 1]^2.
    struct FlatBox;

    impl Target for FlatBox {
        fn n_continuous(&self) -> usize {
            2
        }
        fn param_names(&self) -> Vec<String> {
            vec!["a".into(), "b".into()]
        }
        fn proposal_range(&self, _: usize) -> f64 {
            1.0
        }
        fn initial_state(&self, rng: &mut dyn RngCore) -> State {
            State::new(vec![rng.random(), rng.random()], vec![])
        }
        fn log_density(&self, s: &State) -> f64 {
            if s.continuous.iter().all(|v| (0.0..=1.0).contains(v)) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
    }

    /// One binary flag whose inclusion changes the log density by `delta`,
    /// plus a Bernoulli(p) prior.
    struct Flag {
        delta_when_included: f64,
        p: f64,
    }

    impl Target for Flag {
        fn n_continuous(&self) -> usize {
            0
        }
        fn n_binary(&self) -> usize {
            1
        }
        fn param_names(&self) -> Vec<String> {
            vec!["beta".into()]
        }
        fn proposal_range(&self, _: usize) -> f64 {
            1.0
        }
        fn initial_state(&self, _: &mut dyn RngCore) -> State {
            State::new(vec![], vec![true])
        }
        fn log_density(&self, s: &State) -> f64 {
            if s.binary[0] {
                self.delta_when_included + self.p.ln()
            } else {
                (1.0 - self.p).ln()
            }
        }
    }

    #[test]
    fn quadratic_target_moments() {
        let target = Quadratic { mean: 3.0, sd: 2.0 };
        let mut config = SamplerConfig::new(51_000, 1_000, 1, 17);
        config.step_fraction = 0.1;
        let set = run_chains(&config, &target, None).unwrap();
        let x = set.pooled(0);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean / 3.0 - 1.0).abs() < 0.02, "mean {mean}");
        assert!((var / 4.0 - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn flat_target_accepts_everything_inside() {
        let mut rng = chain_rng(1, 0);
        let mut state = State::new(vec![0.5, 0.5], vec![]);
        let mut lp = 0.0;
        let mut accepted = 0;
        for _ in 0..2000 {
            let acc = gibbs_sweep(&mut state, &mut lp, &FlatBox, &[1e-4, 1e-4], &[0, 1], &mut rng);
            accepted += acc.iter().filter(|&&a| a).count();
        }
        assert!(accepted as f64 / 4000.0 > 0.99);
    }

    #[test]
    fn rejected_proposals_leave_state_unchanged() {
        let mut rng = chain_rng(2, 0);
        let mut state = State::new(vec![0.5, 0.5], vec![]);
        let mut lp = 0.0;
        // huge scale: nearly every proposal leaves the box
        for _ in 0..50 {
            let before = state.clone();
            let acc = gibbs_sweep(&mut state, &mut lp, &FlatBox, &[1e9, 1e9], &[0, 1], &mut rng);
            if acc.iter().all(|a| !a) {
                assert_eq!(state, before);
            }
        }
    }

    #[test]
    fn outside_support_always_rejected_and_zero_step_accepted() {
        let mut rng = chain_rng(3, 0);
        let mut state = State::new(vec![0.999, 0.5], vec![]);
        let mut lp = 0.0;
        let mut accepted_far = 0;
        for _ in 0..500 {
            accepted_far +=
                draw_sample_continuous(0, &mut state, &mut lp, &FlatBox, 1e6, &mut rng) as usize;
        }
        // a step of 1e6 lands inside [0, 1] with negligible probability
        assert!(accepted_far <= 1);
        for _ in 0..500 {
            assert!(draw_sample_continuous(1, &mut state, &mut lp, &FlatBox, 0.0, &mut rng));
        }
    }

    #[test]
    fn prior_only_flag_mixes_evenly() {
        let target = Flag {
            delta_when_included: 0.0,
            p: 0.5,
        };
        let config = SamplerConfig::new(10_000, 1, 1, 5);
        let set = run_chains(&config, &target, None).unwrap();
        let freq = set.pooled(0).iter().sum::<f64>() / (config.n_iterations - 1) as f64;
        assert!((freq - 0.5).abs() < 0.02, "{freq}");
    }

    #[test]
    fn strongly_penalised_flag_is_excluded() {
        // excluding raises the log density by 20: stationary inclusion
        // probability is 1 / (1 + e^20)
        let target = Flag {
            delta_when_included: -20.0,
            p: 0.5,
        };
        let config = SamplerConfig::new(10_000, 100, 1, 6);
        let set = run_chains(&config, &target, None).unwrap();
        let freq = set.pooled(0).iter().sum::<f64>() / set.pooled(0).len() as f64;
        assert!(freq < 0.01, "{freq}");
    }

    #[test]
    fn shapes_and_determinism() {
        let target = Quadratic { mean: 0.0, sd: 1.0 };
        let config = SamplerConfig::new(10, 2, 2, 99);
        let a = run_chains(&config, &target, None).unwrap();
        assert_eq!(a.n_chains(), 2);
        assert_eq!(a.n_iterations(), 10);
        assert_eq!(a.chains[0].draws.len(), 10);
        let b = run_chains(&config, &target, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.chains[0].draws, a.chains[1].draws);
    }

    #[test]
    fn scales_frozen_after_burn_in() {
        let target = Quadratic { mean: 0.0, sd: 1.0 };
        let config = SamplerConfig::new(600, 300, 1, 7);
        let set = run_chains(&config, &target, None).unwrap();
        let longer = run_chains(&SamplerConfig::new(1200, 300, 1, 7), &target, None).unwrap();
        // identical up to the end of burn-in, same frozen scales afterwards
        assert_eq!(set.chains[0].scales, longer.chains[0].scales);
        assert_eq!(set.chains[0].draws[..600], longer.chains[0].draws[..600]);
    }

    #[test]
    fn no_adaptation_keeps_initial_scale() {
        let target = Quadratic { mean: 0.0, sd: 1.0 };
        let mut config = SamplerConfig::new(100, 10, 1, 7);
        config.adapt = false;
        let set = run_chains(&config, &target, None).unwrap();
        assert!((set.chains[0].scales[0] - 0.025 * 20.0).abs() < 1e-12);
    }

    #[test]
    fn random_scan_is_reproducible() {
        let mut config = SamplerConfig::new(200, 50, 2, 8);
        config.scan = ScanOrder::Random;
        let a = run_chains(&config, &FlatBox, None).unwrap();
        let b = run_chains(&config, &FlatBox, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_configs() {
        assert!(SamplerConfig::new(10, 10, 1, 0).validate().is_err());
        assert!(SamplerConfig::new(10, 1, 0, 0).validate().is_err());
        let mut c = SamplerConfig::new(10, 1, 1, 0);
        c.step_fraction = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn chain_set_round_trips_through_disk() {
        let target = Quadratic { mean: 1.0, sd: 0.3 };
        let set = run_chains(&SamplerConfig::new(50, 10, 2, 1), &target, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        set.write_dir(dir.path()).unwrap();
        let back = ChainSet::read_dir(dir.path()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn never_records_impossible_states() {
        let set = run_chains(&SamplerConfig::new(300, 50, 2, 4), &FlatBox, None).unwrap();
        for c in &set.chains {
            assert!(c.log_density.iter().all(|lp| lp.is_finite()));
        }
    }
}
