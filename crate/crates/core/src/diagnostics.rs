//! Posterior summaries and convergence diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::ChainSet;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Shortest interval over the sorted samples holding `ceil(mass * N)`
/// points. Ties go to the leftmost window.
pub fn hdi(samples: &[f64], mass: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::InvalidArgument(format!("HDI mass {mass} outside (0, 1)")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let k = ((mass * n as f64).ceil() as usize).clamp(1, n);
    let mut best = (sorted[0], sorted[k - 1]);
    for i in 1..=n - k {
        let (lo, hi) = (sorted[i], sorted[i + k - 1]);
        if hi - lo < best.1 - best.0 {
            best = (lo, hi);
        }
    }
    Ok(best)
}

/// Classical potential scale reduction factor (no chain splitting).
///
/// Two or more chains whose within-chain variance is zero give `1.0` when
/// they agree and `+inf` when they do not.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: chains.len(),
        });
    }
    let n = chains[0].len();
    if n < 10 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument(
            "Gelman-Rubin needs equal-length chains of at least 10 draws".into(),
        ));
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let within = chains.iter().map(|c| variance(c)).sum::<f64>() / chains.len() as f64;
    let between_over_n = variance(&means);
    if within <= 0.0 {
        return Ok(if between_over_n <= 0.0 { 1.0 } else { f64::INFINITY });
    }
    let nf = n as f64;
    let pooled = (nf - 1.0) / nf * within + between_over_n;
    Ok((pooled / within).sqrt())
}

/// Normalized autocorrelation `rho_0 ..= rho_max_lag` (biased estimator).
pub fn autocorrelation(chain: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= chain.len() {
        return Err(Error::InvalidArgument(format!(
            "max_lag {} must be below the chain length {}",
            max_lag,
            chain.len()
        )));
    }
    let m = mean(chain);
    let centered: Vec<f64> = chain.iter().map(|v| v - m).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if c0 <= 0.0 {
        return Err(Error::DegenerateChain);
    }
    Ok((0..=max_lag).map(|t| lag_product(&centered, t) / c0).collect())
}

fn lag_product(centered: &[f64], t: usize) -> f64 {
    centered[..centered.len() - t]
        .iter()
        .zip(&centered[t..])
        .map(|(a, b)| a * b)
        .sum()
}

/// Integrated autocorrelation time from Geyer's initial positive sequence:
/// lag pairs `rho_{2k} + rho_{2k+1}` are accumulated until the first
/// non-positive pair. Bounded below by `1 / log10(N)` so anti-correlated
/// chains report a finite ESS above `N`.
fn integrated_time(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    let m = mean(chain);
    let centered: Vec<f64> = chain.iter().map(|v| v - m).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if c0 <= 0.0 {
        return Err(Error::DegenerateChain);
    }
    let mut sum_pairs = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (lag_product(&centered, 2 * k) + lag_product(&centered, 2 * k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        sum_pairs += pair;
        k += 1;
    }
    let tau = -1.0 + 2.0 * sum_pairs;
    Ok(tau.max(1.0 / (n as f64).log10()))
}

/// Effective sample size `N / tau` with `tau = 1 + 2 sum(rho_t)`.
pub fn ess(chain: &[f64]) -> Result<f64> {
    if chain.len() < 10 {
        return Err(Error::InsufficientSamples {
            needed: 10,
            got: chain.len(),
        });
    }
    Ok(chain.len() as f64 / integrated_time(chain)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GewekeConfig {
    pub first: f64,
    pub last: f64,
    pub n_segments: usize,
    /// Scale segment variances by the integrated autocorrelation time of the
    /// final segment, so that z is standard normal for a stationary, autocorrelated
    /// chain.
    pub spectral: bool,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        Self {
            first: 0.1,
            last: 0.5,
            n_segments: 20,
            spectral: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geweke {
    /// First index of each early window.
    pub starts: Vec<usize>,
    pub z: Vec<f64>,
    /// Set when some window had zero variance and its z was reported as 0.
    pub degenerate: bool,
}

impl Geweke {
    pub fn fraction_within(&self, bound: f64) -> f64 {
        if self.z.is_empty() {
            return 1.0;
        }
        self.z.iter().filter(|z| z.abs() < bound).count() as f64 / self.z.len() as f64
    }
}

/// Variance of a segment mean, `var * tau / n`.
fn mean_variance(segment: &[f64], tau: f64) -> f64 {
    let v = variance(segment);
    if v <= 0.0 {
        return 0.0;
    }
    v * tau / segment.len() as f64
}

/// Geweke z-scores of successive early windows (each `first` of the chain
/// long) against the fixed final `last` fraction.
pub fn geweke(chain: &[f64], config: &GewekeConfig) -> Result<Geweke> {
    let GewekeConfig {
        first,
        last,
        n_segments,
        spectral,
    } = *config;
    if !(first > 0.0 && last > 0.0 && first + last <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Geweke windows overlap: first {first} + last {last} > 1"
        )));
    }
    if n_segments == 0 {
        return Err(Error::InvalidArgument("n_segments must be positive".into()));
    }
    let n = chain.len();
    let first_len = (first * n as f64).floor() as usize;
    let last_start = n - (last * n as f64).floor() as usize;
    if first_len < 2 || n - last_start < 2 {
        return Err(Error::InsufficientSamples { needed: 20, got: n });
    }
    let tail = &chain[last_start..];
    // One tau, from the reference tail, for every window: short windows
    // underestimate it, and a trend in the early part would inflate it.
    let tau = if spectral && tail.len() >= 10 {
        integrated_time(tail).unwrap_or(1.0)
    } else {
        1.0
    };
    let tail_mean = mean(tail);
    let tail_var = mean_variance(tail, tau);
    let max_start = last_start - first_len;
    let mut out = Geweke {
        starts: Vec::with_capacity(n_segments),
        z: Vec::with_capacity(n_segments),
        degenerate: false,
    };
    for s in 0..n_segments {
        let start = if n_segments == 1 {
            0
        } else {
            (s as f64 * max_start as f64 / (n_segments - 1) as f64).round() as usize
        };
        let window = &chain[start..start + first_len];
        let denom = (mean_variance(window, tau) + tail_var).sqrt();
        let z = if denom > 0.0 {
            (mean(window) - tail_mean) / denom
        } else {
            out.degenerate = true;
            0.0
        };
        out.starts.push(start);
        out.z.push(z);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub hdi_lo: f64,
    pub hdi_hi: f64,
    /// `(lo, hi)` per chain.
    pub chain_hdi: Vec<(f64, f64)>,
    pub chain_means: Vec<f64>,
    /// Sum of per-chain effective sample sizes; `None` for constant chains.
    pub ess: Option<f64>,
    /// `None` for a single chain.
    pub gelman_rubin: Option<f64>,
    /// Geweke z-scores per chain.
    pub geweke_z: Vec<Vec<f64>>,
    /// Fraction of draws equal to one, for binary parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion_frequency: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mass: f64,
    pub n_chains: usize,
    pub retained_per_chain: usize,
    pub params: Vec<ParamSummary>,
}

impl PosteriorSummary {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn max_gelman_rubin(&self) -> Option<f64> {
        self.params
            .iter()
            .filter_map(|p| p.gelman_rubin)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    /// Share of all Geweke z-scores with `|z| < bound`.
    pub fn geweke_fraction_within(&self, bound: f64) -> f64 {
        let all: Vec<f64> = self
            .params
            .iter()
            .flat_map(|p| p.geweke_z.iter().flatten().copied())
            .collect();
        if all.is_empty() {
            return 1.0;
        }
        all.iter().filter(|z| z.abs() < bound).count() as f64 / all.len() as f64
    }
}

/// Per-parameter statistics on the post-burn-in draws of every chain.
pub fn summarize(chains: &ChainSet, mass: f64, geweke_config: &GewekeConfig) -> Result<PosteriorSummary> {
    if chains.burn_in >= chains.n_iterations() {
        return Err(Error::InsufficientSamples {
            needed: chains.burn_in + 1,
            got: chains.n_iterations(),
        });
    }
    let mut params = Vec::with_capacity(chains.n_params());
    for (p, name) in chains.param_names.iter().enumerate() {
        let per_chain: Vec<Vec<f64>> = (0..chains.n_chains()).map(|c| chains.retained(c, p)).collect();
        let pooled: Vec<f64> = per_chain.iter().flatten().copied().collect();
        let m = mean(&pooled);
        let sd = if pooled.len() > 1 { variance(&pooled).sqrt() } else { 0.0 };
        let (hdi_lo, hdi_hi) = hdi(&pooled, mass)?;
        let chain_hdi = per_chain.iter().map(|c| hdi(c, mass)).collect::<Result<Vec<_>>>()?;
        let ess = per_chain
            .iter()
            .map(|c| ess(c))
            .collect::<Result<Vec<f64>>>()
            .ok()
            .map(|v| v.iter().sum());
        let gelman_rubin = if per_chain.len() >= 2 {
            Some(gelman_rubin(&per_chain)?)
        } else {
            None
        };
        let geweke_z = per_chain
            .iter()
            .map(|c| geweke(c, geweke_config).map(|g| g.z))
            .collect::<Result<Vec<_>>>()?;
        let inclusion_frequency = (p >= chains.n_continuous).then_some(m);
        params.push(ParamSummary {
            name: name.clone(),
            mean: m,
            sd,
            hdi_lo,
            hdi_hi,
            chain_hdi,
            chain_means: per_chain.iter().map(|c| mean(c)).collect(),
            ess,
            gelman_rubin,
            geweke_z,
            inclusion_frequency,
        });
    }
    Ok(PosteriorSummary {
        mass,
        n_chains: chains.n_chains(),
        retained_per_chain: chains.n_iterations() - chains.burn_in,
        params,
    })
}

/// Histogram of `samples` on `bins` equal-width bins: `(bin centre, density)`.
pub fn density_histogram(samples: &[f64], bins: usize) -> Vec<(f64, f64)> {
    if samples.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![(lo, 1.0)];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in samples {
        let b = (((s - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let total = samples.len() as f64 * width;
    counts
        .iter()
        .enumerate()
        .map(|(b, &c)| (lo + (b as f64 + 0.5) * width, c as f64 / total))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{Chain, SamplerConfig};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        let innovation_sd = (1.0 - phi * phi).sqrt();
        (0..n)
            .map(|_| {
                let e: f64 = rng.sample(StandardNormal);
                x = phi * x + innovation_sd * e;
                x
            })
            .collect()
    }

    #[test]
    fn hdi_of_constant_samples() {
        assert_eq!(hdi(&[2.5; 50], 0.95).unwrap(), (2.5, 2.5));
        assert!(hdi(&[1.0], 0.95).is_err());
        assert!(hdi(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn hdi_uniform_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..100_000).map(|_| rng.random()).collect();
        let (lo, hi) = hdi(&u, 0.95).unwrap();
        assert!((hi - lo - 0.95).abs() < 0.01);
    }

    #[test]
    fn hdi_standard_normal() {
        let (lo, hi) = hdi(&normals(100_000, 1), 0.95).unwrap();
        assert!((lo + 1.959964).abs() < 0.03 && (hi - 1.959964).abs() < 0.03, "{lo} {hi}");
    }

    #[test]
    fn hdi_prefers_leftmost_tie() {
        // windows [0, 1] and [1, 2] both hold 2 of 3 points with width 1
        assert_eq!(hdi(&[0.0, 1.0, 2.0], 0.5).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn gelman_rubin_iid_chains() {
        let chains: Vec<Vec<f64>> = (0..3).map(|s| normals(10_000, 10 + s)).collect();
        let r = gelman_rubin(&chains).unwrap();
        assert!((0.98..=1.02).contains(&r), "{r}");
    }

    #[test]
    fn gelman_rubin_separated_constants() {
        let r = gelman_rubin(&[vec![0.0; 20], vec![1.0; 20]]).unwrap();
        assert!(r > 1.1);
        assert_eq!(gelman_rubin(&[vec![3.0; 20], vec![3.0; 20]]).unwrap(), 1.0);
        assert!(gelman_rubin(&[vec![0.0; 20]]).is_err());
    }

    #[test]
    fn gelman_rubin_separated_normals() {
        let a = normals(2000, 3);
        let b: Vec<f64> = normals(2000, 4).iter().map(|v| v + 3.0).collect();
        assert!(gelman_rubin(&[a, b]).unwrap() > 1.1);
    }

    #[test]
    fn autocorrelation_basics() {
        let x = normals(5000, 5);
        let rho = autocorrelation(&x, 100).unwrap();
        assert_eq!(rho[0], 1.0);
        let band = 3.0 / (x.len() as f64).sqrt();
        let inside = rho[1..].iter().filter(|r| r.abs() < band).count();
        assert!(inside as f64 >= 0.95 * 100.0);
        let ar = autocorrelation(&ar1(20_000, 0.9, 6), 5).unwrap();
        assert!((ar[1] - 0.9).abs() < 0.05, "{}", ar[1]);
        assert!(matches!(autocorrelation(&[1.0; 10], 3), Err(Error::DegenerateChain)));
        assert!(autocorrelation(&x[..5], 5).is_err());
    }

    #[test]
    fn ess_iid_and_ar1() {
        let n = 20_000;
        let iid = ess(&normals(n, 7)).unwrap();
        assert!(iid > 0.8 * n as f64 && iid < 1.2 * n as f64, "{iid}");
        let analytic = n as f64 * 0.1 / 1.9;
        let e = ess(&ar1(n, 0.9, 8)).unwrap();
        assert!((e / analytic - 1.0).abs() < 0.25, "{e} vs {analytic}");
    }

    #[test]
    fn ess_alternating_exceeds_n() {
        let alt: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let e = ess(&alt).unwrap();
        assert!(e > 1000.0 && e.is_finite(), "{e}");
        assert!(matches!(ess(&[2.0; 20]), Err(Error::DegenerateChain)));
    }

    #[test]
    fn geweke_constant_chain_reports_zero() {
        let g = geweke(&[1.0; 200], &GewekeConfig::default()).unwrap();
        assert!(g.degenerate);
        assert!(g.z.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn geweke_iid_mostly_within() {
        let g = geweke(&normals(10_000, 9), &GewekeConfig::default()).unwrap();
        assert_eq!(g.z.len(), 20);
        assert!(g.fraction_within(1.96) >= 0.9);
        let naive = GewekeConfig {
            spectral: false,
            ..GewekeConfig::default()
        };
        assert!(geweke(&normals(10_000, 9), &naive).unwrap().fraction_within(1.96) >= 0.9);
    }

    #[test]
    fn geweke_detects_trend() {
        let n = 5000;
        let noise = normals(n, 10);
        let trended: Vec<f64> =
            noise.iter().enumerate().map(|(i, e)| e + 5.0 * i as f64 / n as f64).collect();
        let g = geweke(&trended, &GewekeConfig::default()).unwrap();
        let max = g.z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        assert!(max > 3.0, "{max}");
    }

    #[test]
    fn geweke_rejects_overlap() {
        let cfg = GewekeConfig {
            first: 0.6,
            ..GewekeConfig::default()
        };
        assert!(geweke(&normals(100, 1), &cfg).is_err());
    }

    fn chain_set(chains: Vec<Vec<f64>>, burn_in: usize) -> ChainSet {
        let n = chains[0].len();
        ChainSet {
            param_names: vec!["x".into()],
            n_continuous: 1,
            chains: chains
                .into_iter()
                .map(|draws| Chain {
                    log_density: vec![0.0; draws.len()],
                    draws,
                    accept_counts: vec![0],
                    proposal_counts: vec![0],
                    scales: vec![1.0],
                })
                .collect(),
            burn_in,
            seed: 0,
            config: SamplerConfig::new(n, burn_in, 1, 0),
        }
    }

    #[test]
    fn summarize_single_chain_has_no_rhat() {
        let s = summarize(&chain_set(vec![normals(500, 1)], 100), 0.95, &GewekeConfig::default())
            .unwrap();
        assert_eq!(s.params[0].gelman_rubin, None);
        assert_eq!(s.retained_per_chain, 400);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"gelman_rubin\":null"));
    }

    #[test]
    fn pooled_mean_is_weighted_chain_mean() {
        let set = chain_set(vec![normals(300, 1), normals(300, 2), normals(300, 3)], 50);
        let s = summarize(&set, 0.95, &GewekeConfig::default()).unwrap();
        let p = &s.params[0];
        let weighted = p.chain_means.iter().sum::<f64>() / 3.0;
        assert!((p.mean - weighted).abs() < 1e-12);
        assert!(p.gelman_rubin.is_some());
        assert_eq!(p.chain_hdi.len(), 3);
    }

    #[test]
    fn density_histogram_integrates_to_one() {
        let h = density_histogram(&normals(1000, 4), 20);
        let width = h[1].0 - h[0].0;
        let total: f64 = h.iter().map(|(_, d)| d * width).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn hdi_affine_equivariant(seed in 0u64..1000, a in 0.1..10.0f64, b in -50.0..50.0f64) {
            let x = normals(200, seed);
            let (lo, hi) = hdi(&x, 0.9).unwrap();
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let (lo2, hi2) = hdi(&y, 0.9).unwrap();
            prop_assert!((lo2 - (a * lo + b)).abs() < 1e-9 * (1.0 + b.abs() + a));
            prop_assert!((hi2 - (a * hi + b)).abs() < 1e-9 * (1.0 + b.abs() + a));
        }

        #[test]
        fn gelman_rubin_affine_invariant(seed in 0u64..1000, a in 0.1..10.0f64, b in -50.0..50.0f64) {
            let chains: Vec<Vec<f64>> = (0..3).map(|k| normals(50, seed * 3 + k)).collect();
            let mapped: Vec<Vec<f64>> =
                chains.iter().map(|c| c.iter().map(|v| a * v + b).collect()).collect();
            let r1 = gelman_rubin(&chains).unwrap();
            let r2 = gelman_rubin(&mapped).unwrap();
            prop_assert!((r1 - r2).abs() < 1e-9);
        }

        #[test]
        fn ess_positive_and_finite(seed in 0u64..1000, phi in -0.9..0.95f64) {
            let e = ess(&ar1(500, phi, seed)).unwrap();
            prop_assert!(e > 0.0 && e.is_finite());
        }
    }
}
