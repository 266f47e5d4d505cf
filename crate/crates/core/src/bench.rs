//! Accuracy and timing measurements.
//!
//! A trial draws `f_{ℓm} ~ N(0, 1)` with real-signal symmetry, synthesises
//! the test map (untimed), then times wavelet analysis and synthesis. The
//! error is `ε = max |f_{ℓm} − f^rec_{ℓm}|` and the reported time is
//! `t_c = (t_analysis + t_synthesis) / 2`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BandLimit, SamplingScheme};
use crate::sht::HarmonicCoeffs;
use crate::tiling::KernelFamily;
use crate::transform::{TransformConfig, WaveletTransform};

/// Smallest band-limit used when fitting the timing slope.
pub const FIT_MIN_L: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trial {
    pub eps: f64,
    pub t_analysis_ms: f64,
    pub t_synthesis_ms: f64,
}

impl Trial {
    pub fn t_c_ms(&self) -> f64 {
        0.5 * (self.t_analysis_ms + self.t_synthesis_ms)
    }
}

/// One trial on a prebuilt transform.
pub fn run_trial_with(t: &WaveletTransform, seed: u64) -> Result<Trial> {
    let l = BandLimit::new(t.config().band_limit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flm = HarmonicCoeffs::gaussian(l, 1.0, true, &mut rng);
    let map = t.plan().synthesize(&flm, true)?;

    let start = Instant::now();
    let decomp = t.analysis(&map)?;
    let t_analysis = start.elapsed();
    let start = Instant::now();
    let rec = t.synthesis(&decomp)?;
    let t_synthesis = start.elapsed();

    let rec_flm = t.plan().analyze(&rec)?;
    Ok(Trial {
        eps: flm.max_abs_diff(&rec_flm),
        t_analysis_ms: t_analysis.as_secs_f64() * 1e3,
        t_synthesis_ms: t_synthesis.as_secs_f64() * 1e3,
    })
}

pub fn run_trial(config: &TransformConfig, seed: u64) -> Result<Trial> {
    run_trial_with(&WaveletTransform::new(*config)?, seed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchConfig {
    pub lambda: f64,
    pub j_min: usize,
    pub family: KernelFamily,
    pub scheme: SamplingScheme,
    pub reps: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            lambda: 2.0,
            j_min: 0,
            family: KernelFamily::ScaleDiscretised,
            scheme: SamplingScheme::GL,
            reps: 3,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    #[serde(rename = "L")]
    pub l: usize,
    pub family: String,
    pub eps_full: f64,
    pub eps_multi: f64,
    pub t_full_ms: f64,
    pub t_multi_ms: f64,
    pub t_full_median_ms: f64,
    pub t_multi_median_ms: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub lambda: f64,
    pub j_min: usize,
    pub family: String,
    pub scheme: String,
    pub records: Vec<BenchRecord>,
    /// Least-squares slope of `log t_c` against `log L` for `L ≥ 64`, when
    /// enough points exist.
    pub slope_full: Option<f64>,
    pub slope_multi: Option<f64>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `reps` timed trials after one discarded warm-up. Rep `r` uses seed
/// `seed + r`, so ε values are reproducible.
pub fn run_trials(t: &WaveletTransform, reps: usize, seed: u64) -> Result<Vec<Trial>> {
    if reps == 0 {
        return Err(Error::param("reps must be at least 1"));
    }
    run_trial_with(t, seed)?;
    (0..reps as u64)
        .map(|r| run_trial_with(t, seed + r))
        .collect()
}

pub fn bench_band_limit(l: usize, cfg: &BenchConfig) -> Result<BenchRecord> {
    let base = TransformConfig::new(l, cfg.lambda, cfg.j_min)
        .with_family(cfg.family)
        .with_scheme(cfg.scheme);
    let mut stats = [(0.0, 0.0, 0.0); 2];
    for (slot, multires) in stats.iter_mut().zip([false, true]) {
        let t = WaveletTransform::new(base.with_multires(multires))?;
        let trials = run_trials(&t, cfg.reps, cfg.seed)?;
        let eps: Vec<f64> = trials.iter().map(|t| t.eps).collect();
        let times: Vec<f64> = trials.iter().map(Trial::t_c_ms).collect();
        *slot = (mean(&eps), mean(&times), median(&times));
    }
    let [(eps_full, t_full, t_full_med), (eps_multi, t_multi, t_multi_med)] = stats;
    Ok(BenchRecord {
        l,
        family: cfg.family.to_string(),
        eps_full,
        eps_multi,
        t_full_ms: t_full,
        t_multi_ms: t_multi,
        t_full_median_ms: t_full_med,
        t_multi_median_ms: t_multi_med,
        reps: cfg.reps,
        seed: cfg.seed,
    })
}

/// Benchmarks each band-limit in turn.
pub fn run_bench(band_limits: &[usize], cfg: &BenchConfig) -> Result<BenchReport> {
    let records = band_limits
        .iter()
        .map(|&l| bench_band_limit(l, cfg))
        .collect::<Result<Vec<_>>>()?;
    let slope = |f: fn(&BenchRecord) -> f64| {
        let pts: Vec<(usize, f64)> = records.iter().map(|r| (r.l, f(r))).collect();
        fit_scaling(&pts).ok()
    };
    Ok(BenchReport {
        lambda: cfg.lambda,
        j_min: cfg.j_min,
        family: cfg.family.to_string(),
        scheme: cfg.scheme.to_string(),
        slope_full: slope(|r| r.t_full_median_ms),
        slope_multi: slope(|r| r.t_multi_median_ms),
        records,
    })
}

/// Band-limits `2^2, …, 2^max_exp`.
pub fn power_of_two_band_limits(max_exp: u32) -> Vec<usize> {
    (2..=max_exp).map(|i| 1usize << i).collect()
}

/// Least-squares slope of `log t` against `log L` over points with
/// `L ≥ 64`; at least three such points are required.
pub fn fit_scaling(points: &[(usize, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(l, _)| l >= FIT_MIN_L)
        .map(|&(l, t)| ((l as f64).ln(), t.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::param(format!(
            "timing fit needs at least 3 points with L >= {FIT_MIN_L}, got {}",
            pts.len()
        )));
    }
    if pts.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::param("timing fit needs positive, finite times"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("timing fit needs distinct band-limits"));
    }
    Ok(sxy / sxx)
}
