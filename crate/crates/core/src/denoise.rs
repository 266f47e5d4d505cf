//! Hard-threshold denoising in the wavelet domain.
//!
//! For white noise with `E|n_{ℓm}|² = σ²`, the noise in wavelet map `j` is
//! zero-mean Gaussian with the position-independent variance
//! `(σ^j)² = σ² Σ_ℓ (Ψ^j_ℓ0)²`. Wavelet samples below `factor · σ^j` in
//! magnitude are zeroed; the scaling map passes through untouched.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{BandLimit, SphereMap};
use crate::sht::HarmonicCoeffs;
use crate::tiling::WaveletKernels;
use crate::transform::{TransformConfig, WaveletDecomposition, WaveletTransform};

pub const DEFAULT_THRESHOLD_FACTOR: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    /// Map-space noise standard deviation for scales `J0..=J`.
    pub sigma_j: Vec<f64>,
    pub threshold_factor: f64,
}

impl NoiseModel {
    pub fn thresholds(&self) -> Vec<f64> {
        self.sigma_j
            .iter()
            .map(|s| self.threshold_factor * s)
            .collect()
    }
}

pub fn make_noise_model(sigma: f64, kernels: &WaveletKernels, factor: f64) -> Result<NoiseModel> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!(
            "noise sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if !(factor >= 0.0) {
        return Err(Error::param(format!(
            "threshold factor must be >= 0, got {factor}"
        )));
    }
    let sigma_j = kernels
        .psis()
        .iter()
        .map(|psi| sigma * psi.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    Ok(NoiseModel {
        sigma,
        sigma_j,
        threshold_factor: factor,
    })
}

/// Zeroes wavelet samples with `|value| < T^j`.
pub fn hard_threshold(
    decomp: &WaveletDecomposition,
    model: &NoiseModel,
) -> Result<WaveletDecomposition> {
    threshold_with(decomp, &model.thresholds())
}

/// Hard thresholding with explicit per-scale thresholds.
pub fn threshold_with(
    decomp: &WaveletDecomposition,
    thresholds: &[f64],
) -> Result<WaveletDecomposition> {
    if thresholds.len() != decomp.wavelets.len() {
        return Err(Error::Inconsistent(format!(
            "{} thresholds for {} wavelet scales",
            thresholds.len(),
            decomp.wavelets.len()
        )));
    }
    let wavelets = decomp
        .wavelets
        .iter()
        .zip(thresholds)
        .map(|(map, &t)| {
            map.map_values(|v| {
                if v.norm() < t {
                    Complex64::new(0.0, 0.0)
                } else {
                    v
                }
            })
        })
        .collect();
    Ok(WaveletDecomposition {
        config: decomp.config,
        scaling: decomp.scaling.clone(),
        wavelets,
    })
}

/// Analysis, hard threshold at `factor · σ^j`, synthesis.
pub fn denoise_pipeline(
    noisy: &SphereMap,
    sigma: f64,
    config: &TransformConfig,
    factor: f64,
) -> Result<SphereMap> {
    let t = WaveletTransform::new(*config)?;
    denoise_with(&t, noisy, sigma, factor)
}

/// [`denoise_pipeline`] with a prebuilt transform.
pub fn denoise_with(
    t: &WaveletTransform,
    noisy: &SphereMap,
    sigma: f64,
    factor: f64,
) -> Result<SphereMap> {
    let model = make_noise_model(sigma, t.kernels(), factor)?;
    let decomp = t.analysis(noisy)?;
    t.synthesis(&hard_threshold(&decomp, &model)?)
}

/// `10 log10(‖s‖² / ‖y − s‖²)` over harmonic coefficients. Identical inputs
/// give `+∞`.
pub fn snr_db(reference: &HarmonicCoeffs, estimate: &HarmonicCoeffs) -> Result<f64> {
    if reference.l() != estimate.l() {
        return Err(Error::BandLimitMismatch(format!(
            "reference has band-limit {}, estimate {}",
            reference.l(),
            estimate.l()
        )));
    }
    let signal = reference.energy();
    if signal == 0.0 {
        return Err(Error::param("reference signal has zero energy"));
    }
    let noise: f64 = reference
        .coeffs()
        .iter()
        .zip(estimate.coeffs())
        .map(|(s, y)| (y - s).norm_sqr())
        .sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

/// White noise coefficients with `E|n_{ℓm}|² = σ²`, conjugate-symmetric when
/// `real`.
pub fn white_noise<R: Rng + ?Sized>(
    l: BandLimit,
    sigma: f64,
    real: bool,
    rng: &mut R,
) -> HarmonicCoeffs {
    HarmonicCoeffs::gaussian(l, sigma, real, rng)
}
