//! Forward and inverse axisymmetric wavelet transforms.
//!
//! In harmonic space the transform is a per-`ℓ` reweighting:
//! `W^{Ψj}_{ℓm} = sqrt(4π/(2ℓ+1)) f_{ℓm} Ψ^j_ℓ0`, likewise for `Φ`, and the
//! inverse sums the same weights back. In pixel space each coefficient set is
//! synthesised on its own grid: the full band-limit `L` for the
//! full-resolution algorithm, or the scale band-limit for the
//! multiresolution algorithm. A transform in either direction costs
//! `J − J0 + 3` spherical harmonic transforms.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{BandLimit, SamplingScheme, SphereMap};
use crate::sht::{lm_index, HarmonicCoeffs, ShtPlan};
use crate::tiling::{KernelFamily, TilingParams, WaveletKernels};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformConfig {
    pub band_limit: usize,
    pub lambda: f64,
    pub j_min: usize,
    pub family: KernelFamily,
    pub scheme: SamplingScheme,
    pub multires: bool,
}

impl TransformConfig {
    pub fn new(band_limit: usize, lambda: f64, j_min: usize) -> Self {
        TransformConfig {
            band_limit,
            lambda,
            j_min,
            family: KernelFamily::ScaleDiscretised,
            scheme: SamplingScheme::GL,
            multires: false,
        }
    }

    pub fn with_family(mut self, family: KernelFamily) -> Self {
        self.family = family;
        self
    }

    pub fn with_scheme(mut self, scheme: SamplingScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_multires(mut self, multires: bool) -> Self {
        self.multires = multires;
        self
    }

    pub fn tiling_params(&self) -> Result<TilingParams> {
        TilingParams::new(self.lambda, self.j_min, self.band_limit)
    }
}

/// Scaling and wavelet coefficients in harmonic space.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicWavelets {
    pub scaling: HarmonicCoeffs,
    /// Scales `J0..=J` in order.
    pub wavelets: Vec<HarmonicCoeffs>,
}

/// Scaling map plus one wavelet map per scale `J0..=J`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletDecomposition {
    pub config: TransformConfig,
    pub scaling: SphereMap,
    pub wavelets: Vec<SphereMap>,
}

impl WaveletDecomposition {
    /// Stored samples across the scaling and wavelet maps.
    pub fn total_samples(&self) -> usize {
        self.scaling.len() + self.wavelets.iter().map(SphereMap::len).sum::<usize>()
    }

    pub fn is_real(&self) -> bool {
        self.scaling.is_real() && self.wavelets.iter().all(SphereMap::is_real)
    }
}

/// `sqrt(4π/(2ℓ+1)) · kernel_ℓ · f_{ℓm}`, truncated to `out_l`.
fn weighted(flm: &HarmonicCoeffs, kernel: &[f64], out_l: usize) -> HarmonicCoeffs {
    let mut out = HarmonicCoeffs::zeros(BandLimit::new(out_l).expect("band-limit >= 1"));
    let data = out.coeffs_mut();
    for ell in 0..out_l.min(flm.l()) {
        let w = (4.0 * PI / (2 * ell + 1) as f64).sqrt() * kernel[ell];
        for m in -(ell as i64)..=ell as i64 {
            let i = lm_index(ell, m);
            data[i] = flm.coeffs()[i] * w;
        }
    }
    out
}

/// Harmonic-space analysis. With `truncate`, each set is cut to its scale
/// band-limit; otherwise every set keeps band-limit `L`.
pub fn wav_analysis_harmonic(
    flm: &HarmonicCoeffs,
    kernels: &WaveletKernels,
    truncate: bool,
) -> Result<HarmonicWavelets> {
    let l = kernels.l();
    if flm.l() != l {
        return Err(Error::BandLimitMismatch(format!(
            "coefficients have band-limit {}, kernels {l}",
            flm.l()
        )));
    }
    let scaling_l = if truncate {
        kernels.scaling_band_limit()
    } else {
        l
    };
    let scaling = weighted(flm, kernels.phi(), scaling_l);
    let wavelets = kernels
        .psis()
        .iter()
        .zip(kernels.scale_band_limits())
        .map(|(psi, &k)| weighted(flm, psi, if truncate { k } else { l }))
        .collect();
    Ok(HarmonicWavelets { scaling, wavelets })
}

/// Harmonic-space synthesis. Coefficient sets may be truncated to any
/// band-limit up to `L`; missing rows count as zero.
pub fn wav_synthesis_harmonic(
    coeffs: &HarmonicWavelets,
    kernels: &WaveletKernels,
) -> Result<HarmonicCoeffs> {
    let l = kernels.l();
    if coeffs.wavelets.len() != kernels.psis().len() {
        return Err(Error::Inconsistent(format!(
            "{} wavelet sets, kernels have {} scales",
            coeffs.wavelets.len(),
            kernels.psis().len()
        )));
    }
    let sets = std::iter::once((&coeffs.scaling, kernels.phi())).chain(
        coeffs
            .wavelets
            .iter()
            .zip(kernels.psis().iter().map(Vec::as_slice)),
    );
    let mut out = HarmonicCoeffs::zeros(BandLimit::new(l)?);
    for (set, kernel) in sets {
        if set.l() > l {
            return Err(Error::BandLimitMismatch(format!(
                "coefficient set band-limit {} exceeds {l}",
                set.l()
            )));
        }
        let data = out.coeffs_mut();
        for ell in 0..set.l() {
            let w = (4.0 * PI / (2 * ell + 1) as f64).sqrt() * kernel[ell];
            if w == 0.0 {
                continue;
            }
            for m in -(ell as i64)..=ell as i64 {
                let i = lm_index(ell, m);
                data[i] += set.coeffs()[i] * w;
            }
        }
    }
    Ok(out)
}

/// A configured transform: kernels plus cached harmonic-transform plans for
/// every band-limit it touches.
#[derive(Clone, Debug)]
pub struct WaveletTransform {
    config: TransformConfig,
    kernels: WaveletKernels,
    plans: BTreeMap<usize, ShtPlan>,
}

impl WaveletTransform {
    pub fn new(config: TransformConfig) -> Result<Self> {
        let kernels = WaveletKernels::new(config.tiling_params()?, config.family)?;
        Self::with_kernels(config, kernels)
    }

    /// Uses prebuilt kernels; they must match the config.
    pub fn with_kernels(config: TransformConfig, kernels: WaveletKernels) -> Result<Self> {
        let p = kernels.params();
        if p.l() != config.band_limit
            || p.lambda() != config.lambda
            || p.j_min() != config.j_min
            || kernels.family() != config.family
        {
            return Err(Error::Inconsistent(
                "kernels do not match transform configuration".into(),
            ));
        }
        let mut band_limits = vec![config.band_limit];
        if config.multires {
            band_limits.push(kernels.scaling_band_limit());
            band_limits.extend_from_slice(kernels.scale_band_limits());
        }
        let plans = band_limits
            .into_iter()
            .map(|l| Ok((l, ShtPlan::for_scheme(config.scheme, BandLimit::new(l)?))))
            .collect::<Result<_>>()?;
        Ok(WaveletTransform {
            config,
            kernels,
            plans,
        })
    }

    pub fn config(&self) -> &TransformConfig {
        &self.config
    }

    pub fn kernels(&self) -> &WaveletKernels {
        &self.kernels
    }

    /// Plan for the full band-limit `L`.
    pub fn plan(&self) -> &ShtPlan {
        &self.plans[&self.config.band_limit]
    }

    fn plan_for(&self, l: usize) -> Result<&ShtPlan> {
        self.plans.get(&l).ok_or_else(|| {
            Error::Inconsistent(format!("no grid with band-limit {l} in this transform"))
        })
    }

    pub fn analysis_harmonic(&self, flm: &HarmonicCoeffs) -> Result<HarmonicWavelets> {
        wav_analysis_harmonic(flm, &self.kernels, self.config.multires)
    }

    pub fn synthesis_harmonic(&self, coeffs: &HarmonicWavelets) -> Result<HarmonicCoeffs> {
        wav_synthesis_harmonic(coeffs, &self.kernels)
    }

    /// Scaling and wavelet maps of `map`, which must live on the transform's
    /// full-resolution grid and be band-limited at `L`.
    pub fn analysis(&self, map: &SphereMap) -> Result<WaveletDecomposition> {
        let plan = self.plan();
        if map.grid() != plan.grid() {
            return Err(Error::Inconsistent(format!(
                "input map is on a {} L={} grid, transform expects {} L={}",
                map.grid().scheme(),
                map.grid().l(),
                self.config.scheme,
                self.config.band_limit
            )));
        }
        let real = map.is_real();
        let flm = plan.analyze(map)?;
        let coeffs = self.analysis_harmonic(&flm)?;
        let scaling = self
            .plan_for(coeffs.scaling.l())?
            .synthesize(&coeffs.scaling, real)?;
        let wavelets = coeffs
            .wavelets
            .iter()
            .map(|w| self.plan_for(w.l())?.synthesize(w, real))
            .collect::<Result<_>>()?;
        Ok(WaveletDecomposition {
            config: self.config,
            scaling,
            wavelets,
        })
    }

    /// Harmonic coefficients of every map of `decomp`, each at its native
    /// band-limit.
    pub fn decomposition_coeffs(&self, decomp: &WaveletDecomposition) -> Result<HarmonicWavelets> {
        self.check_decomposition(decomp)?;
        let analyze = |m: &SphereMap| self.plan_for(m.grid().l())?.analyze(m);
        Ok(HarmonicWavelets {
            scaling: analyze(&decomp.scaling)?,
            wavelets: decomp.wavelets.iter().map(analyze).collect::<Result<_>>()?,
        })
    }

    pub fn synthesis(&self, decomp: &WaveletDecomposition) -> Result<SphereMap> {
        let coeffs = self.decomposition_coeffs(decomp)?;
        let flm = self.synthesis_harmonic(&coeffs)?;
        self.plan().synthesize(&flm, decomp.is_real())
    }

    fn check_decomposition(&self, decomp: &WaveletDecomposition) -> Result<()> {
        let expected = self.kernels.psis().len();
        if decomp.wavelets.len() != expected {
            return Err(Error::Inconsistent(format!(
                "decomposition has {} wavelet maps, expected {expected}",
                decomp.wavelets.len()
            )));
        }
        let l = self.config.band_limit;
        let scaling_l = if self.config.multires {
            self.kernels.scaling_band_limit()
        } else {
            l
        };
        let maps =
            std::iter::once((&decomp.scaling, scaling_l)).chain(decomp.wavelets.iter().zip(
                self.kernels.scale_band_limits().iter().map(|&k| {
                    if self.config.multires {
                        k
                    } else {
                        l
                    }
                }),
            ));
        for (i, (map, want)) in maps.enumerate() {
            let g = map.grid();
            if g.scheme() != self.config.scheme || g.l() != want {
                let what = if i == 0 {
                    "scaling map".to_string()
                } else {
                    format!("wavelet map for scale {}", self.kernels.j_min() + i - 1)
                };
                return Err(Error::Inconsistent(format!(
                    "{what} is on a {} L={} grid, expected {} L={want}",
                    g.scheme(),
                    g.l(),
                    self.config.scheme
                )));
            }
        }
        Ok(())
    }
}

/// One-shot pixel-space analysis.
pub fn wav_analysis_pixel(
    map: &SphereMap,
    config: &TransformConfig,
) -> Result<WaveletDecomposition> {
    WaveletTransform::new(*config)?.analysis(map)
}

/// One-shot pixel-space synthesis.
pub fn wav_synthesis_pixel(decomp: &WaveletDecomposition) -> Result<SphereMap> {
    WaveletTransform::new(decomp.config)?.synthesis(decomp)
}
