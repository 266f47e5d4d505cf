//! Tiling of the harmonic line.
//!
//! Every family is driven by a cutoff `k(t)` that equals 1 for small `t`,
//! decays monotonically and vanishes for large `t`. With levels
//! `K_j(ℓ) = k(ℓ/λ^j)` for `J0 ≤ j ≤ J` and `K_{J+1} = 1`, the kernels are
//!
//! ```text
//! Φ_ℓ0   = sqrt((2ℓ+1)/4π) sqrt(K_{J0}(ℓ))
//! Ψ^j_ℓ0 = sqrt((2ℓ+1)/4π) sqrt(K_{j+1}(ℓ) − K_j(ℓ))
//! ```
//!
//! so `(4π/(2ℓ+1)) (Φ² + Σ_j Ψ²)` telescopes to exactly one. For the
//! smooth families `K_{J+1}(ℓ) = k(ℓ/λ^{J+1}) = 1` holds on `ℓ < L` anyway,
//! and `Ψ^j` reduces to `κ_λ(ℓ/λ^j)`.
//!
//! The smooth cutoffs integrate a `C∞` bump supported on `[1/λ, 1]`:
//! `s_λ²(t)/t` for scale-discretised kernels and `s_λ(t)` for the
//! needlet-style kernels. The B-spline cutoff is `(3/2) B₃(2tλ^{J−1}/L)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::BandLimit;

/// Admissibility tolerance enforced when kernels are built.
pub const ADMISSIBILITY_TOL: f64 = 1e-10;

/// Negative radicands smaller than this are rounding noise.
const RADICAND_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    ScaleDiscretised,
    /// Needlet-style: same pipeline with the plain integrated bump.
    Needlet,
    BSpline,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [
        KernelFamily::ScaleDiscretised,
        KernelFamily::Needlet,
        KernelFamily::BSpline,
    ];
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::ScaleDiscretised => "sd",
            KernelFamily::Needlet => "needlet",
            KernelFamily::BSpline => "bspline",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sd" | "scale-discretised" | "scale_discretised" => Ok(KernelFamily::ScaleDiscretised),
            "needlet" | "needlets" => Ok(KernelFamily::Needlet),
            "bspline" | "b-spline" | "spline" => Ok(KernelFamily::BSpline),
            other => Err(Error::param(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// Smallest `J` with `λ^J ≥ L − 1`, i.e. `⌈log_λ(L−1)⌉`, with exact powers
/// resolved before taking the ceiling.
pub fn j_max(l: usize, lambda: f64) -> Result<usize> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::param(format!("lambda must be > 1, got {lambda}")));
    }
    if l < 2 {
        return Err(Error::InvalidBandLimit { got: l, min: 2 });
    }
    let target = (l - 1) as f64;
    if target <= 1.0 {
        return Ok(0);
    }
    let slack = target * (1.0 - 1e-12);
    let mut j = (target.ln() / lambda.ln()).ceil().max(0.0) as i32;
    while j > 0 && lambda.powi(j - 1) >= slack {
        j -= 1;
    }
    while lambda.powi(j) < slack {
        j += 1;
    }
    Ok(j as usize)
}

/// Compactly supported `C∞` bump `e^{−1/(1−t²)}` on `(−1, 1)`.
pub fn schwartz_s(t: f64) -> f64 {
    if t > -1.0 && t < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// The bump rescaled to `[1/λ, 1]`.
fn schwartz_lambda(t: f64, lambda: f64) -> f64 {
    schwartz_s(2.0 * lambda / (lambda - 1.0) * (t - 1.0 / lambda) - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BumpWeight {
    /// `s_λ²(t)/t`
    SquaredOverT,
    /// `s_λ(t)`
    Plain,
}

/// Normalised tail integral `∫_t^1 g / ∫_{1/λ}^1 g` of a bump density,
/// tabulated once per `λ` with composite Simpson.
#[derive(Clone, Debug)]
pub struct BumpCutoff {
    lambda: f64,
    weight: BumpWeight,
    lo: f64,
    h: f64,
    /// `tail[k] = ∫_{lo + 2kh}^1 g`.
    tail: Vec<f64>,
}

const SIMPSON_INTERVALS: usize = 4096;
const SIMPSON_PARTIAL: usize = 16;

impl BumpCutoff {
    fn new(lambda: f64, weight: BumpWeight) -> Result<Self> {
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(Error::param(format!("lambda must be > 1, got {lambda}")));
        }
        let lo = 1.0 / lambda;
        let n = SIMPSON_INTERVALS;
        let h = (1.0 - lo) / n as f64;
        let mut c = BumpCutoff {
            lambda,
            weight,
            lo,
            h,
            tail: vec![0.0; n / 2 + 1],
        };
        for k in (0..n / 2).rev() {
            let x0 = lo + (2 * k) as f64 * h;
            let panel =
                h / 3.0 * (c.density(x0) + 4.0 * c.density(x0 + h) + c.density(x0 + 2.0 * h));
            c.tail[k] = c.tail[k + 1] + panel;
        }
        Ok(c)
    }

    /// Cutoff of the scale-discretised kernels.
    pub fn scale_discretised(lambda: f64) -> Result<Self> {
        Self::new(lambda, BumpWeight::SquaredOverT)
    }

    /// Cutoff of the needlet-style kernels.
    pub fn needlet(lambda: f64) -> Result<Self> {
        Self::new(lambda, BumpWeight::Plain)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn density(&self, t: f64) -> f64 {
        let s = schwartz_lambda(t, self.lambda);
        match self.weight {
            BumpWeight::SquaredOverT => s * s / t,
            BumpWeight::Plain => s,
        }
    }

    pub fn k(&self, t: f64) -> f64 {
        if t <= self.lo {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        let panels = self.tail.len() - 1;
        let k = (((t - self.lo) / (2.0 * self.h)).ceil() as usize).min(panels);
        let node = (self.lo + (2 * k) as f64 * self.h).min(1.0);
        let partial = if node > t {
            let n = SIMPSON_PARTIAL;
            let dh = (node - t) / n as f64;
            let mut acc = self.density(t) + self.density(node);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * self.density(t + i as f64 * dh);
            }
            acc * dh / 3.0
        } else {
            0.0
        };
        ((partial + self.tail[k]) / self.tail[0]).clamp(0.0, 1.0)
    }
}

/// Cubic B-spline supported on `[−2, 2]`, written piecewise.
pub fn b3_spline(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// B-spline cutoff `(3/2) B₃(2 t λ^{J−1} / L)`.
#[derive(Clone, Copy, Debug)]
pub struct SplineCutoff {
    factor: f64,
}

impl SplineCutoff {
    pub fn new(lambda: f64, j_max: usize, l: usize) -> Self {
        SplineCutoff {
            factor: 2.0 * lambda.powi(j_max as i32 - 1) / l as f64,
        }
    }

    pub fn k(&self, t: f64) -> f64 {
        1.5 * b3_spline(self.factor * t)
    }
}

#[derive(Clone, Debug)]
enum Cutoff {
    Bump(BumpCutoff),
    Spline(SplineCutoff),
}

impl Cutoff {
    fn k(&self, t: f64) -> f64 {
        match self {
            Cutoff::Bump(c) => c.k(t),
            Cutoff::Spline(c) => c.k(t),
        }
    }
}

/// Scale-discretised `k_λ(t)`.
pub fn k_lambda(t: f64, lambda: f64) -> Result<f64> {
    Ok(BumpCutoff::scale_discretised(lambda)?.k(t))
}

/// Wavelet generating function `sqrt(k_λ(t/λ) − k_λ(t))`.
pub fn kappa_lambda(t: f64, lambda: f64) -> Result<f64> {
    let c = BumpCutoff::scale_discretised(lambda)?;
    Ok(clamped_sqrt(c.k(t / lambda) - c.k(t)).unwrap_or(0.0))
}

/// Scaling generating function `sqrt(k_λ(t))`.
pub fn eta_lambda(t: f64, lambda: f64) -> Result<f64> {
    Ok(k_lambda(t, lambda)?.sqrt())
}

fn clamped_sqrt(x: f64) -> Option<f64> {
    if x >= 0.0 {
        Some(x.sqrt())
    } else if x > -RADICAND_TOL {
        Some(0.0)
    } else {
        None
    }
}

/// `(λ, J0, L)` with `λ > 1`, `L ≥ 2` and `0 ≤ J0 < J`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TilingParams {
    lambda: f64,
    j_min: usize,
    band_limit: BandLimit,
    j_max: usize,
}

impl TilingParams {
    pub fn new(lambda: f64, j_min: usize, l: usize) -> Result<Self> {
        let j_max = j_max(l, lambda)?;
        if j_min >= j_max {
            return Err(Error::param(format!(
                "lowest scale must satisfy 0 <= J0 < J; got J0 = {j_min}, J = {j_max} \
                 (L = {l}, lambda = {lambda})"
            )));
        }
        Ok(TilingParams {
            lambda,
            j_min,
            band_limit: BandLimit::new(l)?,
            j_max,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn j_min(&self) -> usize {
        self.j_min
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn band_limit(&self) -> BandLimit {
        self.band_limit
    }

    pub fn l(&self) -> usize {
        self.band_limit.get()
    }

    pub fn scale_count(&self) -> usize {
        self.j_max - self.j_min + 1
    }
}

/// Axisymmetric kernel values `Φ_ℓ0` and `Ψ^j_ℓ0` tabulated on `ℓ < L`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletKernels {
    params: TilingParams,
    family: KernelFamily,
    phi: Vec<f64>,
    psi: Vec<Vec<f64>>,
    scale_band_limits: Vec<usize>,
    scaling_band_limit: usize,
}

pub fn build_kernels(params: TilingParams, family: KernelFamily) -> Result<WaveletKernels> {
    WaveletKernels::new(params, family)
}

impl WaveletKernels {
    pub fn new(params: TilingParams, family: KernelFamily) -> Result<Self> {
        let l = params.l();
        let lambda = params.lambda;
        let (j0, jmax) = (params.j_min, params.j_max);
        let cutoff = match family {
            KernelFamily::ScaleDiscretised => Cutoff::Bump(BumpCutoff::scale_discretised(lambda)?),
            KernelFamily::Needlet => Cutoff::Bump(BumpCutoff::needlet(lambda)?),
            KernelFamily::BSpline => Cutoff::Spline(SplineCutoff::new(lambda, jmax, l)),
        };

        // levels[i] = K_{j0+i}(ℓ), last level is identically one
        let levels: Vec<Vec<f64>> = (j0..=jmax + 1)
            .map(|j| {
                if j == jmax + 1 {
                    return vec![1.0; l];
                }
                let scale = lambda.powi(j as i32);
                (0..l).map(|ell| cutoff.k(ell as f64 / scale)).collect()
            })
            .collect();

        let norm = |ell: usize| ((2 * ell + 1) as f64 / (4.0 * PI)).sqrt();
        let phi: Vec<f64> = (0..l)
            .map(|ell| norm(ell) * levels[0][ell].sqrt())
            .collect();
        let mut psi = Vec::with_capacity(jmax - j0 + 1);
        for i in 0..=(jmax - j0) {
            let mut row = Vec::with_capacity(l);
            for ell in 0..l {
                let diff = levels[i + 1][ell] - levels[i][ell];
                let root = clamped_sqrt(diff).ok_or_else(|| {
                    Error::Inconsistent(format!(
                        "non-monotone tiling at l = {ell}, scale {}: {diff:e}",
                        j0 + i
                    ))
                })?;
                row.push(norm(ell) * root);
            }
            psi.push(row);
        }

        let support = |row: &[f64]| row.iter().rposition(|v| *v != 0.0).map_or(1, |i| i + 1);
        let scale_band_limits = (j0..=jmax)
            .zip(&psi)
            .map(|(j, row)| nominal_scale_band_limit(family, lambda, j, jmax, l).max(support(row)))
            .collect();
        let scaling_band_limit = match family {
            KernelFamily::BSpline => l,
            _ => {
                let nominal = (lambda.powi(j0 as i32 + 1).ceil() as usize).min(l);
                nominal.max(support(&phi))
            }
        };

        let kernels = WaveletKernels {
            params,
            family,
            phi,
            psi,
            scale_band_limits,
            scaling_band_limit,
        };
        let residual = kernels.admissibility_residual();
        if !(residual <= ADMISSIBILITY_TOL) {
            return Err(Error::Inconsistent(format!(
                "admissibility residual {residual:e} exceeds {ADMISSIBILITY_TOL:e}"
            )));
        }
        Ok(kernels)
    }

    pub fn params(&self) -> &TilingParams {
        &self.params
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn l(&self) -> usize {
        self.params.l()
    }

    pub fn j_min(&self) -> usize {
        self.params.j_min
    }

    pub fn j_max(&self) -> usize {
        self.params.j_max
    }

    /// `Φ_ℓ0` for `ℓ < L`.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `Ψ^j_ℓ0` for `ℓ < L`.
    pub fn psi(&self, j: usize) -> Result<&[f64]> {
        self.check_scale(j)?;
        Ok(&self.psi[j - self.params.j_min])
    }

    /// All wavelet kernels, lowest scale first.
    pub fn psis(&self) -> &[Vec<f64>] {
        &self.psi
    }

    pub fn scales(&self) -> std::ops::RangeInclusive<usize> {
        self.params.j_min..=self.params.j_max
    }

    fn check_scale(&self, j: usize) -> Result<()> {
        if j < self.params.j_min || j > self.params.j_max {
            return Err(Error::param(format!(
                "scale {j} outside [{}, {}]",
                self.params.j_min, self.params.j_max
            )));
        }
        Ok(())
    }

    /// Band-limit of the `j`-th wavelet coefficients.
    pub fn scale_band_limit(&self, j: usize) -> Result<usize> {
        self.check_scale(j)?;
        Ok(self.scale_band_limits[j - self.params.j_min])
    }

    pub fn scale_band_limits(&self) -> &[usize] {
        &self.scale_band_limits
    }

    /// Band-limit of the scaling coefficients.
    pub fn scaling_band_limit(&self) -> usize {
        self.scaling_band_limit
    }

    /// `max_ℓ |(4π/(2ℓ+1)) (Φ² + Σ_j Ψ²) − 1|`.
    pub fn admissibility_residual(&self) -> f64 {
        (0..self.l())
            .map(|ell| {
                let sum: f64 = self.phi[ell].powi(2)
                    + self.psi.iter().map(|row| row[ell].powi(2)).sum::<f64>();
                (4.0 * PI / (2 * ell + 1) as f64 * sum - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn nominal_scale_band_limit(
    family: KernelFamily,
    lambda: f64,
    j: usize,
    jmax: usize,
    l: usize,
) -> usize {
    let k = match family {
        KernelFamily::ScaleDiscretised | KernelFamily::Needlet => lambda.powi(j as i32 + 1),
        KernelFamily::BSpline => l as f64 * lambda.powi(j as i32 + 2 - jmax as i32),
    };
    if k >= l as f64 {
        l
    } else {
        k.ceil() as usize
    }
}

pub fn admissibility_residual(kernels: &WaveletKernels) -> f64 {
    kernels.admissibility_residual()
}

pub fn scale_band_limit(kernels: &WaveletKernels, j: usize) -> Result<usize> {
    kernels.scale_band_limit(j)
}
