//! Exact spherical harmonic transforms for band-limited signals.
//!
//! Synthesis evaluates `f(θ_t, φ_p) = Σ_m F_m(θ_t) e^{imφ_p}` with
//! `F_m(θ) = Σ_ℓ f_{ℓm} λ_{ℓm}(θ)`; the azimuthal sum is a length-`(2L−1)`
//! inverse DFT per ring. Analysis runs the same steps backwards. On GL grids
//! the colatitude integral is the Gauss-Legendre rule; on MW grids each
//! azimuthal mode is extended to `θ ∈ [0, 2π)`, expanded as a trigonometric
//! polynomial and integrated against `sin θ` in closed form, which is exact
//! for band-limited input.
//!
//! Summation order is fixed: rings in increasing `θ`, and within a column in
//! increasing `ℓ`. Results are bit-reproducible for identical inputs.

pub mod legendre;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{BandLimit, GridSpec, SamplingScheme, SphereMap};
use legendre::{column_offset, triangle_len, LegendreCoeffs, LANES};

pub use legendre::{assoc_legendre_ring, LegendreRing};

/// Harmonic coefficients `f_{ℓm}`, `0 ≤ ℓ < L`, `|m| ≤ ℓ`, stored at
/// `ℓ² + ℓ + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicCoeffs {
    l: BandLimit,
    coeffs: Vec<Complex64>,
}

#[inline]
pub fn lm_index(ell: usize, m: i64) -> usize {
    ((ell * ell + ell) as i64 + m) as usize
}

impl HarmonicCoeffs {
    pub fn zeros(l: BandLimit) -> Self {
        let n = l.get() * l.get();
        HarmonicCoeffs {
            l,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_vec(l: BandLimit, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != l.get() * l.get() {
            return Err(Error::Inconsistent(format!(
                "{} coefficients for band-limit {l}, expected {}",
                coeffs.len(),
                l.get() * l.get()
            )));
        }
        Ok(HarmonicCoeffs { l, coeffs })
    }

    pub fn band_limit(&self) -> BandLimit {
        self.l
    }

    pub fn l(&self) -> usize {
        self.l.get()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn get(&self, ell: usize, m: i64) -> Complex64 {
        assert!(ell < self.l() && m.unsigned_abs() as usize <= ell);
        self.coeffs[lm_index(ell, m)]
    }

    pub fn set(&mut self, ell: usize, m: i64, v: Complex64) {
        assert!(ell < self.l() && m.unsigned_abs() as usize <= ell);
        self.coeffs[lm_index(ell, m)] = v;
    }

    /// Keeps rows `ℓ < l`.
    pub fn truncated(&self, l: BandLimit) -> Self {
        let n = l.get().min(self.l()).pow(2);
        let mut out = HarmonicCoeffs::zeros(l);
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    /// Re-indexes into band-limit `l ≥ self.l()`; missing rows are zero.
    pub fn zero_padded(&self, l: BandLimit) -> Self {
        self.truncated(l)
    }

    pub fn max_abs_diff(&self, other: &HarmonicCoeffs) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(zero);
                let b = other.coeffs.get(i).copied().unwrap_or(zero);
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `Σ |f_{ℓm}|²`, equal to `∫ |f|² dΩ`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Checks `f_{ℓ,−m} = (−1)^m f*_{ℓm}` within `tol`.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        (0..self.l()).all(|ell| {
            (0..=ell as i64).all(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                (self.get(ell, -m) - self.get(ell, m).conj() * sign).norm() <= tol
            })
        })
    }

    /// Independent Gaussian coefficients with `E|f_{ℓm}|² = σ²`. With
    /// `real`, conjugate symmetry holds exactly, `m = 0` entries are real
    /// `N(0, σ²)` and `m > 0` entries have `N(0, σ²/2)` parts.
    pub fn gaussian<R: Rng + ?Sized>(l: BandLimit, sigma: f64, real: bool, rng: &mut R) -> Self {
        let mut out = HarmonicCoeffs::zeros(l);
        let half = sigma / 2f64.sqrt();
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        for ell in 0..l.get() {
            if real {
                out.set(ell, 0, Complex64::new(sigma * normal(), 0.0));
                for m in 1..=ell as i64 {
                    let v = Complex64::new(half * normal(), half * normal());
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    out.set(ell, m, v);
                    out.set(ell, -m, v.conj() * sign);
                }
            } else {
                for m in -(ell as i64)..=ell as i64 {
                    out.set(ell, m, Complex64::new(half * normal(), half * normal()));
                }
            }
        }
        out
    }
}

#[derive(Clone)]
struct MwQuadrature {
    n: usize,
    conv_len: usize,
    fft_n: Arc<dyn Fft<f64>>,
    conv_fwd: Arc<dyn Fft<f64>>,
    conv_inv: Arc<dyn Fft<f64>>,
    /// DFT of the `∫_0^π e^{ikθ} sin θ dθ` sequence, circular length `conv_len`.
    weights_hat: Vec<Complex64>,
    /// `e^{−ipπ/N}` for `p = 0..N`, indexing signed `p` modulo `N`.
    half_shift: Vec<Complex64>,
}

impl MwQuadrature {
    fn new(l: usize, planner: &mut FftPlanner<f64>) -> Self {
        let n = 2 * l - 1;
        let conv_len = (4 * l - 3).next_power_of_two();
        let conv_fwd = planner.plan_fft_forward(conv_len);
        let conv_inv = planner.plan_fft_inverse(conv_len);
        let mut w = vec![Complex64::new(0.0, 0.0); conv_len];
        let kmax = 2 * l as i64 - 2;
        for k in -kmax..=kmax {
            w[k.rem_euclid(conv_len as i64) as usize] = sin_moment(k);
        }
        conv_fwd.process(&mut w);
        let half_shift = (0..n)
            .map(|i| {
                let p = signed_freq(i, n);
                Complex64::from_polar(1.0, -(p as f64) * PI / n as f64)
            })
            .collect();
        MwQuadrature {
            n,
            conv_len,
            fft_n: planner.plan_fft_forward(n),
            conv_fwd,
            conv_inv,
            weights_hat: w,
            half_shift,
        }
    }

    /// Replaces the azimuthal mode `m` (column of `modes`, ring-major with
    /// stride `n`) by the effective per-ring amplitudes whose plain ring sum
    /// against `λ_{ℓm}` gives the exact `sin θ` integral.
    fn transform_mode(&self, modes: &mut [Complex64], m: i64, scratch: &mut MwScratch) {
        let n = self.n;
        let l = n.div_ceil(2);
        let col = m.rem_euclid(n as i64) as usize;
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        let ext = &mut scratch.ext;
        for t in 0..n {
            ext[t] = if t < l {
                modes[t * n + col]
            } else {
                modes[(n - 1 - t) * n + col] * parity
            };
        }
        self.fft_n.process(ext);
        let inv_n = 1.0 / n as f64;
        let conv = &mut scratch.conv;
        conv.fill(Complex64::new(0.0, 0.0));
        for (i, x) in ext.iter().enumerate() {
            let p = signed_freq(i, n);
            let ghat = x * self.half_shift[i] * inv_n;
            conv[(-p).rem_euclid(self.conv_len as i64) as usize] = ghat;
        }
        self.conv_fwd.process(conv);
        for (c, w) in conv.iter_mut().zip(&self.weights_hat) {
            *c *= w;
        }
        self.conv_inv.process(conv);
        let inv_m = 1.0 / self.conv_len as f64;
        for (i, e) in ext.iter_mut().enumerate() {
            let q = signed_freq(i, n);
            let v = conv[q.rem_euclid(self.conv_len as i64) as usize] * inv_m;
            *e = v * self.half_shift[i];
        }
        self.fft_n.process(ext);
        for t in 0..l {
            let u = if t + 1 < l {
                ext[t] + ext[n - 1 - t] * parity
            } else {
                ext[t]
            };
            modes[t * n + col] = u * inv_n;
        }
    }
}

struct MwScratch {
    ext: Vec<Complex64>,
    conv: Vec<Complex64>,
}

/// `∫_0^π e^{ikθ} sin θ dθ`.
fn sin_moment(k: i64) -> Complex64 {
    match k {
        1 => Complex64::new(0.0, PI / 2.0),
        -1 => Complex64::new(0.0, -PI / 2.0),
        k if k % 2 == 0 => Complex64::new(2.0 / (1.0 - (k * k) as f64), 0.0),
        _ => Complex64::new(0.0, 0.0),
    }
}

/// Signed frequency of DFT bin `i` for odd length `n`.
#[inline]
fn signed_freq(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Reusable transform plan for one grid: FFT plans and Legendre recursion
/// coefficients. Immutable and shareable across threads.
#[derive(Clone)]
pub struct ShtPlan {
    grid: GridSpec,
    legendre: LegendreCoeffs,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    mw: Option<MwQuadrature>,
}

impl std::fmt::Debug for ShtPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShtPlan")
            .field("scheme", &self.grid.scheme())
            .field("l", &self.grid.l())
            .finish()
    }
}

impl ShtPlan {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let n_phi = grid.n_phi();
        let mw = match grid.scheme() {
            SamplingScheme::MW => Some(MwQuadrature::new(grid.l(), &mut planner)),
            SamplingScheme::GL => None,
        };
        ShtPlan {
            legendre: LegendreCoeffs::new(grid.l()),
            fft_fwd: planner.plan_fft_forward(n_phi),
            fft_inv: planner.plan_fft_inverse(n_phi),
            mw,
            grid,
        }
    }

    pub fn for_scheme(scheme: SamplingScheme, l: BandLimit) -> Self {
        Self::new(GridSpec::new(scheme, l))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Colatitudes for rings `t0..t0 + LANES`, clipped to the grid; spare
    /// lanes repeat the last ring. Also returns the number of live lanes.
    fn batch(&self, t0: usize) -> (usize, [f64; LANES], [f64; LANES]) {
        let lanes = LANES.min(self.grid.n_theta() - t0);
        let ring = |r: usize| t0 + r.min(lanes - 1);
        let cos = std::array::from_fn(|r| self.grid.cos_thetas()[ring(r)]);
        let sin = std::array::from_fn(|r| self.grid.sin_thetas()[ring(r)]);
        (lanes, cos, sin)
    }

    /// Evaluates `flm` on the plan's grid. With `real`, `flm` is assumed
    /// conjugate symmetric: only `m ≥ 0` is read and the output is real.
    pub fn synthesize(&self, flm: &HarmonicCoeffs, real: bool) -> Result<SphereMap> {
        let l = self.grid.l();
        let lc = flm.l();
        if lc > l {
            return Err(Error::BandLimitMismatch(format!(
                "coefficients band-limit {lc} exceeds grid band-limit {l}"
            )));
        }
        let n_phi = self.grid.n_phi();
        let zero = Complex64::new(0.0, 0.0);

        // m-major copies of f_{ℓm} and f_{ℓ,−m}
        let mut pos = vec![zero; triangle_len(lc)];
        let mut neg = if real {
            Vec::new()
        } else {
            vec![zero; triangle_len(lc)]
        };
        for m in 0..lc {
            let off = column_offset(lc, m);
            for ell in m..lc {
                pos[off + ell - m] = flm.coeffs[lm_index(ell, m as i64)];
                if !real {
                    neg[off + ell - m] = flm.coeffs[lm_index(ell, -(m as i64))];
                }
            }
        }

        let mut values = vec![zero; self.grid.len()];
        let mut scratch = vec![zero; self.fft_inv.get_inplace_scratch_len()];
        for t0 in (0..self.grid.n_theta()).step_by(LANES) {
            let (lanes, cos, sin) = self.batch(t0);
            let rings = &mut values[t0 * n_phi..(t0 + lanes) * n_phi];
            self.legendre.for_each_column(cos, sin, |m, col| {
                if m >= lc {
                    return;
                }
                let off = column_offset(lc, m);
                let len = lc - m;
                let col = &col[..len * LANES];
                let fp = dot_lanes(&pos[off..off + len], col);
                let fneg = if !real && m > 0 {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    dot_lanes(&neg[off..off + len], col).map(|v| v * sign)
                } else {
                    [zero; LANES]
                };
                for (r, ring) in rings.chunks_exact_mut(n_phi).enumerate() {
                    ring[m] = fp[r];
                    if m > 0 {
                        ring[n_phi - m] = if real { fp[r].conj() } else { fneg[r] };
                    }
                }
            });
            for ring in rings.chunks_exact_mut(n_phi) {
                self.fft_inv.process_with_scratch(ring, &mut scratch);
                if real {
                    for v in ring.iter_mut() {
                        v.im = 0.0;
                    }
                }
            }
        }
        if let Some(t) = self.grid.pole_ring() {
            let ring = &mut values[t * n_phi..(t + 1) * n_phi];
            let v = ring[0];
            ring.fill(v);
        }
        Ok(SphereMap::from_parts(self.grid.clone(), values, real))
    }

    /// Harmonic coefficients of `map` at the grid band-limit. The real path
    /// is taken when the map is flagged real.
    pub fn analyze(&self, map: &SphereMap) -> Result<HarmonicCoeffs> {
        if map.grid() != &self.grid {
            return Err(Error::Inconsistent(
                "map grid differs from transform plan grid".into(),
            ));
        }
        let real = map.is_real();
        let l = self.grid.l();
        let n_theta = self.grid.n_theta();
        let n_phi = self.grid.n_phi();
        let zero = Complex64::new(0.0, 0.0);
        let dphi = 2.0 * PI / n_phi as f64;

        let mut modes = map.values().to_vec();
        if let Some(t) = self.grid.pole_ring() {
            let v = modes[t * n_phi];
            modes[t * n_phi..(t + 1) * n_phi].fill(v);
        }
        let mut scratch = vec![zero; self.fft_fwd.get_inplace_scratch_len()];
        for t in 0..n_theta {
            let ring = &mut modes[t * n_phi..(t + 1) * n_phi];
            self.fft_fwd.process_with_scratch(ring, &mut scratch);
            let scale = match self.grid.quad_weights() {
                Some(w) => dphi * w[t],
                None => dphi,
            };
            for v in ring.iter_mut() {
                *v *= scale;
            }
        }
        if let Some(mw) = &self.mw {
            let mut s = MwScratch {
                ext: vec![zero; mw.n],
                conv: vec![zero; mw.conv_len],
            };
            let lo = if real { 0 } else { -(l as i64 - 1) };
            for m in lo..l as i64 {
                mw.transform_mode(&mut modes, m, &mut s);
            }
        }

        let mut pos = vec![zero; triangle_len(l)];
        let mut neg = if real {
            Vec::new()
        } else {
            vec![zero; triangle_len(l)]
        };
        for t0 in (0..n_theta).step_by(LANES) {
            let (lanes, cos, sin) = self.batch(t0);
            let rings = &modes[t0 * n_phi..(t0 + lanes) * n_phi];
            self.legendre.for_each_column(cos, sin, |m, col| {
                let off = column_offset(l, m);
                let len = l - m;
                let mut a = [zero; LANES];
                let mut b = [zero; LANES];
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                for (r, ring) in rings.chunks_exact(n_phi).enumerate() {
                    a[r] = ring[m];
                    if !real && m > 0 {
                        b[r] = ring[n_phi - m] * sign;
                    }
                }
                axpy_lanes(&a, col, &mut pos[off..off + len]);
                if !real && m > 0 {
                    axpy_lanes(&b, col, &mut neg[off..off + len]);
                }
            });
        }

        let mut out = HarmonicCoeffs::zeros(self.grid.band_limit());
        for m in 0..l {
            let off = column_offset(l, m);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for ell in m..l {
                let mut v = pos[off + ell - m];
                if real && m == 0 {
                    v.im = 0.0;
                }
                out.coeffs[lm_index(ell, m as i64)] = v;
                if m > 0 {
                    out.coeffs[lm_index(ell, -(m as i64))] = if real {
                        v.conj() * sign
                    } else {
                        neg[off + ell - m]
                    };
                }
            }
        }
        Ok(out)
    }
}

/// `Σ_k a_k b_{k,r}` for each lane `r` of a lane-interleaved column.
#[inline]
fn dot_lanes(a: &[Complex64], b: &[f64]) -> [Complex64; LANES] {
    let mut re = [0.0; LANES];
    let mut im = [0.0; LANES];
    for (x, y) in a.iter().zip(b.chunks_exact(LANES)) {
        for r in 0..LANES {
            re[r] += x.re * y[r];
            im[r] += x.im * y[r];
        }
    }
    std::array::from_fn(|r| Complex64::new(re[r], im[r]))
}

/// `y_k += Σ_r a_r x_{k,r}`.
#[inline]
fn axpy_lanes(a: &[Complex64; LANES], x: &[f64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x.chunks_exact(LANES)) {
        let mut re = 0.0;
        let mut im = 0.0;
        for r in 0..LANES {
            re += a[r].re * xi[r];
            im += a[r].im * xi[r];
        }
        yi.re += re;
        yi.im += im;
    }
}

/// One-shot synthesis onto `grid`. Output is flagged real when `flm` is
/// conjugate symmetric.
pub fn sh_synthesis(flm: &HarmonicCoeffs, grid: &GridSpec) -> Result<SphereMap> {
    let real = flm.is_conjugate_symmetric(0.0);
    ShtPlan::new(grid.clone()).synthesize(flm, real)
}

/// One-shot analysis of `map` at its grid band-limit.
pub fn sh_analysis(map: &SphereMap) -> Result<HarmonicCoeffs> {
    ShtPlan::new(map.grid().clone()).analyze(map)
}
