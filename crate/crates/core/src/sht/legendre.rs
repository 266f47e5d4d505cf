//! Fully normalised associated Legendre functions
//! `λ_{ℓm}(θ) = sqrt((2ℓ+1)/4π · (ℓ−m)!/(ℓ+m)!) P_ℓ^m(cos θ)`, Condon-Shortley
//! phase included, so that `Y_{ℓm}(θ, φ) = λ_{ℓm}(θ) e^{imφ}`.
//!
//! Values are produced column by column (fixed `m`, increasing `ℓ`) with the
//! standard three-term recursion. Sectoral seeds that would underflow are
//! carried with an extra power-of-two scale and only released once the
//! recursion has grown them back into range; anything still scaled is below
//! `2^-300` and reported as zero.

use std::f64::consts::PI;

const SCALE_EXP: i32 = 600;
// 2^300 and 2^-300
const HIGH: f64 = (1u128 << 100) as f64 * (1u128 << 100) as f64 * (1u128 << 100) as f64;
const LOW: f64 = 1.0 / HIGH;

/// Recursion coefficients for band-limit `L`, shared by every ring.
#[derive(Clone, Debug)]
pub struct LegendreCoeffs {
    l: usize,
    /// `a_{ℓm} = sqrt((4ℓ²−1)/(ℓ²−m²))`, triangular layout.
    alpha: Vec<f64>,
    /// `1 / a_{ℓ−1,m}`, triangular layout (zero where unused).
    beta: Vec<f64>,
    /// `−sqrt((2m+1)/(2m))` sectoral step factors.
    diag: Vec<f64>,
}

/// Offset of column `m` in the triangular `m ≤ ℓ < L` layout.
#[inline]
pub fn column_offset(l: usize, m: usize) -> usize {
    m * l - m * (m.saturating_sub(1)) / 2
}

/// Number of entries in the triangular layout.
#[inline]
pub fn triangle_len(l: usize) -> usize {
    l * (l + 1) / 2
}

impl LegendreCoeffs {
    pub fn new(l: usize) -> Self {
        let n = triangle_len(l);
        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n];
        for m in 0..l {
            let off = column_offset(l, m);
            for ell in (m + 1)..l {
                let (lf, mf) = (ell as f64, m as f64);
                alpha[off + ell - m] = ((4.0 * lf * lf - 1.0) / ((lf - mf) * (lf + mf))).sqrt();
            }
            for ell in (m + 2)..l {
                beta[off + ell - m] = 1.0 / alpha[off + ell - m - 1];
            }
        }
        let diag = (0..l)
            .map(|m| {
                if m == 0 {
                    0.0
                } else {
                    -((2 * m + 1) as f64 / (2 * m) as f64).sqrt()
                }
            })
            .collect();
        LegendreCoeffs {
            l,
            alpha,
            beta,
            diag,
        }
    }

    pub fn band_limit(&self) -> usize {
        self.l
    }

    /// Fills `out` (triangular layout, length `L(L+1)/2`) with `λ_{ℓm}` at
    /// the ring given by `cos θ`, `sin θ`.
    pub fn fill_ring(&self, cos_theta: f64, sin_theta: f64, out: &mut [f64]) {
        let l = self.l;
        debug_assert_eq!(out.len(), triangle_len(l));
        let x = cos_theta;
        // sectoral seed λ_mm carried as value * 2^(-SCALE_EXP * scale)
        let mut pmm = (1.0 / (4.0 * PI)).sqrt();
        let mut scale: i32 = 0;
        for m in 0..l {
            if m > 0 {
                pmm *= self.diag[m] * sin_theta;
                if pmm != 0.0 && pmm.abs() < LOW {
                    pmm *= 2f64.powi(SCALE_EXP);
                    scale += 1;
                }
            }
            let off = column_offset(l, m);
            let col = &mut out[off..off + (l - m)];
            let mut s = scale;
            let mut p2 = pmm;
            col[0] = if s == 0 { p2 } else { 0.0 };
            if l - m == 1 {
                continue;
            }
            let mut p1 = x * self.alpha[off + 1] * p2;
            col[1] = if s == 0 { p1 } else { 0.0 };
            for k in 2..(l - m) {
                let p = self.alpha[off + k] * (x * p1 - self.beta[off + k] * p2);
                p2 = p1;
                p1 = p;
                if s > 0 && p1.abs() > HIGH {
                    let down = 2f64.powi(-SCALE_EXP);
                    p1 *= down;
                    p2 *= down;
                    s -= 1;
                }
                col[k] = if s == 0 { p1 } else { 0.0 };
            }
        }
    }
}

/// Rings evaluated together by [`LegendreCoeffs::for_each_column`].
pub const LANES: usize = 8;

impl LegendreCoeffs {
    /// Runs the recursion for `LANES` rings side by side, handing each
    /// finished column `m` to `f` as `L − m` lane-interleaved values (entry
    /// `ℓ − m` of ring `r` at `(ℓ − m) · LANES + r`). Independent recursions
    /// hide each other's latency, and a column fits in cache.
    pub fn for_each_column(
        &self,
        cos_theta: [f64; LANES],
        sin_theta: [f64; LANES],
        mut f: impl FnMut(usize, &[f64]),
    ) {
        let l = self.l;
        let x = cos_theta;
        let mut col = vec![0.0; l * LANES];
        let mut pmm = [(1.0 / (4.0 * PI)).sqrt(); LANES];
        let mut scale = [0i32; LANES];
        for m in 0..l {
            if m > 0 {
                for r in 0..LANES {
                    pmm[r] *= self.diag[m] * sin_theta[r];
                    if pmm[r] != 0.0 && pmm[r].abs() < LOW {
                        pmm[r] *= 2f64.powi(SCALE_EXP);
                        scale[r] += 1;
                    }
                }
            }
            let off = column_offset(l, m);
            let len = l - m;
            let col = &mut col[..len * LANES];
            let mut s = scale;
            let mut p2 = pmm;
            let mut p1 = [0.0; LANES];
            for r in 0..LANES {
                col[r] = if s[r] == 0 { p2[r] } else { 0.0 };
            }
            if len > 1 {
                for r in 0..LANES {
                    p1[r] = x[r] * self.alpha[off + 1] * p2[r];
                    col[LANES + r] = if s[r] == 0 { p1[r] } else { 0.0 };
                }
            }
            let alpha = &self.alpha[off..off + len];
            let beta = &self.beta[off..off + len];
            let mut k = 2;
            // checked loop while any lane still carries a scale
            while k < len && s.iter().any(|&v| v > 0) {
                for r in 0..LANES {
                    let p = alpha[k] * (x[r] * p1[r] - beta[k] * p2[r]);
                    p2[r] = p1[r];
                    p1[r] = p;
                    if s[r] > 0 && p1[r].abs() > HIGH {
                        let down = 2f64.powi(-SCALE_EXP);
                        p1[r] *= down;
                        p2[r] *= down;
                        s[r] -= 1;
                    }
                    col[k * LANES + r] = if s[r] == 0 { p1[r] } else { 0.0 };
                }
                k += 1;
            }
            for k in k..len {
                let (a, b) = (alpha[k], beta[k]);
                let dst = &mut col[k * LANES..(k + 1) * LANES];
                for r in 0..LANES {
                    let p = a * (x[r] * p1[r] - b * p2[r]);
                    p2[r] = p1[r];
                    p1[r] = p;
                    dst[r] = p;
                }
            }
            f(m, col);
        }
    }
}

/// Table of normalised associated Legendre values for a single colatitude.
#[derive(Clone, Debug)]
pub struct LegendreRing {
    l: usize,
    values: Vec<f64>,
}

impl LegendreRing {
    /// `λ_{ℓm}(θ)` for `0 ≤ m ≤ ℓ < L`.
    pub fn get(&self, ell: usize, m: usize) -> f64 {
        assert!(m <= ell && ell < self.l);
        self.values[column_offset(self.l, m) + ell - m]
    }

    /// `λ_{ℓm}` for signed `m`, using `λ_{ℓ,−m} = (−1)^m λ_{ℓm}`.
    pub fn get_signed(&self, ell: usize, m: i64) -> f64 {
        let v = self.get(ell, m.unsigned_abs() as usize);
        if m < 0 && m % 2 != 0 {
            -v
        } else {
            v
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Evaluates the whole `(ℓ, m ≥ 0)` table at colatitude `theta`.
pub fn assoc_legendre_ring(l: usize, theta: f64) -> LegendreRing {
    let coeffs = LegendreCoeffs::new(l);
    let (s, c) = if theta == 0.0 || theta == PI {
        (0.0, if theta == 0.0 { 1.0 } else { -1.0 })
    } else {
        theta.sin_cos()
    };
    let mut values = vec![0.0; triangle_len(l)];
    coeffs.fill_ring(c, s, &mut values);
    LegendreRing { l, values }
}
