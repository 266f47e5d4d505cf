//! Sampling grids on the sphere and the sampled-map container.
//!
//! Two schemes are provided. The Gauss-Legendre (GL) grid places `L` rings at
//! the Gauss-Legendre nodes in `cos θ`, which integrates every polynomial of
//! degree `< 2L` exactly. The equiangular MW grid places `L` rings at
//! `θ_t = (2t+1)π/(2L−1)`, the last ring being the south pole; its exact
//! quadrature is realised inside the transform (see [`crate::sht`]).
//!
//! Both grids carry `2L−1` equally spaced longitudes `φ_p = 2πp/(2L−1)`.
//! Values are stored θ-major: index `t * n_phi + p`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Harmonic band-limit `L`: `f_{ℓm} = 0` for all `ℓ ≥ L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BandLimit(usize);

impl BandLimit {
    pub fn new(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidBandLimit { got: l, min: 1 });
        }
        Ok(BandLimit(l))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for BandLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SamplingScheme {
    /// Gauss-Legendre rings.
    GL,
    /// Equiangular rings with a south-pole ring.
    MW,
}

impl SamplingScheme {
    pub fn tag(self) -> u8 {
        match self {
            SamplingScheme::GL => 0,
            SamplingScheme::MW => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(SamplingScheme::GL),
            1 => Some(SamplingScheme::MW),
            _ => None,
        }
    }
}

impl std::str::FromStr for SamplingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gl" => Ok(SamplingScheme::GL),
            "mw" => Ok(SamplingScheme::MW),
            other => Err(Error::param(format!("unknown sampling scheme '{other}'"))),
        }
    }
}

impl fmt::Display for SamplingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingScheme::GL => f.write_str("gl"),
            SamplingScheme::MW => f.write_str("mw"),
        }
    }
}

/// Grid descriptor. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    scheme: SamplingScheme,
    band_limit: BandLimit,
    thetas: Vec<f64>,
    cos_thetas: Vec<f64>,
    sin_thetas: Vec<f64>,
    /// GL weights over `d(cos θ)`. Empty for MW.
    weights: Vec<f64>,
    n_phi: usize,
}

impl GridSpec {
    pub fn new(scheme: SamplingScheme, band_limit: BandLimit) -> Self {
        let l = band_limit.get();
        let n_phi = 2 * l - 1;
        let (thetas, cos_thetas, sin_thetas, weights) = match scheme {
            SamplingScheme::GL => {
                let (nodes, weights) = gauss_legendre(l);
                // nodes ascend in x = cos θ; rings ascend in θ
                let cos: Vec<f64> = nodes.iter().rev().copied().collect();
                let w: Vec<f64> = weights.iter().rev().copied().collect();
                let sin = cos.iter().map(|x| ((1.0 - x) * (1.0 + x)).sqrt()).collect();
                let th = cos.iter().map(|x: &f64| x.acos()).collect();
                (th, cos, sin, w)
            }
            SamplingScheme::MW => {
                let mut th = Vec::with_capacity(l);
                let mut cos = Vec::with_capacity(l);
                let mut sin = Vec::with_capacity(l);
                for t in 0..l {
                    if t == l - 1 {
                        th.push(PI);
                        cos.push(-1.0);
                        sin.push(0.0);
                    } else {
                        let theta = (2 * t + 1) as f64 * PI / n_phi as f64;
                        th.push(theta);
                        cos.push(theta.cos());
                        sin.push(theta.sin());
                    }
                }
                (th, cos, sin, Vec::new())
            }
        };
        GridSpec {
            scheme,
            band_limit,
            thetas,
            cos_thetas,
            sin_thetas,
            weights,
            n_phi,
        }
    }

    pub fn scheme(&self) -> SamplingScheme {
        self.scheme
    }

    pub fn band_limit(&self) -> BandLimit {
        self.band_limit
    }

    pub fn l(&self) -> usize {
        self.band_limit.get()
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    /// Stored sample count, `n_theta * n_phi`.
    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn cos_thetas(&self) -> &[f64] {
        &self.cos_thetas
    }

    pub fn sin_thetas(&self) -> &[f64] {
        &self.sin_thetas
    }

    /// Quadrature weights over `d(cos θ)`; `None` on MW grids.
    pub fn quad_weights(&self) -> Option<&[f64]> {
        match self.scheme {
            SamplingScheme::GL => Some(&self.weights),
            SamplingScheme::MW => None,
        }
    }

    pub fn phi(&self, p: usize) -> f64 {
        2.0 * PI * p as f64 / self.n_phi as f64
    }

    /// Number of distinct points: the MW pole ring counts once.
    pub fn distinct_sample_count(&self) -> usize {
        let l = self.l();
        match self.scheme {
            SamplingScheme::GL => l * (2 * l - 1),
            SamplingScheme::MW => (l - 1) * (2 * l - 1) + 1,
        }
    }

    /// Ring index of the south pole, if the grid has one.
    pub fn pole_ring(&self) -> Option<usize> {
        match self.scheme {
            SamplingScheme::MW => Some(self.n_theta() - 1),
            SamplingScheme::GL => None,
        }
    }
}

pub fn make_grid(scheme: SamplingScheme, l: usize) -> Result<GridSpec> {
    Ok(GridSpec::new(scheme, BandLimit::new(l)?))
}

pub fn distinct_sample_count(grid: &GridSpec) -> usize {
    grid.distinct_sample_count()
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`, by Newton
/// iteration on `P_n`. Nodes are mirrored so the rule is exactly symmetric.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A signal sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereMap {
    grid: GridSpec,
    values: Vec<Complex64>,
    is_real: bool,
}

impl SphereMap {
    /// Builds a map, checking the length and, on MW grids, that every
    /// sample of the pole ring is identical.
    pub fn new(grid: GridSpec, values: Vec<Complex64>, is_real: bool) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Inconsistent(format!(
                "map has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if is_real && values.iter().any(|v| v.im != 0.0) {
            return Err(Error::Inconsistent(
                "real map with nonzero imaginary part".into(),
            ));
        }
        if let Some(t) = grid.pole_ring() {
            let ring = &values[t * grid.n_phi()..(t + 1) * grid.n_phi()];
            if ring.iter().any(|v| *v != ring[0]) {
                return Err(Error::Inconsistent(
                    "MW pole ring samples are not identical".into(),
                ));
            }
        }
        Ok(SphereMap {
            grid,
            values,
            is_real,
        })
    }

    pub fn from_real(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Self::new(grid, values, true)
    }

    pub fn from_complex(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        Self::new(grid, values, false)
    }

    /// Constant map; real whenever `c` has no imaginary part.
    pub fn constant(grid: GridSpec, c: Complex64) -> Self {
        let n = grid.len();
        SphereMap {
            grid,
            values: vec![c; n],
            is_real: c.im == 0.0,
        }
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts(grid: GridSpec, values: Vec<Complex64>, is_real: bool) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        SphereMap {
            grid,
            values,
            is_real,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn value(&self, t: usize, p: usize) -> Complex64 {
        self.values[t * self.grid.n_phi() + p]
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Applies `f` to every sample, keeping the real flag.
    pub(crate) fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> SphereMap {
        let values = self.values.iter().map(|v| f(*v)).collect();
        SphereMap::from_parts(self.grid.clone(), values, self.is_real)
    }
}

pub fn map_constant(grid: &GridSpec, c: Complex64) -> SphereMap {
    SphereMap::constant(grid.clone(), c)
}
