//! Exact axisymmetric scale-discretised wavelet transform on the sphere.
//!
//! Band-limited signals are sampled on grids with exact quadrature
//! ([`grid`]), moved to harmonic space by exact transforms ([`sht`]) and
//! decomposed into scaling and wavelet coefficients built from a tiling of
//! the harmonic line ([`tiling`], [`transform`]). On top of that sit
//! hard-threshold denoising, a binary map format, Mollweide rendering and an
//! accuracy/timing harness.

pub mod bench;
pub mod cli;
pub mod denoise;
pub mod error;
pub mod grid;
pub mod io;
pub mod mollweide;
pub mod sht;
pub mod tiling;
pub mod transform;

pub use error::{Error, FormatError, Result};
pub use grid::{BandLimit, GridSpec, SamplingScheme, SphereMap};
pub use sht::{HarmonicCoeffs, ShtPlan};
pub use tiling::{KernelFamily, TilingParams, WaveletKernels};
pub use transform::{HarmonicWavelets, TransformConfig, WaveletDecomposition, WaveletTransform};
