//! The S2WM binary format for maps and harmonic coefficients.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0 | 4 | magic `S2WM` |
//! | 4 | 4 | version (`u32`, currently 1) |
//! | 8 | 1 | scheme (0 = GL, 1 = MW) |
//! | 9 | 4 | band-limit `L` (`u32`) |
//! | 13 | 1 | kind (0 = real map, 1 = complex map, 2 = harmonic coefficients) |
//! | 14 | 8 | payload count (`u64`): samples for maps, `L²` for coefficients |
//!
//! The payload follows as `f64` values: one per sample for real maps, and
//! interleaved `(re, im)` pairs for complex maps and coefficients. Map
//! samples are θ-major; coefficients use the `ℓ² + ℓ + m` ordering.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, FormatError, Result};
use crate::grid::{make_grid, BandLimit, SamplingScheme, SphereMap};
use crate::sht::HarmonicCoeffs;

pub const MAGIC: &[u8; 4] = b"S2WM";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadKind {
    RealMap,
    ComplexMap,
    Coefficients,
}

impl PayloadKind {
    fn tag(self) -> u8 {
        match self {
            PayloadKind::RealMap => 0,
            PayloadKind::ComplexMap => 1,
            PayloadKind::Coefficients => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(PayloadKind::RealMap),
            1 => Some(PayloadKind::ComplexMap),
            2 => Some(PayloadKind::Coefficients),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            PayloadKind::RealMap => "real map",
            PayloadKind::ComplexMap => "complex map",
            PayloadKind::Coefficients => "harmonic coefficients",
        }
    }

    fn floats_per_item(self) -> usize {
        match self {
            PayloadKind::RealMap => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapFileHeader {
    pub version: u32,
    pub scheme: SamplingScheme,
    pub band_limit: u32,
    pub kind: PayloadKind,
    pub payload_count: u64,
}

impl MapFileHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(MAGIC);
        out[4..8].copy_from_slice(&self.version.to_le_bytes());
        out[8] = self.scheme.tag();
        out[9..13].copy_from_slice(&self.band_limit.to_le_bytes());
        out[13] = self.kind.tag();
        out[14..22].copy_from_slice(&self.payload_count.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        if bytes.len() < 4 || &bytes[0..4] != MAGIC {
            return Err(FormatError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(FormatError::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let scheme =
            SamplingScheme::from_tag(bytes[8]).ok_or(FormatError::UnknownScheme(bytes[8]))?;
        let band_limit = u32_at(9);
        let kind = PayloadKind::from_tag(bytes[13]).ok_or(FormatError::UnknownKind(bytes[13]))?;
        let payload_count = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
        Ok(MapFileHeader {
            version,
            scheme,
            band_limit,
            kind,
            payload_count,
        })
    }
}

fn push_f64s(out: &mut Vec<u8>, values: impl Iterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn band_limit_u32(l: usize) -> Result<u32, FormatError> {
    u32::try_from(l)
        .map_err(|_| FormatError::Invalid(format!("band-limit {l} does not fit in 32 bits")))
}

pub fn encode_map(map: &SphereMap) -> Result<Vec<u8>, FormatError> {
    if map.is_empty() {
        return Err(FormatError::Invalid("cannot store an empty map".into()));
    }
    let kind = if map.is_real() {
        PayloadKind::RealMap
    } else {
        PayloadKind::ComplexMap
    };
    let header = MapFileHeader {
        version: VERSION,
        scheme: map.grid().scheme(),
        band_limit: band_limit_u32(map.grid().l())?,
        kind,
        payload_count: map.len() as u64,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * kind.floats_per_item() * map.len());
    out.extend_from_slice(&header.encode());
    if map.is_real() {
        push_f64s(&mut out, map.values().iter().map(|v| v.re));
    } else {
        push_f64s(&mut out, map.values().iter().flat_map(|v| [v.re, v.im]));
    }
    Ok(out)
}

pub fn encode_flm(flm: &HarmonicCoeffs) -> Result<Vec<u8>, FormatError> {
    let header = MapFileHeader {
        version: VERSION,
        scheme: SamplingScheme::GL,
        band_limit: band_limit_u32(flm.l())?,
        kind: PayloadKind::Coefficients,
        payload_count: flm.coeffs().len() as u64,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * flm.coeffs().len());
    out.extend_from_slice(&header.encode());
    push_f64s(&mut out, flm.coeffs().iter().flat_map(|v| [v.re, v.im]));
    Ok(out)
}

/// Validates the payload length and returns the header plus payload floats.
fn decode_payload(bytes: &[u8]) -> Result<(MapFileHeader, Vec<f64>), FormatError> {
    let header = MapFileHeader::decode(bytes)?;
    if header.band_limit == 0 {
        return Err(FormatError::Invalid("band-limit must be at least 1".into()));
    }
    let floats = (header.payload_count as usize)
        .checked_mul(header.kind.floats_per_item())
        .ok_or_else(|| FormatError::Invalid("payload count overflows".into()))?;
    let expected = floats
        .checked_mul(8)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| FormatError::Invalid("payload count overflows".into()))?;
    if bytes.len() != expected {
        return Err(FormatError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, values))
}

pub fn decode_map(bytes: &[u8]) -> Result<SphereMap, FormatError> {
    let (header, values) = decode_payload(bytes)?;
    let values = match header.kind {
        PayloadKind::RealMap => values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        PayloadKind::ComplexMap => values
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect(),
        PayloadKind::Coefficients => {
            return Err(FormatError::KindMismatch {
                expected: "map",
                found: header.kind.name(),
            })
        }
    };
    let grid = make_grid(header.scheme, header.band_limit as usize)
        .map_err(|e| FormatError::Invalid(e.to_string()))?;
    if header.payload_count != grid.len() as u64 {
        return Err(FormatError::PayloadCount {
            expected: grid.len() as u64,
            found: header.payload_count,
        });
    }
    SphereMap::new(grid, values, header.kind == PayloadKind::RealMap)
        .map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn decode_flm(bytes: &[u8]) -> Result<HarmonicCoeffs, FormatError> {
    let (header, values) = decode_payload(bytes)?;
    if header.kind != PayloadKind::Coefficients {
        return Err(FormatError::KindMismatch {
            expected: PayloadKind::Coefficients.name(),
            found: header.kind.name(),
        });
    }
    let l = header.band_limit as u64;
    if header.payload_count != l * l {
        return Err(FormatError::PayloadCount {
            expected: l * l,
            found: header.payload_count,
        });
    }
    let coeffs = values
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    let l = BandLimit::new(header.band_limit as usize)
        .map_err(|e| FormatError::Invalid(e.to_string()))?;
    HarmonicCoeffs::from_vec(l, coeffs).map_err(|e| FormatError::Invalid(e.to_string()))
}

fn write_bytes(path: &Path, bytes: Result<Vec<u8>, FormatError>) -> Result<()> {
    let bytes = bytes.map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_with<T>(path: &Path, decode: impl Fn(&[u8]) -> Result<T, FormatError>) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_map(path: impl AsRef<Path>, map: &SphereMap) -> Result<()> {
    write_bytes(path.as_ref(), encode_map(map))
}

pub fn read_map(path: impl AsRef<Path>) -> Result<SphereMap> {
    read_with(path.as_ref(), decode_map)
}

pub fn write_flm(path: impl AsRef<Path>, flm: &HarmonicCoeffs) -> Result<()> {
    write_bytes(path.as_ref(), encode_flm(flm))
}

pub fn read_flm(path: impl AsRef<Path>) -> Result<HarmonicCoeffs> {
    read_with(path.as_ref(), decode_flm)
}

/// Header of an S2WM file without reading the payload into floats.
pub fn read_header(path: impl AsRef<Path>) -> Result<MapFileHeader> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    MapFileHeader::decode(&bytes).map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })
}
