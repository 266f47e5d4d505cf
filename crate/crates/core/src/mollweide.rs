//! Mollweide rendering of real sphere maps to PPM rasters.
//!
//! Longitude `φ = 0` sits at the image centre and increases to the right;
//! north (`θ = 0`) is at the top. Each pixel inside the ellipse takes the
//! value of the nearest grid node.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, FormatError, Result};
use crate::grid::SphereMap;

pub const MIN_WIDTH: usize = 16;
const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Colormap {
    Grayscale,
    /// Blue through white to red.
    Diverging,
}

impl fmt::Display for Colormap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Colormap::Grayscale => "grayscale",
            Colormap::Diverging => "diverging",
        })
    }
}

impl FromStr for Colormap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grayscale" | "gray" => Ok(Colormap::Grayscale),
            "diverging" => Ok(Colormap::Diverging),
            _ => Err(Error::param(format!("unknown colormap {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub width: usize,
    pub colormap: Colormap,
    /// Values mapped to the ends of the colormap; taken from the map when unset.
    pub range: Option<(f64, f64)>,
    pub background: [u8; 3],
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width: 800,
            colormap: Colormap::Grayscale,
            range: None,
            background: [255, 255, 255],
        }
    }
}

impl RenderOptions {
    pub fn height(&self) -> usize {
        self.width.div_ceil(2)
    }
}

/// 8-bit RGB raster, rows top to bottom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: [u8; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!(
                "image size {width}x{height} is empty"
            )));
        }
        Ok(Image {
            width,
            height,
            pixels: vec![fill; width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// Solves `2α + sin 2α = π sin(lat)`, returning `α` and the Newton
/// iterations used.
fn auxiliary_angle(lat: f64) -> (f64, usize) {
    if lat.abs() >= FRAC_PI_2 {
        return (FRAC_PI_2.copysign(lat), 0);
    }
    let target = PI * lat.sin();
    // near the poles f has a triple root; start from its cubic expansion
    let delta = (0.75 * PI * (1.0 - lat.abs().sin())).cbrt();
    let mut alpha = if lat.abs() < 1.0 {
        lat
    } else {
        (FRAC_PI_2 - delta).copysign(lat)
    };
    for it in 1..=NEWTON_MAX_ITER {
        let f = 2.0 * alpha + (2.0 * alpha).sin() - target;
        let df = 2.0 + 2.0 * (2.0 * alpha).cos();
        if f.abs() <= NEWTON_TOL || df == 0.0 {
            return (alpha, it - 1);
        }
        let step = f / df;
        alpha = (alpha - step).clamp(-FRAC_PI_2, FRAC_PI_2);
        if step.abs() <= NEWTON_TOL {
            return (alpha, it);
        }
    }
    (alpha, NEWTON_MAX_ITER)
}

/// Mollweide plane coordinates of latitude/longitude (radians), with
/// `x ∈ [−2√2, 2√2]` and `y ∈ [−√2, √2]`.
pub fn project(lat: f64, lon: f64) -> (f64, f64) {
    let (alpha, _) = auxiliary_angle(lat);
    (2.0 * SQRT_2 / PI * lon * alpha.cos(), SQRT_2 * alpha.sin())
}

/// Latitude/longitude of a plane point, or `None` outside the ellipse.
pub fn unproject(x: f64, y: f64) -> Option<(f64, f64)> {
    let (u, v) = (x / (2.0 * SQRT_2), y / SQRT_2);
    if u * u + v * v > 1.0 {
        return None;
    }
    let alpha = v.clamp(-1.0, 1.0).asin();
    let lat = ((2.0 * alpha + (2.0 * alpha).sin()) / PI)
        .clamp(-1.0, 1.0)
        .asin();
    let c = alpha.cos();
    let lon = if c == 0.0 {
        0.0
    } else {
        PI * x / (2.0 * SQRT_2 * c)
    };
    if lon.abs() > PI * (1.0 + 1e-12) {
        return None;
    }
    Some((lat, lon.clamp(-PI, PI)))
}

fn nearest_index(values: &[f64], x: f64) -> usize {
    let i = values.partition_point(|&v| v < x);
    if i == 0 {
        0
    } else if i == values.len() || x - values[i - 1] <= values[i] - x {
        i - 1
    } else {
        i
    }
}

/// Value of `map` at the grid node nearest to `(θ, φ)`.
pub fn nearest_sample(map: &SphereMap, theta: f64, phi: f64) -> f64 {
    let grid = map.grid();
    let t = nearest_index(grid.thetas(), theta);
    let n = grid.n_phi();
    let p = (phi.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64).round() as usize % n;
    map.value(t, p).re
}

fn colour(cmap: Colormap, t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let byte = |v: f64| (255.0 * v).round() as u8;
    match cmap {
        Colormap::Grayscale => [byte(t); 3],
        Colormap::Diverging => {
            let s = 2.0 * t - 1.0;
            if s < 0.0 {
                [byte(1.0 + s), byte(1.0 + s), 255]
            } else {
                [255, byte(1.0 - s), byte(1.0 - s)]
            }
        }
    }
}

/// Plane coordinates of the centre of pixel `(i, j)`.
pub fn pixel_to_plane(i: usize, j: usize, width: usize, height: usize) -> (f64, f64) {
    let x = (2.0 * (i as f64 + 0.5) / width as f64 - 1.0) * 2.0 * SQRT_2;
    let y = (1.0 - 2.0 * (j as f64 + 0.5) / height as f64) * SQRT_2;
    (x, y)
}

pub fn render_mollweide(map: &SphereMap, opts: &RenderOptions) -> Result<Image> {
    if !map.is_real() {
        return Err(Error::Decode(FormatError::Invalid(
            "only real maps can be rendered".into(),
        )));
    }
    if opts.width < MIN_WIDTH {
        return Err(Error::param(format!(
            "image width must be at least {MIN_WIDTH}, got {}",
            opts.width
        )));
    }
    let (lo, hi) = match opts.range {
        Some(r) => r,
        None => {
            let vals = map.values().iter().map(|v| v.re);
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            match opts.colormap {
                Colormap::Grayscale => (lo, hi),
                Colormap::Diverging => {
                    let a = lo.abs().max(hi.abs());
                    (-a, a)
                }
            }
        }
    };
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::param(format!("invalid colour range [{lo}, {hi}]")));
    }
    let (w, h) = (opts.width, opts.height());
    let mut img = Image::new(w, h, opts.background)?;
    for j in 0..h {
        for i in 0..w {
            let (x, y) = pixel_to_plane(i, j, w, h);
            let Some((lat, lon)) = unproject(x, y) else {
                continue;
            };
            let v = nearest_sample(map, FRAC_PI_2 - lat, lon);
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            img.pixels[j * w + i] = colour(opts.colormap, t);
        }
    }
    Ok(img)
}

pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(3 * img.pixels.len());
    for p in &img.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Image, FormatError> {
    // header: magic and three integers separated by single whitespace runs
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(FormatError::BadPpmHeader);
        }
        fields.push(&bytes[start..pos]);
    }
    if fields[0] != b"P6" || pos >= bytes.len() {
        return Err(FormatError::BadPpmHeader);
    }
    pos += 1;
    let num = |f: &[u8]| -> Result<usize, FormatError> {
        std::str::from_utf8(f)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(FormatError::BadPpmHeader)
    };
    let (w, h, max) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if w == 0 || h == 0 || max != 255 {
        return Err(FormatError::BadPpmHeader);
    }
    let data = &bytes[pos..];
    if data.len() != 3 * w * h {
        return Err(FormatError::Truncated {
            expected: pos + 3 * w * h,
            found: bytes.len(),
        });
    }
    Ok(Image {
        width: w,
        height: h,
        pixels: data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
    })
}

pub fn write_ppm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes).map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, SamplingScheme};
    use num_complex::Complex64;

    fn map_from(scheme: SamplingScheme, l: usize, f: impl Fn(f64, f64) -> f64) -> SphereMap {
        let grid = make_grid(scheme, l).unwrap();
        let mut v = Vec::with_capacity(grid.len());
        for t in 0..grid.n_theta() {
            for p in 0..grid.n_phi() {
                v.push(f(grid.thetas()[t], grid.phi(p)));
            }
        }
        SphereMap::from_real(grid, v).unwrap()
    }

    #[test]
    fn newton_converges_everywhere() {
        for i in 0..=2000 {
            let lat = -FRAC_PI_2 + PI * i as f64 / 2000.0;
            let (alpha, iters) = auxiliary_angle(lat);
            assert!(iters <= NEWTON_MAX_ITER);
            let r = 2.0 * alpha + (2.0 * alpha).sin() - PI * lat.sin();
            assert!(r.abs() <= 1e-10, "lat {lat} residual {r}");
        }
        assert_eq!(auxiliary_angle(FRAC_PI_2), (FRAC_PI_2, 0));
        assert_eq!(auxiliary_angle(-FRAC_PI_2), (-FRAC_PI_2, 0));
    }

    #[test]
    fn project_unproject_round_trip() {
        for &lat in &[-1.5, -0.9, 0.0, 0.4, 1.2, 1.57] {
            for &lon in &[-3.0, -1.0, 0.0, 0.5, 2.9] {
                let (x, y) = project(lat, lon);
                let (la, lo) = unproject(x, y).unwrap();
                assert!(
                    (la - lat).abs() < 1e-8 && (lo - lon).abs() < 1e-6,
                    "{lat} {lon}"
                );
            }
        }
        assert_eq!(project(0.0, 0.0), (0.0, 0.0));
        let (x, y) = project(FRAC_PI_2, 1.0);
        assert!(x.abs() < 1e-15 && (y - SQRT_2).abs() < 1e-15);
        assert!(unproject(2.0 * SQRT_2, 1.0).is_none());
    }

    #[test]
    fn constant_map_gives_uniform_ellipse() {
        let map = SphereMap::constant(
            make_grid(SamplingScheme::GL, 8).unwrap(),
            Complex64::new(2.0, 0.0),
        );
        let opts = RenderOptions {
            width: 64,
            background: [1, 2, 3],
            ..Default::default()
        };
        let img = render_mollweide(&map, &opts).unwrap();
        assert_eq!((img.width(), img.height()), (64, 32));
        let inside = [128u8; 3];
        for j in 0..32 {
            for i in 0..64 {
                let (x, y) = pixel_to_plane(i, j, 64, 32);
                let want = if unproject(x, y).is_some() {
                    inside
                } else {
                    [1, 2, 3]
                };
                assert_eq!(img.pixel(i, j), want);
            }
        }
        assert_eq!(img.pixel(0, 0), [1, 2, 3]);
        assert_eq!(img.pixel(32, 16), inside);
    }

    #[test]
    fn centre_pixel_samples_equator_at_zero_longitude() {
        let map = map_from(SamplingScheme::MW, 16, |t, p| {
            if (t - FRAC_PI_2).abs() < 0.1 && (p < 0.2 || p > 2.0 * PI - 0.2) {
                1.0
            } else {
                0.0
            }
        });
        let opts = RenderOptions {
            width: 65,
            range: Some((0.0, 1.0)),
            ..Default::default()
        };
        let img = render_mollweide(&map, &opts).unwrap();
        assert_eq!(img.pixel(32, 16), [255; 3]);
    }

    #[test]
    fn quadrant_orientation() {
        // +1 in the north, eastern half (0 < φ < π); −1 elsewhere
        let map = map_from(SamplingScheme::GL, 32, |t, p| {
            if t < FRAC_PI_2 && p > 0.0 && p < PI {
                1.0
            } else {
                -1.0
            }
        });
        let opts = RenderOptions {
            width: 200,
            range: Some((-1.0, 1.0)),
            ..Default::default()
        };
        let img = render_mollweide(&map, &opts).unwrap();
        // lat ±45°, lon ±90° by hand: α solves 2α + sin 2α = π/√2, α ≈ 0.6533
        let alpha: f64 = 0.653_3;
        let (x, y) = (
            2.0 * SQRT_2 / PI * FRAC_PI_2 * alpha.cos(),
            SQRT_2 * alpha.sin(),
        );
        let to_px = |x: f64, y: f64| {
            let i = ((x / (2.0 * SQRT_2) + 1.0) / 2.0 * 200.0) as usize;
            let j = ((1.0 - y / SQRT_2) / 2.0 * 100.0) as usize;
            img.pixel(i, j)
        };
        assert_eq!(to_px(x, y), [255; 3]);
        assert_eq!(to_px(-x, y), [0; 3]);
        assert_eq!(to_px(x, -y), [0; 3]);
        assert_eq!(to_px(-x, -y), [0; 3]);
    }

    #[test]
    fn rejects_complex_and_small() {
        let grid = make_grid(SamplingScheme::GL, 4).unwrap();
        let c = SphereMap::constant(grid.clone(), Complex64::new(0.0, 1.0));
        assert!(render_mollweide(&c, &RenderOptions::default()).is_err());
        let r = SphereMap::constant(grid, Complex64::new(1.0, 0.0));
        let small = RenderOptions {
            width: 15,
            ..Default::default()
        };
        assert!(render_mollweide(&r, &small).is_err());
        let min = RenderOptions {
            width: 16,
            ..Default::default()
        };
        assert_eq!(render_mollweide(&r, &min).unwrap().height(), 8);
    }

    #[test]
    fn ppm_round_trip() {
        let map = map_from(SamplingScheme::GL, 8, |t, p| t.cos() * p.sin());
        let opts = RenderOptions {
            width: 33,
            colormap: Colormap::Diverging,
            ..Default::default()
        };
        let img = render_mollweide(&map, &opts).unwrap();
        let bytes = encode_ppm(&img);
        let header = b"P6\n33 17\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 3 * 33 * 17);
        assert_eq!(decode_ppm(&bytes).unwrap(), img);
        assert!(decode_ppm(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_ppm(b"P5\n1 1\n255\nabc").is_err());
        assert!(Image::new(0, 3, [0; 3]).is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let map = map_from(SamplingScheme::GL, 8, |t, p| (3.0 * t).sin() + p.cos());
        let a = render_mollweide(&map, &RenderOptions::default()).unwrap();
        let b = render_mollweide(&map, &RenderOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
