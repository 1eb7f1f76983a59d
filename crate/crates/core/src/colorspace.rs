//! RGB → HSL → double-cone XYZ conversion and per-plane normalization.
//!
//! The double cone places lightness on the axis (`X = L`) and spreads chroma
//! over the `Y`/`Z` plane with a radius that shrinks to zero at black and
//! white, so Euclidean distance follows the usual HSL picture.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2, ArrayView3, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HslPixel {
    /// Hue in degrees, `[0, 360)`.
    pub h: f64,
    pub s: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyzPixel {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Scale an 8-bit channel to `[0, 1]`.
pub fn channel_from_u8(v: u8) -> f64 {
    f64::from(v) / 255.0
}

/// Scale a 16-bit channel to `[0, 1]`.
pub fn channel_from_u16(v: u16) -> f64 {
    f64::from(v) / 65535.0
}

/// Standard hexcone HSL. Achromatic pixels get `H = 0, S = 0`.
pub fn rgb_to_hsl(r: f64, g: f64, b: f64) -> Result<HslPixel> {
    for (name, v) in [("r", r), ("g", g), ("b", b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::input(format!("channel {name} = {v} outside [0, 1]")));
        }
    }
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let l = 0.5 * (max + min);
    let delta = max - min;
    if delta == 0.0 {
        return Ok(HslPixel { h: 0.0, s: 0.0, l });
    }
    let s = (delta / (1.0 - (2.0 * l - 1.0).abs())).clamp(0.0, 1.0);
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let mut h = 60.0 * sector;
    if h >= 360.0 {
        h -= 360.0;
    }
    Ok(HslPixel { h, s, l })
}

/// Map HSL onto Cartesian double-cone coordinates.
pub fn hsl_to_xyz(p: HslPixel) -> XyzPixel {
    let radius = p.s * (2.0 * p.l).min(2.0 * (1.0 - p.l));
    let angle = 2.0 * PI * p.h / 360.0;
    XyzPixel {
        x: p.l,
        y: radius * angle.cos(),
        z: radius * angle.sin(),
    }
}

/// Z-score a plane using its own mean and population standard deviation.
///
/// A constant plane carries no texture and maps to all zeros.
pub fn normalize_plane(plane: &Array2<f64>) -> Result<Array2<f64>> {
    if plane.is_empty() {
        return Err(Error::input("cannot normalize an empty plane"));
    }
    let first = plane[[0, 0]];
    if plane.iter().all(|&v| v == first) {
        return Ok(Array2::zeros(plane.raw_dim()));
    }
    let n = plane.len() as f64;
    let mean = plane.sum() / n;
    let var = plane.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    Ok(plane.mapv(|v| (v - mean) / sd))
}

/// One patch as three normalized double-cone planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorPatch {
    pub width: usize,
    pub height: usize,
    /// `X`, `Y`, `Z` planes, each `height × width`.
    pub planes: [Array2<f64>; 3],
}

impl ColorPatch {
    /// Build a patch from an RGB view of shape `(height, width, 3)` with
    /// channels already scaled to `[0, 1]`.
    pub fn from_rgb(rgb: ArrayView3<'_, f64>) -> Result<Self> {
        let [x, y, z] = rgb_to_xyz_planes(rgb)?;
        ColorPatch::from_xyz(x.view(), y.view(), z.view())
    }

    /// Build a patch from unnormalized double-cone planes, typically windows
    /// into planes converted once for a whole image.
    pub fn from_xyz(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, z: ArrayView2<'_, f64>) -> Result<Self> {
        let (height, width) = x.dim();
        if y.dim() != x.dim() || z.dim() != x.dim() {
            return Err(Error::shape("XYZ planes differ in shape"));
        }
        if height == 0 || width == 0 {
            return Err(Error::input("empty patch"));
        }
        Ok(ColorPatch {
            width,
            height,
            planes: [normalize_plane(&x.to_owned())?, normalize_plane(&y.to_owned())?, normalize_plane(&z.to_owned())?],
        })
    }
}

/// Convert an RGB raster of shape `(height, width, 3)` into unnormalized
/// `X`, `Y`, `Z` planes.
pub fn rgb_to_xyz_planes(rgb: ArrayView3<'_, f64>) -> Result<[Array2<f64>; 3]> {
    let (height, width, channels) = rgb.dim();
    if channels != 3 {
        return Err(Error::shape(format!("expected 3 channels, got {channels}")));
    }
    let mut x = Array2::zeros((height, width));
    let mut y = Array2::zeros((height, width));
    let mut z = Array2::zeros((height, width));
    for (r, row) in rgb.axis_iter(Axis(0)).enumerate() {
        for (c, px) in row.axis_iter(Axis(0)).enumerate() {
            let xyz = hsl_to_xyz(rgb_to_hsl(px[0], px[1], px[2])?);
            x[[r, c]] = xyz.x;
            y[[r, c]] = xyz.y;
            z[[r, c]] = xyz.z;
        }
    }
    Ok([x, y, z])
}
