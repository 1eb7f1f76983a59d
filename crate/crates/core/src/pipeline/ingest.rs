//! Image loading. PNG and TIFF, 8- or 16-bit RGB; alpha is dropped.

use std::path::{Path, PathBuf};

use image::DynamicImage;
use ndarray::{Array2, Array3};

use super::artifacts::sha256_hex;
use crate::colorspace::{channel_from_u16, channel_from_u8, rgb_to_xyz_planes};
use crate::error::{Error, Result};

/// A decoded panel, converted once to unnormalized double-cone planes.
#[derive(Debug, Clone)]
pub struct PanelImage {
    pub id: String,
    pub path: PathBuf,
    pub width: usize,
    pub height: usize,
    /// SHA-256 of the encoded file.
    pub sha256: String,
    pub xyz: [Array2<f64>; 3],
}

/// Panel id derived from a path: the file stem.
pub fn panel_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn to_rgb(img: DynamicImage, path: &Path) -> Result<Array3<f64>> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let has_alpha = img.color().has_alpha();
    let rgb = match img {
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            let buf = img.into_rgb8();
            Array3::from_shape_fn((h, w, 3), |(r, c, k)| channel_from_u8(buf.get_pixel(c as u32, r as u32)[k]))
        }
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => {
            let buf = img.into_rgb16();
            Array3::from_shape_fn((h, w, 3), |(r, c, k)| channel_from_u16(buf.get_pixel(c as u32, r as u32)[k]))
        }
        other => {
            return Err(Error::input(format!(
                "{}: unsupported pixel format {:?}; need 8- or 16-bit RGB",
                path.display(),
                other.color()
            )))
        }
    };
    if has_alpha {
        log::warn!("{}: alpha channel ignored", path.display());
    }
    Ok(rgb)
}

/// Decode an image held in memory.
pub fn decode_panel(id: String, path: PathBuf, bytes: &[u8]) -> Result<PanelImage> {
    let img = image::load_from_memory(bytes).map_err(|source| Error::Image { path: path.clone(), source })?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let rgb = to_rgb(img, &path)?;
    let xyz = rgb_to_xyz_planes(rgb.view())?;
    Ok(PanelImage { id, path, width, height, sha256: sha256_hex(bytes), xyz })
}

pub fn load_panel(path: &Path) -> Result<PanelImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    decode_panel(panel_id(path), path.to_path_buf(), &bytes)
}
