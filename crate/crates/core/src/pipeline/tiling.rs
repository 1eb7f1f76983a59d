//! Sub-image and patch grids.
//!
//! Sub-images are laid out row-major from the top-left corner; right and
//! bottom margins narrower than one sub-image are dropped. Each sub-image
//! holds a square grid of patches at the configured stride.

use super::config::TilingConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TileIndex {
    /// Row-major index of the sub-image within its panel.
    pub sub_image: usize,
    pub sub_row: usize,
    pub sub_col: usize,
    /// Patch grid position inside the sub-image.
    pub patch_row: usize,
    pub patch_col: usize,
    /// Running patch number within the panel.
    pub global: usize,
}

impl TileIndex {
    /// Top-left pixel `(x, y)` of the patch in panel coordinates.
    pub fn origin(&self, tiling: &TilingConfig) -> (usize, usize) {
        (
            self.sub_col * tiling.sub_image + self.patch_col * tiling.stride,
            self.sub_row * tiling.sub_image + self.patch_row * tiling.stride,
        )
    }
}

/// Sub-image grid of a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubImageGrid {
    pub rows: usize,
    pub cols: usize,
}

impl SubImageGrid {
    pub fn new(width: usize, height: usize, tiling: &TilingConfig) -> Result<Self> {
        let (rows, cols) = (height / tiling.sub_image, width / tiling.sub_image);
        if rows == 0 || cols == 0 {
            return Err(Error::input(format!(
                "{width}x{height} image is smaller than one {0}x{0} sub-image",
                tiling.sub_image
            )));
        }
        Ok(SubImageGrid { rows, cols })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(row, col)` of a sub-image index.
    pub fn position(&self, sub_image: usize) -> (usize, usize) {
        (sub_image / self.cols, sub_image % self.cols)
    }
}

/// Patches of one sub-image, row-major.
pub fn sub_image_tiles(grid: &SubImageGrid, sub_image: usize, tiling: &TilingConfig) -> Vec<TileIndex> {
    let side = tiling.patches_per_side();
    let (sub_row, sub_col) = grid.position(sub_image);
    (0..side * side)
        .map(|k| TileIndex {
            sub_image,
            sub_row,
            sub_col,
            patch_row: k / side,
            patch_col: k % side,
            global: sub_image * side * side + k,
        })
        .collect()
}

/// Every patch of a `width × height` panel.
pub fn tile(width: usize, height: usize, tiling: &TilingConfig) -> Result<Vec<TileIndex>> {
    let grid = SubImageGrid::new(width, height, tiling)?;
    Ok((0..grid.len()).flat_map(|s| sub_image_tiles(&grid, s, tiling)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn default_geometry_counts() {
        let t = TilingConfig::default();
        assert_eq!(tile(480, 480, &t).unwrap().len(), 196);
        assert_eq!(tile(960, 480, &t).unwrap().len(), 392);
        let margin = tile(500, 500, &t).unwrap();
        assert_eq!(margin.len(), 196);
        assert!(margin.iter().all(|p| p.sub_image == 0));
    }

    #[test]
    fn undersized_image_is_rejected() {
        let t = TilingConfig::default();
        assert!(matches!(tile(479, 2000, &t), Err(Error::Input(_))));
        assert!(matches!(tile(2000, 100, &t), Err(Error::Input(_))));
    }

    #[test]
    fn patches_stay_inside_disjoint_sub_images() {
        for t in [
            TilingConfig::default(),
            TilingConfig { patch: 64, stride: 64, sub_image: 256 },
            TilingConfig { patch: 128, stride: 16, sub_image: 160 },
        ] {
            let (w, h) = (3 * t.sub_image + 17, 2 * t.sub_image + 5);
            let tiles = tile(w, h, &t).unwrap();
            assert_eq!(tiles.len(), 6 * t.patches_per_sub_image());
            let mut seen = HashSet::new();
            for p in &tiles {
                let (x, y) = p.origin(&t);
                let (x0, y0) = (p.sub_col * t.sub_image, p.sub_row * t.sub_image);
                assert!(x >= x0 && x + t.patch <= x0 + t.sub_image);
                assert!(y >= y0 && y + t.patch <= y0 + t.sub_image);
                assert!(x + t.patch <= w && y + t.patch <= h);
                assert!(seen.insert(p.global));
            }
            assert_eq!(seen.len(), tiles.len());
            assert_eq!(tiles.last().unwrap().global, tiles.len() - 1);
        }
    }

    #[test]
    fn grid_is_row_major() {
        let t = TilingConfig::default();
        let grid = SubImageGrid::new(1500, 1000, &t).unwrap();
        assert_eq!((grid.rows, grid.cols), (2, 3));
        assert_eq!(grid.position(4), (1, 1));
        let tiles = tile(1500, 1000, &t).unwrap();
        assert_eq!(tiles[196 * 4].origin(&t), (480, 480));
        assert_eq!(tiles[13].origin(&t), (13 * 32, 0));
    }
}
