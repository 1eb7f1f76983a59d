//! Patch feature extraction and the feature file format.
//!
//! A feature file is a plain-text header followed by a little-endian
//! columnar body:
//!
//! ```text
//! STYLOMETRY-FEATURES
//! version 1
//! dim 120
//! records <N>
//! config_hash <hex>
//! seed <u64>
//! panel <width> <height> <sha256> <id>      (one line per panel)
//! end
//! ```
//!
//! The body holds four `u32` key columns of length `N` (panel index,
//! sub-image, patch row, patch col), then `dim` `f64` value columns of
//! length `N`. Records are sorted by key.

use std::path::{Path, PathBuf};

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;

use super::artifacts::{self, write_atomic, Provenance};
use super::config::{FeatureConfig, RunConfig};
use super::ingest::{load_panel, PanelImage};
use super::tiling::{sub_image_tiles, SubImageGrid};
use crate::colorspace::ColorPatch;
use crate::error::{Error, Result};
use crate::hmt::{assemble_features, build_forest, em_fit, FeatureVector, FEATURE_DIM};
use crate::transform::{dtcwt_forward, fuse_magnitudes, SUBBANDS};

pub const FEATURES_KIND: &str = "STYLOMETRY-FEATURES";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelInfo {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    /// Index into [`FeatureFile::panels`].
    pub panel: u32,
    pub sub_image: u32,
    pub patch_row: u32,
    pub patch_col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub provenance: Provenance,
    pub panels: Vec<PanelInfo>,
    pub keys: Vec<RecordKey>,
    /// One row per key.
    pub values: Array2<f64>,
}

fn malformed(path: &Path, what: impl std::fmt::Display) -> Error {
    Error::pipeline(format!("{}: malformed feature file: {what}", path.display()))
}

impl FeatureFile {
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.provenance;
        let mut head = format!(
            "{FEATURES_KIND}\nversion {}\ndim {}\nrecords {}\nconfig_hash {}\nseed {}\n",
            p.version,
            self.dim(),
            self.keys.len(),
            p.config_hash,
            p.seed
        );
        for panel in &self.panels {
            head.push_str(&format!("panel {} {} {} {}\n", panel.width, panel.height, panel.sha256, panel.id));
        }
        head.push_str("end\n");
        let n = self.keys.len();
        let mut out = head.into_bytes();
        out.reserve(n * (16 + 8 * self.dim()));
        let columns: [fn(&RecordKey) -> u32; 4] = [|k| k.panel, |k| k.sub_image, |k| k.patch_row, |k| k.patch_col];
        for col in columns {
            for k in &self.keys {
                out.extend_from_slice(&col(k).to_le_bytes());
            }
        }
        for column in self.values.columns() {
            for v in column {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut pos = 0;
        let mut next_line = || -> Result<&str> {
            let rest = &bytes[pos..];
            let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| malformed(path, "truncated header"))?;
            pos += end + 1;
            std::str::from_utf8(&rest[..end]).map_err(|_| malformed(path, "header is not UTF-8"))
        };
        if next_line()? != FEATURES_KIND {
            return Err(malformed(path, "bad magic"));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = next_line()?;
            line.strip_prefix(name)
                .and_then(|v| v.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| malformed(path, format!("expected `{name}`, found {line:?}")))
        };
        let number = |v: String| -> Result<usize> { v.parse().map_err(|_| malformed(path, format!("bad number {v:?}"))) };
        let version = number(field("version")?)? as u32;
        let dim = number(field("dim")?)?;
        let n = number(field("records")?)?;
        let config_hash = field("config_hash")?;
        let seed = field("seed")?.parse().map_err(|_| malformed(path, "bad seed"))?;
        let mut panels = Vec::new();
        loop {
            let line = next_line()?;
            if line == "end" {
                break;
            }
            let parts: Vec<&str> = line.splitn(5, ' ').collect();
            if parts.len() != 5 || parts[0] != "panel" {
                return Err(malformed(path, format!("bad panel line {line:?}")));
            }
            panels.push(PanelInfo {
                id: parts[4].to_string(),
                width: number(parts[1].to_string())?,
                height: number(parts[2].to_string())?,
                sha256: parts[3].to_string(),
            });
        }
        let body = &bytes[pos..];
        if body.len() != n * (16 + 8 * dim) {
            return Err(malformed(path, format!("body has {} bytes, expected {}", body.len(), n * (16 + 8 * dim))));
        }
        let u32_at = |i: usize| u32::from_le_bytes(body[4 * i..4 * i + 4].try_into().unwrap());
        let keys: Vec<RecordKey> = (0..n)
            .map(|i| RecordKey { panel: u32_at(i), sub_image: u32_at(n + i), patch_row: u32_at(2 * n + i), patch_col: u32_at(3 * n + i) })
            .collect();
        let values_at = &body[16 * n..];
        let values = Array2::from_shape_fn((n, dim), |(i, j)| {
            let o = 8 * (j * n + i);
            f64::from_le_bytes(values_at[o..o + 8].try_into().unwrap())
        });
        if keys.iter().any(|k| k.panel as usize >= panels.len()) {
            return Err(malformed(path, "record refers to an unknown panel"));
        }
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(malformed(path, "records are not strictly sorted"));
        }
        let provenance = Provenance { kind: FEATURES_KIND.to_string(), version, config_hash, seed, upstream: None };
        Ok(FeatureFile { provenance, panels, keys, values })
    }

    /// CSV export: panel id, tile coordinates and every feature value.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = artifacts::csv_preamble(&Provenance { kind: format!("{FEATURES_KIND}-CSV"), ..self.provenance.clone() }).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = vec!["panel".to_string(), "sub_image".into(), "patch_row".into(), "patch_col".into()];
            header.extend((0..self.dim()).map(|j| format!("f{j:03}")));
            w.write_record(&header)?;
            for (k, row) in self.keys.iter().zip(self.values.rows()) {
                let mut rec = vec![
                    self.panels[k.panel as usize].id.clone(),
                    k.sub_image.to_string(),
                    k.patch_row.to_string(),
                    k.patch_col.to_string(),
                ];
                rec.extend(row.iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

/// The 120-entry descriptor of one patch given windows into unnormalized
/// XYZ planes.
pub fn patch_features(planes: [ArrayView2<'_, f64>; 3], features: &FeatureConfig) -> Result<FeatureVector> {
    let patch = ColorPatch::from_xyz(planes[0], planes[1], planes[2])?;
    let pyramids = patch
        .planes
        .iter()
        .map(|p| dtcwt_forward(p, features.levels))
        .collect::<Result<Vec<_>>>()?;
    let magnitudes = fuse_magnitudes(&pyramids[0], &pyramids[1], &pyramids[2])?;
    let em = features.em();
    let params = (0..SUBBANDS)
        .map(|b| Ok(em_fit(&build_forest(&magnitudes, b)?, &em)?.params))
        .collect::<Result<Vec<_>>>()?;
    assemble_features(&params, features.encoding)
}

fn panel_info(panel: &PanelImage) -> PanelInfo {
    PanelInfo { id: panel.id.clone(), width: panel.width, height: panel.height, sha256: panel.sha256.clone() }
}

/// Features of every patch of one sub-image, keyed with panel index 0.
fn compute_sub_image(panel: &PanelImage, grid: &SubImageGrid, sub: usize, config: &RunConfig) -> Result<FeatureFile> {
    let t = &config.tiling;
    let tiles = sub_image_tiles(grid, sub, t);
    let rows = tiles
        .par_iter()
        .map(|tile| {
            let (x, y) = tile.origin(t);
            let window = s![y..y + t.patch, x..x + t.patch];
            let [px, py, pz] = &panel.xyz;
            patch_features([px.slice(window), py.slice(window), pz.slice(window)], &config.features)
        })
        .collect::<Result<Vec<_>>>()?;
    let keys = tiles
        .iter()
        .map(|t| RecordKey { panel: 0, sub_image: t.sub_image as u32, patch_row: t.patch_row as u32, patch_col: t.patch_col as u32 })
        .collect();
    let mut values = Array2::zeros((rows.len(), FEATURE_DIM));
    for (mut dst, src) in values.rows_mut().into_iter().zip(&rows) {
        dst.assign(&ndarray::aview1(src.as_slice()));
    }
    Ok(FeatureFile {
        provenance: Provenance::new(FEATURES_KIND, config.extract_hash(), config.seed, None),
        panels: vec![panel_info(panel)],
        keys,
        values,
    })
}

fn shard_path(cache: &Path, config_hash: &str, panel_sha: &str, sub: usize) -> PathBuf {
    cache.join("extract").join(&config_hash[..16]).join(format!("{}-{sub:04}.bin", &panel_sha[..16]))
}

/// Load a cached sub-image shard if it matches this panel and configuration.
fn load_shard(path: &Path, panel: &PanelImage, expected_keys: usize, config_hash: &str) -> Option<FeatureFile> {
    let bytes = std::fs::read(path).ok()?;
    match FeatureFile::from_bytes(&bytes, path) {
        Ok(f) if f.provenance.config_hash == config_hash
            && f.panels.len() == 1
            && f.panels[0].sha256 == panel.sha256
            && f.keys.len() == expected_keys =>
        {
            Some(f)
        }
        Ok(_) => None,
        Err(e) => {
            log::warn!("ignoring damaged cache shard: {e}");
            None
        }
    }
}

/// Outcome of an extraction run.
#[derive(Debug, Clone)]
pub struct ExtractSummary {
    pub file: FeatureFile,
    /// Images that could not be used, with the reason.
    pub failures: Vec<(PathBuf, String)>,
    pub reused_shards: usize,
}

/// Extract every patch of every readable image. Unreadable, undersized or
/// duplicate-id images are reported in `failures` and skipped. Finished
/// sub-images are cached under `cache`, so an interrupted run resumes where
/// it stopped.
pub fn extract_images(images: &[PathBuf], config: &RunConfig, cache: &Path) -> Result<ExtractSummary> {
    let hash = config.extract_hash();
    let mut panels: Vec<PanelInfo> = Vec::new();
    let mut keys = Vec::new();
    let mut blocks = Vec::new();
    let mut failures = Vec::new();
    let mut reused_shards = 0;
    for path in images {
        let loaded = load_panel(path).and_then(|panel| {
            if panels.iter().any(|p| p.id == panel.id) {
                return Err(Error::input(format!("duplicate panel id {:?}", panel.id)));
            }
            if panel.id.contains(['\n', '\r']) {
                return Err(Error::input("panel id contains a line break"));
            }
            let grid = SubImageGrid::new(panel.width, panel.height, &config.tiling)?;
            Ok((panel, grid))
        });
        let (panel, grid) = match loaded {
            Ok(v) => v,
            Err(e) => {
                log::error!("skipping {}: {e}", path.display());
                failures.push((path.clone(), e.to_string()));
                continue;
            }
        };
        let index = panels.len() as u32;
        log::info!("extracting {} ({} sub-images)", panel.id, grid.len());
        for sub in 0..grid.len() {
            let shard = shard_path(cache, &hash, &panel.sha256, sub);
            let part = match load_shard(&shard, &panel, config.tiling.patches_per_sub_image(), &hash) {
                Some(f) => {
                    reused_shards += 1;
                    f
                }
                None => {
                    let f = compute_sub_image(&panel, &grid, sub, config)?;
                    write_atomic(&shard, &f.to_bytes())?;
                    f
                }
            };
            keys.extend(part.keys.iter().map(|k| RecordKey { panel: index, ..*k }));
            blocks.push(part.values);
        }
        panels.push(panel_info(&panel));
    }
    if panels.is_empty() {
        return Err(Error::input("no usable images"));
    }
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let values = ndarray::concatenate(ndarray::Axis(0), &views).expect("blocks share width");
    let file = FeatureFile { provenance: Provenance::new(FEATURES_KIND, hash, config.seed, None), panels, keys, values };
    Ok(ExtractSummary { file, failures, reused_shards })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_file() -> FeatureFile {
        let panels = vec![
            PanelInfo { id: "left wing".into(), width: 960, height: 480, sha256: "ab".repeat(32) },
            PanelInfo { id: "b".into(), width: 480, height: 500, sha256: "cd".repeat(32) },
        ];
        let keys = vec![
            RecordKey { panel: 0, sub_image: 0, patch_row: 0, patch_col: 1 },
            RecordKey { panel: 0, sub_image: 1, patch_row: 0, patch_col: 0 },
            RecordKey { panel: 1, sub_image: 0, patch_row: 13, patch_col: 13 },
        ];
        let values = Array2::from_shape_fn((3, 5), |(i, j)| (i as f64 + 0.1) / (j as f64 + 3.0));
        FeatureFile { provenance: Provenance::new(FEATURES_KIND, "f00d".into(), 42, None), panels, keys, values }
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let file = sample_file();
        let bytes = file.to_bytes();
        let back = FeatureFile::from_bytes(&bytes, Path::new("f")).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_bytes(), bytes);
        let header_end = bytes.windows(4).position(|w| w == b"end\n").unwrap() + 4;
        assert_eq!(bytes.len() - header_end, 3 * (16 + 8 * 5));
        // Key columns come first: panel indices of all three records.
        assert_eq!(&bytes[header_end..header_end + 12], &[0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0]);
    }

    #[test]
    fn damaged_files_are_pipeline_errors() {
        let bytes = sample_file().to_bytes();
        let p = Path::new("f");
        assert!(matches!(FeatureFile::from_bytes(&bytes[..bytes.len() - 1], p), Err(Error::Pipeline(_))));
        assert!(matches!(FeatureFile::from_bytes(b"STYLOMETRY-FEATURES\nversion 1\n", p), Err(Error::Pipeline(_))));
        assert!(matches!(FeatureFile::from_bytes(b"JUNK\n", p), Err(Error::Pipeline(_))));
        let mut unsorted = sample_file();
        unsorted.keys.swap(0, 1);
        assert!(FeatureFile::from_bytes(&unsorted.to_bytes(), p).is_err());
    }

    #[test]
    fn csv_export_has_one_row_per_record() {
        let csv = String::from_utf8(sample_file().to_csv().unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("panel,sub_image,patch_row,patch_col,f000"));
        assert!(lines[1].starts_with("left wing,0,0,1,"));
    }

    #[test]
    fn patch_features_are_deterministic_and_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rgb = Array3::from_shape_fn((64, 64, 3), |_| rng.random::<f64>());
        let [x, y, z] = crate::colorspace::rgb_to_xyz_planes(rgb.view()).unwrap();
        let cfg = FeatureConfig::default();
        let a = patch_features([x.view(), y.view(), z.view()], &cfg).unwrap();
        let b = patch_features([x.view(), y.view(), z.view()], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.as_slice().len(), 120);
        assert!(a.as_slice().iter().all(|v| v.is_finite()));
        let flat = Array2::from_elem((64, 64), 0.4);
        let degenerate = patch_features([flat.view(), flat.view(), flat.view()], &cfg).unwrap();
        assert!(degenerate.as_slice().iter().all(|v| v.is_finite()));
    }
}
