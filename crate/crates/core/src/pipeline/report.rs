//! Report bundle: per-panel pattern profiles, sub-image heatmaps and the
//! embedding scatter, each as CSV and/or SVG.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};

use super::artifacts::write_atomic;
use super::config::TilingConfig;
use super::extract::PanelInfo;
use super::tiling::SubImageGrid;
use crate::error::{Error, Result};
use crate::topics::{aggregate_panels, pattern_subset_score};

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub struct ReportInput<'a> {
    pub panels: &'a [PanelInfo],
    pub tiling: &'a TilingConfig,
    /// `(panel index, sub-image index)` of each weights row.
    pub documents: &'a [(usize, usize)],
    pub weights: ArrayView2<'a, f64>,
    /// 2-D embedding, one row per document.
    pub coords: ArrayView2<'a, f64>,
    /// 1-based patterns summed for the heatmap.
    pub patterns: &'a [usize],
    /// Optional background image per panel.
    pub backgrounds: Vec<Option<PathBuf>>,
}

#[derive(Debug, Clone)]
pub struct ReportSummary {
    /// Mean pattern weights per panel (rows sum to 1).
    pub profiles: Array2<f64>,
    pub patterns: Vec<usize>,
    /// Selected-pattern weight sum per document.
    pub scores: Vec<f64>,
    /// `scores` divided by their maximum over all panels.
    pub brightness: Vec<f64>,
    pub files: Vec<PathBuf>,
}

/// 1-based patterns that weigh more in `panel`'s profile than in any other
/// panel's.
pub fn dominant_patterns(profiles: ArrayView2<'_, f64>, panel: usize) -> Vec<usize> {
    (0..profiles.ncols())
        .filter(|&k| {
            let own = profiles[[panel, k]];
            (0..profiles.nrows()).filter(|&p| p != panel).all(|p| profiles[[p, k]] < own)
        })
        .map(|k| k + 1)
        .collect()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn file_stem_safe(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(out)
}

fn profiles_svg(panels: &[PanelInfo], profiles: &Array2<f64>) -> String {
    let k = profiles.ncols();
    let (left, plot_w, block_h, bar_h) = (60.0, 640.0, 160.0, 110.0);
    let top = profiles.iter().cloned().fold(0.0, f64::max).max(1e-12);
    let width = left + plot_w + 20.0;
    let height = block_h * panels.len() as f64 + 10.0;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    let slot = plot_w / k as f64;
    for (p, panel) in panels.iter().enumerate() {
        let y0 = 10.0 + block_h * p as f64;
        let base = y0 + 20.0 + bar_h;
        let _ = writeln!(s, "<text x=\"{left}\" y=\"{:.1}\" font-size=\"13\">{}</text>", y0 + 12.0, xml_escape(&panel.id));
        let _ = writeln!(s, "<line x1=\"{left}\" y1=\"{base:.1}\" x2=\"{:.1}\" y2=\"{base:.1}\" stroke=\"black\"/>", left + plot_w);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{top:.3}</text>", left - 6.0, base - bar_h + 4.0);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{base:.1}\" text-anchor=\"end\">0</text>", left - 6.0);
        for j in 0..k {
            let v = profiles[[p, j]];
            let h = bar_h * v / top;
            let x = left + slot * j as f64 + 0.1 * slot;
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{}\"><title>pattern {}: {v:.4}</title></rect>",
                base - h,
                0.8 * slot,
                PALETTE[p % PALETTE.len()],
                j + 1
            );
            let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", x + 0.4 * slot, base + 13.0, j + 1);
        }
    }
    s.push_str("</svg>\n");
    s
}

fn heatmap_svg(panel: &PanelInfo, tiling: &TilingConfig, cells: &[(usize, f64, f64)], background: Option<&Path>) -> Result<String> {
    let grid = SubImageGrid::new(panel.width, panel.height, tiling)?;
    let (w, h) = (panel.width as f64, panel.height as f64);
    let scale = (720.0 / w).min(1.0);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {w} {h}\">\n",
        w * scale,
        h * scale
    );
    match background {
        Some(path) => {
            let href = xml_escape(&format!("file://{}", path.display()));
            let _ = writeln!(s, "<image href=\"{href}\" x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" preserveAspectRatio=\"none\"/>");
        }
        None => {
            let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
        }
    }
    let side = tiling.sub_image;
    for &(sub, score, bright) in cells {
        let (r, c) = grid.position(sub);
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"{side}\" height=\"{side}\" fill=\"black\" fill-opacity=\"{:.4}\" stroke=\"#808080\" stroke-width=\"2\"><title>sub-image {sub}: {score:.4}</title></rect>",
            c * side,
            r * side,
            1.0 - bright
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn scatter_svg(panels: &[PanelInfo], documents: &[(usize, usize)], coords: ArrayView2<'_, f64>) -> String {
    let (size, pad) = (480.0, 40.0);
    let bounds = |col: usize| {
        let c = coords.column(col);
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, (hi - lo).max(1e-12))
    };
    let ((x0, xs), (y0, ys)) = (bounds(0), bounds(1));
    let span = xs.max(ys);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        size + 2.0 * pad + 140.0,
        size + 2.0 * pad
    );
    let _ = writeln!(s, "<rect x=\"{pad}\" y=\"{pad}\" width=\"{size}\" height=\"{size}\" fill=\"none\" stroke=\"#999\"/>");
    for (&(panel, sub), xy) in documents.iter().zip(coords.rows()) {
        let px = pad + size * (0.05 + 0.9 * (xy[0] - x0 + (span - xs) / 2.0) / span);
        let py = pad + size * (0.95 - 0.9 * (xy[1] - y0 + (span - ys) / 2.0) / span);
        let _ = writeln!(
            s,
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"4\" fill=\"{}\"><title>{} / {sub}</title></circle>",
            PALETTE[panel % PALETTE.len()],
            xml_escape(&panels[panel].id)
        );
    }
    for (p, panel) in panels.iter().enumerate() {
        let y = pad + 10.0 + 18.0 * p as f64;
        let x = size + 2.0 * pad;
        let _ = writeln!(s, "<circle cx=\"{x}\" cy=\"{y}\" r=\"5\" fill=\"{}\"/>", PALETTE[p % PALETTE.len()]);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", x + 10.0, y + 4.0, xml_escape(&panel.id));
    }
    s.push_str("</svg>\n");
    s
}

/// Write the report bundle into `dir`.
pub fn render_report(input: &ReportInput<'_>, dir: &Path) -> Result<ReportSummary> {
    let n = input.documents.len();
    if input.weights.nrows() != n || input.coords.dim() != (n, 2) {
        return Err(Error::shape("weights, embedding and document list disagree"));
    }
    let k = input.weights.ncols();
    if let Some(&bad) = input.patterns.iter().find(|&&p| p == 0 || p > k) {
        return Err(Error::input(format!("pattern {bad} outside 1..={k}")));
    }
    let panel_of: Vec<Option<usize>> = input.documents.iter().map(|d| Some(d.0)).collect();
    let profiles = aggregate_panels(input.weights, &panel_of, input.panels.len())?;
    let scores = pattern_subset_score(input.weights, input.patterns)?;
    let top = scores.iter().cloned().fold(0.0, f64::max);
    let brightness: Vec<f64> = scores.iter().map(|s| if top > 0.0 { s / top } else { 0.0 }).collect();
    let mut files = Vec::new();
    let mut emit = |name: String, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        files.push(path);
        Ok(())
    };

    let mut header = vec!["panel".to_string()];
    header.extend((1..=k).map(|j| format!("pattern_{j}")));
    let rows: Vec<Vec<String>> = input
        .panels
        .iter()
        .zip(profiles.rows())
        .map(|(p, r)| std::iter::once(p.id.clone()).chain(r.iter().map(f64::to_string)).collect())
        .collect();
    emit("profiles.csv".into(), &csv_bytes(&header, &rows)?)?;
    emit("profiles.svg".into(), profiles_svg(input.panels, &profiles).as_bytes())?;

    let header = ["panel", "sub_image", "row", "col", "score", "brightness"].map(String::from);
    let mut rows = Vec::with_capacity(n);
    for (i, &(p, sub)) in input.documents.iter().enumerate() {
        let panel = &input.panels[p];
        let (r, c) = SubImageGrid::new(panel.width, panel.height, input.tiling)?.position(sub);
        rows.push(vec![
            panel.id.clone(),
            sub.to_string(),
            r.to_string(),
            c.to_string(),
            scores[i].to_string(),
            brightness[i].to_string(),
        ]);
    }
    emit("heatmap.csv".into(), &csv_bytes(&header, &rows)?)?;
    for (p, panel) in input.panels.iter().enumerate() {
        let cells: Vec<(usize, f64, f64)> = input
            .documents
            .iter()
            .enumerate()
            .filter(|(_, d)| d.0 == p)
            .map(|(i, d)| (d.1, scores[i], brightness[i]))
            .collect();
        let background = input.backgrounds.get(p).and_then(|b| b.as_deref());
        let svg = heatmap_svg(panel, input.tiling, &cells, background)?;
        emit(format!("heatmap_{}.svg", file_stem_safe(&panel.id)), svg.as_bytes())?;
    }
    emit("scatter.svg".into(), scatter_svg(input.panels, input.documents, input.coords).as_bytes())?;

    Ok(ReportSummary { profiles, patterns: input.patterns.to_vec(), scores, brightness, files })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn panels() -> Vec<PanelInfo> {
        vec![
            PanelInfo { id: "A & co".into(), width: 960, height: 480, sha256: String::new() },
            PanelInfo { id: "B".into(), width: 480, height: 480, sha256: String::new() },
        ]
    }

    #[test]
    fn bundle_contents() {
        let dir = tempfile::tempdir().unwrap();
        let panels = panels();
        let tiling = TilingConfig::default();
        let weights = array![[0.7, 0.2, 0.1], [0.5, 0.3, 0.2], [0.0, 0.1, 0.9]];
        let coords = array![[0.0, 1.0], [0.5, 1.2], [-3.0, -2.0]];
        let input = ReportInput {
            panels: &panels,
            tiling: &tiling,
            documents: &[(0, 0), (0, 1), (1, 0)],
            weights: weights.view(),
            coords: coords.view(),
            patterns: &[1, 2],
            backgrounds: vec![Some(PathBuf::from("/img/a.png")), None],
        };
        let summary = render_report(&input, dir.path()).unwrap();
        for row in summary.profiles.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-10);
        }
        assert!((summary.profiles[[0, 0]] - 0.6).abs() < 1e-12);
        for (b, want) in summary.brightness.iter().zip([1.0, 0.8 / 0.9, 0.1 / 0.9]) {
            assert!((b - want).abs() < 1e-12);
        }
        let names: Vec<String> = summary.files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["profiles.csv", "profiles.svg", "heatmap.csv", "heatmap_A___co.svg", "heatmap_B.svg", "scatter.svg"]);
        let heat = std::fs::read_to_string(dir.path().join("heatmap.csv")).unwrap();
        assert!(heat.lines().nth(2).unwrap().starts_with("A & co,1,0,1,"));
        let svg = std::fs::read_to_string(dir.path().join("heatmap_A___co.svg")).unwrap();
        assert!(svg.contains("href=\"file:///img/a.png\""));
        assert_eq!(svg.matches("<rect").count(), 2);
        let scatter = std::fs::read_to_string(dir.path().join("scatter.svg")).unwrap();
        assert_eq!(scatter.matches("<circle").count(), 3 + 2);
        assert!(scatter.contains("A &amp; co"));
    }

    #[test]
    fn all_patterns_give_uniform_full_brightness() {
        let dir = tempfile::tempdir().unwrap();
        let panels = panels();
        let weights = array![[0.7, 0.3], [0.5, 0.5], [0.0, 1.0]];
        let coords = array![[0.0, 1.0], [0.5, 1.2], [-3.0, -2.0]];
        let input = ReportInput {
            panels: &panels,
            tiling: &TilingConfig::default(),
            documents: &[(0, 0), (0, 1), (1, 0)],
            weights: weights.view(),
            coords: coords.view(),
            patterns: &[1, 2],
            backgrounds: vec![None, None],
        };
        let summary = render_report(&input, dir.path()).unwrap();
        assert!(summary.brightness.iter().all(|&b| (b - 1.0).abs() < 1e-12));
        let bad = ReportInput { patterns: &[3], ..input };
        assert!(matches!(render_report(&bad, dir.path()), Err(Error::Input(_))));
    }

    #[test]
    fn dominant_patterns_are_strict_maxima() {
        let profiles = array![[0.6, 0.1, 0.3], [0.2, 0.5, 0.3]];
        assert_eq!(dominant_patterns(profiles.view(), 0), vec![1]);
        assert_eq!(dominant_patterns(profiles.view(), 1), vec![2]);
    }
}
