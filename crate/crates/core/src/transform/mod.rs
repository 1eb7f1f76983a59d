//! Two-dimensional dual-tree complex wavelet transform.
//!
//! Two real separable wavelet trees run side by side; their outputs are
//! combined pairwise into complex coefficients whose magnitudes are close to
//! shift invariant. Every level yields six oriented subbands, stored in the
//! fixed order of [`SUBBAND_ANGLES`]:
//!
//! | index | 0 | 1 | 2 | 3 | 4 | 5 |
//! |-------|---|---|---|---|---|---|
//! | angle | +15° | +45° | +75° | −75° | −45° | −15° |
//!
//! Boundaries use half-sample symmetric extension. Level 1 is undecimated
//! before the quad-to-complex step, so a level-`ℓ` subband of an `n × n`
//! plane is `(n / 2^ℓ) × (n / 2^ℓ)`.

pub mod dwt;
pub mod filters;
mod lowlevel;

use ndarray::{s, Array2, Array3, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use filters::*;
use lowlevel::{along_columns, along_rows, coldfilt, colfilter, colifilt};

pub const SUBBANDS: usize = 6;

/// Orientation of each subband index, in degrees.
pub const SUBBAND_ANGLES: [f64; SUBBANDS] = [15.0, 45.0, 75.0, -75.0, -45.0, -15.0];

/// Subband pairs produced by one quad-to-complex conversion:
/// (vertical highpass / horizontal lowpass), (lowpass / highpass), (both high).
const PAIR_HORIZONTAL: (usize, usize) = (0, 5);
const PAIR_VERTICAL: (usize, usize) = (2, 3);
const PAIR_DIAGONAL: (usize, usize) = (1, 4);

/// Complex coefficients of one plane.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    /// `highpasses[ℓ - 1]` holds level `ℓ` as `(subband, row, col)`; finest first.
    pub highpasses: Vec<Array3<Complex64>>,
    /// Real lowpass residual after the last level.
    pub lowpass: Array2<f64>,
}

/// Channel-fused coefficient magnitudes; same layout as [`WaveletPyramid`].
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudePyramid {
    pub levels: Vec<Array3<f64>>,
    pub lowpass: Array2<f64>,
}

impl WaveletPyramid {
    pub fn levels(&self) -> usize {
        self.highpasses.len()
    }

    /// Sum of squared magnitudes per (level, subband), level-major.
    pub fn subband_energies(&self) -> Vec<f64> {
        self.highpasses
            .iter()
            .flat_map(|level| {
                (0..SUBBANDS).map(move |b| {
                    level
                        .slice(s![b, .., ..])
                        .iter()
                        .map(Complex64::norm_sqr)
                        .sum::<f64>()
                })
            })
            .collect()
    }

    /// Detail plus lowpass energy. The transform is close to a tight frame
    /// with unit constant, so this tracks the input energy to within ~1%.
    pub fn total_energy(&self) -> f64 {
        self.subband_energies().iter().sum::<f64>() + self.lowpass.iter().map(|v| v * v).sum::<f64>()
    }

    fn check_shape(&self) -> Result<()> {
        let levels = self.highpasses.len();
        if levels == 0 {
            return Err(Error::shape("pyramid has no levels"));
        }
        for (i, level) in self.highpasses.iter().enumerate() {
            let (bands, rows, cols) = level.dim();
            if bands != SUBBANDS {
                return Err(Error::shape(format!("level {} has {bands} subbands", i + 1)));
            }
            if i > 0 {
                let (_, pr, pc) = self.highpasses[i - 1].dim();
                if pr != 2 * rows || pc != 2 * cols {
                    return Err(Error::shape(format!(
                        "level {} is {rows}x{cols} but level {i} is {pr}x{pc}",
                        i + 1
                    )));
                }
            }
        }
        let (_, rows, cols) = self.highpasses[levels - 1].dim();
        if self.lowpass.dim() != (2 * rows, 2 * cols) {
            return Err(Error::shape(format!(
                "lowpass is {:?}, expected {}x{}",
                self.lowpass.dim(),
                2 * rows,
                2 * cols
            )));
        }
        Ok(())
    }
}

impl MagnitudePyramid {
    pub fn levels(&self) -> usize {
        self.levels.len()
    }
}

/// Combine the four corners of each 2×2 quad from the two trees into a pair
/// of complex subbands.
fn quads_to_complex(y: &Array2<f64>) -> (Array2<Complex64>, Array2<Complex64>) {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let (rows, cols) = (y.nrows() / 2, y.ncols() / 2);
    let mut minus = Array2::zeros((rows, cols));
    let mut plus = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let (a, b) = (y[[2 * r, 2 * c]], y[[2 * r, 2 * c + 1]]);
            let (cc, d) = (y[[2 * r + 1, 2 * c]], y[[2 * r + 1, 2 * c + 1]]);
            let p = Complex64::new(a, b) * scale;
            let q = Complex64::new(d, -cc) * scale;
            minus[[r, c]] = p - q;
            plus[[r, c]] = p + q;
        }
    }
    (minus, plus)
}

/// Inverse of [`quads_to_complex`].
fn complex_to_quads(w0: &Array2<Complex64>, w1: &Array2<Complex64>) -> Array2<f64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let (rows, cols) = w0.dim();
    let mut x = Array2::zeros((2 * rows, 2 * cols));
    for r in 0..rows {
        for c in 0..cols {
            let p = (w0[[r, c]] + w1[[r, c]]) * scale;
            let q = (w0[[r, c]] - w1[[r, c]]) * scale;
            x[[2 * r, 2 * c]] = p.re;
            x[[2 * r, 2 * c + 1]] = p.im;
            x[[2 * r + 1, 2 * c]] = q.im;
            x[[2 * r + 1, 2 * c + 1]] = -q.re;
        }
    }
    x
}

fn store_pair(level: &mut Array3<Complex64>, pair: (usize, usize), y: &Array2<f64>) {
    let (minus, plus) = quads_to_complex(y);
    level.slice_mut(s![pair.0, .., ..]).assign(&minus);
    level.slice_mut(s![pair.1, .., ..]).assign(&plus);
}

fn load_pair(level: &Array3<Complex64>, pair: (usize, usize)) -> Array2<f64> {
    complex_to_quads(
        &level.slice(s![pair.0, .., ..]).to_owned(),
        &level.slice(s![pair.1, .., ..]).to_owned(),
    )
}

/// Forward transform of a real plane with the default q-shift set.
///
/// Both sides must be divisible by `2^levels`.
pub fn dtcwt_forward(plane: &Array2<f64>, levels: usize) -> Result<WaveletPyramid> {
    dtcwt_forward_with(plane, levels, &QSHIFT_06)
}

/// Forward transform with an explicit q-shift set for levels ≥ 2.
pub fn dtcwt_forward_with(plane: &Array2<f64>, levels: usize, qshift: &QShift) -> Result<WaveletPyramid> {
    let (rows, cols) = plane.dim();
    if levels == 0 {
        return Err(Error::shape("at least one decomposition level is required"));
    }
    let block = 1usize
        .checked_shl(levels as u32)
        .ok_or_else(|| Error::shape(format!("{levels} levels is too many")))?;
    if rows == 0 || cols == 0 || rows % block != 0 || cols % block != 0 {
        return Err(Error::shape(format!(
            "{rows}x{cols} plane is not divisible by 2^{levels} = {block}"
        )));
    }

    let mut highpasses = Vec::with_capacity(levels);

    // Level 1: odd-length biorthogonal filters, no decimation.
    let lo = along_columns(plane, |x| colfilter(x, &NEAR_SYM_B_H0));
    let hi = along_columns(plane, |x| colfilter(x, &NEAR_SYM_B_H1));
    let mut lolo = along_rows(&lo, |x| colfilter(x, &NEAR_SYM_B_H0));
    let mut level = Array3::zeros((SUBBANDS, rows / 2, cols / 2));
    store_pair(&mut level, PAIR_HORIZONTAL, &along_rows(&hi, |x| colfilter(x, &NEAR_SYM_B_H0)));
    store_pair(&mut level, PAIR_VERTICAL, &along_rows(&lo, |x| colfilter(x, &NEAR_SYM_B_H1)));
    store_pair(&mut level, PAIR_DIAGONAL, &along_rows(&hi, |x| colfilter(x, &NEAR_SYM_B_H1)));
    highpasses.push(level);

    // Deeper levels: q-shift filters with decimation.
    for _ in 1..levels {
        let lo = along_columns(&lolo, |x| coldfilt(x, qshift.h0b, qshift.h0a));
        let hi = along_columns(&lolo, |x| coldfilt(x, qshift.h1b, qshift.h1a));
        lolo = along_rows(&lo, |x| coldfilt(x, qshift.h0b, qshift.h0a));
        let (r, c) = lolo.dim();
        let mut level = Array3::zeros((SUBBANDS, r / 2, c / 2));
        let lowpass_rows = |m: &Array2<f64>| along_rows(m, |x| coldfilt(x, qshift.h0b, qshift.h0a));
        let highpass_rows = |m: &Array2<f64>| along_rows(m, |x| coldfilt(x, qshift.h1b, qshift.h1a));
        store_pair(&mut level, PAIR_HORIZONTAL, &lowpass_rows(&hi));
        store_pair(&mut level, PAIR_VERTICAL, &highpass_rows(&lo));
        store_pair(&mut level, PAIR_DIAGONAL, &highpass_rows(&hi));
        highpasses.push(level);
    }

    Ok(WaveletPyramid {
        highpasses,
        lowpass: lolo,
    })
}

/// Reconstruct the plane from a pyramid made by [`dtcwt_forward`].
///
/// Only used to verify the filter bank; the feature pipeline never inverts.
pub fn dtcwt_inverse(pyr: &WaveletPyramid) -> Result<Array2<f64>> {
    dtcwt_inverse_with(pyr, &QSHIFT_06)
}

/// Inverse matching [`dtcwt_forward_with`].
pub fn dtcwt_inverse_with(pyr: &WaveletPyramid, qshift: &QShift) -> Result<Array2<f64>> {
    pyr.check_shape()?;
    // Synthesis q-shift filters are the analysis filters of the other tree.
    let (g0a, g0b, g1a, g1b) = (qshift.h0b, qshift.h0a, qshift.h1b, qshift.h1a);

    let mut z = pyr.lowpass.clone();
    for level in pyr.highpasses.iter().skip(1).rev() {
        let lh = load_pair(level, PAIR_HORIZONTAL);
        let hl = load_pair(level, PAIR_VERTICAL);
        let hh = load_pair(level, PAIR_DIAGONAL);
        let y1 = along_columns(&z, |x| colifilt(x, g0b, g0a)) + along_columns(&lh, |x| colifilt(x, g1b, g1a));
        let y2 = along_columns(&hl, |x| colifilt(x, g0b, g0a)) + along_columns(&hh, |x| colifilt(x, g1b, g1a));
        z = along_rows(&y1, |x| colifilt(x, g0b, g0a)) + along_rows(&y2, |x| colifilt(x, g1b, g1a));
    }

    let level = &pyr.highpasses[0];
    let lh = load_pair(level, PAIR_HORIZONTAL);
    let hl = load_pair(level, PAIR_VERTICAL);
    let hh = load_pair(level, PAIR_DIAGONAL);
    let y1 = along_columns(&z, |x| colfilter(x, &NEAR_SYM_B_G0)) + along_columns(&lh, |x| colfilter(x, &NEAR_SYM_B_G1));
    let y2 = along_columns(&hl, |x| colfilter(x, &NEAR_SYM_B_G0)) + along_columns(&hh, |x| colfilter(x, &NEAR_SYM_B_G1));
    Ok(along_rows(&y1, |x| colfilter(x, &NEAR_SYM_B_G0)) + along_rows(&y2, |x| colfilter(x, &NEAR_SYM_B_G1)))
}

/// Per-site Euclidean norm across the three colour channels.
pub fn fuse_magnitudes(
    px: &WaveletPyramid,
    py: &WaveletPyramid,
    pz: &WaveletPyramid,
) -> Result<MagnitudePyramid> {
    for other in [py, pz] {
        let same = other.highpasses.len() == px.highpasses.len()
            && other.lowpass.dim() == px.lowpass.dim()
            && other
                .highpasses
                .iter()
                .zip(&px.highpasses)
                .all(|(a, b)| a.dim() == b.dim());
        if !same {
            return Err(Error::shape("channel pyramids differ in shape"));
        }
    }
    let levels = px
        .highpasses
        .iter()
        .zip(&py.highpasses)
        .zip(&pz.highpasses)
        .map(|((x, y), z)| {
            let mut out = Array3::zeros(x.raw_dim());
            Zip::from(&mut out).and(x).and(y).and(z).for_each(|o, a, b, c| {
                *o = (a.norm_sqr() + b.norm_sqr() + c.norm_sqr()).sqrt();
            });
            out
        })
        .collect();
    let mut lowpass = Array2::zeros(px.lowpass.raw_dim());
    Zip::from(&mut lowpass)
        .and(&px.lowpass)
        .and(&py.lowpass)
        .and(&pz.lowpass)
        .for_each(|o, a, b, c| *o = (a * a + b * b + c * c).sqrt());
    Ok(MagnitudePyramid { levels, lowpass })
}

/// `‖a − b‖₂ / ‖a‖₂`, the shift-sensitivity metric applied to subband energy
/// vectors.
pub fn relative_change(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, n), |_| StandardNormal.sample(&mut rng))
    }

    fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn pyramid_shapes() {
        let pyr = dtcwt_forward(&noise(1, 64), 6).unwrap();
        let sides: Vec<usize> = pyr.highpasses.iter().map(|l| l.dim().1).collect();
        assert_eq!(sides, vec![32, 16, 8, 4, 2, 1]);
        assert!(pyr.highpasses.iter().all(|l| l.dim().0 == 6));
        assert_eq!(pyr.lowpass.dim(), (2, 2));
    }

    #[test]
    fn rejects_incompatible_sides() {
        assert!(matches!(dtcwt_forward(&noise(1, 48), 6), Err(Error::Shape(_))));
        assert!(matches!(dtcwt_forward(&noise(1, 64), 7), Err(Error::Shape(_))));
        assert!(matches!(dtcwt_forward(&noise(1, 64), 0), Err(Error::Shape(_))));
    }

    #[test]
    fn constants_live_in_the_lowpass() {
        let plane = Array2::from_elem((64, 64), 3.25);
        let pyr = dtcwt_forward(&plane, 6).unwrap();
        let worst = pyr
            .highpasses
            .iter()
            .flat_map(|l| l.iter().map(|c| c.norm()))
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
        let back = dtcwt_inverse(&pyr).unwrap();
        assert!(max_abs_diff(&back, &plane) < 1e-10);
    }

    #[test]
    fn reconstruction_is_perfect() {
        for seed in 0..5 {
            let plane = noise(seed, 64);
            let back = dtcwt_inverse(&dtcwt_forward(&plane, 6).unwrap()).unwrap();
            assert!(max_abs_diff(&back, &plane) < 1e-8);
        }
        let rect = Array2::from_shape_fn((32, 64), |(r, c)| ((r * 7 + c * 3) % 11) as f64);
        let back = dtcwt_inverse(&dtcwt_forward(&rect, 3).unwrap()).unwrap();
        assert!(max_abs_diff(&back, &rect) < 1e-8);
    }

    #[test]
    fn fourteen_tap_set_also_reconstructs() {
        let plane = noise(7, 64);
        let pyr = dtcwt_forward_with(&plane, 6, &QSHIFT_B).unwrap();
        let back = dtcwt_inverse_with(&pyr, &QSHIFT_B).unwrap();
        assert!(max_abs_diff(&back, &plane) < 1e-8);
    }

    #[test]
    fn transform_is_linear() {
        let (x, y) = (noise(2, 64), noise(3, 64));
        let combo = &x * 2.5 - &y * 0.75;
        let (px, py, pc) = (
            dtcwt_forward(&x, 6).unwrap(),
            dtcwt_forward(&y, 6).unwrap(),
            dtcwt_forward(&combo, 6).unwrap(),
        );
        for ((a, b), c) in px.highpasses.iter().zip(&py.highpasses).zip(&pc.highpasses) {
            for ((u, v), w) in a.iter().zip(b).zip(c) {
                assert!((u * 2.5 - v * 0.75 - w).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn energy_is_nearly_preserved() {
        for seed in 10..15 {
            let plane = noise(seed, 64);
            let input: f64 = plane.iter().map(|v| v * v).sum();
            let ratio = dtcwt_forward(&plane, 6).unwrap().total_energy() / input;
            assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");
        }
    }

    #[test]
    fn malformed_pyramid_is_rejected() {
        let mut pyr = dtcwt_forward(&noise(4, 64), 6).unwrap();
        pyr.lowpass = Array2::zeros((3, 3));
        assert!(matches!(dtcwt_inverse(&pyr), Err(Error::Shape(_))));
        let mut pyr = dtcwt_forward(&noise(4, 64), 6).unwrap();
        pyr.highpasses[2] = Array3::zeros((5, 8, 8));
        assert!(matches!(dtcwt_inverse(&pyr), Err(Error::Shape(_))));
    }

    #[test]
    fn fusion_examples() {
        let zero = dtcwt_forward(&Array2::zeros((8, 8)), 2).unwrap();
        let fused = fuse_magnitudes(&zero, &zero, &zero).unwrap();
        assert!(fused.levels.iter().all(|l| l.iter().all(|&v| v == 0.0)));

        let mut px = zero.clone();
        px.highpasses[0][[1, 0, 0]] = Complex64::new(3.0, 4.0);
        let fused = fuse_magnitudes(&px, &zero, &zero).unwrap();
        assert_eq!(fused.levels[0][[1, 0, 0]], 5.0);

        let other = dtcwt_forward(&Array2::zeros((16, 16)), 2).unwrap();
        assert!(matches!(fuse_magnitudes(&zero, &other, &zero), Err(Error::Shape(_))));
    }

    #[test]
    fn fused_magnitude_dominates_each_channel() {
        let p: Vec<WaveletPyramid> = (20..23).map(|s| dtcwt_forward(&noise(s, 32), 4).unwrap()).collect();
        let fused = fuse_magnitudes(&p[0], &p[1], &p[2]).unwrap();
        for (l, level) in fused.levels.iter().enumerate() {
            for (idx, &m) in level.indexed_iter() {
                let largest = p.iter().map(|c| c.highpasses[l][idx].norm()).fold(0.0, f64::max);
                assert!(m >= largest);
            }
        }
    }

    fn reference_plane() -> Array2<f64> {
        Array2::from_shape_fn((64, 64), |(r, c)| {
            (0.3 * r as f64).sin() + (0.17 * c as f64).cos() + ((r * c) % 7) as f64 / 7.0
        })
    }

    /// Values produced by the reference `dtcwt` toolbox (near_sym_b, qshift_06)
    /// on [`reference_plane`].
    #[test]
    fn matches_reference_toolbox() {
        let pyr = dtcwt_forward(&reference_plane(), 6).unwrap();
        let expected: [(usize, usize, usize, [(f64, f64); 6]); 3] = [
            (0, 3, 5, [
                (0.388029536489611, -0.18869449968392585),
                (0.019148605797622793, -0.036065749800564845),
                (-0.10178977895460732, 0.06309503840286272),
                (-0.12465166872908127, 0.08715427280388625),
                (0.05078355224464642, -0.06762867090682217),
                (-0.03584603400396533, 0.2351888294079579),
            ]),
            (2, 1, 6, [
                (-1.835341753573763, 0.1087884750797149),
                (0.0, 0.07691663739646049),
                (0.002364053227379523, 0.03973675469802732),
                (0.03501500056637374, -0.011121355767243248),
                (-0.019447987953306135, -0.013973848850071621),
                (0.1040667209480608, -1.8440990561136252),
            ]),
            (5, 0, 0, [
                (-4.459907715354908, -0.2368739096185224),
                (0.0, 0.014075121033076099),
                (-3.1548653791071892, -5.846191483242115),
                (-5.82330964931494, 3.1548653791071866),
                (-0.00451708752224079, 0.0),
                (-0.21399207569134227, -4.459907715354905),
            ]),
        ];
        for (level, r, c, bands) in expected {
            for (b, (re, im)) in bands.iter().enumerate() {
                let got = pyr.highpasses[level][[b, r, c]];
                assert!((got.re - re).abs() < 1e-12 && (got.im - im).abs() < 1e-12, "{level} {b}: {got}");
            }
        }
        let lowpass = [17.06234235713112, 8.789323278474614, 8.769883662565004, 0.4570446843038205];
        for (got, want) in pyr.lowpass.iter().zip(lowpass) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    fn stripes(angle_deg: f64, period: f64) -> Array2<f64> {
        let t = angle_deg.to_radians();
        Array2::from_shape_fn((64, 64), |(r, c)| {
            (2.0 * std::f64::consts::PI * (r as f64 * t.sin() + c as f64 * t.cos()) / period).cos()
        })
    }

    #[test]
    fn oriented_stripes_excite_their_subband() {
        for (angle, band) in [(45.0, 1), (-45.0, 4)] {
            let pyr = dtcwt_forward(&stripes(angle, 8.0), 6).unwrap();
            let energies = pyr.subband_energies();
            let level = (0..6)
                .max_by(|&a, &b| {
                    let ea: f64 = energies[6 * a..6 * a + 6].iter().sum();
                    let eb: f64 = energies[6 * b..6 * b + 6].iter().sum();
                    ea.total_cmp(&eb)
                })
                .unwrap();
            let shares = &energies[6 * level..6 * level + 6];
            let best = (0..6).max_by(|&a, &b| shares[a].total_cmp(&shares[b])).unwrap();
            assert_eq!(best, band, "angle {angle}: {shares:?}");
            assert_eq!(SUBBAND_ANGLES[best], angle);
        }
    }

    #[test]
    fn impulse_energy_is_nearly_shift_invariant() {
        let impulse = |r: usize, c: usize| {
            let mut x = Array2::zeros((64, 64));
            x[[r, c]] = 1.0;
            x
        };
        let (a, b) = (impulse(32, 32), impulse(33, 32));
        let cwt = relative_change(
            &dtcwt_forward(&a, 6).unwrap().subband_energies(),
            &dtcwt_forward(&b, 6).unwrap().subband_energies(),
        );
        let dwt = relative_change(
            &dwt::dwt_forward(&a, 6).unwrap().subband_energies(),
            &dwt::dwt_forward(&b, 6).unwrap().subband_energies(),
        );
        assert!(cwt < 0.05, "dual tree {cwt}");
        assert!(dwt > 0.05, "dwt {dwt}");
    }
}
