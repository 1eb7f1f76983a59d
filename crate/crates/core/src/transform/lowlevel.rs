//! One-dimensional filtering kernels of the dual-tree transform.
//!
//! All three kernels use half-sample symmetric extension (the end samples
//! are repeated) and keep only the outputs unaffected by the extension.

use ndarray::{Array2, Axis};

/// Index into a length-`n` signal after half-sample symmetric extension.
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    (if m >= n { 2 * n - 1 - m } else { m }) as usize
}

/// Valid part of the full convolution `x * h`; `x.len() - h.len() + 1` samples.
fn convolve_valid(x: &[f64], h: &[f64]) -> Vec<f64> {
    let m = h.len();
    debug_assert!(x.len() >= m);
    (0..=x.len() - m)
        .map(|i| {
            h.iter()
                .enumerate()
                .map(|(k, &hk)| hk * x[i + m - 1 - k])
                .sum()
        })
        .collect()
}

fn even_taps(h: &[f64]) -> Vec<f64> {
    h.iter().step_by(2).copied().collect()
}

fn odd_taps(h: &[f64]) -> Vec<f64> {
    h.iter().skip(1).step_by(2).copied().collect()
}

fn same_sign(ha: &[f64], hb: &[f64]) -> bool {
    ha.iter().zip(hb).map(|(a, b)| a * b).sum::<f64>() > 0.0
}

/// Undecimated filtering with an odd-length filter; output length equals
/// input length.
pub(crate) fn colfilter(x: &[f64], h: &[f64]) -> Vec<f64> {
    debug_assert!(h.len() % 2 == 1);
    let half = (h.len() / 2) as isize;
    let n = x.len();
    let ext: Vec<f64> = (-half..n as isize + half).map(|i| x[reflect(i, n)]).collect();
    convolve_valid(&ext, h)
}

/// Decimate by two with the q-shift pair; `ha` runs on one phase and `hb`
/// on the other, and the two results interleave. Input length must be a
/// multiple of 4.
pub(crate) fn coldfilt(x: &[f64], ha: &[f64], hb: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = ha.len();
    debug_assert!(n % 4 == 0 && m % 2 == 0 && hb.len() == m);
    let ext: Vec<f64> = (0..n + 2 * m)
        .map(|j| x[reflect(j as isize - m as isize, n)])
        .collect();
    let t: Vec<usize> = (5..n + 2 * m - 2).step_by(4).collect();
    let pick = |offset: usize| -> Vec<f64> { t.iter().map(|&ti| ext[ti - offset]).collect() };

    let (hao, hae, hbo, hbe) = (even_taps(ha), odd_taps(ha), even_taps(hb), odd_taps(hb));
    let ya: Vec<f64> = convolve_valid(&pick(1), &hao)
        .into_iter()
        .zip(convolve_valid(&pick(3), &hae))
        .map(|(a, b)| a + b)
        .collect();
    let yb: Vec<f64> = convolve_valid(&pick(0), &hbo)
        .into_iter()
        .zip(convolve_valid(&pick(2), &hbe))
        .map(|(a, b)| a + b)
        .collect();

    let (first, second) = if same_sign(ha, hb) { (ya, yb) } else { (yb, ya) };
    let mut out = Vec::with_capacity(n / 2);
    for (a, b) in first.into_iter().zip(second) {
        out.push(a);
        out.push(b);
    }
    out
}

/// Interpolate by two with the q-shift pair; inverse of [`coldfilt`] when
/// used with the synthesis filters.
pub(crate) fn colifilt(x: &[f64], ha: &[f64], hb: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = ha.len();
    debug_assert!(n % 2 == 0 && m % 2 == 0 && hb.len() == m);
    let half = m / 2;
    let ext: Vec<f64> = (0..n + 2 * half)
        .map(|j| x[reflect(j as isize - half as isize, n)])
        .collect();
    let (hao, hae, hbo, hbe) = (even_taps(ha), odd_taps(ha), even_taps(hb), odd_taps(hb));
    let swap = !same_sign(ha, hb);
    let pick = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| ext[i]).collect() };

    let phases: [Vec<f64>; 4] = if half % 2 == 0 {
        let t: Vec<usize> = (3..n + m).step_by(2).collect();
        let (ta, tb): (Vec<usize>, Vec<usize>) = if swap {
            (t.iter().map(|v| v - 1).collect(), t.clone())
        } else {
            (t.clone(), t.iter().map(|v| v - 1).collect())
        };
        let shift2 = |v: &[usize]| -> Vec<usize> { v.iter().map(|i| i - 2).collect() };
        [
            convolve_valid(&pick(&shift2(&tb)), &hae),
            convolve_valid(&pick(&shift2(&ta)), &hbe),
            convolve_valid(&pick(&tb), &hao),
            convolve_valid(&pick(&ta), &hbo),
        ]
    } else {
        let t: Vec<usize> = (2..n + m - 1).step_by(2).collect();
        let (ta, tb): (Vec<usize>, Vec<usize>) = if swap {
            (t.iter().map(|v| v - 1).collect(), t.clone())
        } else {
            (t.clone(), t.iter().map(|v| v - 1).collect())
        };
        [
            convolve_valid(&pick(&tb), &hao),
            convolve_valid(&pick(&ta), &hbo),
            convolve_valid(&pick(&tb), &hae),
            convolve_valid(&pick(&ta), &hbe),
        ]
    };
    let mut out = vec![0.0; 2 * n];
    for (phase, values) in phases.iter().enumerate() {
        for (i, &v) in values.iter().enumerate() {
            out[4 * i + phase] = v;
        }
    }
    out
}

/// Apply a 1-D kernel down every column.
pub(crate) fn along_columns(x: &Array2<f64>, f: impl Fn(&[f64]) -> Vec<f64>) -> Array2<f64> {
    let cols: Vec<Vec<f64>> = x.axis_iter(Axis(1)).map(|c| f(&c.to_vec())).collect();
    let rows = cols.first().map_or(0, Vec::len);
    Array2::from_shape_fn((rows, cols.len()), |(r, c)| cols[c][r])
}

/// Apply a 1-D kernel along every row.
pub(crate) fn along_rows(x: &Array2<f64>, f: impl Fn(&[f64]) -> Vec<f64>) -> Array2<f64> {
    let rows: Vec<Vec<f64>> = x.axis_iter(Axis(0)).map(|r| f(&r.to_vec())).collect();
    let cols = rows.first().map_or(0, Vec::len);
    Array2::from_shape_fn((rows.len(), cols), |(r, c)| rows[r][c])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_repeats_end_samples() {
        let idx: Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(idx, vec![2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
    }

    #[test]
    fn colfilter_delta_filter_is_identity() {
        let x = [1.0, -2.0, 3.5, 0.25];
        assert_eq!(colfilter(&x, &[0.0, 1.0, 0.0]), x.to_vec());
        // Symmetric extension makes a 3-tap average keep constants.
        let c = colfilter(&[2.0; 5], &[0.25, 0.5, 0.25]);
        assert!(c.iter().all(|&v| (v - 2.0).abs() < 1e-15));
    }

    #[test]
    fn decimation_halves_and_interpolation_doubles() {
        let x: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        let h = [0.1, 0.2, 0.3, 0.3, 0.2, 0.1];
        let hr: Vec<f64> = h.iter().rev().copied().collect();
        assert_eq!(coldfilt(&x, &h, &hr).len(), 8);
        assert_eq!(colifilt(&x, &h, &hr).len(), 32);
    }
}
