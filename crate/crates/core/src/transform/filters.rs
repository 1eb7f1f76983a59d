//! Filter coefficients for the dual-tree transform.
//!
//! Level 1 uses Kingsbury's near-symmetric 13/19-tap biorthogonal pair
//! ("near_sym_b"); deeper levels use one of his quarter-shift orthonormal
//! sets, the 10-tap "qshift_06" by default or the 14-tap "qshift_b". Values
//! are the double-precision tables distributed with the reference DT-CWT
//! toolbox (N. Kingsbury, Cambridge, 2000) and its Python port `dtcwt` 0.14.
//!
//! The synthesis q-shift filters are the analysis filters of the opposite
//! tree: `g0a = h0b`, `g0b = h0a`, `g1a = h1b`, `g1b = h1a`.

/// Level-1 analysis lowpass (13 taps).
#[rustfmt::skip]
pub const NEAR_SYM_B_H0: [f64; 13] = [
    -0.0017578125, 0.0, 0.022265625,
    -0.046875, -0.0482421875, 0.296875,
    0.55546875, 0.296875, -0.0482421875,
    -0.046875, 0.022265625, 0.0,
    -0.0017578125,
];

/// Level-1 analysis highpass (19 taps).
#[rustfmt::skip]
pub const NEAR_SYM_B_H1: [f64; 19] = [
    -7.062639508928571e-05, 0.0, 0.0013419015066964285,
    -0.0018833705357142855, -0.007156808035714285, 0.023856026785714284,
    0.05564313616071428, -0.05168805803571428, -0.29975760323660716,
    0.5594308035714286, -0.29975760323660716, -0.05168805803571428,
    0.05564313616071428, 0.023856026785714284, -0.007156808035714285,
    -0.0018833705357142855, 0.0013419015066964285, 0.0,
    -7.062639508928571e-05,
];

/// Level-1 synthesis lowpass (19 taps).
#[rustfmt::skip]
pub const NEAR_SYM_B_G0: [f64; 19] = [
    7.062639508928571e-05, 0.0, -0.0013419015066964285,
    -0.0018833705357142855, 0.007156808035714285, 0.023856026785714284,
    -0.05564313616071428, -0.05168805803571428, 0.29975760323660716,
    0.5594308035714286, 0.29975760323660716, -0.05168805803571428,
    -0.05564313616071428, 0.023856026785714284, 0.007156808035714285,
    -0.0018833705357142855, -0.0013419015066964285, 0.0,
    7.062639508928571e-05,
];

/// Level-1 synthesis highpass (13 taps).
#[rustfmt::skip]
pub const NEAR_SYM_B_G1: [f64; 13] = [
    -0.0017578125, 0.0, 0.022265625,
    0.046875, -0.0482421875, -0.296875,
    0.55546875, -0.296875, -0.0482421875,
    0.046875, 0.022265625, 0.0,
    -0.0017578125,
];

/// Tree-a analysis lowpass (14 taps).
#[rustfmt::skip]
pub const QSHIFT_B_H0A: [f64; 14] = [
    0.003253142763653182, -0.00388321199915849, 0.03466034684485349,
    -0.03887280126882779, -0.11720388769911527, 0.27529538466888204,
    0.7561456438925225, 0.5688104207121227, 0.011866092033797,
    -0.1067118046866654, 0.023825384794920298, 0.01702522388155399,
    -0.005439475937274115, -0.004556895628475491,
];

/// Tree-b analysis lowpass, the time reverse of tree a.
#[rustfmt::skip]
pub const QSHIFT_B_H0B: [f64; 14] = [
    -0.004556895628475491, -0.005439475937274115, 0.01702522388155399,
    0.023825384794920298, -0.1067118046866654, 0.011866092033797,
    0.5688104207121227, 0.7561456438925225, 0.27529538466888204,
    -0.11720388769911527, -0.03887280126882779, 0.03466034684485349,
    -0.00388321199915849, 0.003253142763653182,
];

/// Tree-a analysis highpass.
#[rustfmt::skip]
pub const QSHIFT_B_H1A: [f64; 14] = [
    -0.004556895628475491, 0.005439475937274115, 0.01702522388155399,
    -0.023825384794920298, -0.1067118046866654, -0.011866092033797,
    0.5688104207121227, -0.7561456438925225, 0.27529538466888204,
    0.11720388769911527, -0.03887280126882779, -0.03466034684485349,
    -0.00388321199915849, -0.003253142763653182,
];

/// Tree-b analysis highpass.
#[rustfmt::skip]
pub const QSHIFT_B_H1B: [f64; 14] = [
    -0.003253142763653182, -0.00388321199915849, -0.03466034684485349,
    -0.03887280126882779, 0.11720388769911527, 0.27529538466888204,
    -0.7561456438925225, 0.5688104207121227, -0.011866092033797,
    -0.1067118046866654, -0.023825384794920298, 0.01702522388155399,
    0.005439475937274115, -0.004556895628475491,
];

/// Tree-a analysis lowpass (10 taps, 6 non-zero).
#[rustfmt::skip]
pub const QSHIFT_06_H0A: [f64; 10] = [
    0.03516383657149474, 0.0, -0.08832942445107285,
    0.23389032060723564, 0.7602723690661257, 0.5875182977235605,
    0.0, -0.11430183714424873, 0.0,
    0.0,
];

/// Tree-b analysis lowpass.
#[rustfmt::skip]
pub const QSHIFT_06_H0B: [f64; 10] = [
    0.0, 0.0, -0.11430183714424873,
    0.0, 0.5875182977235605, 0.7602723690661257,
    0.23389032060723564, -0.08832942445107285, 0.0,
    0.03516383657149474,
];

/// Tree-a analysis highpass.
#[rustfmt::skip]
pub const QSHIFT_06_H1A: [f64; 10] = [
    0.0, 0.0, -0.11430183714424873,
    0.0, 0.5875182977235605, -0.7602723690661257,
    0.23389032060723564, 0.08832942445107285, 0.0,
    -0.03516383657149474,
];

/// Tree-b analysis highpass.
#[rustfmt::skip]
pub const QSHIFT_06_H1B: [f64; 10] = [
    -0.03516383657149474, 0.0, 0.08832942445107285,
    0.23389032060723564, -0.7602723690661257, 0.5875182977235605,
    0.0, -0.11430183714424873, 0.0,
    0.0,
];

/// Analysis filters of one q-shift set; synthesis reuses them crosswise.
#[derive(Debug, Clone, Copy)]
pub struct QShift {
    pub h0a: &'static [f64],
    pub h0b: &'static [f64],
    pub h1a: &'static [f64],
    pub h1b: &'static [f64],
}

/// 10,10-tap set with an exact highpass zero at DC; the default.
pub const QSHIFT_06: QShift = QShift {
    h0a: &QSHIFT_06_H0A,
    h0b: &QSHIFT_06_H0B,
    h1a: &QSHIFT_06_H1A,
    h1b: &QSHIFT_06_H1B,
};

/// 14-tap set. Sharper, but its highpass leaks about 1e-6 of DC per level,
/// so constant inputs produce small non-zero detail coefficients.
pub const QSHIFT_B: QShift = QShift {
    h0a: &QSHIFT_B_H0A,
    h0b: &QSHIFT_B_H0B,
    h1a: &QSHIFT_B_H1A,
    h1b: &QSHIFT_B_H1B,
};

#[cfg(test)]
mod tests {
    use super::*;

    fn reversed<const N: usize>(h: &[f64; N]) -> Vec<f64> {
        h.iter().rev().copied().collect()
    }

    #[test]
    fn tree_b_is_time_reverse_of_tree_a() {
        assert_eq!(reversed(&QSHIFT_B_H0A), QSHIFT_B_H0B.to_vec());
        assert_eq!(reversed(&QSHIFT_B_H1A), QSHIFT_B_H1B.to_vec());
    }

    #[test]
    fn qshift_lowpasses_are_orthonormal() {
        for h in [QSHIFT_B.h0a, QSHIFT_06.h0a] {
            assert_orthonormal(h);
        }
    }

    #[test]
    fn qshift_06_highpass_annihilates_constants() {
        assert!(QSHIFT_06.h1a.iter().sum::<f64>().abs() < 1e-15);
        assert!(QSHIFT_06.h1b.iter().sum::<f64>().abs() < 1e-15);
        assert_eq!(reversed(&QSHIFT_06_H0A), QSHIFT_06_H0B.to_vec());
        assert_eq!(reversed(&QSHIFT_06_H1A), QSHIFT_06_H1B.to_vec());
    }

    fn assert_orthonormal(h: &[f64]) {
        let norm: f64 = h.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        for shift in (2..h.len()).step_by(2) {
            let dot: f64 = (0..h.len() - shift).map(|i| h[i] * h[i + shift]).sum();
            assert!(dot.abs() < 1e-12, "shift {shift}: {dot}");
        }
        let dc: f64 = h.iter().sum();
        assert!((dc - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn biorthogonal_lowpass_has_unit_dc_gain() {
        assert!((NEAR_SYM_B_H0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((NEAR_SYM_B_G0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(NEAR_SYM_B_H1.iter().sum::<f64>().abs() < 1e-12);
    }
}
