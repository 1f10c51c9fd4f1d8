//! Globally adaptive 15-point Gauss–Kronrod quadrature.

#![allow(clippy::excessive_precision)]

// Kronrod abscissae on [0, 1]; odd positions (1, 3, 5, 7) are the
// 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Kronrod estimate and `|Kronrod − Gauss|` on `[a, b]`.
pub(crate) fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Integrates `f` over `[a, b]`, starting from the sub-intervals delimited
/// by `breakpoints` (points outside `(a, b)` are ignored) and repeatedly
/// bisecting the interval with the largest error estimate until the summed
/// estimate drops below `abs_tol` or `max_intervals` is reached.
///
/// The refinement order depends only on the inputs, so results are
/// bit-reproducible.
pub(crate) fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    max_intervals: usize,
) -> Integral {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    // (lo, hi, value, error)
    let mut pieces: Vec<(f64, f64, f64, f64)> = edges
        .windows(2)
        .map(|w| {
            let (v, e) = gauss_kronrod_15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();

    loop {
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if error <= abs_tol || pieces.len() >= max_intervals {
            let value = pieces.iter().map(|p| p.2).sum();
            return Integral {
                value,
                error,
                converged: error <= abs_tol,
            };
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("at least one piece");
        let (lo, hi, _, _) = pieces[worst];
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval can no longer be split in floating point
            let value = pieces.iter().map(|p| p.2).sum();
            return Integral {
                value,
                error,
                converged: false,
            };
        }
        let (lv, le) = gauss_kronrod_15(&f, lo, mid);
        let (rv, re) = gauss_kronrod_15(&f, mid, hi);
        pieces[worst] = (lo, mid, lv, le);
        pieces.push((mid, hi, rv, re));
    }
}
