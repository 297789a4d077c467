//! Adaptive Gauss–Kronrod (7/15) quadrature by bisection of the interval
//! with the largest error estimate. Deterministic: segments stay in
//! positional order and are summed left to right.

use crate::error::Result;

// Kronrod abscissae (positive half, last entry is the centre) and weights.
#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
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

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct QuadOutcome {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<Segment>
where
    F: Fn(f64) -> Result<f64>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx)?;
        let f2 = f(centre + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment { a, b, value, error })
}

fn totals(segs: &[Segment]) -> (f64, f64) {
    segs.iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
}

/// Integrate `f` over `[a, b]`. Swapping the bounds negates the result
/// exactly.
pub(crate) fn integrate<F>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadOutcome>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        return Ok(QuadOutcome {
            value: 0.0,
            error: 0.0,
            converged: true,
        });
    }
    if a > b {
        let r = integrate(f, b, a, abs_tol, rel_tol, max_subdivisions)?;
        return Ok(QuadOutcome {
            value: -r.value,
            ..r
        });
    }
    let mut segs = vec![gk15(f, a, b)?];
    loop {
        let (value, error) = totals(&segs);
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(QuadOutcome {
                value,
                error,
                converged: true,
            });
        }
        if segs.len() >= max_subdivisions {
            return Ok(QuadOutcome {
                value,
                error,
                converged: false,
            });
        }
        let (idx, worst) = segs
            .iter()
            .enumerate()
            .fold((0, segs[0]), |(bi, bs), (i, s)| {
                if s.error > bs.error {
                    (i, *s)
                } else {
                    (bi, bs)
                }
            });
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            return Ok(QuadOutcome {
                value,
                error,
                converged: false,
            });
        }
        let left = gk15(f, worst.a, mid)?;
        let right = gk15(f, mid, worst.b)?;
        segs[idx] = left;
        segs.insert(idx + 1, right);
    }
}
