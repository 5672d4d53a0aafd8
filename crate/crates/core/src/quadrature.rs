//! Adaptive Gauss-Kronrod (7/15) integration of complex-valued integrands.
//! Serves as the independent check on the closed-form aperture integrals.

// tabulated nodes and weights are quoted to more digits than an f64 holds
#![allow(clippy::excessive_precision)]

use num_complex::Complex64;

use crate::error::{Error, Result};

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

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Kronrod panel: returns (kronrod estimate, |kronrod - gauss|, sum of |f| weights).
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let pair = f1 + f2;
        kronrod += pair * WGK[j];
        abs_sum += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (
        kronrod * half,
        ((kronrod - gauss) * half).norm(),
        abs_sum * half.abs(),
    )
}

/// Integrate `f` over `[a, b]`, pre-split into `panels` equal pieces, each
/// refined by bisection until its error estimate is below its share of
/// `abs_tol`. Fails once more than `max_intervals` intervals have been
/// processed.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Complex64> {
    if !(abs_tol > 0.0) {
        return Err(Error::invalid(format!(
            "quadrature tolerance must be positive, got {abs_tol}"
        )));
    }
    let panels = panels.max(1);
    let width = b - a;
    let mut total = Complex64::new(0.0, 0.0);
    let mut processed = 0usize;
    let mut stack: Vec<(f64, f64)> = Vec::new();
    for p in (0..panels).rev() {
        let lo = a + width * (p as f64 / panels as f64);
        let hi = if p + 1 == panels {
            b
        } else {
            a + width * ((p + 1) as f64 / panels as f64)
        };
        stack.push((lo, hi));
    }
    while let Some((lo, hi)) = stack.pop() {
        processed += 1;
        if processed > max_intervals {
            return Err(Error::Convergence(format!(
                "adaptive quadrature exceeded {max_intervals} intervals"
            )));
        }
        let (value, err, abs_sum) = gk15(&f, lo, hi);
        let share = abs_tol * ((hi - lo) / width).abs();
        let floor = 50.0 * f64::EPSILON * abs_sum;
        let mid = 0.5 * (lo + hi);
        if err <= share.max(floor) || mid <= lo || mid >= hi {
            total += value;
        } else {
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    Ok(total)
}
