//! Adaptive Gauss-Kronrod (7/15) integration on finite intervals.

use crate::error::{MagmarError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to the absolute tolerance `tol`.
///
/// Nodes never touch the endpoints, so integrands with integrable endpoint
/// singularities (copula densities at the corners) are fine.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > tol {
        if pieces.len() >= MAX_INTERVALS {
            return Err(MagmarError::Quadrature { estimate: total, error: err });
        }
        let (idx, _) = pieces.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).expect("nonempty");
        let (lo, hi, pv, pe) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval cannot be split further in floating point.
            return Err(MagmarError::Quadrature { estimate: total, error: err });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
        if !total.is_finite() {
            return Err(MagmarError::Quadrature { estimate: total, error: err });
        }
    }
    // Re-sum to shed accumulated rounding from the running updates.
    Ok(pieces.iter().map(|p| p.2).sum())
}

/// Iterated integral of `f(x, y)` over the unit square.
pub fn integrate_unit_square<F: Fn(f64, f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    let mut inner_err = None;
    let outer = integrate(
        |x| match integrate(|y| f(x, y), 0.0, 1.0, tol * 0.1) {
            Ok(v) => v,
            Err(e) => {
                inner_err.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        1.0,
        tol,
    );
    if let Some(e) = inner_err {
        return Err(e);
    }
    outer
}
