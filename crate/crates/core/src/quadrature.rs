//! Globally adaptive Gauss-Kronrod (7/15) quadrature and the expectation
//! kernels built on it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::numeric;

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
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub subintervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let diff = ((kronrod - gauss) * half).abs();
    // QUADPACK-style error scaling; (200 d)^1.5 is pessimistic for coarse
    // segments and collapses quickly once the rule converges.
    let error = if diff == 0.0 {
        0.0
    } else {
        let scaled = (200.0 * diff / value.abs().max(f64::MIN_POSITIVE)).powf(1.5);
        (diff * scaled.min(1.0)).max(diff * 1e-3).max(50.0 * f64::EPSILON * value.abs())
    };
    Segment { a, b, value, error }
}

/// Adaptive integration of `f` over `[a, b]`, splitting first at `breaks`
/// (points outside the interval are ignored).
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    max_subintervals: usize,
) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::invalid(format!("bad integration interval [{a}, {b}]")));
    }
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap: BinaryHeap<Segment> = cuts.windows(2).map(|w| kronrod15(&f, w[0], w[1])).collect();
    loop {
        let total_err: f64 = heap.iter().map(|s| s.error).sum();
        if total_err <= abs_tol {
            break;
        }
        if heap.len() >= max_subintervals {
            return Err(Error::Numerical(format!(
                "quadrature did not reach {abs_tol:e} within {max_subintervals} subintervals (error {total_err:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Numerical("quadrature interval underflow".into()));
        }
        heap.push(kronrod15(&f, worst.a, mid));
        heap.push(kronrod15(&f, mid, worst.b));
    }
    let segments = heap.into_vec();
    Ok(Quadrature {
        value: numeric::sum(segments.iter().map(|s| s.value)),
        abs_error: segments.iter().map(|s| s.error).sum(),
        subintervals: segments.len(),
    })
}

/// Absolute tolerance guaranteed by [`explog_exp1`].
pub const EXPLOG_ABS_TOL: f64 = 1e-10;

/// `E[ln(c Y + 1)]` for `Y ~ Exp(1)`, i.e. `int_0^inf ln(1 + c y) e^{-y} dy`.
///
/// Integration by parts turns this into `e^{1/c} E_1(1/c)`, which is evaluated
/// with [`numeric::scaled_exp1`]. The same kernel covers `E_X[ln(c X^2 + 1)]`
/// for `X` with density `|x| e^{-x^2}` and `E[ln(c X / 2 + 1)]` for `X ~ chi^2_2`,
/// since in both cases the inner variable is unit exponential.
pub fn explog_exp1(c: f64) -> Result<f64> {
    if c.is_nan() || c < 0.0 || c.is_infinite() {
        return Err(Error::invalid(format!("explog_exp1 needs finite c >= 0, got {c}")));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    Ok(numeric::scaled_exp1(1.0 / c))
}

/// Standard-normal truncation half-width, in standard deviations.
pub const GAUSS_TRUNCATION: f64 = 10.0;
/// Absolute tolerance for Gaussian expectations.
pub const GAUSS_ABS_TOL: f64 = 1e-8;

/// `E_G[ln(1 + s (G + m)^2)]` for `G ~ N(0, 1)`, integrated over `[-10, 10]`
/// with a breakpoint at the minimum `G = -m`.
pub fn gaussian_log_expectation(s: f64, m: f64) -> Result<Quadrature> {
    if !(s.is_finite() && m.is_finite()) || s < 0.0 {
        return Err(Error::invalid(format!(
            "Gaussian log expectation needs finite s >= 0 and m (s = {s}, m = {m})"
        )));
    }
    if s == 0.0 {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
            subintervals: 0,
        });
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let f = |g: f64| {
        let u = g + m;
        (s * u * u).ln_1p() * norm * (-0.5 * g * g).exp()
    };
    // Extra breaks resolve the dip of width ~1/sqrt(s) around -m.
    let w = 1.0 / s.sqrt();
    let breaks = [-m - 10.0 * w, -m - w, -m, -m + w, -m + 10.0 * w, 0.0];
    integrate(
        f,
        -GAUSS_TRUNCATION,
        GAUSS_TRUNCATION,
        &breaks,
        GAUSS_ABS_TOL,
        4000,
    )
}
