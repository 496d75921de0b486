//! Small numerical kernels: compensated summation and the scaled exponential integral.

/// Neumaier-compensated sum.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `e^x E_1(x)` for `x > 0`.
///
/// Power series for `x <= 1`, modified Lentz continued fraction otherwise.
/// Relative accuracy is near machine precision on the whole range.
pub fn scaled_exp1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
        let mut term = 1.0;
        let mut acc = 0.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = term / k as f64;
            acc += add;
            if add.abs() < 1e-17 * acc.abs() {
                break;
            }
        }
        (-EULER_GAMMA - x.ln() - acc) * x.exp()
    } else {
        // e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    }
}
