//! Adaptive Gauss–Kronrod quadrature (7/15 points) on finite intervals and
//! on the positive half-line.

use crate::error::{Error, Result};

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadTolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self { abs: 1e-14, rel: 1e-10, max_intervals: 4000 }
    }
}

fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x)? + f(c + x)?;
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

/// Integrates `f` over `[a, b]` after splitting it into `pieces` equal
/// parts, bisecting the worst interval until the tolerance is met.
pub fn integrate<F>(mut f: F, a: f64, b: f64, pieces: usize, tol: QuadTolerance) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("quadrature limits must be finite".into()));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evals: 0 });
    }
    let pieces = pieces.max(1);
    let mut intervals: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(pieces * 4);
    let w = (b - a) / pieces as f64;
    for i in 0..pieces {
        let lo = a + w * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + w };
        let (v, e) = gk15(&mut f, lo, hi)?;
        intervals.push((lo, hi, v, e));
    }
    let mut evals = 15 * pieces;
    loop {
        let value: f64 = intervals.iter().map(|t| t.2).sum();
        let error: f64 = intervals.iter().map(|t| t.3).sum();
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(QuadResult { value, error, evals });
        }
        if intervals.len() >= tol.max_intervals {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature".into(),
                estimate: value,
                error,
            });
        }
        let (k, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, t)| if t.3 > best.1 { (i, t.3) } else { best });
        let (lo, hi, _, _) = intervals.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
        evals += 30;
    }
}

/// Integrates a nonnegative-ish `f` over `(0, ∞)` through `x = center·e^u`.
/// The `u`-window is grown from the peak until the integrand is negligible.
pub fn integrate_half_line<F>(mut f: F, center: f64, tol: QuadTolerance) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(center > 0.0) {
        return Err(Error::Domain("half-line quadrature center must be > 0".into()));
    }
    let mut g = |u: f64| -> Result<f64> {
        let x = center * u.exp();
        if x == 0.0 || !x.is_finite() {
            return Ok(0.0);
        }
        Ok(f(x)? * x)
    };
    // coarse scan for the peak
    let mut peak = 0.0f64;
    let mut peak_u = 0.0;
    let mut u = -40.0;
    while u <= 40.0 {
        let v = g(u)?.abs();
        if v > peak {
            peak = v;
            peak_u = u;
        }
        u += 1.0;
    }
    if peak == 0.0 {
        return Ok(QuadResult { value: 0.0, error: 0.0, evals: 81 });
    }
    let cut = 1e-17 * peak;
    let lo_limit = (1e-300f64 / center).ln();
    let hi_limit = (1e300f64 / center).ln();
    let edge = |g: &mut dyn FnMut(f64) -> Result<f64>, dir: f64, limit: f64| -> Result<f64> {
        let mut u = peak_u;
        let mut quiet = 0;
        loop {
            u += dir;
            if (dir < 0.0 && u <= limit) || (dir > 0.0 && u >= limit) {
                return Ok(limit);
            }
            if g(u)?.abs() < cut {
                quiet += 1;
                if quiet >= 3 {
                    return Ok(u);
                }
            } else {
                quiet = 0;
            }
        }
    };
    let lo = edge(&mut g, -1.0, lo_limit)?;
    let hi = edge(&mut g, 1.0, hi_limit)?;
    let pieces = ((hi - lo) / 2.0).ceil() as usize;
    let tol = QuadTolerance { abs: tol.abs.max(1e-16 * peak), ..tol };
    integrate(g, lo, hi, pieces, tol)
}
