//! Log-gamma on the complex plane and the regularized incomplete gamma.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln(2π)/2
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this real part the shift to the Lanczos region is done by reflection.
const REFLECTION_CUTOFF: f64 = -1000.0;

const POLE_TOL: f64 = 1e-12;

/// Principal branch of log Γ(z).
///
/// Satisfies `log_gamma(z + 1) = ln z + log_gamma(z)` away from the
/// negative real axis. Fails with [`Error::GammaPole`] within `1e-12` of a
/// non-positive integer.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if is_pole(z) {
        return Err(Error::GammaPole { re: z.re, im: z.im });
    }
    Ok(log_gamma_unchecked(z))
}

fn is_pole(z: Complex64) -> bool {
    z.re <= 0.5 && z.im.abs() < POLE_TOL && (z.re - z.re.round()).abs() < POLE_TOL
}

/// Same as [`log_gamma`] but returns `None` at poles. Used on hot paths
/// where a pole in a denominator simply means a zero factor.
#[inline]
pub(crate) fn log_gamma_opt(z: Complex64) -> Option<Complex64> {
    if is_pole(z) {
        None
    } else {
        Some(log_gamma_unchecked(z))
    }
}

fn log_gamma_unchecked(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        return lanczos(z);
    }
    if z.re < REFLECTION_CUTOFF {
        // log Γ(z) = ln π − ln sin(πz) − log Γ(1 − z); branch of the imaginary
        // part is not normalized here.
        let s = (z * PI).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - lanczos(Complex64::new(1.0, 0.0) - z);
    }
    // upward recurrence keeps the principal branch
    let shift = (0.5 - z.re).ceil() as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..shift {
        acc += (z + j as f64).ln();
    }
    lanczos(z + shift as f64) - acc
}

fn lanczos(z: Complex64) -> Complex64 {
    let zm1 = z - 1.0;
    let mut series = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += *c / (zm1 + i as f64);
    }
    let t = zm1 + LANCZOS_G + 0.5;
    (zm1 + 0.5) * t.ln() - t + HALF_LN_2PI + series.ln()
}

/// ln Γ(x) for real x; for negative non-integer x this is ln|Γ(x)|.
pub fn ln_gamma(x: f64) -> f64 {
    log_gamma_unchecked(Complex64::new(x, 0.0)).re
}

/// Regularized lower incomplete gamma P(a, x).
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("reg_lower_gamma: a = {a} must be > 0")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("reg_lower_gamma: x = {x} must be >= 0")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    statrs::function::gamma::checked_gamma_lr(a, x)
        .map(|p| p.clamp(0.0, 1.0))
        .map_err(|e| Error::Domain(format!("reg_lower_gamma({a}, {x}): {e}")))
}
