//! Univariate Meijer G-function on the shared Mellin–Barnes engine.

use super::mellin::{
    dominant_residue, integrate_line, ContourPolicy, ContourResult, GammaFactor, PoleSide,
};
use crate::error::{Error, Result};

/// Orders and parameters of `G^{m,n}_{p,q}(x | a; b)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeijerGSpec {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl MeijerGSpec {
    pub fn new(m: usize, n: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let spec = Self { m, n, p: a.len(), q: b.len(), a, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.p || self.b.len() != self.q {
            return Err(Error::Domain(format!(
                "Meijer-G parameter lengths ({}, {}) do not match orders p = {}, q = {}",
                self.a.len(),
                self.b.len(),
                self.p,
                self.q
            )));
        }
        if self.m > self.q || self.n > self.p {
            return Err(Error::Domain(format!(
                "Meijer-G orders out of range: m = {}, n = {}, p = {}, q = {}",
                self.m, self.n, self.p, self.q
            )));
        }
        if self.a.iter().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(Error::Domain("Meijer-G parameters must be finite".into()));
        }
        Ok(())
    }

    /// Integrand `ΠΓ(b_j+s) ΠΓ(1−a_k−s) / (ΠΓ(1−b_j−s) ΠΓ(a_k+s))`.
    pub fn factors(&self) -> Vec<GammaFactor> {
        let mut f = Vec::with_capacity(self.p + self.q);
        for (j, &b) in self.b.iter().enumerate() {
            f.push(if j < self.m {
                GammaFactor::numerator(b, 1.0)
            } else {
                GammaFactor::denominator(1.0 - b, -1.0)
            });
        }
        for (k, &a) in self.a.iter().enumerate() {
            f.push(if k < self.n {
                GammaFactor::numerator(1.0 - a, -1.0)
            } else {
                GammaFactor::denominator(a, 1.0)
            });
        }
        f
    }
}

/// `G^{m,n}_{p,q}(x | a; b)` for `x > 0`.
pub fn meijer_g(spec: &MeijerGSpec, x: f64, policy: &ContourPolicy) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Meijer-G argument must be positive, got {x}")));
    }
    Ok(meijer_g_ln_arg(spec, x.ln(), policy)?.value)
}

/// Same as [`meijer_g`] with the argument given as `ln x`, for arguments
/// outside the floating-point range. Returns the full contour metadata.
pub fn meijer_g_ln_arg(
    spec: &MeijerGSpec,
    ln_x: f64,
    policy: &ContourPolicy,
) -> Result<ContourResult> {
    spec.validate()?;
    integrate_line(&spec.factors(), ln_x, policy)
}

/// Leading residue term of the expansion around `x → 0` (left poles) or
/// `x → ∞` (right poles). Returns `(value, pole location)`.
pub fn meijer_g_dominant_residue(
    spec: &MeijerGSpec,
    ln_x: f64,
    side: PoleSide,
) -> Result<(f64, f64)> {
    spec.validate()?;
    dominant_residue(&spec.factors(), ln_x, side)
}

/// `Δ(k : x) = [x/k, (x+1)/k, …, (x+k−1)/k]`.
pub fn ladder(k: usize, x: f64) -> Vec<f64> {
    (0..k).map(|j| (x + j as f64) / k as f64).collect()
}
