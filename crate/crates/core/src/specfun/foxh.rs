//! Bivariate Fox H-function as a double Mellin–Barnes integral.

use super::mellin::{integrate_plane, ContourPolicy, ContourResult, GammaFactor};
use crate::error::{Error, Result};

/// Gamma factors of `Φ(s, t)`: `outer_factors` couple both variables,
/// `s_factors` and `t_factors` depend on one variable each.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct BivariateFoxHSpec {
    pub outer_factors: Vec<GammaFactor>,
    pub s_factors: Vec<GammaFactor>,
    pub t_factors: Vec<GammaFactor>,
}

impl BivariateFoxHSpec {
    pub fn validate(&self) -> Result<()> {
        if self.s_factors.iter().any(|f| f.coef_t != 0.0) {
            return Err(Error::Domain("s-factor depends on t".into()));
        }
        if self.t_factors.iter().any(|f| f.coef_s != 0.0) {
            return Err(Error::Domain("t-factor depends on s".into()));
        }
        let all = self.outer_factors.iter().chain(&self.s_factors).chain(&self.t_factors);
        for f in all {
            if ![f.offset, f.coef_s, f.coef_t].iter().all(|v| v.is_finite()) {
                return Err(Error::Domain("Fox-H factor with non-finite entries".into()));
            }
        }
        Ok(())
    }

    /// Exchanges the roles of the two variables.
    pub fn swapped(&self) -> Self {
        Self {
            outer_factors: self.outer_factors.iter().map(|f| f.swapped()).collect(),
            s_factors: self.t_factors.iter().map(|f| f.swapped()).collect(),
            t_factors: self.s_factors.iter().map(|f| f.swapped()).collect(),
        }
    }

    fn all_factors(&self) -> Vec<GammaFactor> {
        self.outer_factors
            .iter()
            .chain(&self.s_factors)
            .chain(&self.t_factors)
            .copied()
            .collect()
    }
}

/// `(1/2πi)² ∬ Φ(s,t) x1^{-s} x2^{-t} ds dt`.
pub fn fox_h_bivariate(
    spec: &BivariateFoxHSpec,
    x1: f64,
    x2: f64,
    policy: &ContourPolicy,
) -> Result<f64> {
    if !(x1 > 0.0 && x2 > 0.0) || !x1.is_finite() || !x2.is_finite() {
        return Err(Error::Domain(format!("Fox-H arguments must be positive: ({x1}, {x2})")));
    }
    Ok(fox_h_bivariate_ln(spec, x1.ln(), x2.ln(), policy)?.value)
}

/// [`fox_h_bivariate`] with log arguments and contour metadata.
pub fn fox_h_bivariate_ln(
    spec: &BivariateFoxHSpec,
    ln_x1: f64,
    ln_x2: f64,
    policy: &ContourPolicy,
) -> Result<ContourResult> {
    spec.validate()?;
    integrate_plane(&spec.all_factors(), ln_x1, ln_x2, policy)
}
