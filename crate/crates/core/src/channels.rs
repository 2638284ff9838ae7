//! Channel statistics: best-of-K Nakagami-m RF link, D-GG turbulence with
//! pointing errors on the FSO link, and the aggregate Nakagami interference.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::specfun::{
    ladder, ln_gamma, meijer_g_ln_arg, reg_lower_gamma, ContourPolicy, MeijerGSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfLinkParams {
    pub m_rf: u32,
    /// Average SNR per user, linear.
    pub avg_snr: f64,
    pub num_users: u32,
}

impl RfLinkParams {
    pub fn validate(&self) -> Result<()> {
        if self.m_rf < 1 || self.num_users < 1 {
            return Err(Error::Config("rf: m_rf and num_users must be >= 1".into()));
        }
        if !(self.avg_snr > 0.0) || !self.avg_snr.is_finite() {
            return Err(Error::Config(format!("rf: avg_snr must be > 0, got {}", self.avg_snr)));
        }
        Ok(())
    }

    /// Rate of the per-user SNR Gamma law.
    pub fn beta(&self) -> f64 {
        self.m_rf as f64 / self.avg_snr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsoLinkParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Beam-width to jitter ratio.
    pub xi: f64,
    /// 1 for coherent detection, 2 for IM/DD.
    pub r: u32,
    /// Average electrical SNR, linear.
    pub mu_r: f64,
}

impl FsoLinkParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("xi", self.xi),
            ("mu_r", self.mu_r),
        ];
        for (k, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("fso: {k} must be > 0, got {v}")));
            }
        }
        if self.r != 1 && self.r != 2 {
            return Err(Error::Config(format!("fso: r must be 1 or 2, got {}", self.r)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceParams {
    pub num_interferers: u32,
    pub m1: f64,
    /// Average INR of a single interferer, linear.
    pub omega_i1: f64,
}

impl InterferenceParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_interferers < 1 {
            return Err(Error::Config("interference: num_interferers must be >= 1".into()));
        }
        if !(self.m1 >= 0.5) || !self.m1.is_finite() {
            return Err(Error::Config(format!("interference: m1 must be >= 0.5, got {}", self.m1)));
        }
        if !(self.omega_i1 > 0.0) || !self.omega_i1.is_finite() {
            return Err(Error::Config("interference: omega_i1 must be > 0".into()));
        }
        Ok(())
    }

    /// Shape of the aggregate INR.
    pub fn shape(&self) -> f64 {
        self.m1 * self.num_interferers as f64
    }

    /// Rate of the aggregate INR.
    pub fn rate(&self) -> f64 {
        self.m1 / self.omega_i1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub rf: RfLinkParams,
    pub fso: FsoLinkParams,
    pub intf: InterferenceParams,
    /// Outage threshold, linear.
    pub gamma_th: f64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.rf.validate()?;
        self.fso.validate()?;
        self.intf.validate()?;
        if !(self.gamma_th >= 0.0) || !self.gamma_th.is_finite() {
            return Err(Error::Config(format!("gamma_th must be >= 0, got {}", self.gamma_th)));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- RF link

/// `ζ[n1][n2]`: coefficient of `x^{n2}` in `(Σ_{l<m} x^l/l!)^{n1}`.
pub fn zeta_table(k: u32, m: u32) -> Vec<Vec<f64>> {
    let m = m.max(1) as usize;
    let base: Vec<f64> = {
        let mut v = vec![1.0; m];
        for l in 1..m {
            v[l] = v[l - 1] / l as f64;
        }
        v
    };
    let mut rows = Vec::with_capacity(k as usize);
    let mut cur = vec![1.0];
    for _ in 0..k {
        rows.push(cur.clone());
        let mut next = vec![0.0; cur.len() + m - 1];
        for (i, c) in cur.iter().enumerate() {
            for (j, b) in base.iter().enumerate() {
                next[i + j] += c * b;
            }
        }
        cur = next;
    }
    rows
}

/// One term `A1 · P(shape, B0 γ)` of the best-of-K CDF expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RfTerm {
    pub n1: u32,
    pub n2: u32,
    pub a1: f64,
    pub b0: f64,
}

impl RfTerm {
    /// `m + n2`, the Gamma shape of the term.
    pub fn shape(&self, m_rf: u32) -> u32 {
        m_rf + self.n2
    }
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Expansion `F(γ) = Σ A1 P(m+n2, B0 γ)` of `[P(m, βγ)]^K`.
pub fn rf_terms(p: &RfLinkParams) -> Vec<RfTerm> {
    let (k, m) = (p.num_users, p.m_rf);
    let beta = p.beta();
    let zeta = zeta_table(k, m);
    let mut out = Vec::new();
    for n1 in 0..k {
        for (n2, &z) in zeta[n1 as usize].iter().enumerate() {
            let n2 = n2 as u32;
            let sign = if n1 % 2 == 0 { 1.0 } else { -1.0 };
            let ln_mag = (k as f64).ln() + ln_gamma((m + n2) as f64) - ln_gamma(m as f64)
                + ln_binomial(k - 1, n1)
                + z.ln()
                - (n2 + m) as f64 * ((n1 + 1) as f64).ln();
            out.push(RfTerm { n1, n2, a1: sign * ln_mag.exp(), b0: beta * (n1 + 1) as f64 });
        }
    }
    out
}

/// CDF of the best of K i.i.d. Nakagami-m SNRs through the finite expansion.
pub fn rf_cdf_best(gamma: f64, p: &RfLinkParams) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let s: f64 = rf_terms(p)
        .iter()
        .map(|t| t.a1 * reg_lower_gamma(t.shape(p.m_rf) as f64, t.b0 * gamma).unwrap_or(1.0))
        .sum();
    s.clamp(0.0, 1.0)
}

/// Density of the best of K users, `K F^{K−1} f`.
pub fn rf_pdf_best(gamma: f64, p: &RfLinkParams) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let m = p.m_rf as f64;
    let beta = p.beta();
    let single = (m * (beta * gamma).ln() - beta * gamma - ln_gamma(m)).exp() / gamma;
    let cdf = reg_lower_gamma(m, beta * gamma).unwrap_or(1.0);
    p.num_users as f64 * cdf.powi(p.num_users as i32 - 1) * single
}

pub fn rf_sample_best<R: Rng + ?Sized>(rng: &mut R, p: &RfLinkParams) -> f64 {
    let g = Gamma::new(p.m_rf as f64, p.avg_snr / p.m_rf as f64).expect("valid rf params");
    (0..p.num_users).map(|_| g.sample(rng)).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- FSO link

/// Constants of the D-GG SNR law after replacing `α1/α2` by `λ/σ`.
///
/// Quantities that routinely leave the floating-point range (`D2`, `z^y`,
/// `D5`) are also kept as logarithms; the `ln_*` fields are the ones used
/// in evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DggDerived {
    pub lambda: u32,
    pub sigma: u32,
    pub y: f64,
    pub z: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub ln_z: f64,
    pub ln_d2: f64,
    pub ln_d5: f64,
    pub n: usize,
    pub tau1: Vec<f64>,
    pub tau2: Vec<f64>,
    pub tau3: Vec<f64>,
    pub tau4: Vec<f64>,
    pub r: u32,
    /// `|λ/σ − α1/α2|` when it exceeds `1e-3`.
    pub approx_warning: Option<f64>,
}

impl DggDerived {
    /// `y` is an integer, so the Gauss-expanded Meijer forms apply.
    pub fn integral_y(&self) -> bool {
        (self.y - self.y.round()).abs() < 1e-9
    }

    /// `ln(D2 z^y)`, the log of the inverse scale of `(I/E[I])^y`.
    pub fn ln_scale(&self) -> f64 {
        self.ln_d2 + self.y * self.ln_z
    }
}

/// Best rational approximation `num/den` of `x > 0` with `den ≤ max_den`.
pub fn best_rational(x: f64, max_den: u32) -> (u64, u64) {
    let max_den = max_den.max(1) as u64;
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut rem = x;
    loop {
        let a = rem.floor();
        let a_int = a as u64;
        let q2 = q0 + a_int * q1;
        if q2 > max_den {
            break;
        }
        let p2 = p0 + a_int * p1;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = rem - a;
        if frac < 1e-12 || (p1 as f64 / q1 as f64 - x).abs() < 1e-13 * x {
            return (p1, q1);
        }
        rem = 1.0 / frac;
    }
    let k = (max_den - q0) / q1;
    let (bp, bq) = (p0 + k * p1, q0 + k * q1);
    let err_bound = (bp as f64 / bq as f64 - x).abs();
    let err_conv = (p1 as f64 / q1 as f64 - x).abs();
    if err_bound < err_conv {
        (bp, bq)
    } else {
        (p1, q1)
    }
}

pub fn dgg_derive(p: &FsoLinkParams, max_denominator: u32) -> Result<DggDerived> {
    p.validate()?;
    if max_denominator < 1 {
        return Err(Error::Config("max_denominator must be >= 1".into()));
    }
    let ratio = p.alpha1 / p.alpha2;
    let (lam, sig) = best_rational(ratio, max_denominator);
    let (lambda, sigma) = (lam as u32, sig as u32);
    let err = (lam as f64 / sig as f64 - ratio).abs();
    let approx_warning = (err > 1e-3).then_some(err);
    let (l, s) = (lambda as f64, sigma as f64);
    let y = p.alpha2 * l;
    let xi2 = p.xi * p.xi;

    let ln_d1 = xi2.ln() + (p.beta1 - 0.5) * s.ln() + (p.beta2 - 0.5) * l.ln()
        + (1.0 - 0.5 * (s + l)) * (2.0 * PI).ln()
        - ln_gamma(p.beta1)
        - ln_gamma(p.beta2);
    let ln_d2 = s * p.beta1.ln() + l * p.beta2.ln()
        - l * l.ln()
        - s * s.ln()
        - s * p.omega1.ln()
        - l * p.omega2.ln();
    let tau0: Vec<f64> =
        ladder(sigma as usize, p.beta1).into_iter().chain(ladder(lambda as usize, p.beta2)).collect();
    let ln_d3: f64 = tau0.iter().map(|t| ln_gamma(1.0 / y + t)).sum();
    let ln_z = ln_d1 - ln_d2 / y + ln_d3 - (1.0 + xi2).ln();

    let r = p.r as f64;
    let ln_d4 = ln_d1 + (1.0 - r) * (s + l) / 2.0 * (2.0 * PI).ln()
        + (p.beta1 + p.beta2 - 2.0) * r.ln()
        - y.ln();
    let ln_d5 = r * (ln_d2 + y * ln_z - (s + l) * r.ln());

    let mut tau1 = vec![xi2 / y];
    tau1.extend(&tau0);
    let tau2 = vec![1.0 + xi2 / y];
    let tau3 = ladder(p.r as usize, tau2[0]);
    let tau4: Vec<f64> = tau1.iter().flat_map(|&t| ladder(p.r as usize, t)).collect();
    let n = tau4.len();

    Ok(DggDerived {
        lambda,
        sigma,
        y,
        z: ln_z.exp(),
        d1: ln_d1.exp(),
        d2: ln_d2.exp(),
        d3: ln_d3.exp(),
        d4: ln_d4.exp(),
        d5: ln_d5.exp(),
        ln_z,
        ln_d2,
        ln_d5,
        n,
        tau1,
        tau2,
        tau3,
        tau4,
        r: p.r,
        approx_warning,
    })
}

/// Meijer-G parameters of the SNR density: `G^{L,0}_{1,L}(· | τ2; τ1)`.
pub fn fso_pdf_spec(d: &DggDerived) -> MeijerGSpec {
    MeijerGSpec::new(d.tau1.len(), 0, d.tau2.clone(), d.tau1.clone()).expect("consistent lengths")
}

/// Meijer-G parameters of the SNR CDF: `G^{n,1}_{r+1,n+1}(· | 1, τ3; τ4, 0)`.
pub fn fso_cdf_spec(d: &DggDerived) -> MeijerGSpec {
    let mut a = vec![1.0];
    a.extend(&d.tau3);
    let mut b = d.tau4.clone();
    b.push(0.0);
    MeijerGSpec::new(d.n, 1, a, b).expect("consistent lengths")
}

pub fn fso_pdf(gamma: f64, d: &DggDerived, p: &FsoLinkParams) -> Result<f64> {
    fso_pdf_with(gamma, d, p, &ContourPolicy::default())
}

pub fn fso_pdf_with(
    gamma: f64,
    d: &DggDerived,
    p: &FsoLinkParams,
    policy: &ContourPolicy,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("fso_pdf needs gamma > 0, got {gamma}")));
    }
    let ln_arg = d.ln_scale() + d.y / p.r as f64 * (gamma / p.mu_r).ln();
    let g = meijer_g_ln_arg(&fso_pdf_spec(d), ln_arg, policy)?.value;
    Ok((d.d1 / (p.r as f64 * gamma) * g).max(0.0))
}

pub fn fso_cdf(gamma: f64, d: &DggDerived, p: &FsoLinkParams) -> Result<f64> {
    fso_cdf_with(gamma, d, p, &ContourPolicy::default())
}

pub fn fso_cdf_with(
    gamma: f64,
    d: &DggDerived,
    p: &FsoLinkParams,
    policy: &ContourPolicy,
) -> Result<f64> {
    if gamma < 0.0 || gamma.is_nan() {
        return Err(Error::Domain(format!("fso_cdf needs gamma >= 0, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    if gamma.is_infinite() {
        return Ok(1.0);
    }
    let ln_arg = d.ln_d5 + d.y * (gamma / p.mu_r).ln();
    let g = meijer_g_ln_arg(&fso_cdf_spec(d), ln_arg, policy)?.value;
    Ok((d.d4 * g).clamp(0.0, 1.0))
}

/// `E[I]/A0` for the physical (unapproximated) parameters.
pub fn fso_mean_irradiance(p: &FsoLinkParams) -> f64 {
    let gg_mean = |alpha: f64, beta: f64, omega: f64| {
        ((omega / beta).ln() / alpha + ln_gamma(beta + 1.0 / alpha) - ln_gamma(beta)).exp()
    };
    let xi2 = p.xi * p.xi;
    gg_mean(p.alpha1, p.beta1, p.omega1) * gg_mean(p.alpha2, p.beta2, p.omega2) * xi2
        / (xi2 + 1.0)
}

/// Reusable sampler for the FSO SNR; holds the Gamma laws and `E[I]`.
#[derive(Debug, Clone)]
pub struct FsoSampler {
    gx: Gamma<f64>,
    gy: Gamma<f64>,
    p: FsoLinkParams,
    mean: f64,
}

impl FsoSampler {
    pub fn new(p: &FsoLinkParams) -> Result<Self> {
        p.validate()?;
        let gx = Gamma::new(p.beta1, 1.0).map_err(|e| Error::Config(e.to_string()))?;
        let gy = Gamma::new(p.beta2, 1.0).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self { gx, gy, p: *p, mean: fso_mean_irradiance(p) })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p = &self.p;
        let ix = (p.omega1 * self.gx.sample(rng) / p.beta1).powf(1.0 / p.alpha1);
        let iy = (p.omega2 * self.gy.sample(rng) / p.beta2).powf(1.0 / p.alpha2);
        let u: f64 = 1.0 - rng.random::<f64>();
        let ip = u.powf(1.0 / (p.xi * p.xi));
        p.mu_r * (ix * iy * ip / self.mean).powi(p.r as i32)
    }
}

pub fn fso_sample<R: Rng + ?Sized>(rng: &mut R, p: &FsoLinkParams) -> f64 {
    FsoSampler::new(p).expect("valid fso params").sample(rng)
}

// ------------------------------------------------------------ interference

pub fn inr_pdf(gamma: f64, q: &InterferenceParams) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let (k, rate) = (q.shape(), q.rate());
    (k * rate.ln() + (k - 1.0) * gamma.ln() - rate * gamma - ln_gamma(k)).exp()
}

pub fn inr_cdf(gamma: f64, q: &InterferenceParams) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    reg_lower_gamma(q.shape(), q.rate() * gamma).unwrap_or(1.0)
}

pub fn inr_sample<R: Rng + ?Sized>(rng: &mut R, q: &InterferenceParams) -> f64 {
    let g = Gamma::new(q.m1, q.omega_i1 / q.m1).expect("valid interference params");
    (0..q.num_interferers).map(|_| g.sample(rng)).sum()
}

// --------------------------------------------------------- pointing errors

/// Named pointing-error settings given as beam-waist to aperture ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointingPreset {
    /// `w/a = 5`
    Strong,
    /// `w/a = 10`
    Weak,
}

/// Jitter standard deviation relative to the aperture radius assumed by the
/// presets.
pub const PRESET_JITTER_OVER_APERTURE: f64 = 2.0;

impl PointingPreset {
    pub fn waist_over_aperture(self) -> f64 {
        match self {
            Self::Strong => 5.0,
            Self::Weak => 10.0,
        }
    }

    pub fn xi(self) -> f64 {
        xi_from_geometry(self.waist_over_aperture(), PRESET_JITTER_OVER_APERTURE)
    }
}

/// `ξ = w_eq / (2σ_s)` from beam waist `w` and jitter `σ_s`, both relative
/// to the aperture radius.
pub fn xi_from_geometry(waist_over_aperture: f64, jitter_over_aperture: f64) -> f64 {
    let v = PI.sqrt() / (2f64.sqrt() * waist_over_aperture);
    let erf_v = statrs::function::erf::erf(v);
    let weq2 = waist_over_aperture.powi(2) * PI.sqrt() * erf_v / (2.0 * v * (-v * v).exp());
    weq2.sqrt() / (2.0 * jitter_over_aperture)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::quad::{integrate_half_line, QuadTolerance};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn moderate(r: u32, mu_r: f64) -> FsoLinkParams {
        FsoLinkParams {
            alpha1: 2.1,
            alpha2: 2.0,
            beta1: 4.0,
            beta2: 4.5,
            omega1: 1.0676,
            omega2: 1.06,
            xi: PointingPreset::Strong.xi(),
            r,
            mu_r,
        }
    }

    #[test]
    fn zeta_examples() {
        let z = zeta_table(4, 1);
        assert!(z.iter().all(|row| row == &vec![1.0]));
        let z = zeta_table(3, 2);
        assert_eq!(z[2], vec![1.0, 2.0, 1.0]);
        // (1 + x + x²/2)² = 1 + 2x + 2x² + x³ + x⁴/4
        let z = zeta_table(3, 3);
        let want = [1.0, 2.0, 2.0, 1.0, 0.25];
        for (a, b) in z[2].iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rf_cdf_examples() {
        let p = RfLinkParams { m_rf: 1, avg_snr: 3.0, num_users: 1 };
        assert_eq!(rf_cdf_best(0.0, &p), 0.0);
        assert!((rf_cdf_best(3.0, &p) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        let p = RfLinkParams { num_users: 2, ..p };
        let want = (1.0 - (-1.0f64).exp()).powi(2);
        assert!((rf_cdf_best(3.0, &p) - want).abs() < 1e-14);
        assert!((want - 0.399_576_400_893_6).abs() < 1e-9);
    }

    #[test]
    fn rf_expansion_matches_power_form() {
        for k in 1..=5 {
            for m in 1..=3 {
                let p = RfLinkParams { m_rf: m, avg_snr: 4.0, num_users: k };
                for i in 0..200 {
                    let g = 4.0 * 10f64.powf(-2.0 + 4.0 * i as f64 / 199.0);
                    let want = reg_lower_gamma(m as f64, p.beta() * g).unwrap().powi(k as i32);
                    let got = rf_cdf_best(g, &p);
                    assert!((got - want).abs() < 1e-9, "K={k} m={m} γ={g}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn rf_sampler_mean() {
        let p = RfLinkParams { m_rf: 1, avg_snr: 2.5, num_users: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let mean = (0..n).map(|_| rf_sample_best(&mut rng, &p)).sum::<f64>() / n as f64;
        assert!((mean / 2.5 - 1.0).abs() < 0.01);
        // K = 4, m = 2 against ∫ γ f(γ) dγ
        let p = RfLinkParams { m_rf: 2, avg_snr: 2.5, num_users: 4 };
        let want = integrate_half_line(|g| Ok(g * rf_pdf_best(g, &p)), 2.5, QuadTolerance::default())
            .unwrap()
            .value;
        let mean = (0..n).map(|_| rf_sample_best(&mut rng, &p)).sum::<f64>() / n as f64;
        assert!((mean / want - 1.0).abs() < 0.01, "{mean} vs {want}");
    }

    #[test]
    fn rational_approximations() {
        let p = FsoLinkParams { alpha1: 2.0, alpha2: 2.0, ..moderate(1, 1.0) };
        let d = dgg_derive(&p, 25).unwrap();
        assert_eq!((d.lambda, d.sigma, d.y), (1, 1, 2.0));
        let d = dgg_derive(&moderate(1, 1.0), 25).unwrap();
        assert_eq!((d.lambda, d.sigma, d.y), (21, 20, 42.0));
        assert_eq!(d.n, 42);
        assert!(d.approx_warning.is_none());
        let p = FsoLinkParams { alpha1: 2.169, alpha2: 1.0, ..moderate(2, 1.0) };
        let d = dgg_derive(&p, 10).unwrap();
        assert_eq!((d.lambda, d.sigma), (13, 6));
        assert_eq!(d.n, 40);
        assert!(d.approx_warning.unwrap() > 1e-3);
        assert_eq!(best_rational(2.169, 25), (13, 6));
        assert_eq!(best_rational(std::f64::consts::PI, 1000), (355, 113));
        assert_eq!(best_rational(0.5, 7), (1, 2));
    }

    #[test]
    fn tau_shapes() {
        let d = dgg_derive(&moderate(2, 1.0), 25).unwrap();
        assert_eq!(d.tau1.len(), 42);
        assert_eq!(d.tau3.len(), 2);
        assert_eq!(d.tau4.len(), 84);
        assert!((d.tau4[1] - (d.tau1[0] + 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn xi_presets() {
        let strong = PointingPreset::Strong.xi();
        let weak = PointingPreset::Weak.xi();
        assert!((strong - 1.2767).abs() < 1e-3, "{strong}");
        assert!((weak - 2.5134).abs() < 1e-3, "{weak}");
        assert!(strong < weak);
    }

    #[test]
    fn fso_pdf_normalized_and_cdf_consistent() {
        for r in [1, 2] {
            let p = moderate(r, 3.0);
            let d = dgg_derive(&p, 25).unwrap();
            let tol = QuadTolerance { rel: 1e-9, ..Default::default() };
            let total = integrate_half_line(|g| fso_pdf(g, &d, &p), p.mu_r, tol).unwrap().value;
            assert!((total - 1.0).abs() < 1e-5, "r={r}: {total}");
            let gam = p.mu_r;
            let part = crate::specfun::quad::integrate(
                |u| {
                    let g = gam * u.exp();
                    Ok(fso_pdf(g, &d, &p)? * g)
                },
                -60.0,
                0.0,
                30,
                tol,
            )
            .unwrap()
            .value;
            let cdf = fso_cdf(gam, &d, &p).unwrap();
            assert!(((cdf - part) / part).abs() < 1e-5, "r={r}: {cdf} vs {part}");
        }
    }

    #[test]
    fn fso_cdf_limits() {
        let p = moderate(2, 2.0);
        let d = dgg_derive(&p, 25).unwrap();
        assert_eq!(fso_cdf(0.0, &d, &p).unwrap(), 0.0);
        assert!(fso_cdf(1e3 * p.mu_r, &d, &p).unwrap() >= 0.999);
        let mut last = 0.0;
        for i in 0..200 {
            let g = p.mu_r * 10f64.powf(-4.0 + 7.0 * i as f64 / 199.0);
            let v = fso_cdf(g, &d, &p).unwrap();
            assert!((0.0..=1.0).contains(&v) && v >= last - 1e-12, "γ={g}: {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn fso_pdf_scaling() {
        let p = moderate(1, 5.0);
        let d = dgg_derive(&p, 25).unwrap();
        let q = FsoLinkParams { mu_r: 0.5, ..p };
        for g in [0.3, 5.0, 40.0] {
            let a = fso_pdf(g, &d, &p).unwrap();
            let b = fso_pdf(g / 10.0, &d, &q).unwrap() / 10.0;
            assert!(((a - b) / a).abs() < 1e-9);
        }
    }

    #[test]
    fn fso_pdf_exchange_symmetry() {
        let p = FsoLinkParams {
            alpha1: 2.0,
            alpha2: 3.0,
            beta1: 2.5,
            beta2: 1.5,
            omega1: 1.2,
            omega2: 0.9,
            xi: 1.8,
            r: 1,
            mu_r: 1.0,
        };
        let q = FsoLinkParams {
            alpha1: p.alpha2,
            alpha2: p.alpha1,
            beta1: p.beta2,
            beta2: p.beta1,
            omega1: p.omega2,
            omega2: p.omega1,
            ..p
        };
        let dp = dgg_derive(&p, 25).unwrap();
        let dq = dgg_derive(&q, 25).unwrap();
        assert_eq!((dp.lambda, dp.sigma), (dq.sigma, dq.lambda));
        for g in [0.05, 0.7, 3.0] {
            let a = fso_pdf(g, &dp, &p).unwrap();
            let b = fso_pdf(g, &dq, &q).unwrap();
            assert!(((a - b) / a).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn fso_cdf_nonincreasing_in_mu() {
        let g = 1.0;
        let mut last = 1.0;
        for mu_db in [0.0, 5.0, 10.0, 20.0] {
            let p = moderate(2, 10f64.powf(mu_db / 10.0));
            let d = dgg_derive(&p, 25).unwrap();
            let v = fso_cdf(g, &d, &p).unwrap();
            assert!(v <= last + 1e-12);
            last = v;
        }
    }

    #[test]
    fn degenerate_pointing_sampler_mean() {
        let p = FsoLinkParams {
            alpha1: 1.0,
            alpha2: 1.0,
            beta1: 1.0,
            beta2: 1.0,
            omega1: 1.0,
            omega2: 1.0,
            xi: 1e6,
            r: 1,
            mu_r: 1.0,
        };
        let s = FsoSampler::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
        // r = 1: E[γ] = μ_r
        let p = moderate(1, 7.0);
        let s = FsoSampler::new(&p).unwrap();
        let mean = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean / 7.0 - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn inr_examples() {
        let q = InterferenceParams { num_interferers: 1, m1: 1.0, omega_i1: 2.0 };
        assert!((inr_pdf(2.0, &q) - (-1.0f64).exp() / 2.0).abs() < 1e-15);
        let q = InterferenceParams { num_interferers: 3, m1: 1.5, omega_i1: 0.8 };
        let total =
            integrate_half_line(|g| Ok(inr_pdf(g, &q)), 1.0, QuadTolerance::default()).unwrap().value;
        assert!((total - 1.0).abs() < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let mean = (0..n).map(|_| inr_sample(&mut rng, &q)).sum::<f64>() / n as f64;
        assert!((mean / 2.4 - 1.0).abs() < 0.01);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn rf_cdf_monotone(k in 1u32..6, m in 1u32..4, snr in 0.1f64..100.0) {
            let p = RfLinkParams { m_rf: m, avg_snr: snr, num_users: k };
            let mut last = 0.0;
            for i in 0..200 {
                let g = snr * 10f64.powf(-3.0 + 6.0 * i as f64 / 199.0);
                let v = rf_cdf_best(g, &p);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert!(v >= last - 1e-12);
                last = v;
            }
        }

        #[test]
        fn inr_cdf_monotone(n in 1u32..6, m1 in 0.5f64..4.0, om in 0.1f64..10.0) {
            let q = InterferenceParams { num_interferers: n, m1, omega_i1: om };
            let mut last = 0.0;
            for i in 0..200 {
                let v = inr_cdf(om * 10f64.powf(-3.0 + 6.0 * i as f64 / 199.0), &q);
                prop_assert!((0.0..=1.0).contains(&v) && v >= last - 1e-12);
                last = v;
            }
        }
    }
}
