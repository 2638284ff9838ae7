//! Outage probability and achievable sum-rate: Meijer-G / Fox-H closed forms,
//! their dominant-pole asymptotes, and direct quadrature references.
//!
//! The end-to-end event is `min(γ_RF, γ_FSO) / γ_I < γ_th` with `γ_I` the
//! aggregate INR, so
//! `P_out = P_RF + P_FSO − P_joint`, each term an average over `γ_I`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

use crate::channels::{
    dgg_derive, fso_cdf_spec, fso_cdf_with, inr_pdf, rf_cdf_best, rf_terms, DggDerived,
    SystemConfig,
};
use crate::error::{Error, Result};
use crate::specfun::mellin::{dominant_residue, integrate_line};
use crate::specfun::quad::{integrate_half_line, QuadTolerance};
use crate::specfun::{
    fox_h_bivariate_ln, ladder, ln_gamma, meijer_g_dominant_residue, meijer_g_ln_arg,
    BivariateFoxHSpec, ContourPolicy, GammaFactor, MeijerGSpec, PoleSide,
};

/// Numerical settings shared by every evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub max_denominator: u32,
    pub contour: ContourPolicy,
    pub quad_rel_tol: f64,
    /// Scale applied to the sum-rate closed forms; 1 is the correct model.
    pub delta: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            max_denominator: 25,
            contour: ContourPolicy::default(),
            quad_rel_tol: 1e-9,
            delta: 1.0,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        self.contour.validate()?;
        if self.max_denominator < 1 {
            return Err(Error::Config("numerics.max_denominator must be >= 1".into()));
        }
        if !(self.quad_rel_tol > 0.0) || !(self.delta > 0.0) {
            return Err(Error::Config("numerics.quad_rel_tol and delta must be > 0".into()));
        }
        Ok(())
    }

    fn quad(&self) -> QuadTolerance {
        QuadTolerance { abs: 1e-300, rel: self.quad_rel_tol, max_intervals: 4000 }
    }
}

/// Non-fatal conditions attached to a value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Flag {
    /// Value was outside its range by roundoff and was clamped.
    Clamped(f64),
    /// Pole families had to be ε-separated.
    Perturbed,
    /// Several parameters share the dominant pole.
    DegeneratePole(f64),
    /// `λ/σ` misses `α1/α2` by this much.
    RationalApprox(f64),
}

impl std::fmt::Display for Flag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Flag::Clamped(v) => write!(f, "clamped({v:.3e})"),
            Flag::Perturbed => write!(f, "perturbed"),
            Flag::DegeneratePole(p) => write!(f, "degenerate_pole({p:.6})"),
            Flag::RationalApprox(e) => write!(f, "rational_approx({e:.2e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub flags: Vec<Flag>,
}

impl Evaluation {
    fn new(value: f64) -> Self {
        Self { value, flags: Vec::new() }
    }

    fn flag(&mut self, f: Flag) {
        if !self.flags.contains(&f) {
            self.flags.push(f);
        }
    }
}

fn ln_factorial(k: u32) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

fn derive(cfg: &SystemConfig, num: &Numerics) -> Result<DggDerived> {
    cfg.validate()?;
    num.validate()?;
    dgg_derive(&cfg.fso, num.max_denominator)
}

// ------------------------------------------------------------ outage

/// One `(n1, n2)` term of the outage expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageTerm {
    pub n1: u32,
    pub n2: u32,
    /// RF expansion weight.
    pub a1: f64,
    /// `A1 · D4 / Γ(m1 N)`, weight of the FSO-coupled parts.
    pub a2: f64,
    pub b0: f64,
    /// First Fox-H argument, `B0 γ_th / ρ`.
    pub b1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageCoefficients {
    pub terms: Vec<OutageTerm>,
    /// Shape `m1 N` and rate `ρ = m1/Ω_I1` of the aggregate INR.
    pub shape: f64,
    pub rate: f64,
    /// `ln B2`, with `B2 = D5 (γ_th/(μ_r ρ))^y`.
    pub ln_b2: f64,
    /// `ln(D7 γ_th^y)` with `D7 = D5 (y/(ρ μ_r))^y`.
    pub ln_d7_arg: f64,
    pub tau5: Vec<f64>,
    /// Offset of the coupling factor `Γ(m + m1 N − t − y s)` before adding `m`.
    pub tau6: Vec<f64>,
    /// Upper and lower parameters of the `s`-part, `[1, τ3]` and `[τ4, 0]`.
    pub tau7: Vec<f64>,
    pub tau8: Vec<f64>,
    pub p_n: f64,
    /// Residue weight at the dominant pole; NaN when the pole is degenerate.
    pub lambda1: f64,
    pub degenerate: bool,
    pub d4: f64,
    pub y: f64,
}

pub fn outage_coefficients(cfg: &SystemConfig, num: &Numerics) -> Result<OutageCoefficients> {
    let d = derive(cfg, num)?;
    Ok(outage_coefficients_from(cfg, &d))
}

fn outage_coefficients_from(cfg: &SystemConfig, d: &DggDerived) -> OutageCoefficients {
    let shape = cfg.intf.shape();
    let rate = cfg.intf.rate();
    let ln_prefix = d.d4.ln() - ln_gamma(shape);
    let terms = rf_terms(&cfg.rf)
        .into_iter()
        .map(|t| OutageTerm {
            n1: t.n1,
            n2: t.n2,
            a1: t.a1,
            a2: t.a1 * ln_prefix.exp(),
            b0: t.b0,
            b1: t.b0 * cfg.gamma_th / rate,
        })
        .collect();
    let y = d.y;
    let ln_b2 = d.ln_d5 + y * (cfg.gamma_th / (cfg.fso.mu_r * rate)).ln();
    let ln_d7_arg = ln_b2 + y * y.ln();
    let p_n = d.tau4.iter().cloned().fold(f64::INFINITY, f64::min);
    let cluster = d.tau4.iter().filter(|t| (*t - p_n).abs() < 1e-9).count();
    let degenerate = cluster > 1;
    let lambda1 = if degenerate {
        f64::NAN
    } else {
        let mut skipped = false;
        let mut acc = -p_n.ln();
        for t in &d.tau4 {
            if !skipped && *t == p_n {
                skipped = true;
                continue;
            }
            acc += ln_gamma(t - p_n);
        }
        for t in &d.tau3 {
            acc -= ln_gamma(t - p_n);
        }
        acc.exp()
    };
    let mut tau7 = vec![1.0];
    tau7.extend(&d.tau3);
    let mut tau8 = d.tau4.clone();
    tau8.push(0.0);
    OutageCoefficients {
        terms,
        shape,
        rate,
        ln_b2,
        ln_d7_arg,
        tau5: if d.integral_y() { ladder(y.round() as usize, 1.0 - shape) } else { Vec::new() },
        tau6: vec![shape],
        tau7,
        tau8,
        p_n,
        lambda1,
        degenerate,
        d4: d.d4,
        y,
    }
}

/// `E[P(a, B0 γ_th γ_I)]`: the RF contribution of one expansion term.
fn rf_term_average(shape_rf: f64, b1: f64, shape_i: f64) -> Result<f64> {
    let x = b1 / (1.0 + b1);
    statrs::function::beta::checked_beta_reg(shape_rf, shape_i, x)
        .map_err(|e| Error::Domain(format!("incomplete beta: {e}")))
}

pub(crate) fn rf_outage_part(cfg: &SystemConfig, c: &OutageCoefficients) -> Result<f64> {
    let mut s = 0.0;
    for t in &c.terms {
        s += t.a1 * rf_term_average((cfg.rf.m_rf + t.n2) as f64, t.b1, c.shape)?;
    }
    Ok(s)
}

/// Factors of `Φ(s) Γ(coupled + M − y s)` where `Φ` is the FSO CDF integrand.
fn fso_average_factors(d: &DggDerived, shift: f64, shape: f64) -> Vec<GammaFactor> {
    let mut f = fso_cdf_spec(d).factors();
    f.push(GammaFactor::numerator(shift + shape, -d.y));
    f
}

/// Meijer form of `∫Φ(s)Γ(M − ys) B2^{-s} ds` (integer `y`): parameters of
/// `G^{n,y+1}_{y+1+r,n+1}(D7 γ_th^y | 1, τ5, τ3; τ4, 0)` and the log of the
/// constant `(2π)^{(1−y)/2} y^{M−1/2}`.
fn fso_average_meijer(d: &DggDerived, c: &OutageCoefficients) -> (MeijerGSpec, f64) {
    let yi = d.y.round() as usize;
    let mut a = vec![1.0];
    a.extend(&c.tau5);
    a.extend(&d.tau3);
    let spec = MeijerGSpec::new(d.n, yi + 1, a, c.tau8.clone()).expect("consistent lengths");
    let ln_const = 0.5 * (1.0 - d.y) * (2.0 * PI).ln() + (c.shape - 0.5) * d.y.ln();
    (spec, ln_const)
}

/// `P_FSO = E[F_FSO(γ_th γ_I)]` from the closed form.
fn fso_outage_part(
    d: &DggDerived,
    c: &OutageCoefficients,
    num: &Numerics,
    ev: &mut Evaluation,
) -> Result<f64> {
    let prefix = c.d4 / ln_gamma(c.shape).exp();
    let r = if d.integral_y() {
        let (spec, ln_const) = fso_average_meijer(d, c);
        let r = meijer_g_ln_arg(&spec, c.ln_d7_arg, &num.contour)?;
        crate::specfun::ContourResult { value: r.value * ln_const.exp(), ..r }
    } else {
        integrate_line(&fso_average_factors(d, 0.0, c.shape), c.ln_b2, &num.contour)?
    };
    if r.perturbed {
        ev.flag(Flag::Perturbed);
    }
    Ok(prefix * r.value)
}

/// Bivariate Fox-H `H_l(B1, B2) = ∬ Γ(s) Γ(l + M − s − y t) Φ(t) B1^{-s} B2^{-t}`
/// with `Φ` the FSO CDF integrand.
pub fn outage_fox_spec(d: &DggDerived, shape: f64, l: u32) -> BivariateFoxHSpec {
    BivariateFoxHSpec {
        outer_factors: vec![GammaFactor::numerator_st(l as f64 + shape, -1.0, -d.y)],
        s_factors: vec![GammaFactor::numerator(0.0, 1.0)],
        t_factors: fso_cdf_spec(d).factors().into_iter().map(GammaFactor::swapped).collect(),
    }
}

fn joint_bracket<F>(c: &OutageCoefficients, m_rf: u32, mut h: F) -> Result<f64>
where
    F: FnMut(u32, u32, f64) -> Result<f64>,
{
    // Σ_terms A2 Σ_{l < m+n2} B1^l/l! H_l(B1, B2)
    let mut total = 0.0;
    for t in &c.terms {
        let mut inner = 0.0;
        for l in 0..(m_rf + t.n2) {
            let w = (l as f64 * t.b1.ln() - ln_factorial(l)).exp();
            inner += w * h(t.n1, l, t.b1)?;
        }
        total += t.a2 * inner;
    }
    Ok(total)
}

fn finish_outage(value: f64, mut ev: Evaluation) -> Result<Evaluation> {
    const NOISE: f64 = 1e-6;
    if !value.is_finite() || value < -NOISE || value > 1.0 + NOISE {
        return Err(Error::OutOfRange(value));
    }
    if value < 0.0 || value > 1.0 {
        ev.flag(Flag::Clamped(value));
    }
    ev.value = value.clamp(0.0, 1.0);
    Ok(ev)
}

pub fn outage_exact(cfg: &SystemConfig) -> Result<Evaluation> {
    outage_exact_with(cfg, &Numerics::default())
}

pub fn outage_exact_with(cfg: &SystemConfig, num: &Numerics) -> Result<Evaluation> {
    let d = derive(cfg, num)?;
    let mut ev = Evaluation::new(0.0);
    if let Some(e) = d.approx_warning {
        ev.flag(Flag::RationalApprox(e));
    }
    if cfg.gamma_th == 0.0 {
        return finish_outage(0.0, ev);
    }
    let c = outage_coefficients_from(cfg, &d);
    let p_rf = rf_outage_part(cfg, &c)?;
    let p_fso = fso_outage_part(&d, &c, num, &mut ev)?;
    // H depends on (n1, l) only; cache it
    let mut cache: Vec<((u32, u32), f64)> = Vec::new();
    let mut perturbed = false;
    let h_sum = joint_bracket(&c, cfg.rf.m_rf, |n1, l, b1| {
        if let Some((_, v)) = cache.iter().find(|(k, _)| *k == (n1, l)) {
            return Ok(*v);
        }
        let spec = outage_fox_spec(&d, c.shape, l);
        let r = fox_h_bivariate_ln(&spec, b1.ln(), c.ln_b2, &num.contour)?;
        perturbed |= r.perturbed;
        cache.push(((n1, l), r.value));
        Ok(r.value)
    })?;
    if perturbed {
        ev.flag(Flag::Perturbed);
    }
    // P_joint = Σ A2 [G − Σ_l B1^l/l! H_l] with (D4/Γ(M))·G = P_FSO
    let p_joint = sum_to_joint(p_fso, &c, h_sum);
    finish_outage(p_rf + p_fso - p_joint, ev)
}

/// `P_joint = Σ A1 P_FSO − Σ A2 Σ_l (...) H_l`; `Σ A1 = 1` up to roundoff.
fn sum_to_joint(p_fso: f64, c: &OutageCoefficients, h_sum: f64) -> f64 {
    let sum_a1: f64 = c.terms.iter().map(|t| t.a1).sum();
    sum_a1 * p_fso - h_sum
}

/// Integrand of the reference: `(F_RF + F_FSO − F_RF F_FSO)(z γ_th) f_I(z)`.
pub fn outage_quadrature(cfg: &SystemConfig) -> Result<Evaluation> {
    outage_quadrature_with(cfg, &Numerics::default(), false)
}

/// Direct 1-D quadrature over the aggregate INR. With `rf_only` the FSO hop
/// never causes outage.
pub fn outage_quadrature_with(
    cfg: &SystemConfig,
    num: &Numerics,
    rf_only: bool,
) -> Result<Evaluation> {
    let d = derive(cfg, num)?;
    let mut ev = Evaluation::new(0.0);
    if let Some(e) = d.approx_warning {
        ev.flag(Flag::RationalApprox(e));
    }
    if cfg.gamma_th == 0.0 {
        return finish_outage(0.0, ev);
    }
    let center = cfg.intf.shape() / cfg.intf.rate();
    // below g_lo the FSO CDF is under 1e-18; treat it as 0
    let mut g_lo = cfg.fso.mu_r;
    while !rf_only && g_lo > cfg.fso.mu_r * 1e-30 && fso_cdf_with(g_lo, &d, &cfg.fso, &num.contour)? > 1e-18
    {
        g_lo *= 0.1;
    }
    let r = integrate_half_line(
        |z| {
            let g = z * cfg.gamma_th;
            let f_rf = rf_cdf_best(g, &cfg.rf);
            let f_fso = if rf_only || g < g_lo {
                0.0
            } else {
                fso_cdf_with(g, &d, &cfg.fso, &num.contour)?
            };
            Ok((f_rf + f_fso - f_rf * f_fso) * inr_pdf(z, &cfg.intf))
        },
        center,
        num.quad(),
    )?;
    finish_outage(r.value, ev)
}

pub fn outage_asymptotic(cfg: &SystemConfig) -> Result<Evaluation> {
    outage_asymptotic_with(cfg, &Numerics::default())
}

/// Closed form with the FSO Meijer-G and Fox-H parts replaced by their
/// residue at the dominant pole `s = −p_n`. The RF part is kept exact.
pub fn outage_asymptotic_with(cfg: &SystemConfig, num: &Numerics) -> Result<Evaluation> {
    let d = derive(cfg, num)?;
    let mut ev = Evaluation::new(0.0);
    if let Some(e) = d.approx_warning {
        ev.flag(Flag::RationalApprox(e));
    }
    if cfg.gamma_th == 0.0 {
        return Ok(ev);
    }
    let c = outage_coefficients_from(cfg, &d);
    if c.degenerate {
        ev.flag(Flag::DegeneratePole(c.p_n));
    }
    let prefix = c.d4 / ln_gamma(c.shape).exp();
    let p_rf = rf_outage_part(cfg, &c)?;
    let (g_res, _) = dominant_residue(&fso_average_factors(&d, 0.0, c.shape), c.ln_b2, PoleSide::Left)?;
    let p_fso = prefix * g_res;
    let h_sum = joint_bracket(&c, cfg.rf.m_rf, |_, l, b1| {
        let shift = l as f64 + c.shape;
        let ln_arg = c.ln_b2 - d.y * b1.ln_1p();
        let (v, _) =
            dominant_residue(&fso_average_factors(&d, l as f64, c.shape), ln_arg, PoleSide::Left)?;
        Ok(v * (-shift * b1.ln_1p()).exp())
    })?;
    let p_joint = sum_to_joint(p_fso, &c, h_sum);
    ev.value = p_rf + p_fso - p_joint;
    Ok(ev)
}

// ------------------------------------------------------------ sum rate

/// Density of `γ_RF / γ_I`: a mixture of scaled Beta-prime laws.
pub fn effective_rf_pdf(gamma: f64, cfg: &SystemConfig) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let shape_i = cfg.intf.shape();
    let rate = cfg.intf.rate();
    rf_terms(&cfg.rf)
        .iter()
        .map(|t| {
            let a = t.shape(cfg.rf.m_rf) as f64;
            let c = t.b0 / rate;
            let ln = a * c.ln() + (a - 1.0) * gamma.ln()
                - (a + shape_i) * (c * gamma).ln_1p()
                - statrs::function::beta::ln_beta(a, shape_i);
            t.a1 * ln.exp()
        })
        .sum()
}

/// One term of the RF rate: `a3 · G^{3,2}_{3,3}(B3 | τ9; τ10)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsrTerm {
    pub n1: u32,
    pub n2: u32,
    /// Includes `1/(2 ln 2)` and `B3^a`.
    pub a3: f64,
    pub b3: f64,
    pub tau9: Vec<f64>,
    pub tau10: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsrCoefficients {
    pub a3: Vec<AsrTerm>,
    /// Prefactor of the FSO rate Meijer-G.
    pub r2_prefix: f64,
    /// `ln(D7/δ^y)`.
    pub ln_r2_arg: f64,
    pub tau13: Vec<f64>,
    pub tau14: Vec<f64>,
    pub delta: f64,
}

pub fn asr_coefficients(cfg: &SystemConfig, num: &Numerics) -> Result<AsrCoefficients> {
    let d = derive(cfg, num)?;
    asr_coefficients_from(cfg, &d, num.delta)
}

fn asr_coefficients_from(cfg: &SystemConfig, d: &DggDerived, delta: f64) -> Result<AsrCoefficients> {
    let shape_i = cfg.intf.shape();
    let rate = cfg.intf.rate();
    let a3 = rf_terms(&cfg.rf)
        .iter()
        .map(|t| {
            let a = t.shape(cfg.rf.m_rf) as f64;
            let b3 = t.b0 / rate / delta;
            let ln = a * b3.ln() - ln_gamma(a) - ln_gamma(shape_i);
            AsrTerm {
                n1: t.n1,
                n2: t.n2,
                a3: t.a1 * ln.exp() / (2.0 * LN_2),
                b3,
                tau9: vec![-a, 1.0 - shape_i - a, 1.0 - a],
                tau10: vec![-a, -a, 0.0],
            }
        })
        .collect();
    let (r2_prefix, ln_r2_arg, tau13, tau14) = if d.integral_y() {
        let y = d.y;
        let yi = y.round() as usize;
        let mut tau13 = ladder(yi, 0.0);
        tau13.extend(ladder(yi, 1.0 - shape_i));
        tau13.extend(ladder(yi, 1.0));
        tau13.extend(&d.tau3);
        let mut tau14 = d.tau4.clone();
        tau14.extend(ladder(yi, 0.0));
        tau14.extend(ladder(yi, 0.0));
        let ln_pref = d.d4.ln() + (shape_i - 0.5) * y.ln() - 1.5 * (y - 1.0) * (2.0 * PI).ln()
            - ln_gamma(shape_i);
        let ln_d7 = d.ln_d5 + y * (y / (rate * cfg.fso.mu_r)).ln();
        (ln_pref.exp() / (2.0 * LN_2) / delta, ln_d7 - y * delta.ln(), tau13, tau14)
    } else {
        (f64::NAN, f64::NAN, Vec::new(), Vec::new())
    };
    Ok(AsrCoefficients { a3, r2_prefix, ln_r2_arg, tau13, tau14, delta })
}

fn r1_spec(t: &AsrTerm) -> MeijerGSpec {
    MeijerGSpec::new(3, 2, t.tau9.clone(), t.tau10.clone()).expect("3x3 spec")
}

fn r2_spec(c: &AsrCoefficients, d: &DggDerived) -> MeijerGSpec {
    let y = d.y.round() as usize;
    MeijerGSpec::new(d.n + 2 * y, 2 * y, c.tau13.clone(), c.tau14.clone()).expect("consistent lengths")
}

/// `E[ln(1 + γ_FSO/γ_I)]` straight from the Mellin transforms, valid for any
/// real `y`:
/// `(K0/Γ(M)) ∫ Γ(1+s)Γ(−s)²/Γ(1−s) Γ(M+s) ΠΓ(τ1 − rs/y)/Γ(τ2 − rs/y) w^{-s} ds`.
pub fn fso_log_moment_direct(cfg: &SystemConfig, num: &Numerics) -> Result<f64> {
    let d = derive(cfg, num)?;
    fso_log_moment_direct_from(cfg, &d, num)
}

fn fso_log_moment_direct_from(cfg: &SystemConfig, d: &DggDerived, num: &Numerics) -> Result<f64> {
    let shape_i = cfg.intf.shape();
    let k = cfg.fso.r as f64 / d.y;
    let mut f = vec![
        GammaFactor::numerator(1.0, 1.0),
        GammaFactor::numerator(0.0, -1.0),
        GammaFactor::numerator(0.0, -1.0),
        GammaFactor::denominator(1.0, -1.0),
        GammaFactor::numerator(shape_i, 1.0),
    ];
    f.extend(d.tau1.iter().map(|t| GammaFactor::numerator(*t, -k)));
    f.push(GammaFactor::denominator(d.tau2[0], -k));
    // w = μ ρ E^{r/y}, ln E = −ln(D2 z^y)
    let ln_w = (cfg.fso.mu_r * cfg.intf.rate()).ln() - k * d.ln_scale();
    let r = integrate_line(&f, ln_w, &num.contour)?;
    Ok(d.d1 / d.y / ln_gamma(shape_i).exp() * r.value)
}

pub fn asr_exact(cfg: &SystemConfig) -> Result<Evaluation> {
    asr_exact_with(cfg, &Numerics::default())
}

pub fn asr_exact_with(cfg: &SystemConfig, num: &Numerics) -> Result<Evaluation> {
    let d = derive(cfg, num)?;
    let c = asr_coefficients_from(cfg, &d, num.delta)?;
    let mut ev = Evaluation::new(0.0);
    if let Some(e) = d.approx_warning {
        ev.flag(Flag::RationalApprox(e));
    }
    let mut r1 = 0.0;
    for t in &c.a3 {
        let g = meijer_g_ln_arg(&r1_spec(t), t.b3.ln(), &num.contour)?;
        if g.perturbed {
            ev.flag(Flag::Perturbed);
        }
        r1 += t.a3 * g.value;
    }
    let r2 = if d.integral_y() {
        let g = meijer_g_ln_arg(&r2_spec(&c, &d), c.ln_r2_arg, &num.contour)?;
        if g.perturbed {
            ev.flag(Flag::Perturbed);
        }
        c.r2_prefix * g.value
    } else {
        fso_log_moment_direct_from(cfg, &d, num)? / (2.0 * LN_2)
    };
    ev.value = r1 + r2;
    Ok(ev)
}

pub fn asr_asymptotic(cfg: &SystemConfig) -> Result<Evaluation> {
    asr_asymptotic_with(cfg, &Numerics::default())
}

/// Sum-rate with every Meijer-G replaced by the residue at its dominant
/// (double) pole.
pub fn asr_asymptotic_with(cfg: &SystemConfig, num: &Numerics) -> Result<Evaluation> {
    let d = derive(cfg, num)?;
    let c = asr_coefficients_from(cfg, &d, num.delta)?;
    let mut ev = Evaluation::new(0.0);
    if let Some(e) = d.approx_warning {
        ev.flag(Flag::RationalApprox(e));
    }
    let mut r1 = 0.0;
    for t in &c.a3 {
        let (v, _) = meijer_g_dominant_residue(&r1_spec(t), t.b3.ln(), PoleSide::Left)?;
        r1 += t.a3 * v;
    }
    let r2 = if d.integral_y() {
        let (v, _) = meijer_g_dominant_residue(&r2_spec(&c, &d), c.ln_r2_arg, PoleSide::Left)?;
        c.r2_prefix * v
    } else {
        let shape_i = cfg.intf.shape();
        let k = cfg.fso.r as f64 / d.y;
        let mut f = vec![
            GammaFactor::numerator(1.0, 1.0),
            GammaFactor::numerator(0.0, -1.0),
            GammaFactor::numerator(0.0, -1.0),
            GammaFactor::denominator(1.0, -1.0),
            GammaFactor::numerator(shape_i, 1.0),
        ];
        f.extend(d.tau1.iter().map(|t| GammaFactor::numerator(*t, -k)));
        f.push(GammaFactor::denominator(d.tau2[0], -k));
        let ln_w = (cfg.fso.mu_r * cfg.intf.rate()).ln() - k * d.ln_scale();
        let (v, _) = dominant_residue(&f, ln_w, PoleSide::Right)?;
        d.d1 / d.y / ln_gamma(shape_i).exp() * v / (2.0 * LN_2)
    };
    ev.value = r1 + r2;
    Ok(ev)
}

/// `E[1/(x + γ_I)] = ∫₀^∞ e^{−x t} (1 + t/ρ)^{−M} dt`.
fn inverse_shift_moment(x: f64, shape: f64, rate: f64, tol: QuadTolerance) -> Result<f64> {
    let center = 1.0 / (x + 1.0 / rate);
    Ok(integrate_half_line(|t| Ok((-x * t - shape * (t / rate).ln_1p()).exp()), center, tol)?.value)
}

pub fn asr_quadrature(cfg: &SystemConfig) -> Result<Evaluation> {
    asr_quadrature_with(cfg, &Numerics::default())
}

/// `½E[log2(1+γ_RF/γ_I)]` from the effective density and
/// `½E[log2(1+γ_FSO/γ_I)] = (1/(2 ln 2)) ∫ (1 − F_FSO(x)) E[1/(x+γ_I)] dx`.
pub fn asr_quadrature_with(cfg: &SystemConfig, num: &Numerics) -> Result<Evaluation> {
    let d = derive(cfg, num)?;
    let mut ev = Evaluation::new(0.0);
    if let Some(e) = d.approx_warning {
        ev.flag(Flag::RationalApprox(e));
    }
    let tol = num.quad();
    let rf_scale = cfg.rf.avg_snr * cfg.intf.rate() / cfg.intf.shape().max(1.0);
    let r1 = integrate_half_line(|g| Ok(g.ln_1p() * effective_rf_pdf(g, cfg)), rf_scale, tol)?.value
        / (2.0 * LN_2);
    let (shape, rate) = (cfg.intf.shape(), cfg.intf.rate());
    let inner = QuadTolerance { rel: 1e-11, ..tol };
    // below x_lo the CDF is under 1e-15 and 1 − F is 1 to working precision
    let mut x_lo = cfg.fso.mu_r;
    while x_lo > cfg.fso.mu_r * 1e-30 && fso_cdf_with(x_lo, &d, &cfg.fso, &num.contour)? > 1e-15 {
        x_lo *= 0.1;
    }
    let r2 = integrate_half_line(
        |x| {
            let ccdf = if x < x_lo {
                1.0
            } else {
                1.0 - fso_cdf_with(x, &d, &cfg.fso, &num.contour)?
            };
            if ccdf <= 0.0 {
                return Ok(0.0);
            }
            Ok(ccdf * inverse_shift_moment(x, shape, rate, inner)?)
        },
        cfg.fso.mu_r,
        tol,
    )?
    .value
        / (2.0 * LN_2);
    ev.value = r1 + r2;
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        FsoLinkParams, InterferenceParams, PointingPreset, RfLinkParams,
    };

    pub(crate) fn moderate_cfg(r: u32, n: u32, snr_db: f64) -> SystemConfig {
        let lin = 10f64.powf(snr_db / 10.0);
        SystemConfig {
            rf: RfLinkParams { m_rf: 2, avg_snr: lin, num_users: 2 },
            fso: FsoLinkParams {
                alpha1: 2.1,
                alpha2: 2.0,
                beta1: 4.0,
                beta2: 4.5,
                omega1: 1.0676,
                omega2: 1.06,
                xi: PointingPreset::Strong.xi(),
                r,
                mu_r: lin,
            },
            intf: InterferenceParams { num_interferers: n, m1: 1.0, omega_i1: 1.0 },
            gamma_th: 1.0,
        }
    }

    #[test]
    fn zero_threshold() {
        let cfg = SystemConfig { gamma_th: 0.0, ..moderate_cfg(1, 2, 10.0) };
        assert_eq!(outage_exact(&cfg).unwrap().value, 0.0);
        assert_eq!(outage_quadrature(&cfg).unwrap().value, 0.0);
    }

    #[test]
    fn rf_only_sanity() {
        let mut cfg = moderate_cfg(1, 1, 10.0);
        cfg.rf = RfLinkParams { m_rf: 1, avg_snr: 5.0, num_users: 1 };
        cfg.intf = InterferenceParams { num_interferers: 1, m1: 1.0, omega_i1: 5.0 };
        let v = outage_quadrature_with(&cfg, &Numerics::default(), true).unwrap().value;
        assert!((v - 0.5).abs() < 1e-9, "{v}");
    }

    #[test]
    fn fso_part_meijer_matches_direct_fox() {
        let cfg = moderate_cfg(2, 2, 12.0);
        let num = Numerics::default();
        let d = derive(&cfg, &num).unwrap();
        let c = outage_coefficients_from(&cfg, &d);
        let (spec, ln_const) = fso_average_meijer(&d, &c);
        let g = meijer_g_ln_arg(&spec, c.ln_d7_arg, &num.contour).unwrap().value * ln_const.exp();
        let f = integrate_line(&fso_average_factors(&d, 0.0, c.shape), c.ln_b2, &num.contour)
            .unwrap()
            .value;
        assert!(((g - f) / f).abs() < 1e-9, "{g} vs {f}");
    }

    #[test]
    fn fox_h_reduces_to_line_integral() {
        // ∫Γ(t)Γ(A − t)B1^{-t}dt = Γ(A)(1+B1)^{-A}
        let cfg = moderate_cfg(1, 2, 10.0);
        let num = Numerics::default();
        let d = derive(&cfg, &num).unwrap();
        let c = outage_coefficients_from(&cfg, &d);
        for (l, b1) in [(0u32, 0.3f64), (1, 0.3), (2, 1.7)] {
            let spec = outage_fox_spec(&d, c.shape, l);
            let h = fox_h_bivariate_ln(&spec, b1.ln(), c.ln_b2, &num.contour).unwrap().value;
            let shift = l as f64 + c.shape;
            let reduced = integrate_line(
                &fso_average_factors(&d, l as f64, c.shape),
                c.ln_b2 - d.y * b1.ln_1p(),
                &num.contour,
            )
            .unwrap()
            .value
                * (-shift * b1.ln_1p()).exp();
            assert!(((h - reduced) / reduced).abs() < 1e-8, "l={l}: {h} vs {reduced}");
        }
    }

    #[test]
    fn exact_matches_quadrature() {
        for (r, n, db) in [(1, 1, 10.0), (2, 3, 15.0)] {
            let cfg = moderate_cfg(r, n, db);
            let e = outage_exact(&cfg).unwrap().value;
            let q = outage_quadrature(&cfg).unwrap().value;
            assert!(((e - q) / q).abs() < 1e-4, "r={r} N={n}: {e} vs {q}");
        }
    }

    #[test]
    fn two_exponential_ratio_density() {
        // γ_RF ~ Exp(mean a), γ_I ~ Exp(mean b): f(w) = (b/a)/(1 + (b/a)w)²
        let mut cfg = moderate_cfg(1, 1, 0.0);
        cfg.rf = RfLinkParams { m_rf: 1, avg_snr: 3.0, num_users: 1 };
        cfg.intf = InterferenceParams { num_interferers: 1, m1: 1.0, omega_i1: 1.5 };
        let k: f64 = 1.5 / 3.0;
        let want = k / (1.0 + k).powi(2);
        assert!((effective_rf_pdf(1.0, &cfg) - want).abs() < 1e-14);
        let total = integrate_half_line(
            |g| Ok(effective_rf_pdf(g, &moderate_cfg(1, 3, 10.0))),
            1.0,
            QuadTolerance::default(),
        )
        .unwrap()
        .value;
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn interference_free_rate_oracle() {
        // ½E[log2(1+X)], X ~ Exp(mean γ̄) = ½ e^{1/γ̄} E1(1/γ̄)/ln 2
        let p = RfLinkParams { m_rf: 1, avg_snr: 10.0, num_users: 1 };
        let v = integrate_half_line(
            |g| Ok(g.ln_1p() * crate::channels::rf_pdf_best(g, &p)),
            10.0,
            QuadTolerance::default(),
        )
        .unwrap()
        .value
            / (2.0 * LN_2);
        // E1(0.1) = 1.8229239584193906
        let want = 0.5 * 0.1f64.exp() * 1.822_923_958_419_390_6 / LN_2;
        assert!((v - want).abs() < 1e-9, "{v} vs {want}");
        assert!((want - 1.453_257_404_207_4).abs() < 1e-12);
    }

    #[test]
    fn asr_exact_matches_quadrature_and_direct_form() {
        let cfg = moderate_cfg(2, 2, 20.0);
        let num = Numerics::default();
        let e = asr_exact(&cfg).unwrap().value;
        let q = asr_quadrature(&cfg).unwrap().value;
        assert!((e - q).abs() < 1e-3, "{e} vs {q}");
        let d = derive(&cfg, &num).unwrap();
        let c = asr_coefficients_from(&cfg, &d, 1.0).unwrap();
        let meijer =
            c.r2_prefix * meijer_g_ln_arg(&r2_spec(&c, &d), c.ln_r2_arg, &num.contour).unwrap().value;
        let direct = fso_log_moment_direct(&cfg, &num).unwrap() / (2.0 * LN_2);
        assert!(((meijer - direct) / direct).abs() < 1e-8, "{meijer} vs {direct}");
        assert_eq!(c.tau13.len(), 3 * 42 + 2);
        assert_eq!(c.tau14.len(), d.n + 2 * 42);
    }

    #[test]
    fn corrupted_delta_changes_rate() {
        let cfg = moderate_cfg(1, 2, 20.0);
        let good = asr_exact(&cfg).unwrap().value;
        let bad = asr_exact_with(&cfg, &Numerics { delta: 2.0, ..Default::default() }).unwrap().value;
        assert!((good - bad).abs() > 1e-2);
    }

    #[test]
    fn rate_asymptote_second_set() {
        let at = |db: f64| {
            let mut c = moderate_cfg(1, 2, db);
            c.fso = FsoLinkParams {
                alpha1: 2.169,
                alpha2: 1.0,
                beta1: 0.55,
                beta2: 2.35,
                omega1: 1.5793,
                omega2: 1.0,
                ..c.fso
            };
            c
        };
        let grid = [30.0, 32.5, 35.0, 37.5, 40.0];
        let rel: Vec<f64> = grid
            .iter()
            .map(|&db| {
                let e = asr_exact(&at(db)).unwrap().value;
                let a = asr_asymptotic(&at(db)).unwrap().value;
                ((a - e) / e).abs()
            })
            .collect();
        assert!(rel[4] < 0.05, "{rel:?}");
        assert!(rel.windows(2).all(|w| w[1] <= w[0]), "{rel:?}");
        // slope vs finite differences of the exact curve
        let h = 1.0;
        let fd = |f: fn(&SystemConfig) -> Result<Evaluation>| {
            (f(&at(40.0 + h)).unwrap().value - f(&at(40.0 - h)).unwrap().value) / (2.0 * h)
        };
        let (se, sa) = (fd(asr_exact), fd(asr_asymptotic));
        assert!(((sa - se) / se).abs() < 0.05, "{sa} vs {se}");
    }

    #[test]
    fn vanishing_snr_rate() {
        let cfg = moderate_cfg(1, 1, -60.0);
        assert!(asr_exact(&cfg).unwrap().value < 1e-4);
    }
}
