//! Seeded Monte Carlo estimates drawn directly from the physical model.
//!
//! Trials are split over a fixed number of ChaCha8 substreams (same key,
//! stream id = substream index). Each substream is summed sequentially and
//! the partial sums are reduced in substream order, so results do not depend
//! on how rayon schedules the work or on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{inr_sample, rf_sample_best, FsoSampler, SystemConfig};
use crate::error::{Error, Result};

pub const SUBSTREAMS: u64 = 256;
pub const MIN_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn share(n: u64, index: u64) -> u64 {
    n / SUBSTREAMS + u64::from(index < n % SUBSTREAMS)
}

/// Per-substream `(Σx, Σx²)` reduced in order.
fn run<F>(n: u64, seed: u64, trial: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let parts: Vec<(f64, f64)> = (0..SUBSTREAMS)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..share(n, i) {
                let x = trial(&mut rng);
                s += x;
                s2 += x * x;
            }
            (s, s2)
        })
        .collect();
    parts.iter().fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2))
}

fn check(cfg: &SystemConfig, n: u64) -> Result<FsoSampler> {
    cfg.validate()?;
    if n < MIN_TRIALS {
        return Err(Error::Config(format!("Monte Carlo needs at least {MIN_TRIALS} trials, got {n}")));
    }
    FsoSampler::new(&cfg.fso)
}

/// Fraction of trials with `min(γ_RF, γ_FSO) / γ_I < γ_th`.
pub fn simulate_outage(cfg: &SystemConfig, n: u64, seed: u64) -> Result<McEstimate> {
    let fso = check(cfg, n)?;
    let (hits, _) = run(n, seed, |rng| {
        let g_rf = rf_sample_best(rng, &cfg.rf);
        let g_fso = fso.sample(rng);
        let g_i = inr_sample(rng, &cfg.intf);
        f64::from(u8::from(g_rf.min(g_fso) < cfg.gamma_th * g_i))
    });
    let p = hits / n as f64;
    Ok(McEstimate { mean: p, std_error: (p * (1.0 - p) / n as f64).sqrt(), n_samples: n, seed })
}

/// `½log2(1+γ_RF/γ_I) + ½log2(1+γ_FSO/γ_I)` with one `γ_I` per trial.
pub fn simulate_asr(cfg: &SystemConfig, n: u64, seed: u64) -> Result<McEstimate> {
    let fso = check(cfg, n)?;
    let (s, s2) = run(n, seed, |rng| {
        let g_rf = rf_sample_best(rng, &cfg.rf);
        let g_fso = fso.sample(rng);
        let g_i = inr_sample(rng, &cfg.intf);
        0.5 * ((g_rf / g_i).ln_1p() + (g_fso / g_i).ln_1p()) / std::f64::consts::LN_2
    });
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(McEstimate { mean, std_error: (var / nf).sqrt(), n_samples: n, seed })
}

/// True when fewer than ~100 outage events are expected at level `p`.
pub fn too_few_trials(p: f64, n: u64) -> bool {
    p > 0.0 && (n as f64) < 100.0 / p
}

/// Draws `n` values from `draw`, using the same substream layout as the
/// estimators.
pub fn draw_samples<F>(n: u64, seed: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    (0..SUBSTREAMS)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = substream(seed, i);
            (0..share(n, i)).map(|_| draw(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Upper bound on the Kolmogorov–Smirnov distance between the empirical law
/// of `samples` and a continuous CDF, using `cells` CDF evaluations at
/// sample quantiles. On a cell `[x_j, x_{j+1})` both CDFs are monotone, so
/// the gap is at most `max(F_n(x_{j+1}⁻) − F(x_j), F(x_{j+1}) − F_n(x_j))`.
/// The bound exceeds the true distance by at most about `1/cells`.
pub fn ks_distance_bound<F>(samples: &mut [f64], cells: usize, cdf: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if samples.is_empty() || cells < 2 {
        return Err(Error::Domain("KS bound needs samples and at least 2 cells".into()));
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let mut knots: Vec<f64> =
        (1..cells).map(|j| samples[(j * n / cells).min(n - 1)]).collect();
    knots.dedup();
    let f: Vec<f64> = knots.par_iter().map(|&x| cdf(x)).collect::<Result<_>>()?;
    let nf = n as f64;
    let below = |x: f64| samples.partition_point(|&s| s < x) as f64 / nf;
    let upto = |x: f64| samples.partition_point(|&s| s <= x) as f64 / nf;
    // edges: F = 0 and F_n = 0 left of everything, both 1 right of everything
    let (mut lo_f, mut lo_fn) = (0.0, 0.0);
    let mut bound = 0.0f64;
    for (k, &x) in knots.iter().enumerate() {
        bound = bound.max(below(x) - lo_f).max(f[k] - lo_fn);
        lo_f = f[k];
        lo_fn = upto(x);
        bound = bound.max((lo_fn - lo_f).abs());
    }
    bound = bound.max(1.0 - lo_f).max(1.0 - lo_fn);
    Ok(bound.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        FsoLinkParams, InterferenceParams, PointingPreset, RfLinkParams,
    };
    use crate::metrics::{asr_exact, outage_exact};
    use rand::Rng;

    fn cfg(db: f64) -> SystemConfig {
        let lin = 10f64.powf(db / 10.0);
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
                r: 1,
                mu_r: lin,
            },
            intf: InterferenceParams { num_interferers: 2, m1: 1.0, omega_i1: 1.0 },
            gamma_th: 1.0,
        }
    }

    #[test]
    fn threshold_extremes() {
        let c = SystemConfig { gamma_th: 0.0, ..cfg(10.0) };
        assert_eq!(simulate_outage(&c, 20_000, 1).unwrap().mean, 0.0);
        let c = SystemConfig { gamma_th: 1e12, ..cfg(10.0) };
        assert_eq!(simulate_outage(&c, 20_000, 1).unwrap().mean, 1.0);
    }

    #[test]
    fn too_few_trials_rejected() {
        assert!(simulate_outage(&cfg(10.0), 9_999, 1).is_err());
        assert!(too_few_trials(1e-4, 999_999));
        assert!(!too_few_trials(1e-4, 1_000_000));
    }

    #[test]
    fn deterministic_and_worker_invariant() {
        let c = cfg(10.0);
        let pool = |k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
        let a = pool(1).install(|| simulate_asr(&c, 50_000, 9).unwrap());
        let b = pool(3).install(|| simulate_asr(&c, 50_000, 9).unwrap());
        let again = pool(1).install(|| simulate_asr(&c, 50_000, 9).unwrap());
        assert_eq!(a.mean.to_bits(), again.mean.to_bits());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        let other = simulate_asr(&c, 50_000, 10).unwrap();
        assert_ne!(a.mean, other.mean);
    }

    #[test]
    fn vanishing_snr() {
        let mut c = cfg(-60.0);
        c.rf.avg_snr = 1e-6;
        c.fso.mu_r = 1e-6;
        assert!(simulate_asr(&c, 20_000, 3).unwrap().mean < 1e-4);
    }

    #[test]
    fn agrees_with_closed_forms() {
        let c = cfg(10.0);
        let op = outage_exact(&c).unwrap().value;
        let mc = simulate_outage(&c, 400_000, 5).unwrap();
        assert!((mc.mean - op).abs() < 3.0 * mc.std_error, "{mc:?} vs {op}");
        let r = asr_exact(&c).unwrap().value;
        let mc = simulate_asr(&c, 200_000, 5).unwrap();
        assert!((mc.mean - r).abs() < 3.0 * mc.std_error, "{mc:?} vs {r}");
    }

    #[test]
    fn ks_bound_brackets_exact_distance() {
        // uniform law: exact KS is available in closed form
        let mut xs = draw_samples(20_000, 4, |rng| rng.random::<f64>());
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let exact = sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
            .fold(0.0f64, f64::max);
        let bound = ks_distance_bound(&mut xs, 500, |x| Ok(x.clamp(0.0, 1.0))).unwrap();
        assert!(bound >= exact - 1e-15 && bound <= exact + 2.5 / 500.0, "{bound} vs {exact}");
        // wrong law is detected
        let wrong = ks_distance_bound(&mut xs, 500, |x| Ok(x.clamp(0.0, 1.0).powi(2))).unwrap();
        assert!(wrong > 0.2);
    }
}
