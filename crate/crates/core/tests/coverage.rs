//! Monte Carlo intervals cover the closed forms over randomized systems.

use fsorelay_core::channels::*;
use fsorelay_core::mc::{simulate_asr, simulate_outage};
use fsorelay_core::metrics::{asr_exact, outage_exact};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_system(rng: &mut ChaCha8Rng) -> SystemConfig {
    let db: f64 = rng.random_range(0.0..15.0);
    let alpha2 = [1.0, 2.0][rng.random_range(0..2)];
    // exact small-denominator ratios, so the sampler and the closed form
    // describe the same law
    let ratio = [1.0, 1.5, 2.0, 2.5, 3.0][rng.random_range(0..5)];
    SystemConfig {
        rf: RfLinkParams {
            m_rf: rng.random_range(1..4),
            avg_snr: 10f64.powf(db / 10.0),
            num_users: rng.random_range(1..5),
        },
        fso: FsoLinkParams {
            alpha1: alpha2 * ratio,
            alpha2,
            beta1: rng.random_range(0.5..5.0),
            beta2: rng.random_range(0.5..5.0),
            omega1: rng.random_range(0.5..2.0),
            omega2: rng.random_range(0.5..2.0),
            xi: rng.random_range(0.8..3.0),
            r: rng.random_range(1..3),
            mu_r: 10f64.powf(rng.random_range(0.0..15.0) / 10.0),
        },
        intf: InterferenceParams {
            num_interferers: rng.random_range(1..4),
            m1: [1.0, 2.0][rng.random_range(0..2)],
            omega_i1: rng.random_range(0.2..2.0),
        },
        gamma_th: 10f64.powf(rng.random_range(-5.0..3.0) / 10.0),
    }
}

#[test]
fn three_sigma_coverage() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut op_hits, mut rate_hits) = (0, 0);
    for i in 0..100u64 {
        let cfg = random_system(&mut rng);
        let op = outage_exact(&cfg).unwrap().value;
        let mc = simulate_outage(&cfg, 100_000, i).unwrap();
        if (op - mc.mean).abs() <= 3.0 * mc.std_error {
            op_hits += 1;
        } else {
            println!("outage miss {i}: {op} vs {mc:?} {cfg:?}");
        }
        let rate = asr_exact(&cfg).unwrap().value;
        let mc = simulate_asr(&cfg, 100_000, i).unwrap();
        if (rate - mc.mean).abs() <= 3.0 * mc.std_error {
            rate_hits += 1;
        } else {
            println!("rate miss {i}: {rate} vs {mc:?}");
        }
    }
    println!("coverage: outage {op_hits}/100, rate {rate_hits}/100");
    assert!(op_hits >= 97 && rate_hits >= 97);
}
