//! Statistical behaviour of the samplers and calibration of the test
//! harness itself. Everything runs on fixed seeds, so outcomes are
//! reproducible.

use lpplab_core::points::{
    sample_atomic_poisson, sample_point_set, Rect, WeightDistribution,
};
use lpplab_core::seeding::{derive_seed, rng_from_seed};
use lpplab_core::stats::{chi_square_poisson, independence_test, ks_test, loglog_fit, KsReference};
use rand::Rng;

#[test]
fn point_counts_have_poisson_moments() {
    // area 100, intensity 1 over 10^4 replicas: mean within 3 sigma of 100,
    // variance within 10%.
    let rect = Rect::new(0.0, 10.0, 0.0, 10.0).unwrap();
    let n = 10_000;
    let counts: Vec<f64> = (0..n)
        .map(|i| {
            sample_point_set(rect, 1.0, &WeightDistribution::Dirac1, derive_seed(77, &[i]))
                .unwrap()
                .len() as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n as f64 - 1.0);
    let sigma_of_mean = (100.0f64 / n as f64).sqrt();
    assert!((mean - 100.0).abs() <= 3.0 * sigma_of_mean, "mean {mean}");
    assert!((var - 100.0).abs() <= 10.0, "variance {var}");
}

#[test]
fn disjoint_unit_squares_pass_poisson_chi_square() {
    // 200 disjoint unit squares at intensity 1.
    let rect = Rect::new(0.0, 200.0, 0.0, 1.0).unwrap();
    let ps = sample_point_set(rect, 1.0, &WeightDistribution::Dirac1, 424_242).unwrap();
    let mut counts = vec![0u64; 200];
    for p in ps.points() {
        let k = (p.x.floor() as usize).min(199);
        counts[k] += 1;
    }
    let r = chi_square_poisson(&counts, 1.0).unwrap();
    assert!(r.p_value > 0.01, "p = {}", r.p_value);
}

#[test]
fn thinning_matches_lower_intensity() {
    // marking points with probability p and discarding reproduces the
    // count statistics of intensity p
    let rect = Rect::new(0.0, 50.0, 0.0, 4.0).unwrap();
    let p_keep = 0.3;
    let mut counts = Vec::new();
    for i in 0..400u64 {
        let ps = sample_point_set(rect, 1.0, &WeightDistribution::Dirac1, derive_seed(88, &[i]))
            .unwrap();
        let mut rng = rng_from_seed(derive_seed(89, &[i]));
        let kept = ps
            .points()
            .iter()
            .filter(|_| rng.random::<f64>() < p_keep)
            .count();
        counts.push(kept as u64);
    }
    let r = chi_square_poisson(&counts, rect.area() * p_keep).unwrap();
    assert!(r.p_value > 0.01, "p = {}", r.p_value);
}

#[test]
fn atomic_poisson_spacings_are_exponential() {
    let m = sample_atomic_poisson((0.0, 1000.0), 1.0, &WeightDistribution::Dirac1, 31_337)
        .unwrap();
    let pos = m.positions();
    let mut spacings = Vec::with_capacity(pos.len());
    let mut prev = 0.0;
    for &p in pos {
        spacings.push(p - prev);
        prev = p;
    }
    let r = ks_test(&spacings, KsReference::Exponential { rate: 1.0 }).unwrap();
    assert!(r.p_value > 0.01, "p = {}", r.p_value);
}

#[test]
fn ks_rejection_rate_is_calibrated() {
    // exponential samples against their own law: rejection at the 1% level
    // should happen for about 1% of meta-trials (within +-0.5%)
    let trials = 1000;
    let n = 10_000;
    let mut rejections = 0;
    for i in 0..trials as u64 {
        let mut rng = rng_from_seed(derive_seed(12_345, &[i]));
        let sample: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
        let r = ks_test(&sample, KsReference::Exponential { rate: 1.0 }).unwrap();
        if r.rejects(0.01) {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    assert!((rate - 0.01).abs() <= 0.005, "rejection rate {rate}");
}

#[test]
fn independence_rejection_rate_is_calibrated() {
    let trials = 2000;
    let n = 200;
    let mut rejections = 0;
    for i in 0..trials as u64 {
        let mut rng = rng_from_seed(derive_seed(54_321, &[i]));
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        if independence_test(&a, &b).unwrap().rejects(0.01) {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    assert!((rate - 0.01).abs() <= 0.008, "rejection rate {rate}");
}

#[test]
fn loglog_fit_recovers_noisy_slope() {
    // slope 0.66 with 5% multiplicative noise over 16 design points:
    // the 2-stderr interval should cover it in the vast majority of trials
    let trials = 500;
    let mut covered = 0;
    for i in 0..trials as u64 {
        let mut rng = rng_from_seed(derive_seed(98_765, &[i]));
        let pts: Vec<(f64, f64)> = (0..16)
            .map(|k| {
                let t = 10.0 * 1.5f64.powi(k);
                let noise: f64 = 1.0 + 0.05 * (rng.random::<f64>() * 2.0 - 1.0);
                (t, t.powf(0.66) * noise)
            })
            .collect();
        let fit = loglog_fit(&pts).unwrap();
        if (fit.slope - 0.66).abs() <= 2.0 * fit.slope_stderr {
            covered += 1;
        }
    }
    let rate = covered as f64 / trials as f64;
    assert!(rate >= 0.90, "coverage {rate}");
}
