//! Parameter recovery of the AGGD and MGGD estimators from samples drawn
//! with an independent sampler.

use lfiqa::pcsc::{fit_aggd, fit_mggd};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::gamma;

/// `|x|/β` raised to α is Gamma(1/α, 1); the side is left with probability
/// `β_l/(β_l+β_r)`.
fn sample_aggd(alpha: f64, sigma_l: f64, sigma_r: f64, n: usize, seed: u64) -> Vec<f64> {
    let k = (gamma(1.0 / alpha) / gamma(3.0 / alpha)).sqrt();
    let (bl, br) = (sigma_l * k, sigma_r * k);
    let g = Gamma::new(1.0 / alpha, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mag = g.sample(&mut rng).powf(1.0 / alpha);
            if rng.random::<f64>() < bl / (bl + br) {
                -bl * mag
            } else {
                br * mag
            }
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn aggd_recovers_parameters() {
    for &(alpha, sl, sr) in &[
        (2.0, 1.0, 1.0),
        (1.0, 1.0, 1.0),
        (2.0, 1.0, 2.0),
        (0.7, 0.5, 1.0),
    ] {
        let fits: Vec<_> = (0..5)
            .map(|seed| fit_aggd(&sample_aggd(alpha, sl, sr, 200_000, seed)).unwrap())
            .collect();
        let a = median(fits.iter().map(|p| p.alpha).collect());
        let l = median(fits.iter().map(|p| p.sigma_l).collect());
        let r = median(fits.iter().map(|p| p.sigma_r).collect());
        assert!((a / alpha - 1.0).abs() < 0.10, "alpha {a} for {alpha}");
        assert!((l / sl - 1.0).abs() < 0.05, "sigma_l {l} for {sl}");
        assert!((r / sr - 1.0).abs() < 0.05, "sigma_r {r} for {sr}");
    }
}

#[test]
fn aggd_error_shrinks_with_sample_count() {
    let alpha = 1.0;
    let mut prev = f64::INFINITY;
    for n in [1_000, 10_000, 100_000, 1_000_000] {
        let err = median(
            (0..20)
                .map(|seed| {
                    (fit_aggd(&sample_aggd(alpha, 1.0, 1.5, n, 1000 + seed))
                        .unwrap()
                        .alpha
                        - alpha)
                        .abs()
                })
                .collect(),
        );
        assert!(err < prev, "n={n}: {err} not below {prev}");
        prev = err;
    }
}

#[test]
fn mggd_recovers_correlated_gaussian() {
    // Unit variances, correlation 0.5: the trace-3 scatter is the covariance.
    let c = nalgebra::Matrix3::new(1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0)
        .cholesky()
        .unwrap()
        .l();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let samples: Vec<[f64; 3]> = (0..100_000)
        .map(|_| {
            let z = nalgebra::Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let x = c * z;
            [x[0], x[1], x[2]]
        })
        .collect();
    let p = fit_mggd(&samples).unwrap();
    for v in p.off_diagonals() {
        assert!((v - 0.5).abs() < 0.05, "off-diagonal {v}");
    }
    assert!((p.phi - 1.0).abs() < 0.15, "phi {}", p.phi);
}
