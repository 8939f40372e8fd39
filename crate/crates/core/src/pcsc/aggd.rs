//! Asymmetric generalized Gaussian fitting by moment matching.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub const ALPHA_MIN: f64 = 0.2;
pub const ALPHA_MAX: f64 = 10.0;
const ALPHA_STEP: f64 = 1e-3;
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggdParams {
    pub alpha: f64,
    pub sigma_l: f64,
    pub sigma_r: f64,
    pub eta: f64,
    /// Set when the input carried no spread at all and the fallback values
    /// (`alpha = ALPHA_MIN`, zero scales) were returned.
    pub degenerate: bool,
}

impl AggdParams {
    fn scale_factor(alpha: f64) -> f64 {
        (0.5 * (ln_gamma(1.0 / alpha) - ln_gamma(3.0 / alpha))).exp()
    }

    pub fn beta_l(&self) -> f64 {
        self.sigma_l * Self::scale_factor(self.alpha)
    }

    pub fn beta_r(&self) -> f64 {
        self.sigma_r * Self::scale_factor(self.alpha)
    }

    /// `(β_r − β_l)·Γ(2/α)/Γ(1/α)`.
    pub fn eta_from_fields(&self) -> f64 {
        (self.beta_r() - self.beta_l())
            * (ln_gamma(2.0 / self.alpha) - ln_gamma(1.0 / self.alpha)).exp()
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.sigma_l, self.sigma_r, self.eta]
    }
}

/// `ρ(α) = Γ(2/α)² / (Γ(1/α)·Γ(3/α))`, increasing in α.
pub fn gg_ratio(alpha: f64) -> f64 {
    (2.0 * ln_gamma(2.0 / alpha) - ln_gamma(1.0 / alpha) - ln_gamma(3.0 / alpha)).exp()
}

struct AlphaTable {
    alphas: Vec<f64>,
    ratios: Vec<f64>,
}

fn table() -> &'static AlphaTable {
    static TABLE: OnceLock<AlphaTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = ((ALPHA_MAX - ALPHA_MIN) / ALPHA_STEP).round() as usize + 1;
        let alphas: Vec<f64> = (0..n).map(|i| ALPHA_MIN + i as f64 * ALPHA_STEP).collect();
        let ratios = alphas.iter().map(|&a| gg_ratio(a)).collect();
        AlphaTable { alphas, ratios }
    })
}

/// Inverts `ρ` over the tabulated grid; out-of-range targets clamp to the
/// grid edges.
fn invert_ratio(target: f64) -> f64 {
    let t = table();
    let (a, r) = (&t.alphas, &t.ratios);
    let last = r.len() - 1;
    if !(target > r[0]) {
        return a[0];
    }
    if target >= r[last] {
        return a[last];
    }
    let (mut lo, mut hi) = (0usize, last);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if r[mid] <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let frac = (target - r[lo]) / (r[hi] - r[lo]);
    a[lo] + frac * (a[hi] - a[lo])
}

/// Fits a zero-mode AGGD. Zeros count toward the overall moments but belong
/// to neither side.
pub fn fit_aggd(samples: &[f64]) -> Result<AggdParams> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite AGGD sample".into()));
    }
    let (mut sq_l, mut n_l, mut sq_r, mut n_r, mut abs_sum) = (0.0, 0usize, 0.0, 0usize, 0.0);
    for &v in samples {
        if v < 0.0 {
            sq_l += v * v;
            n_l += 1;
        } else if v > 0.0 {
            sq_r += v * v;
            n_r += 1;
        }
        abs_sum += v.abs();
    }
    let n = samples.len() as f64;
    let sigma_l = if n_l > 0 {
        (sq_l / n_l as f64).sqrt()
    } else {
        0.0
    };
    let sigma_r = if n_r > 0 {
        (sq_r / n_r as f64).sqrt()
    } else {
        0.0
    };
    // Same additions in both branches keep the fit exactly mirror-symmetric.
    let mean_sq = (sq_l + sq_r) / n;
    if mean_sq == 0.0 {
        return Ok(AggdParams {
            alpha: ALPHA_MIN,
            sigma_l: 0.0,
            sigma_r: 0.0,
            eta: 0.0,
            degenerate: true,
        });
    }
    let mean_abs = abs_sum / n;
    let r_hat = mean_abs * mean_abs / mean_sq;
    // (γ³+1)(γ+1)/(γ²+1)² with γ = σ_l/σ_r, written symmetrically in σ_l, σ_r.
    let (l2, r2) = (sigma_l * sigma_l, sigma_r * sigma_r);
    let correction = (l2 * sigma_l + r2 * sigma_r) * (sigma_l + sigma_r) / ((l2 + r2) * (l2 + r2));
    let alpha = invert_ratio(r_hat * correction);
    let mut p = AggdParams {
        alpha,
        sigma_l,
        sigma_r,
        eta: 0.0,
        degenerate: false,
    };
    p.eta = p.eta_from_fields();
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_is_monotone() {
        let t = table();
        assert!(t.ratios.windows(2).all(|w| w[1] > w[0]));
        // Gaussian: Γ(1)²/(Γ(1/2)Γ(3/2)) = 2/π.
        assert!((gg_ratio(2.0) - 2.0 / std::f64::consts::PI).abs() < 1e-12);
        // Laplacian: Γ(2)²/(Γ(1)Γ(3)) = 1/2.
        assert!((gg_ratio(1.0) - 0.5).abs() < 1e-12);
        assert!((invert_ratio(0.5) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_aggd(&[1.0; 50]),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn all_zero_falls_back() {
        let p = fit_aggd(&[0.0; 200]).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.as_array(), [ALPHA_MIN, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn one_sided_input_has_empty_side_zero() {
        let s: Vec<f64> = (1..=200).map(|i| i as f64 / 100.0).collect();
        let p = fit_aggd(&s).unwrap();
        assert_eq!(p.sigma_l, 0.0);
        assert!(p.sigma_r > 0.0 && p.eta > 0.0);
        assert!((ALPHA_MIN..=ALPHA_MAX).contains(&p.alpha));
    }

    #[test]
    fn symmetric_pairs_give_zero_eta() {
        let s: Vec<f64> = (1..=150)
            .flat_map(|i| [i as f64 * 0.013, -(i as f64) * 0.013])
            .collect();
        assert_eq!(fit_aggd(&s).unwrap().eta, 0.0);
    }

    #[test]
    fn mirror_swaps_scales_exactly() {
        let s: Vec<f64> = (0..500)
            .map(|i| ((i * 37 % 101) as f64 - 40.0) * 0.07)
            .collect();
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let a = fit_aggd(&s).unwrap();
        let b = fit_aggd(&neg).unwrap();
        assert_eq!(a.alpha, b.alpha);
        assert_eq!(a.sigma_l, b.sigma_r);
        assert_eq!(a.sigma_r, b.sigma_l);
        assert_eq!(a.eta, -b.eta);
    }

    #[test]
    fn eta_matches_fields() {
        let s: Vec<f64> = (0..400)
            .map(|i| ((i * 13 % 97) as f64 - 30.0) * 0.1)
            .collect();
        let p = fit_aggd(&s).unwrap();
        assert!((p.eta - p.eta_from_fields()).abs() < 1e-9);
    }
}
