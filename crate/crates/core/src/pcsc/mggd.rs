//! Multivariate generalized Gaussian fitting.
//!
//! Density `|M|^{-1/2} g(xᵀM⁻¹x)` with generator
//! `g(χ) ∝ exp(−½ (χ/γ)^φ)`. The scatter `M` is estimated by the
//! maximum-likelihood fixed point
//! `M ← Σᵢ N·uᵢ^{φ−1} / Σⱼ uⱼ^φ · xᵢxᵢᵀ` (with `uᵢ = xᵢᵀM⁻¹xᵢ`), normalised to
//! trace `N`. Between fixed-point steps the shape `φ` maximises the profile
//! likelihood with the scale profiled out, and the scale follows from
//! `γ^φ = φ/(N n) Σ uᵢ^φ`.

use nalgebra::SMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub const PHI_MIN: f64 = 0.1;
pub const PHI_MAX: f64 = 5.0;
pub const MAX_ITERS: usize = 100;
pub const SCATTER_TOL: f64 = 1e-6;
/// Ridge added to a singular scatter estimate.
pub const REGULARIZATION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MggdParams<const N: usize> {
    /// Symmetric positive-definite, trace `N`.
    pub scatter: SMatrix<f64, N, N>,
    pub gamma: f64,
    pub phi: f64,
    /// The sample scatter was singular and a ridge was added.
    pub regularized: bool,
    pub converged: bool,
    pub iterations: usize,
}

impl<const N: usize> MggdParams<N> {
    /// Strictly-upper-triangular scatter entries, row by row.
    pub fn off_diagonals(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(N * (N - 1) / 2);
        for i in 0..N {
            for j in i + 1..N {
                out.push(self.scatter[(i, j)]);
            }
        }
        out
    }
}

fn normalize_trace<const N: usize>(m: &mut SMatrix<f64, N, N>) {
    let tr = m.trace();
    *m *= N as f64 / tr;
    // Exact symmetry.
    for i in 0..N {
        for j in i + 1..N {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn ridge<const N: usize>(m: &mut SMatrix<f64, N, N>) {
    for i in 0..N {
        m[(i, i)] += REGULARIZATION;
    }
    normalize_trace(m);
}

fn is_singular<const N: usize>(m: &SMatrix<f64, N, N>) -> bool {
    let eig = nalgebra::DMatrix::from_column_slice(N, N, m.as_slice()).symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    !(min > 1e-12 * m.trace())
}

fn mahalanobis<const N: usize>(samples: &[[f64; N]], m: &SMatrix<f64, N, N>) -> Result<Vec<f64>> {
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Numeric("scatter matrix is not positive definite".into()))?;
    let inv = chol.inverse();
    Ok(samples
        .iter()
        .map(|x| {
            let mut u = 0.0;
            for i in 0..N {
                let mut row = 0.0;
                for j in 0..N {
                    row += inv[(i, j)] * x[j];
                }
                u += x[i] * row;
            }
            u.max(0.0)
        })
        .collect())
}

/// Negative profile log-likelihood in `φ` up to constants.
fn neg_profile(phi: f64, log_u: &[f64], dim: f64) -> f64 {
    let n = log_u.len() as f64;
    let sum: f64 = log_u.iter().map(|&l| (phi * l).exp()).sum();
    if !(sum > 0.0) {
        return f64::INFINITY;
    }
    let k = dim / (2.0 * phi);
    let ll = n
        * (phi.ln() - ln_gamma(k) - k * std::f64::consts::LN_2 - k * (phi * sum / (dim * n)).ln())
        - dim * n / (2.0 * phi);
    -ll
}

/// Maximises the profile likelihood over `[lo, hi]` by a coarse log-spaced
/// scan followed by golden-section refinement.
fn estimate_phi(log_u: &[f64], dim: f64, lo: f64, hi: f64) -> f64 {
    const SCAN: usize = 12;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let grid: Vec<f64> = (0..=SCAN)
        .map(|i| (llo + (lhi - llo) * i as f64 / SCAN as f64).exp())
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&p| neg_profile(p, log_u, dim)).collect();
    let best = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(SCAN)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (neg_profile(c, log_u, dim), neg_profile(d, log_u, dim));
    while b - a > 1e-7 * (1.0 + a.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = neg_profile(c, log_u, dim);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = neg_profile(d, log_u, dim);
        }
    }
    0.5 * (a + b)
}

fn log_u(u: &[f64]) -> Vec<f64> {
    // Zero vectors carry no shape information; they drop out of the profile.
    u.iter().filter(|&&v| v > 0.0).map(|v| v.ln()).collect()
}

/// Fits an `N`-dimensional zero-mean MGGD to `samples`.
///
/// A singular sample scatter is ridged by [`REGULARIZATION`] and flagged. An
/// all-zero input returns the fallback `M = I`, `γ = REGULARIZATION`,
/// `φ = 1` with the flag set.
pub fn fit_mggd<const N: usize>(samples: &[[f64; N]]) -> Result<MggdParams<N>> {
    let needed = 10 * N * N;
    if samples.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: samples.len(),
        });
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite MGGD sample".into()));
    }
    let n = samples.len() as f64;
    let dim = N as f64;
    let mut cov = SMatrix::<f64, N, N>::zeros();
    for x in samples {
        for i in 0..N {
            for j in 0..N {
                cov[(i, j)] += x[i] * x[j];
            }
        }
    }
    cov /= n;
    if cov.trace() == 0.0 {
        return Ok(MggdParams {
            scatter: SMatrix::identity(),
            gamma: REGULARIZATION,
            phi: 1.0,
            regularized: true,
            converged: false,
            iterations: 0,
        });
    }
    let mut m = cov;
    normalize_trace(&mut m);
    let regularized = is_singular(&m);
    if regularized {
        log::debug!("MGGD sample scatter is singular; adding {REGULARIZATION:e}·I");
        ridge(&mut m);
    }

    let mut phi = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..MAX_ITERS {
        iterations = it + 1;
        let u = mahalanobis(samples, &m)?;
        let lu = log_u(&u);
        phi = if it == 0 {
            estimate_phi(&lu, dim, PHI_MIN, PHI_MAX)
        } else {
            estimate_phi(&lu, dim, (phi / 1.5).max(PHI_MIN), (phi * 1.5).min(PHI_MAX))
        };
        let sum_pow: f64 = u
            .iter()
            .map(|&v| if v > 0.0 { v.powf(phi) } else { 0.0 })
            .sum();
        let mut next = SMatrix::<f64, N, N>::zeros();
        for (x, &ui) in samples.iter().zip(&u) {
            if ui <= 0.0 {
                continue;
            }
            let w = dim * ui.powf(phi - 1.0) / sum_pow;
            for i in 0..N {
                for j in 0..N {
                    next[(i, j)] += w * x[i] * x[j];
                }
            }
        }
        normalize_trace(&mut next);
        if regularized {
            ridge(&mut next);
        }
        let delta = (next - m).norm();
        m = next;
        if delta < SCATTER_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("MGGD scatter did not converge in {MAX_ITERS} iterations");
    }
    let u = mahalanobis(samples, &m)?;
    phi = estimate_phi(&log_u(&u), dim, PHI_MIN, PHI_MAX);
    let sum_pow: f64 = u
        .iter()
        .map(|&v| if v > 0.0 { v.powf(phi) } else { 0.0 })
        .sum();
    let gamma = (phi * sum_pow / (dim * n)).powf(1.0 / phi);
    Ok(MggdParams {
        scatter: m,
        gamma,
        phi,
        regularized,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                [
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                ]
            })
            .collect()
    }

    #[test]
    fn identity_gaussian() {
        let p = fit_mggd(&gaussian(100_000, 1)).unwrap();
        assert!((0.9..=1.1).contains(&p.phi), "phi {}", p.phi);
        for v in p.off_diagonals() {
            assert!(v.abs() < 0.03, "off-diagonal {v}");
        }
        assert!((p.scatter.trace() - 3.0).abs() < 1e-9);
        assert!((p.scatter - p.scatter.transpose()).amax() < 1e-10);
        assert!(p.converged && !p.regularized);
        assert!((p.gamma - 1.0).abs() < 0.05, "gamma {}", p.gamma);
    }

    #[test]
    fn scale_equivariance() {
        let s = gaussian(20_000, 2);
        let scaled: Vec<[f64; 3]> = s.iter().map(|x| x.map(|v| 4.0 * v)).collect();
        let a = fit_mggd(&s).unwrap();
        let b = fit_mggd(&scaled).unwrap();
        assert!((a.scatter - b.scatter).amax() < 1e-6);
        assert!((b.gamma / a.gamma - 16.0).abs() < 0.05 * 16.0);
        assert!((b.phi / a.phi - 1.0).abs() < 0.05);
    }

    #[test]
    fn sign_flip_invariance() {
        let s = gaussian(5_000, 3);
        let flipped: Vec<[f64; 3]> = s
            .iter()
            .enumerate()
            .map(|(i, x)| if i % 3 == 0 { x.map(|v| -v) } else { *x })
            .collect();
        let a = fit_mggd(&s).unwrap();
        let b = fit_mggd(&flipped).unwrap();
        assert_eq!(a.scatter, b.scatter);
        assert_eq!(a.phi, b.phi);
    }

    #[test]
    fn correlated_coordinates_are_regularized() {
        let s: Vec<[f64; 3]> = gaussian(2_000, 4)
            .iter()
            .map(|x| [x[0], x[0], 2.0 * x[0]])
            .collect();
        let p = fit_mggd(&s).unwrap();
        assert!(p.regularized);
        assert!(p.gamma.is_finite() && p.phi.is_finite());
        assert!(p.scatter.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
    }

    #[test]
    fn zero_input_fallback_and_size_check() {
        let p = fit_mggd(&vec![[0.0; 3]; 200]).unwrap();
        assert!(p.regularized);
        assert_eq!(p.scatter, SMatrix::<f64, 3, 3>::identity());
        assert!(matches!(
            fit_mggd(&vec![[1.0; 3]; 89]),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
